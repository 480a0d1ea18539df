#pragma once

#include <stdexcept>
#include <string>

namespace loopaction {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define LOOPACTION_ERROR(Name)               \
    class Name : public Error {              \
    public:                                  \
        using Error::Error;                  \
    }

// loop_space
LOOPACTION_ERROR(NearCollision);
LOOPACTION_ERROR(NonIntegerWinding);
LOOPACTION_ERROR(InvalidWinding);
LOOPACTION_ERROR(ShapeMismatch);

// functionals
LOOPACTION_ERROR(CollisionEncountered);
LOOPACTION_ERROR(InvalidEnergy);
LOOPACTION_ERROR(OffManifold);

// minimizer
LOOPACTION_ERROR(BadStart);
LOOPACTION_ERROR(DegenerateLoop);

// oracles
LOOPACTION_ERROR(NoConvergence);
LOOPACTION_ERROR(NoReturn);

// verify
LOOPACTION_ERROR(MomentumNotZero);

// cli
LOOPACTION_ERROR(ConfigError);
LOOPACTION_ERROR(IoError);

#undef LOOPACTION_ERROR

}  // namespace loopaction
