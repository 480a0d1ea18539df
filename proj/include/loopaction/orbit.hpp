#pragma once

#include <string_view>
#include <vector>

#include "loopaction/vec2.hpp"

namespace loopaction {

enum class OrbitSource { Minimizer, KeplerOracle, LagrangeOracle, Integrator };

std::string_view to_string(OrbitSource source);

/// One period of motion sampled uniformly in time at t_j = j T / n, j = 0..n-1.
///
/// positions[j][i] is body i at sample j. Two-body orbits carry a single body
/// (the relative coordinate) of unit mass.
struct PhysicalOrbit {
    double period = 0.0;
    std::vector<double> times;
    std::vector<std::vector<Vec2>> positions;
    std::vector<std::vector<Vec2>> velocities;
    /// Energy of the defining system.
    double energy = 0.0;
    OrbitSource source = OrbitSource::Minimizer;
    std::vector<double> masses;

    std::size_t sample_count() const { return times.size(); }
    std::size_t body_count() const { return masses.size(); }
};

inline constexpr std::size_t kMinOrbitSamples = 64;

/// Fixed-step integration output, including the endpoint t = duration.
struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<Vec2>> positions;
    std::vector<std::vector<Vec2>> velocities;
    std::vector<std::vector<Vec2>> accelerations;
    std::vector<double> energies;
    /// max_j |E_j - E_0| / |E_0|
    double max_energy_drift = 0.0;

    std::size_t sample_count() const { return times.size(); }
};

}  // namespace loopaction
