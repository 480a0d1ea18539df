#include "loopaction/loop_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "loopaction/errors.hpp"

namespace loopaction {

QuadratureGrid::QuadratureGrid(int sample_count) : n_(sample_count) {
    if (sample_count < 1) {
        throw std::invalid_argument("QuadratureGrid: sample_count must be positive");
    }
    cos_.resize(n_);
    sin_.resize(n_);
    for (int m = 0; m < n_; ++m) {
        const double angle = kTwoPi * m / n_;
        cos_[m] = std::cos(angle);
        sin_[m] = std::sin(angle);
    }
}

bool FourierLoop::is_finite() const {
    auto finite = [](const Vec2& v) { return std::isfinite(v.x) && std::isfinite(v.y); };
    return finite(mean) && std::all_of(cos_coeffs.begin(), cos_coeffs.end(), finite) &&
           std::all_of(sin_coeffs.begin(), sin_coeffs.end(), finite);
}

FourierLoop FourierLoop::circle(int modes, double radius, int winding) {
    const int k = std::abs(winding);
    if (k == 0 || k > modes) {
        throw InvalidWinding("circle: winding must satisfy 0 < |w| <= modes");
    }
    FourierLoop loop(modes);
    loop.cos_coeffs[k - 1] = {radius, 0.0};
    loop.sin_coeffs[k - 1] = {0.0, winding > 0 ? radius : -radius};
    return loop;
}

FourierLoop FourierLoop::constant(int modes, Vec2 point) {
    FourierLoop loop(modes);
    loop.mean = point;
    return loop;
}

static void require_same_modes(const FourierLoop& a, const FourierLoop& b) {
    if (a.modes() != b.modes()) {
        throw ShapeMismatch("FourierLoop: mode counts differ (" + std::to_string(a.modes()) +
                            " vs " + std::to_string(b.modes()) + ")");
    }
}

FourierLoop& FourierLoop::axpy(double s, const FourierLoop& o) {
    require_same_modes(*this, o);
    mean += s * o.mean;
    for (int k = 0; k < modes(); ++k) {
        cos_coeffs[k] += s * o.cos_coeffs[k];
        sin_coeffs[k] += s * o.sin_coeffs[k];
    }
    return *this;
}

FourierLoop& FourierLoop::operator+=(const FourierLoop& o) { return axpy(1.0, o); }
FourierLoop& FourierLoop::operator-=(const FourierLoop& o) { return axpy(-1.0, o); }

FourierLoop& FourierLoop::operator*=(double s) {
    mean *= s;
    for (int k = 0; k < modes(); ++k) {
        cos_coeffs[k] *= s;
        sin_coeffs[k] *= s;
    }
    return *this;
}

std::vector<double> FourierLoop::flatten() const {
    std::vector<double> out;
    out.reserve(coefficient_count());
    out.push_back(mean.x);
    out.push_back(mean.y);
    for (int k = 0; k < modes(); ++k) {
        out.push_back(cos_coeffs[k].x);
        out.push_back(cos_coeffs[k].y);
        out.push_back(sin_coeffs[k].x);
        out.push_back(sin_coeffs[k].y);
    }
    return out;
}

FourierLoop FourierLoop::unflatten(std::span<const double> values, int modes) {
    FourierLoop loop(modes);
    if (values.size() != loop.coefficient_count()) {
        throw ShapeMismatch("FourierLoop::unflatten: expected " +
                            std::to_string(loop.coefficient_count()) + " values, got " +
                            std::to_string(values.size()));
    }
    loop.mean = {values[0], values[1]};
    for (int k = 0; k < modes; ++k) {
        const std::size_t base = 2 + 4 * static_cast<std::size_t>(k);
        loop.cos_coeffs[k] = {values[base], values[base + 1]};
        loop.sin_coeffs[k] = {values[base + 2], values[base + 3]};
    }
    return loop;
}

FourierLoop operator+(FourierLoop a, const FourierLoop& b) { return a += b; }
FourierLoop operator-(FourierLoop a, const FourierLoop& b) { return a -= b; }
FourierLoop operator*(double s, FourierLoop a) { return a *= s; }

double coefficient_dot(const FourierLoop& a, const FourierLoop& b) {
    require_same_modes(a, b);
    double sum = dot(a.mean, b.mean);
    for (int k = 0; k < a.modes(); ++k) {
        sum += dot(a.cos_coeffs[k], b.cos_coeffs[k]) + dot(a.sin_coeffs[k], b.sin_coeffs[k]);
    }
    return sum;
}

double coefficient_norm(const FourierLoop& a) { return std::sqrt(coefficient_dot(a, a)); }

double sobolev_inner(const FourierLoop& u, const FourierLoop& v) {
    require_same_modes(u, v);
    double sum = dot(u.mean, v.mean);
    for (int k = 1; k <= u.modes(); ++k) {
        const double w = kTwoPi * k;
        const double pair =
            dot(u.cos_coeffs[k - 1], v.cos_coeffs[k - 1]) + dot(u.sin_coeffs[k - 1], v.sin_coeffs[k - 1]);
        sum += 0.5 * (1.0 + w * w) * pair;
    }
    return sum;
}

double sobolev_norm(const FourierLoop& u) { return std::sqrt(sobolev_inner(u, u)); }

Vec2 eval(const FourierLoop& loop, double t) {
    Vec2 p = loop.mean;
    for (int k = 1; k <= loop.modes(); ++k) {
        const double angle = kTwoPi * k * t;
        p += std::cos(angle) * loop.cos_coeffs[k - 1] + std::sin(angle) * loop.sin_coeffs[k - 1];
    }
    return p;
}

Vec2 deriv(const FourierLoop& loop, double t) {
    Vec2 v;
    for (int k = 1; k <= loop.modes(); ++k) {
        const double w = kTwoPi * k;
        const double angle = w * t;
        v += w * (std::cos(angle) * loop.sin_coeffs[k - 1] - std::sin(angle) * loop.cos_coeffs[k - 1]);
    }
    return v;
}

Vec2 second_deriv(const FourierLoop& loop, double t) {
    Vec2 acc;
    for (int k = 1; k <= loop.modes(); ++k) {
        const double w = kTwoPi * k;
        const double angle = w * t;
        acc -= (w * w) * (std::cos(angle) * loop.cos_coeffs[k - 1] + std::sin(angle) * loop.sin_coeffs[k - 1]);
    }
    return acc;
}

namespace {

// Evaluates sum_k scale(k) * (c_k cos + s_k sin) on the grid, with the
// derivative order selecting which coefficient pairs feed the cos/sin slots.
std::vector<Vec2> sample_order(const FourierLoop& loop, const QuadratureGrid& grid, int order) {
    const int n = grid.size();
    std::vector<Vec2> out(n, order == 0 ? loop.mean : Vec2{});
    for (int k = 1; k <= loop.modes(); ++k) {
        const double w = kTwoPi * k;
        Vec2 cpart, spart;
        switch (order) {
            case 0:
                cpart = loop.cos_coeffs[k - 1];
                spart = loop.sin_coeffs[k - 1];
                break;
            case 1:
                cpart = w * loop.sin_coeffs[k - 1];
                spart = -w * loop.cos_coeffs[k - 1];
                break;
            default:
                cpart = -(w * w) * loop.cos_coeffs[k - 1];
                spart = -(w * w) * loop.sin_coeffs[k - 1];
                break;
        }
        for (int j = 0; j < n; ++j) {
            out[j] += grid.cos_at(k, j) * cpart + grid.sin_at(k, j) * spart;
        }
    }
    return out;
}

}  // namespace

std::vector<Vec2> sample(const FourierLoop& loop, const QuadratureGrid& grid) {
    return sample_order(loop, grid, 0);
}

std::vector<Vec2> sample_deriv(const FourierLoop& loop, const QuadratureGrid& grid) {
    return sample_order(loop, grid, 1);
}

std::vector<Vec2> sample_second_deriv(const FourierLoop& loop, const QuadratureGrid& grid) {
    return sample_order(loop, grid, 2);
}

double kinetic_integral(const FourierLoop& loop) {
    double sum = 0.0;
    for (int k = 1; k <= loop.modes(); ++k) {
        const double w = kTwoPi * k;
        sum += w * w * (norm2(loop.cos_coeffs[k - 1]) + norm2(loop.sin_coeffs[k - 1]));
    }
    return 0.25 * sum;
}

double kinetic_quadrature(const FourierLoop& loop, const QuadratureGrid& grid) {
    const auto velocity = sample_deriv(loop, grid);
    double sum = 0.0;
    for (const auto& v : velocity) sum += norm2(v);
    return 0.5 * sum * grid.weight();
}

FourierLoop fit_loop(std::span<const Vec2> samples, int modes) {
    const auto n = static_cast<std::int64_t>(samples.size());
    if (n < 2 * modes + 1) {
        throw std::invalid_argument("fit_loop: need at least 2K+1 samples");
    }
    const QuadratureGrid grid(static_cast<int>(n));
    FourierLoop loop(modes);
    for (const auto& p : samples) loop.mean += p;
    loop.mean = loop.mean / static_cast<double>(n);
    const double scale = 2.0 / static_cast<double>(n);
    for (int k = 1; k <= modes; ++k) {
        Vec2 a, b;
        for (std::int64_t j = 0; j < n; ++j) {
            a += grid.cos_at(k, j) * samples[j];
            b += grid.sin_at(k, j) * samples[j];
        }
        loop.cos_coeffs[k - 1] = scale * a;
        loop.sin_coeffs[k - 1] = scale * b;
    }
    return loop;
}

double loop_diameter(const FourierLoop& loop, const QuadratureGrid& grid) {
    const auto pts = sample(loop, grid);
    Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Vec2 hi = -lo;
    for (const auto& p : pts) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    return norm(hi - lo);
}

namespace {

double golden_min(const FourierLoop& loop, double lo, double hi) {
    constexpr double inv_phi = 0.6180339887498949;
    auto f = [&](double t) { return norm2(eval(loop, t)); };
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    return std::sqrt(std::min({fc, fd, f(lo), f(hi)}));
}

}  // namespace

double min_radius(const FourierLoop& loop, const QuadratureGrid& grid) {
    const auto pts = sample(loop, grid);
    const int n = grid.size();
    std::size_t best = 0;
    for (std::size_t j = 1; j < pts.size(); ++j) {
        if (norm2(pts[j]) < norm2(pts[best])) best = j;
    }
    const double t = grid.node(static_cast<int>(best));
    return golden_min(loop, t - 1.0 / n, t + 1.0 / n);
}

namespace {

double accumulated_turns(const std::vector<Vec2>& pts) {
    double total = 0.0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
        const Vec2& a = pts[j];
        const Vec2& b = pts[(j + 1) % pts.size()];
        total += std::atan2(cross(a, b), dot(a, b));
    }
    return total / kTwoPi;
}

}  // namespace

int winding_number(const FourierLoop& loop, const QuadratureGrid& grid, double near_collision_rel) {
    const double diameter = loop_diameter(loop, grid);
    const double rmin = min_radius(loop, grid);
    if (!(rmin > near_collision_rel * diameter)) {
        throw NearCollision("winding_number: loop passes within " + std::to_string(rmin) +
                            " of the origin");
    }
    const double turns = accumulated_turns(sample(loop, grid));
    const double rounded = std::round(turns);
    if (std::abs(turns - rounded) > 0.01) {
        throw NonIntegerWinding("winding_number: accumulated " + std::to_string(turns) +
                                " turns; refine the grid");
    }
    // An aliased loop still closes up into a polygon with a whole number of
    // turns, just the wrong one, so the count must also survive refinement.
    const double fine = accumulated_turns(sample(loop, grid.refined()));
    if (std::abs(fine - rounded) > 0.01) {
        throw NonIntegerWinding("winding_number: " + std::to_string(rounded) + " turns on " +
                                std::to_string(grid.size()) + " nodes but " + std::to_string(fine) +
                                " on " + std::to_string(2 * grid.size()) + "; refine the grid");
    }
    return static_cast<int>(rounded);
}

namespace {

// Pointwise bound sum of coefficient magnitudes on |perturbation(t)|.
double amplitude_bound(const FourierLoop& p) {
    double bound = norm(p.mean);
    for (int k = 0; k < p.modes(); ++k) bound += norm(p.cos_coeffs[k]) + norm(p.sin_coeffs[k]);
    return bound;
}

FourierLoop gaussian_loop(std::mt19937_64& rng, int modes) {
    std::normal_distribution<double> normal(0.0, 1.0);
    FourierLoop p(modes);
    p.mean = {normal(rng), normal(rng)};
    for (int k = 0; k < modes; ++k) {
        p.cos_coeffs[k] = {normal(rng), normal(rng)};
        p.sin_coeffs[k] = {normal(rng), normal(rng)};
    }
    return p;
}

}  // namespace

FourierLoop random_loop(std::uint64_t seed, int modes, int winding, double noise_scale) {
    if (winding == 0) throw InvalidWinding("random_loop: winding must be nonzero");
    if (modes < std::abs(winding)) throw InvalidWinding("random_loop: need modes >= |winding|");
    FourierLoop loop = FourierLoop::circle(modes, 1.0, winding);
    const double amplitude = std::min(std::abs(noise_scale), 0.5);
    if (amplitude == 0.0) return loop;
    std::mt19937_64 rng(seed);
    FourierLoop noise = gaussian_loop(rng, modes);
    loop.axpy(amplitude / amplitude_bound(noise), noise);
    return loop;
}

FourierLoop scaled(const FourierLoop& loop, double factor) { return factor * loop; }

FourierLoop rotated(const FourierLoop& loop, double angle) {
    FourierLoop out = loop;
    out.mean = rotate(loop.mean, angle);
    for (int k = 0; k < loop.modes(); ++k) {
        out.cos_coeffs[k] = rotate(loop.cos_coeffs[k], angle);
        out.sin_coeffs[k] = rotate(loop.sin_coeffs[k], angle);
    }
    return out;
}

FourierLoop time_shifted(const FourierLoop& loop, double shift) {
    // a cos(w(t+c)) + b sin(w(t+c)) = (a cos wc + b sin wc) cos wt + (b cos wc - a sin wc) sin wt
    FourierLoop out = loop;
    for (int k = 1; k <= loop.modes(); ++k) {
        const double phase = kTwoPi * k * shift;
        const double c = std::cos(phase), s = std::sin(phase);
        const Vec2 a = loop.cos_coeffs[k - 1], b = loop.sin_coeffs[k - 1];
        out.cos_coeffs[k - 1] = c * a + s * b;
        out.sin_coeffs[k - 1] = c * b - s * a;
    }
    return out;
}

FourierLoop TripleLoop::relative(int i, int j) const { return loops.at(i) - loops.at(j); }

TripleLoop& TripleLoop::axpy(double s, const TripleLoop& o) {
    for (int i = 0; i < 3; ++i) loops[i].axpy(s, o.loops[i]);
    return *this;
}

TripleLoop& TripleLoop::operator*=(double s) {
    for (auto& l : loops) l *= s;
    return *this;
}

std::vector<double> TripleLoop::flatten() const {
    std::vector<double> out;
    for (const auto& l : loops) {
        const auto part = l.flatten();
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

TripleLoop TripleLoop::unflatten(std::span<const double> values, int modes,
                                 const std::array<double, 3>& masses) {
    const std::size_t per = 2 + 4 * static_cast<std::size_t>(modes);
    if (values.size() != 3 * per) throw ShapeMismatch("TripleLoop::unflatten: wrong length");
    TripleLoop t;
    t.masses = masses;
    for (int i = 0; i < 3; ++i) t.loops[i] = FourierLoop::unflatten(values.subspan(i * per, per), modes);
    return t;
}

double coefficient_dot(const TripleLoop& a, const TripleLoop& b) {
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) sum += coefficient_dot(a.loops[i], b.loops[i]);
    return sum;
}

double coefficient_norm(const TripleLoop& a) { return std::sqrt(coefficient_dot(a, a)); }

FourierLoop weighted_center(const TripleLoop& triple) {
    FourierLoop center(triple.modes());
    for (int i = 0; i < 3; ++i) center.axpy(triple.masses[i], triple.loops[i]);
    return center;
}

TripleLoop com_project(const std::array<FourierLoop, 3>& loops, const std::array<double, 3>& masses) {
    for (const double m : masses) {
        if (!(m > 0.0)) throw std::invalid_argument("com_project: masses must be positive");
    }
    require_same_modes(loops[0], loops[1]);
    require_same_modes(loops[0], loops[2]);
    TripleLoop t{loops, masses};
    const FourierLoop center = weighted_center(t);
    const double total = t.total_mass();
    for (auto& l : t.loops) l.axpy(-1.0 / total, center);
    return t;
}

TripleLoop scaled(const TripleLoop& triple, double factor) {
    TripleLoop out = triple;
    out *= factor;
    return out;
}

TripleLoop rotated(const TripleLoop& triple, double angle) {
    TripleLoop out = triple;
    for (auto& l : out.loops) l = rotated(l, angle);
    return out;
}

TripleLoop rotating_triangle(int modes, const std::array<Vec2, 3>& vertices,
                             const std::array<double, 3>& masses, int winding) {
    std::array<FourierLoop, 3> loops;
    for (int i = 0; i < 3; ++i) {
        // vertex * e^{2 pi i w t} as a complex product.
        const FourierLoop base = FourierLoop::circle(modes, 1.0, winding);
        FourierLoop l(modes);
        const int k = std::abs(winding);
        l.cos_coeffs[k - 1] = complex_mul(vertices[i], base.cos_coeffs[k - 1]);
        l.sin_coeffs[k - 1] = complex_mul(vertices[i], base.sin_coeffs[k - 1]);
        loops[i] = l;
    }
    return com_project(loops, masses);
}

TripleLoop random_triple(std::uint64_t seed, int modes, const std::array<double, 3>& masses,
                         int winding, double noise_scale) {
    if (winding == 0) throw InvalidWinding("random_triple: winding must be nonzero");
    if (modes < std::abs(winding)) throw InvalidWinding("random_triple: need modes >= |winding|");
    const std::array<Vec2, 3> unit_triangle{
        Vec2{0.0, 0.0}, Vec2{1.0, 0.0}, Vec2{0.5, std::sqrt(3.0) / 2.0}};
    TripleLoop base = rotating_triangle(modes, unit_triangle, masses, winding);
    const double amplitude = std::min(std::abs(noise_scale), 0.25);
    if (amplitude == 0.0) return base;
    std::mt19937_64 rng(seed);
    std::array<FourierLoop, 3> loops = base.loops;
    for (auto& l : loops) {
        FourierLoop noise = gaussian_loop(rng, modes);
        l.axpy(amplitude / amplitude_bound(noise), noise);
    }
    // Removing the centre shifts every body by the same loop, leaving u_i - u_j intact.
    return com_project(loops, masses);
}

}  // namespace loopaction
