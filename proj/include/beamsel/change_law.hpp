#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "beamsel/rng.hpp"

namespace beamsel {

/// Distribution shape on the unit interval. Used both to place the change
/// slot inside a window and as the within-round CDF F_{n'} in the bounds.
struct ShapeLaw {
    enum class Kind { uniform, beta, point };

    Kind kind = Kind::uniform;
    double alpha = 1.0;
    double beta = 1.0;
    double point = 0.0;

    static ShapeLaw make_uniform() { return {}; }
    static ShapeLaw make_beta(double a, double b) { return {Kind::beta, a, b, 0.0}; }
    static ShapeLaw make_point(double p) { return {Kind::point, 1.0, 1.0, p}; }

    void validate() const;
    /// P(U <= u), clamped outside [0, 1].
    double cdf(double u) const;
    double mean() const;
    double sample(Rng& rng) const;
    std::string describe() const;
};

/// Law of the change slot t_c: a shape placed over the slot window [lo, hi].
/// When `relative` is set, lo and hi are fractions of the horizon.
struct ChangeLaw {
    ShapeLaw shape;
    double lo = 0.0;
    double hi = 0.0;
    bool relative = false;

    static ChangeLaw fixed(std::int64_t slot);
    static ChangeLaw uniform(double lo, double hi);
    static ChangeLaw beta(double a, double b, double lo, double hi);
    static ChangeLaw uniform_fraction(double lo, double hi);
    static ChangeLaw beta_fraction(double a, double b, double lo, double hi);

    void validate() const;
    /// Integer slot window [first, last] for a given horizon.
    std::pair<std::int64_t, std::int64_t> window(std::int64_t horizon) const;
    /// Draws t_c, always inside [0, horizon].
    std::int64_t sample(Rng& rng, std::int64_t horizon) const;
    /// P(t_c <= t) for the discretized law.
    double cdf(double t, std::int64_t horizon) const;
    std::string describe() const;
};

/// Draws the realized change slot for a horizon T >= 1.
std::int64_t realize_change_slot(const ChangeLaw& law, std::int64_t horizon, Rng& rng);

}  // namespace beamsel
