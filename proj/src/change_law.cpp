#include "beamsel/change_law.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

namespace beamsel {

void ShapeLaw::validate() const
{
    switch (kind) {
    case Kind::uniform:
        return;
    case Kind::beta:
        if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
            throw std::invalid_argument("beta law requires alpha > 0 and beta > 0");
        return;
    case Kind::point:
        if (!(point >= 0.0 && point <= 1.0))
            throw std::invalid_argument("point law location must lie in [0, 1]");
        return;
    }
}

double ShapeLaw::cdf(double u) const
{
    if (u <= 0.0)
        return kind == Kind::point && point <= 0.0 && u == 0.0 ? 1.0 : 0.0;
    if (u >= 1.0)
        return 1.0;
    switch (kind) {
    case Kind::uniform:
        return u;
    case Kind::beta:
        return boost::math::ibeta(alpha, beta, u);
    case Kind::point:
        return u >= point ? 1.0 : 0.0;
    }
    return 0.0;
}

double ShapeLaw::mean() const
{
    switch (kind) {
    case Kind::uniform:
        return 0.5;
    case Kind::beta:
        return alpha / (alpha + beta);
    case Kind::point:
        return point;
    }
    return 0.0;
}

double ShapeLaw::sample(Rng& rng) const
{
    switch (kind) {
    case Kind::uniform:
        return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    case Kind::beta: {
        const double x = std::gamma_distribution<double>(alpha, 1.0)(rng);
        const double y = std::gamma_distribution<double>(beta, 1.0)(rng);
        return x + y > 0.0 ? x / (x + y) : 0.5;
    }
    case Kind::point:
        return point;
    }
    return 0.0;
}

std::string ShapeLaw::describe() const
{
    std::ostringstream os;
    switch (kind) {
    case Kind::uniform:
        os << "uniform";
        break;
    case Kind::beta:
        os << "beta(" << alpha << "," << beta << ")";
        break;
    case Kind::point:
        os << "point(" << point << ")";
        break;
    }
    return os.str();
}

ChangeLaw ChangeLaw::fixed(std::int64_t slot)
{
    const auto s = static_cast<double>(slot);
    return {ShapeLaw::make_point(0.0), s, s, false};
}

ChangeLaw ChangeLaw::uniform(double lo, double hi) { return {ShapeLaw::make_uniform(), lo, hi, false}; }

ChangeLaw ChangeLaw::beta(double a, double b, double lo, double hi)
{
    return {ShapeLaw::make_beta(a, b), lo, hi, false};
}

ChangeLaw ChangeLaw::uniform_fraction(double lo, double hi) { return {ShapeLaw::make_uniform(), lo, hi, true}; }

ChangeLaw ChangeLaw::beta_fraction(double a, double b, double lo, double hi)
{
    return {ShapeLaw::make_beta(a, b), lo, hi, true};
}

void ChangeLaw::validate() const
{
    shape.validate();
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo < 0.0 || lo > hi)
        throw std::invalid_argument("change-slot window requires 0 <= lo <= hi");
    if (relative && hi > 1.0)
        throw std::invalid_argument("relative change-slot window must lie in [0, 1]");
}

std::pair<std::int64_t, std::int64_t> ChangeLaw::window(std::int64_t horizon) const
{
    const double scale = relative ? static_cast<double>(horizon) : 1.0;
    auto first = static_cast<std::int64_t>(std::llround(lo * scale));
    auto last = static_cast<std::int64_t>(std::llround(hi * scale));
    first = std::clamp<std::int64_t>(first, 0, horizon);
    last = std::clamp<std::int64_t>(last, first, horizon);
    return {first, last};
}

std::int64_t ChangeLaw::sample(Rng& rng, std::int64_t horizon) const
{
    const auto [first, last] = window(horizon);
    const auto width = static_cast<double>(last - first + 1);
    const double u = shape.sample(rng);
    auto offset = static_cast<std::int64_t>(std::floor(u * width));
    offset = std::clamp<std::int64_t>(offset, 0, last - first);
    return first + offset;
}

double ChangeLaw::cdf(double t, std::int64_t horizon) const
{
    const auto [first, last] = window(horizon);
    const double slot = std::floor(t);
    if (slot < static_cast<double>(first))
        return 0.0;
    if (slot >= static_cast<double>(last))
        return 1.0;
    const auto width = static_cast<double>(last - first + 1);
    const double x = (slot - static_cast<double>(first) + 1.0) / width;
    if (shape.kind == ShapeLaw::Kind::point)
        return std::floor(shape.point * width) < x * width ? 1.0 : 0.0;
    return shape.cdf(x);
}

std::string ChangeLaw::describe() const
{
    std::ostringstream os;
    os << shape.describe() << "[" << lo << "," << hi << (relative ? "]*T" : "]");
    return os.str();
}

std::int64_t realize_change_slot(const ChangeLaw& law, std::int64_t horizon, Rng& rng)
{
    if (horizon < 1)
        throw std::invalid_argument("horizon must be >= 1");
    law.validate();
    return law.sample(rng, horizon);
}

}  // namespace beamsel
