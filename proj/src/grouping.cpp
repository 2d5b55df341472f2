#include "beamsel/grouping.hpp"

#include <stdexcept>

#include "beamsel/environment.hpp"

namespace beamsel {

GroupDesign::GroupDesign(std::size_t n_beams) : n_beams_(n_beams)
{
    if (n_beams < 2 || !is_power_of_two(n_beams))
        throw std::invalid_argument("group design needs a power-of-two beam count >= 2");
    const std::size_t d = log2_exact(n_beams);
    groups_.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
        groups_[k].reserve(n_beams / 2);
        for (std::size_t i = 0; i < n_beams; ++i)
            if ((i >> k) & 1U)
                groups_[k].push_back(i);
    }
}

const std::vector<std::size_t>& GroupDesign::group(std::size_t k) const
{
    if (k < 1 || k > groups_.size())
        throw std::out_of_range("group index out of range");
    return groups_[k - 1];
}

bool GroupDesign::contains(std::size_t beam, std::size_t k) const
{
    if (beam >= n_beams_)
        throw std::out_of_range("beam index out of range");
    if (k < 1 || k > groups_.size())
        throw std::out_of_range("group index out of range");
    return (beam >> (k - 1)) & 1U;
}

GroupDesign build_groups(std::size_t n_beams) { return GroupDesign(n_beams); }

std::size_t decode(const DetectionVector& detections)
{
    std::size_t beam = 0;
    for (std::size_t k = 0; k < detections.size(); ++k)
        if (detections[k])
            beam |= std::size_t{1} << k;
    return beam;
}

bool membership(const GroupDesign& design, std::size_t beam, std::size_t group)
{
    return design.contains(beam, group);
}

DetectionVector encode(const GroupDesign& design, std::size_t beam)
{
    DetectionVector v(design.n_groups());
    for (std::size_t k = 1; k <= design.n_groups(); ++k)
        v[k - 1] = design.contains(beam, k);
    return v;
}

}  // namespace beamsel
