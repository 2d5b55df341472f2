#pragma once

#include <cstddef>
#include <vector>

namespace beamsel {

/// Hamming-indexed beam groups: group k (1-based) holds every beam whose
/// index has bit k-1 set. Beam 0 belongs to no group.
class GroupDesign {
public:
    explicit GroupDesign(std::size_t n_beams);

    std::size_t n_beams() const { return n_beams_; }
    std::size_t n_groups() const { return groups_.size(); }
    /// Members of group k, k in [1, n_groups], ascending.
    const std::vector<std::size_t>& group(std::size_t k) const;
    bool contains(std::size_t beam, std::size_t k) const;

private:
    std::size_t n_beams_;
    std::vector<std::vector<std::size_t>> groups_;
};

/// Per-group verdicts; entry k-1 is the verdict for group k.
using DetectionVector = std::vector<bool>;

GroupDesign build_groups(std::size_t n_beams);

/// Bitwise decode: sum_k 2^(k-1) verdict_k. The all-false vector decodes to beam 0.
std::size_t decode(const DetectionVector& detections);

/// Bit test with range checks against the design.
bool membership(const GroupDesign& design, std::size_t beam, std::size_t group);

/// Verdicts a beam would produce under perfect detection.
DetectionVector encode(const GroupDesign& design, std::size_t beam);

}  // namespace beamsel
