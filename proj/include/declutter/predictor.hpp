#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "declutter/geometry.hpp"

namespace declutter {

// Parallel-jaw footprint: d1 is the jaw span (major axis), d2 the jaw width.
struct GripperSpec {
    double d1 = 0.12;
    double d2 = 0.04;

    void validate() const {
        if (!(d1 >= d2 && d2 > 0.0)) throw std::invalid_argument("GripperSpec: need d1 >= d2 > 0");
    }
    EllipseSpec ellipse(double x, double y, double theta) const {
        return EllipseSpec{x, y, theta, d1, d2};
    }
};

// b is the normalization constant of the success model, in pixels at
// `reference_cell_size`. At other resolutions b is rescaled by the squared
// cell ratio so probabilities stay resolution-independent.
struct PredictorConfig {
    double b = 100.0;
    double reference_cell_size = 0.002;

    double b_for(const GridMeta& meta) const {
        const double s = reference_cell_size / meta.cell_size;
        return b * s * s;
    }
};

struct Grasp {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

// p[i][j]: probability that candidate i picks segment j. Entries live in
// [0, 1) by construction of the a/(a+b) model.
struct ProbMatrix {
    std::size_t n = 0;  // candidates
    std::size_t m = 0;  // segments
    std::vector<double> p;

    ProbMatrix() = default;
    ProbMatrix(std::size_t n_, std::size_t m_) : n(n_), m(m_), p(n_ * m_, 0.0) {}
    double at(std::size_t i, std::size_t j) const { return p[i * m + j]; }
    double& at(std::size_t i, std::size_t j) { return p[i * m + j]; }
};

inline double overlap_probability(double area_px, double b) { return area_px / (area_px + b); }

inline double grasp_prob(const Grasp& grasp, const BitMask& segment, const GripperSpec& gripper,
                         const PredictorConfig& cfg) {
    gripper.validate();
    BitMask e = rasterize_ellipse(gripper.ellipse(grasp.x, grasp.y, grasp.theta), segment.meta);
    const double a = static_cast<double>(area_pixels(intersect(e, segment)));
    return overlap_probability(a, cfg.b_for(segment.meta));
}

inline ProbMatrix prob_matrix(const std::vector<Grasp>& candidates, const std::vector<BitMask>& segments,
                              const GripperSpec& gripper, const PredictorConfig& cfg) {
    gripper.validate();
    ProbMatrix out(candidates.size(), segments.size());
    if (candidates.empty() || segments.empty()) return out;
    const GridMeta& meta = segments.front().meta;
    const double b = cfg.b_for(meta);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        // One rasterization per candidate, reused across segments.
        BitMask e = rasterize_ellipse(gripper.ellipse(candidates[i].x, candidates[i].y, candidates[i].theta), meta);
        std::vector<std::size_t> on;
        for (std::size_t c = 0; c < e.cells.size(); ++c)
            if (e.cells[c]) on.push_back(c);
        for (std::size_t j = 0; j < segments.size(); ++j) {
            if (segments[j].meta != meta) throw std::invalid_argument("prob_matrix: segment metas differ");
            std::size_t a = 0;
            for (std::size_t c : on) a += segments[j].cells[c];
            out.at(i, j) = overlap_probability(static_cast<double>(a), b);
        }
    }
    return out;
}

// Expected grasped area: sum over segments of p_ij * area(M_j). The segment's
// full area counts, not just the part under the ellipse.
inline double expected_area(const Grasp& grasp, const std::vector<BitMask>& segments,
                            const GripperSpec& gripper, const PredictorConfig& cfg) {
    double total = 0.0;
    for (const auto& seg : segments)
        total += grasp_prob(grasp, seg, gripper, cfg) * static_cast<double>(area_pixels(seg));
    return total;
}

}  // namespace declutter
