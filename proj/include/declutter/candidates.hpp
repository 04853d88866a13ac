#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "declutter/core.hpp"
#include "declutter/geometry.hpp"
#include "declutter/predictor.hpp"

namespace declutter {

struct CandidateConfig {
    double r = 0.03;  // nearby radius, meters
    int k = 5;        // sample points per partition
    int l = 6;        // orientations per point

    void validate() const {
        if (!(r > 0.0) || k < 1 || l < 1) throw std::invalid_argument("CandidateConfig: need r > 0, k >= 1, l >= 1");
    }
};

// Maximal set of foreground cells sharing the same nearby-segment set.
struct Partition {
    int id = 0;
    std::vector<int> key;  // sorted segment indices; empty when no segment is near
    BitMask cells;
    std::size_t cell_count = 0;
};

struct GraspCandidate {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
    int partition_id = -1;
};

// Group the foreground by the set of segments within distance r of each cell.
// Segment indices refer to positions in `segments`. Partition ids follow the
// sorted key order, so the result is deterministic.
inline std::vector<Partition> partition_foreground(const BitMask& foreground,
                                                   const std::vector<BitMask>& segments, double r) {
    if (segments.size() > 64) throw std::invalid_argument("partition_foreground: more than 64 segments");
    const GridMeta& meta = foreground.meta;
    std::vector<std::vector<std::uint8_t>> near(segments.size());
    for (std::size_t j = 0; j < segments.size(); ++j) {
        if (segments[j].meta != meta) throw std::invalid_argument("partition_foreground: grid metas differ");
        near[j] = dilate_within(segments[j], r).cells;
    }

    std::vector<std::uint64_t> cell_key(meta.cell_count(), 0);
    for (std::size_t j = 0; j < segments.size(); ++j) {
        const auto& nj = near[j];
        const std::uint64_t bit = 1ULL << j;
        for (std::size_t i = 0; i < nj.size(); ++i)
            if (nj[i]) cell_key[i] |= bit;
    }

    // Sorted index-vector keys give the canonical partition order.
    std::map<std::vector<int>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < cell_key.size(); ++i) {
        if (!foreground.cells[i]) continue;
        std::vector<int> key;
        std::uint64_t bits = cell_key[i];
        while (bits) {
            const int j = std::countr_zero(bits);
            key.push_back(j);
            bits &= bits - 1;
        }
        groups[std::move(key)].push_back(i);
    }

    std::vector<Partition> out;
    int next_id = 0;
    for (auto& [key, idxs] : groups) {
        Partition p;
        p.id = next_id++;
        p.key = key;
        p.cells = BitMask(meta);
        for (std::size_t i : idxs) p.cells.cells[i] = 1;
        p.cell_count = idxs.size();
        out.push_back(std::move(p));
    }
    return out;
}

// From each partition with a non-empty key, sample min(k, cells) distinct
// cells uniformly without replacement and enumerate l equally spaced
// orientations {-pi/2 + t*pi/l} per point. Empty-key partitions cannot grasp
// anything with positive predicted probability and are skipped.
inline std::vector<GraspCandidate> sample_candidates(const std::vector<Partition>& partitions,
                                                     const CandidateConfig& cfg, Rng& rng) {
    cfg.validate();
    std::vector<GraspCandidate> out;
    for (const auto& part : partitions) {
        if (part.key.empty() || part.cell_count == 0) continue;
        std::vector<std::size_t> idxs;
        idxs.reserve(part.cell_count);
        for (std::size_t i = 0; i < part.cells.cells.size(); ++i)
            if (part.cells.cells[i]) idxs.push_back(i);
        const std::size_t take = std::min<std::size_t>(cfg.k, idxs.size());
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + rng.uniform_index(idxs.size() - i);
            std::swap(idxs[i], idxs[j]);
        }
        const GridMeta& meta = part.cells.meta;
        for (std::size_t i = 0; i < take; ++i) {
            const int ix = static_cast<int>(idxs[i] % meta.width);
            const int iy = static_cast<int>(idxs[i] / meta.width);
            Point p = meta.cell_center(ix, iy);
            for (int t = 0; t < cfg.l; ++t) {
                const double theta = -std::numbers::pi / 2 + t * std::numbers::pi / cfg.l;
                out.push_back({p.x, p.y, theta, part.id});
            }
        }
    }
    return out;
}

// Two grasps overlap iff they come from the same partition; orientation does
// not matter.
inline bool conflict(const GraspCandidate& a, const GraspCandidate& b) {
    return a.partition_id == b.partition_id;
}

inline std::vector<std::pair<int, int>> conflict_pairs(const std::vector<GraspCandidate>& candidates) {
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        for (std::size_t j = i + 1; j < candidates.size(); ++j)
            if (conflict(candidates[i], candidates[j])) pairs.push_back({static_cast<int>(i), static_cast<int>(j)});
    return pairs;
}

}  // namespace declutter
