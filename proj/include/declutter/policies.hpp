#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "declutter/candidates.hpp"
#include "declutter/core.hpp"
#include "declutter/geometry.hpp"
#include "declutter/predictor.hpp"
#include "declutter/scene.hpp"
#include "declutter/setcover.hpp"

namespace declutter {

enum class ActionKind { Pick, PlaceInWorkspace, Transport };

struct Action {
    ActionKind kind = ActionKind::Pick;
    Grasp grasp;  // Pick
    Point place;  // PlaceInWorkspace
    // A conditional transport is skipped by the episode runner when the
    // gripper is empty (consolidation's end-of-plan basket trip).
    bool only_if_holding = false;

    static Action pick(Grasp g) { return {ActionKind::Pick, g, {}, false}; }
    static Action place_at(Point p) { return {ActionKind::PlaceInWorkspace, {}, p, false}; }
    static Action transport_now(bool conditional = false) {
        return {ActionKind::Transport, {}, {}, conditional};
    }
};

enum class DepthVariant { Height, Volume };

struct PolicyConfig {
    double height_threshold = 0.1;     // meters; hybrid dispatch (strictly taller than)
    double volume_radius = 0.06;       // disc radius R for max-volume
    double grasp_area_threshold = 15000.0;  // pixels; consolidation chain budget
    int staleness_window = 31;         // cells, odd
    double staleness_tol = 1e-5;       // mean squared height difference, m^2
    double pca_radius = 0.06;          // orientation neighborhood
    int fill_kernel = 3;               // segmentation cleanup kernel
    DepthVariant depth_variant = DepthVariant::Height;  // hybrid's depth arm
};

// Everything a policy needs besides the observation.
struct PolicyContext {
    GripperSpec gripper;
    PredictorConfig predictor;
    CandidateConfig candidates;
    SolverConfig solver;
    PolicyConfig policy;
    Point basket{1.2, 0.3};
};

inline Grasp random_grasp(const ObservedScene& obs, Rng& rng) {
    std::vector<std::size_t> fg;
    for (std::size_t i = 0; i < obs.foreground.cells.size(); ++i)
        if (obs.foreground.cells[i]) fg.push_back(i);
    if (fg.empty()) throw std::runtime_error("random_grasp: empty foreground");
    const std::size_t idx = fg[rng.uniform_index(fg.size())];
    const GridMeta& meta = obs.foreground.meta;
    Point p = meta.cell_center(static_cast<int>(idx % meta.width), static_cast<int>(idx / meta.width));
    return {p.x, p.y, rng.uniform(-std::numbers::pi / 2, std::numbers::pi / 2)};
}

// Highest cell wins; ties go to the lowest row-major index. Orientation from
// local PCA around the grasp point.
inline Grasp max_height_grasp(const ObservedScene& obs, const PolicyConfig& cfg) {
    const GridMeta& meta = obs.heights.meta;
    std::size_t best = 0;
    double best_h = -1.0;
    for (std::size_t i = 0; i < obs.heights.values.size(); ++i)
        if (obs.heights.values[i] > best_h) {
            best_h = obs.heights.values[i];
            best = i;
        }
    Point p = meta.cell_center(static_cast<int>(best % meta.width), static_cast<int>(best / meta.width));
    const double theta = local_pca_angle(obs.heights, obs.foreground, p, cfg.pca_radius).angle;
    return {p.x, p.y, theta};
}

// Largest disc-integrated volume over the foreground cells. The integral
// carries prefix-sum rounding noise, so ties within 1e-9 keep the lowest
// row-major index.
inline Grasp max_volume_grasp(const ObservedScene& obs, const PolicyConfig& cfg) {
    const GridMeta& meta = obs.heights.meta;
    ScalarField vol = disc_sums(obs.heights, cfg.volume_radius);
    std::size_t best = 0;
    double best_v = -1.0;
    bool found = false;
    for (std::size_t i = 0; i < vol.values.size(); ++i) {
        if (!obs.foreground.cells[i]) continue;
        if (vol.values[i] > best_v + 1e-9) {
            best_v = vol.values[i];
            best = i;
            found = true;
        }
    }
    if (!found) throw std::runtime_error("max_volume_grasp: empty foreground");
    Point p = meta.cell_center(static_cast<int>(best % meta.width), static_cast<int>(best / meta.width));
    const double theta = local_pca_angle(obs.heights, obs.foreground, p, cfg.pca_radius).angle;
    return {p.x, p.y, theta};
}

// Height-field window captured when a grasp was planned; compared against the
// live field before execution.
struct WindowSnapshot {
    int cx = 0, cy = 0;
    std::vector<double> values;  // in-bounds window cells, row-major
};

inline WindowSnapshot take_snapshot(const ScalarField& field, const Grasp& grasp, int window) {
    const GridMeta& meta = field.meta;
    WindowSnapshot snap;
    snap.cx = meta.to_ix(grasp.x);
    snap.cy = meta.to_iy(grasp.y);
    const int half = window / 2;
    for (int iy = snap.cy - half; iy <= snap.cy + half; ++iy)
        for (int ix = snap.cx - half; ix <= snap.cx + half; ++ix)
            if (meta.contains(ix, iy)) snap.values.push_back(field.values[meta.index(ix, iy)]);
    return snap;
}

// True (stale: skip the grasp) iff the mean squared height difference inside
// the window exceeds tol.
inline bool staleness_check(const ScalarField& current, const Grasp& grasp, const WindowSnapshot& snapshot,
                            int window, double tol) {
    if (window < 1 || window % 2 == 0) throw std::invalid_argument("staleness_check: window must be odd");
    WindowSnapshot now = take_snapshot(current, grasp, window);
    if (now.values.size() != snapshot.values.size()) return true;
    if (now.values.empty()) return false;
    double acc = 0.0;
    for (std::size_t i = 0; i < now.values.size(); ++i) {
        const double d = now.values[i] - snapshot.values[i];
        acc += d * d;
    }
    return acc / static_cast<double>(now.values.size()) > tol;
}

struct PlannedGrasp {
    Grasp grasp;
    double expected_area_px = 0.0;
    WindowSnapshot snapshot;
};

enum class PlanOrder { NearestFirst, FarthestFirst };

// One cycle of the segment-based pipeline: segmentation cleanup, candidate
// generation, probability prediction, MILP solve, and ordering by distance
// to the basket.
struct CyclePlan {
    std::vector<PlannedGrasp> grasps;
    std::vector<int> planned_segment_ids;  // segments covered to target
    std::vector<int> dropped_segment_ids;  // relaxed out of the MILP
    std::vector<double> failure_prob;      // per observed segment index
    SolveStatus milp_status = SolveStatus::Unknown;
    std::size_t n_candidates = 0;
    std::size_t n_segments = 0;
    double candidate_gen_seconds = 0.0;
    double solve_seconds = 0.0;
};

inline CyclePlan plan_segment_cycle(const ObservedScene& obs, const PolicyContext& ctx, PlanOrder order,
                                    Rng& rng) {
    CyclePlan plan;
    const auto t0 = std::chrono::steady_clock::now();

    // Cleanup: close holes per segment, clipped back to the foreground so
    // segments stay inside X_g.
    std::vector<BitMask> cleaned;
    std::vector<int> seg_ids;
    for (const auto& seg : obs.segments) {
        BitMask c = intersect(fill_holes(seg.mask, ctx.policy.fill_kernel), obs.foreground);
        if (area_pixels(c) == 0) continue;
        cleaned.push_back(std::move(c));
        seg_ids.push_back(seg.id);
    }
    plan.n_segments = cleaned.size();
    if (cleaned.empty()) return plan;

    std::vector<Partition> parts = partition_foreground(obs.foreground, cleaned, ctx.candidates.r);
    std::vector<GraspCandidate> cands = sample_candidates(parts, ctx.candidates, rng);
    plan.n_candidates = cands.size();
    if (cands.empty()) return plan;

    std::vector<Grasp> grasps;
    grasps.reserve(cands.size());
    for (const auto& c : cands) grasps.push_back({c.x, c.y, c.theta});
    ProbMatrix P = prob_matrix(grasps, cleaned, ctx.gripper, ctx.predictor);
    MilpInstance inst = build_milp(P, ctx.solver.q, conflict_pairs(cands));
    plan.candidate_gen_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto t1 = std::chrono::steady_clock::now();
    SolveOutcome outcome = solve_exact(inst, ctx.solver);
    if (outcome.status == SolveStatus::Unknown) outcome = solve_greedy(inst);
    plan.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
    plan.milp_status = outcome.status;

    std::vector<double> seg_area(cleaned.size());
    for (std::size_t j = 0; j < cleaned.size(); ++j) seg_area[j] = static_cast<double>(area_pixels(cleaned[j]));

    std::vector<std::uint8_t> dropped(cleaned.size(), 0);
    for (int j : outcome.dropped_garments) {
        dropped[j] = 1;
        plan.dropped_segment_ids.push_back(seg_ids[j]);
    }
    for (std::size_t j = 0; j < cleaned.size(); ++j)
        if (!dropped[j]) plan.planned_segment_ids.push_back(seg_ids[j]);
    plan.failure_prob = plan_failure_prob(outcome.plan, P);

    for (int i : outcome.plan.selected) {
        PlannedGrasp pg;
        pg.grasp = grasps[i];
        double ea = 0.0;
        for (std::size_t j = 0; j < cleaned.size(); ++j) ea += P.at(i, j) * seg_area[j];
        pg.expected_area_px = ea;
        pg.snapshot = take_snapshot(obs.heights, pg.grasp, ctx.policy.staleness_window);
        plan.grasps.push_back(std::move(pg));
    }
    auto dist = [&](const PlannedGrasp& g) { return distance({g.grasp.x, g.grasp.y}, ctx.basket); };
    std::stable_sort(plan.grasps.begin(), plan.grasps.end(), [&](const PlannedGrasp& a, const PlannedGrasp& b) {
        return order == PlanOrder::NearestFirst ? dist(a) < dist(b) : dist(a) > dist(b);
    });
    return plan;
}

// Policies are queried once per observation and return the actions to run
// before the next observation; every batch ends with a Transport so the
// runner re-observes after each basket trip.
struct StepBatch {
    std::vector<Action> actions;
    int stale_skips = 0;
};

class PolicyEngine {
public:
    virtual ~PolicyEngine() = default;
    virtual StepBatch step(const ObservedScene& obs, Rng& rng) = 0;
    virtual std::string name() const = 0;
};

class RandomEngine final : public PolicyEngine {
public:
    explicit RandomEngine(const PolicyContext&) {}
    StepBatch step(const ObservedScene& obs, Rng& rng) override {
        return {{Action::pick(random_grasp(obs, rng)), Action::transport_now()}, 0};
    }
    std::string name() const override { return "random"; }
};

class DepthEngine final : public PolicyEngine {
public:
    DepthEngine(const PolicyContext& ctx, DepthVariant variant) : ctx_(ctx), variant_(variant) {}
    StepBatch step(const ObservedScene& obs, Rng&) override {
        Grasp g = variant_ == DepthVariant::Height ? max_height_grasp(obs, ctx_.policy)
                                                   : max_volume_grasp(obs, ctx_.policy);
        return {{Action::pick(g), Action::transport_now()}, 0};
    }
    std::string name() const override {
        return variant_ == DepthVariant::Height ? "max_height" : "max_volume";
    }

private:
    PolicyContext ctx_;
    DepthVariant variant_;
};

// Segment-based cycles: plan once, then execute grasp by grasp nearest-first,
// skipping grasps whose neighborhood changed since planning. A cycle that
// yields no executable grasp falls back to one random action so the episode
// keeps making progress. With auto_replan off (hybrid mode) an exhausted
// cycle returns an empty batch instead, marking the cycle boundary.
class SegmentEngine final : public PolicyEngine {
public:
    explicit SegmentEngine(const PolicyContext& ctx, bool auto_replan = true)
        : ctx_(ctx), auto_replan_(auto_replan) {}

    StepBatch step(const ObservedScene& obs, Rng& rng) override {
        StepBatch batch;
        const int attempts = plan_ ? 2 : 1;  // existing cycle, then at most one replan
        for (int attempt = 0; attempt < attempts || (auto_replan_ && attempt < 2); ++attempt) {
            if (!plan_) {
                plan_ = plan_segment_cycle(obs, ctx_, PlanOrder::NearestFirst, rng);
                cursor_ = 0;
            }
            while (cursor_ < plan_->grasps.size()) {
                const PlannedGrasp& g = plan_->grasps[cursor_++];
                if (staleness_check(obs.heights, g.grasp, g.snapshot, ctx_.policy.staleness_window,
                                    ctx_.policy.staleness_tol)) {
                    ++batch.stale_skips;
                    continue;
                }
                batch.actions = {Action::pick(g.grasp), Action::transport_now()};
                return batch;
            }
            plan_.reset();
            if (!auto_replan_) return batch;  // cycle boundary; caller re-dispatches
        }
        batch.actions = {Action::pick(random_grasp(obs, rng)), Action::transport_now()};
        return batch;
    }

    bool cycle_active() const { return plan_ && cursor_ < plan_->grasps.size(); }
    std::string name() const override { return "segment"; }

private:
    PolicyContext ctx_;
    bool auto_replan_;
    std::optional<CyclePlan> plan_;
    std::size_t cursor_ = 0;
};

// Height-threshold dispatch: tall piles route to a single depth-based grasp,
// flat scenes run one full segment cycle. The rule is re-evaluated at every
// cycle boundary.
class HybridEngine final : public PolicyEngine {
public:
    HybridEngine(const PolicyContext& ctx, DepthVariant variant)
        : ctx_(ctx), variant_(variant), segment_(ctx, /*auto_replan=*/false) {}

    StepBatch step(const ObservedScene& obs, Rng& rng) override {
        int skips = 0;
        if (segment_.cycle_active()) {
            StepBatch batch = segment_.step(obs, rng);
            if (!batch.actions.empty()) return batch;
            skips = batch.stale_skips;  // cycle ended on stale grasps; re-dispatch
        }
        double max_h = 0.0;
        for (double v : obs.heights.values) max_h = std::max(max_h, v);
        if (max_h > ctx_.policy.height_threshold) {
            Grasp g = variant_ == DepthVariant::Height ? max_height_grasp(obs, ctx_.policy)
                                                       : max_volume_grasp(obs, ctx_.policy);
            return {{Action::pick(g), Action::transport_now()}, skips};
        }
        StepBatch batch = segment_.step(obs, rng);
        batch.stale_skips += skips;
        if (batch.actions.empty())
            batch.actions = {Action::pick(random_grasp(obs, rng)), Action::transport_now()};
        return batch;
    }
    std::string name() const override {
        return variant_ == DepthVariant::Height ? "hybrid_height" : "hybrid_volume";
    }

private:
    PolicyContext ctx_;
    DepthVariant variant_;
    SegmentEngine segment_;
};

// Segment cycles with chained pick-and-place consolidation. The plan runs
// farthest-from-basket first; held garments are re-placed at the next grasp
// point and re-picked there, and a basket trip happens when the accumulated
// expected area would exceed the grasp area threshold.
class ConsolidationEngine final : public PolicyEngine {
public:
    explicit ConsolidationEngine(const PolicyContext& ctx) : ctx_(ctx) {}

    StepBatch step(const ObservedScene& obs, Rng& rng) override {
        StepBatch batch;
        for (int attempt = 0; attempt < 2; ++attempt) {
            if (!plan_) {
                plan_ = plan_segment_cycle(obs, ctx_, PlanOrder::FarthestFirst, rng);
                cursor_ = 0;
                total_expected_area_ = 0.0;
            }
            bool holding = false;
            while (cursor_ < plan_->grasps.size()) {
                const PlannedGrasp& g = plan_->grasps[cursor_];
                if (staleness_check(obs.heights, g.grasp, g.snapshot, ctx_.policy.staleness_window,
                                    ctx_.policy.staleness_tol)) {
                    ++cursor_;
                    ++batch.stale_skips;
                    continue;
                }
                const bool fits = total_expected_area_ + g.expected_area_px <= ctx_.policy.grasp_area_threshold;
                if (!fits && total_expected_area_ > 0.0) break;  // transport, then reconsider this grasp
                if (holding) batch.actions.push_back(Action::place_at({g.grasp.x, g.grasp.y}));
                batch.actions.push_back(Action::pick(g.grasp));
                holding = true;
                total_expected_area_ += g.expected_area_px;
                ++cursor_;
            }
            if (holding) {
                const bool plan_done = cursor_ >= plan_->grasps.size();
                batch.actions.push_back(Action::transport_now(plan_done));
                total_expected_area_ = 0.0;
                if (plan_done) plan_.reset();
                return batch;
            }
            plan_.reset();  // nothing executable in this plan
        }
        batch.actions = {Action::pick(random_grasp(obs, rng)), Action::transport_now()};
        return batch;
    }
    std::string name() const override { return "consolidation"; }

private:
    PolicyContext ctx_;
    std::optional<CyclePlan> plan_;
    std::size_t cursor_ = 0;
    double total_expected_area_ = 0.0;
};

enum class PolicyKind { Random, MaxHeight, MaxVolume, Segment, HybridHeight, HybridVolume, Consolidation };

inline const char* to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::Random: return "random";
        case PolicyKind::MaxHeight: return "max_height";
        case PolicyKind::MaxVolume: return "max_volume";
        case PolicyKind::Segment: return "segment";
        case PolicyKind::HybridHeight: return "hybrid_height";
        case PolicyKind::HybridVolume: return "hybrid_volume";
        case PolicyKind::Consolidation: return "consolidation";
    }
    return "?";
}

inline PolicyKind policy_from_name(const std::string& name) {
    for (PolicyKind k : {PolicyKind::Random, PolicyKind::MaxHeight, PolicyKind::MaxVolume, PolicyKind::Segment,
                         PolicyKind::HybridHeight, PolicyKind::HybridVolume, PolicyKind::Consolidation})
        if (name == to_string(k)) return k;
    throw std::invalid_argument("unknown policy: " + name);
}

inline std::unique_ptr<PolicyEngine> make_engine(PolicyKind kind, const PolicyContext& ctx) {
    switch (kind) {
        case PolicyKind::Random: return std::make_unique<RandomEngine>(ctx);
        case PolicyKind::MaxHeight: return std::make_unique<DepthEngine>(ctx, DepthVariant::Height);
        case PolicyKind::MaxVolume: return std::make_unique<DepthEngine>(ctx, DepthVariant::Volume);
        case PolicyKind::Segment: return std::make_unique<SegmentEngine>(ctx);
        case PolicyKind::HybridHeight: return std::make_unique<HybridEngine>(ctx, DepthVariant::Height);
        case PolicyKind::HybridVolume: return std::make_unique<HybridEngine>(ctx, DepthVariant::Volume);
        case PolicyKind::Consolidation: return std::make_unique<ConsolidationEngine>(ctx);
    }
    throw std::invalid_argument("unknown policy kind");
}

}  // namespace declutter
