#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "declutter/config.hpp"
#include "declutter/core.hpp"
#include "declutter/policies.hpp"
#include "declutter/scene.hpp"

namespace declutter {

struct StepRecord {
    Action action;
    std::vector<int> removed_ids;  // garments leaving the world (Transport only)
    std::size_t held_after = 0;
    int stale_skips = 0;
};

struct EpisodeRecord {
    std::uint64_t seed = 0;
    std::string policy;
    std::size_t initial_garments = 0;
    std::vector<StepRecord> steps;
    std::size_t transports = 0;
    std::size_t workspace_moves = 0;
    std::size_t objects_removed = 0;
    std::size_t stale_skips = 0;
    double opt = 0.0;
    bool completed = false;
    std::size_t max_steps = 0;

    std::string serialize() const {
        std::ostringstream out;
        out << "episode v1\n";
        out << "seed " << seed << " policy " << policy << " initial " << initial_garments << " max_steps "
            << max_steps << "\n";
        for (const auto& s : steps) {
            switch (s.action.kind) {
                case ActionKind::Pick:
                    out << "pick " << format_double(s.action.grasp.x) << " " << format_double(s.action.grasp.y)
                        << " " << format_double(s.action.grasp.theta);
                    break;
                case ActionKind::PlaceInWorkspace:
                    out << "place " << format_double(s.action.place.x) << " " << format_double(s.action.place.y);
                    break;
                case ActionKind::Transport: {
                    out << "transport removed";
                    for (int id : s.removed_ids) out << " " << id;
                    break;
                }
            }
            out << " held " << s.held_after;
            if (s.stale_skips > 0) out << " skips " << s.stale_skips;
            out << "\n";
        }
        out << "summary transports " << transports << " moves " << workspace_moves << " removed "
            << objects_removed << " opt " << format_double(opt) << " completed " << (completed ? 1 : 0)
            << "\n";
        return out.str();
    }
};

// Drive one policy over one scene until the surface is clear or the step
// budget runs out. Every applied action counts as one step.
inline EpisodeRecord run_episode(Scene scene, PolicyKind kind, const Config& cfg, Rng& rng,
                                 std::size_t max_steps) {
    if (max_steps < 1) throw std::invalid_argument("run_episode: max_steps must be >= 1");
    PolicyContext ctx = cfg.policy_context();
    ctx.basket = scene.basket;
    auto engine = make_engine(kind, ctx);

    EpisodeRecord rec;
    rec.seed = scene.rng_seed;
    rec.policy = to_string(kind);
    rec.initial_garments = scene.stack.size();
    rec.max_steps = max_steps;

    std::vector<Garment> held;
    std::size_t queries = 0;
    ObservedScene obs = observe(scene, cfg.scene.min_visible);
    while (area_pixels(obs.foreground) > 0 && rec.steps.size() < max_steps) {
        if (++queries > max_steps * 4) break;  // stalled policy guard
        StepBatch batch = engine->step(obs, rng);
        int pending_skips = batch.stale_skips;
        rec.stale_skips += static_cast<std::size_t>(batch.stale_skips);
        for (const Action& a : batch.actions) {
            if (rec.steps.size() >= max_steps) break;
            bool applied = true;
            StepRecord sr;
            sr.action = a;
            switch (a.kind) {
                case ActionKind::Pick: {
                    auto [next, grabbed] = apply_grasp(scene, a.grasp, cfg.gripper, cfg.predictor, rng);
                    scene = std::move(next);
                    for (auto& g : grabbed) held.push_back(std::move(g));
                    break;
                }
                case ActionKind::PlaceInWorkspace: {
                    if (held.empty()) {
                        applied = false;  // nothing to put down
                        break;
                    }
                    scene = apply_place(scene, std::move(held), a.place, cfg.scene);
                    held.clear();
                    ++rec.workspace_moves;
                    break;
                }
                case ActionKind::Transport: {
                    if (a.only_if_holding && held.empty()) {
                        applied = false;
                        break;
                    }
                    scene = transport(scene, held);
                    ++rec.transports;
                    for (const auto& g : held) sr.removed_ids.push_back(g.id);
                    rec.objects_removed += held.size();
                    held.clear();
                    break;
                }
            }
            if (applied) {
                sr.held_after = held.size();
                sr.stale_skips = pending_skips;
                pending_skips = 0;
                rec.steps.push_back(std::move(sr));
            }
        }
        obs = observe(scene, cfg.scene.min_visible);
    }
    rec.completed = scene.stack.empty() && held.empty();
    rec.opt = rec.transports > 0 ? static_cast<double>(rec.objects_removed) / rec.transports : 0.0;
    return rec;
}

struct OptStats {
    double mean = 0.0;
    double ci95 = 0.0;
    std::size_t zero_transport_records = 0;  // contributed OpT 0; worth a warning
};

// Mean of per-episode OpT with a normal-approximation 95% interval.
inline OptStats opt_metric(const std::vector<EpisodeRecord>& records) {
    if (records.size() < 2) throw std::invalid_argument("opt_metric: need at least 2 records");
    OptStats st;
    double sum = 0.0;
    for (const auto& r : records) {
        if (r.transports == 0) ++st.zero_transport_records;
        sum += r.opt;
    }
    st.mean = sum / static_cast<double>(records.size());
    double ss = 0.0;
    for (const auto& r : records) ss += (r.opt - st.mean) * (r.opt - st.mean);
    const double sd = std::sqrt(ss / static_cast<double>(records.size() - 1));
    st.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(records.size()));
    return st;
}

struct PolicySummary {
    std::string policy;
    std::size_t episodes = 0;
    double mean_opt = 0.0;
    double ci95 = 0.0;
    double mean_transports = 0.0;
    double mean_moves = 0.0;
    double completion_rate = 0.0;
};

struct BenchReport {
    std::vector<PolicySummary> summaries;
    std::vector<EpisodeRecord> episodes;  // grouped by policy, seed ascending
    std::uint64_t config_hash = 0;
    std::uint64_t seed_base = 0;
};

inline PolicySummary summarize(const std::string& policy, const std::vector<EpisodeRecord>& records) {
    PolicySummary s;
    s.policy = policy;
    s.episodes = records.size();
    OptStats st = opt_metric(records);
    s.mean_opt = st.mean;
    s.ci95 = st.ci95;
    double tsum = 0.0, msum = 0.0, done = 0.0;
    for (const auto& r : records) {
        tsum += static_cast<double>(r.transports);
        msum += static_cast<double>(r.workspace_moves);
        done += r.completed ? 1.0 : 0.0;
    }
    s.mean_transports = tsum / static_cast<double>(records.size());
    s.mean_moves = msum / static_cast<double>(records.size());
    s.completion_rate = done / static_cast<double>(records.size());
    return s;
}

// Full benchmark: every requested policy runs on the same scene seeds
// (base .. base+N-1) for paired comparison. Episodes are independent work
// items; per-episode random streams are derived from (seed, policy, index)
// so the worker count never changes the results.
inline BenchReport bench(const Config& cfg) {
    std::vector<PolicyKind> kinds;
    for (const auto& name : cfg.bench_policies) kinds.push_back(policy_from_name(name));
    if (kinds.empty()) throw std::invalid_argument("bench: no policies requested");
    if (cfg.episodes < 2) throw std::invalid_argument("bench: need at least 2 episodes");

    const GridMeta meta = cfg.grid_meta();
    const std::vector<Garment> library =
        make_shape_library(meta, cfg.library_seed, cfg.library_size, cfg.garment_area_lo, cfg.garment_area_hi,
                           cfg.thickness_lo, cfg.thickness_hi);

    const std::size_t total = kinds.size() * cfg.episodes;
    std::vector<std::optional<EpisodeRecord>> slots(total);
    std::vector<std::string> errors(total);
    std::atomic<std::size_t> next{0};

    auto work = [&]() {
        while (true) {
            const std::size_t t = next.fetch_add(1);
            if (t >= total) return;
            const std::size_t pi = t / cfg.episodes;
            const std::size_t ei = t % cfg.episodes;
            try {
                const std::uint64_t scene_seed = cfg.seed + ei;
                Scene scene = generate_scene(library, cfg.garment_count, meta, {cfg.basket_x, cfg.basket_y},
                                             cfg.gripper, cfg.predictor, cfg.scene, scene_seed,
                                             cfg.shuffle_moves);
                Rng rng = Rng::derive(cfg.seed, (static_cast<std::uint64_t>(pi) << 32) | ei);
                const std::size_t max_steps = cfg.max_step_factor * std::max<std::size_t>(1, scene.stack.size());
                slots[t] = run_episode(std::move(scene), kinds[pi], cfg, rng, max_steps);
            } catch (const std::exception& e) {
                errors[t] = e.what();
            }
        }
    };

    unsigned workers = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers)
                                       : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(total));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();

    BenchReport report;
    report.config_hash = cfg.hash();
    report.seed_base = cfg.seed;
    std::string first_error;
    for (std::size_t t = 0; t < total; ++t) {
        if (slots[t])
            report.episodes.push_back(std::move(*slots[t]));
        else if (first_error.empty())
            first_error = errors[t];
    }
    for (std::size_t pi = 0; pi < kinds.size(); ++pi) {
        std::vector<EpisodeRecord> recs;
        for (const auto& r : report.episodes)
            if (r.policy == to_string(kinds[pi])) recs.push_back(r);
        if (recs.size() >= 2) report.summaries.push_back(summarize(to_string(kinds[pi]), recs));
    }
    if (!first_error.empty())
        throw std::runtime_error("bench: episode failed (" + first_error + "); partial results discarded");
    return report;
}

inline std::string report_csv(const BenchReport& report) {
    std::ostringstream out;
    out << "seed,policy,transports,moves,removed,opt\n";
    for (const auto& r : report.episodes)
        out << r.seed << "," << r.policy << "," << r.transports << "," << r.workspace_moves << ","
            << r.objects_removed << "," << format_double(r.opt) << "\n";
    return out.str();
}

inline std::string report_table(const BenchReport& report) {
    std::ostringstream out;
    out << "config_hash " << report.config_hash << "\n";
    out << "seed_base " << report.seed_base << "\n";
    out << "policy episodes mean_opt ci95 mean_transports mean_moves completion_rate\n";
    for (const auto& s : report.summaries)
        out << s.policy << " " << s.episodes << " " << format_double(s.mean_opt) << " " << format_double(s.ci95)
            << " " << format_double(s.mean_transports) << " " << format_double(s.mean_moves) << " "
            << format_double(s.completion_rate) << "\n";
    return out.str();
}

struct ScalingRow {
    std::size_t n_garments = 0;
    std::size_t n_segments = 0;
    double candidate_gen_time = 0.0;  // seconds, median over repeats
    double milp_solve_time = 0.0;     // seconds per solve, median over repeats
    std::size_t plan_size = 0;
    std::string solver_status;
};

// Scene of n non-overlapping small garments. Placement is rejection
// sampling; failure after 10,000 attempts per garment is an error naming n.
inline Scene make_non_overlapping_scene(std::size_t n, const Config& cfg, std::uint64_t seed) {
    const GridMeta meta = cfg.grid_meta();
    Rng rng = Rng::derive(seed, 0x5ca1e);
    Scene scene;
    scene.meta = meta;
    scene.basket = {cfg.basket_x, cfg.basket_y};
    scene.rng_seed = seed;
    BitMask occupied(meta);
    for (std::size_t i = 0; i < n; ++i) {
        Garment g = make_blob_garment(static_cast<int>(i), rng.uniform(cfg.scaling_area_lo, cfg.scaling_area_hi),
                                      rng.uniform(cfg.thickness_lo, cfg.thickness_hi), meta, rng);
        bool placed = false;
        for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
            g.pose.x = rng.uniform(meta.min_x(), meta.max_x());
            g.pose.y = rng.uniform(meta.min_y(), meta.max_y());
            g.pose.rotation = rng.uniform(-std::numbers::pi, std::numbers::pi);
            g.posed = rasterize_garment(g, meta);
            if (area_pixels(g.posed) == 0) continue;
            bool clash = false;
            for (std::size_t c = 0; c < occupied.cells.size() && !clash; ++c)
                if (g.posed.cells[c] && occupied.cells[c]) clash = true;
            if (!clash) placed = true;
        }
        if (!placed)
            throw std::runtime_error("make_non_overlapping_scene: cannot place garment " + std::to_string(i + 1) +
                                     " of " + std::to_string(n));
        for (std::size_t c = 0; c < occupied.cells.size(); ++c)
            if (g.posed.cells[c]) occupied.cells[c] = 1;
        scene.stack.push_back(std::move(g));
    }
    return scene;
}

// One planning pass per scene, with the MILP solve repeated until enough
// wall time accumulates for a stable per-solve figure.
inline ScalingRow scaling_probe(std::size_t n, const Config& cfg, std::uint64_t seed) {
    Scene scene = make_non_overlapping_scene(n, cfg, seed);
    ObservedScene obs = observe(scene, cfg.scene.min_visible);
    PolicyContext ctx = cfg.policy_context();
    ctx.basket = scene.basket;
    Rng rng = Rng::derive(seed, 0xcafe);

    ScalingRow row;
    row.n_garments = n;

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<BitMask> cleaned;
    for (const auto& seg : obs.segments) {
        BitMask c = intersect(fill_holes(seg.mask, ctx.policy.fill_kernel), obs.foreground);
        if (area_pixels(c) > 0) cleaned.push_back(std::move(c));
    }
    row.n_segments = cleaned.size();
    std::vector<Partition> parts = partition_foreground(obs.foreground, cleaned, ctx.candidates.r);
    std::vector<GraspCandidate> cands = sample_candidates(parts, ctx.candidates, rng);
    std::vector<Grasp> grasps;
    for (const auto& c : cands) grasps.push_back({c.x, c.y, c.theta});
    ProbMatrix P = prob_matrix(grasps, cleaned, ctx.gripper, ctx.predictor);
    MilpInstance inst = build_milp(P, ctx.solver.q, conflict_pairs(cands));
    row.candidate_gen_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    SolveOutcome outcome;
    const auto s0 = std::chrono::steady_clock::now();
    int iters = 0;
    do {
        outcome = solve_exact(inst, ctx.solver);
        ++iters;
    } while (std::chrono::steady_clock::now() - s0 < std::chrono::milliseconds(20) &&
             outcome.status != SolveStatus::FeasibleIncumbent && outcome.status != SolveStatus::Unknown);
    row.milp_solve_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count() / iters;
    row.solver_status = to_string(outcome.status);
    if (outcome.status == SolveStatus::Unknown) {
        outcome = solve_greedy(inst);
        row.solver_status = std::string("greedy-fallback-") + to_string(outcome.status);
    }
    row.plan_size = outcome.plan.selected.size();
    return row;
}

inline std::vector<ScalingRow> scaling_bench(const std::vector<std::size_t>& n_list, std::size_t repeats,
                                             const Config& cfg, std::uint64_t seed) {
    if (n_list.empty()) throw std::invalid_argument("scaling_bench: empty n list");
    for (std::size_t i = 0; i + 1 < n_list.size(); ++i)
        if (n_list[i] >= n_list[i + 1]) throw std::invalid_argument("scaling_bench: n list must ascend");
    if (n_list.front() == 0) throw std::invalid_argument("scaling_bench: n must be >= 1");

    std::vector<ScalingRow> rows;
    for (std::size_t n : n_list) {
        std::vector<ScalingRow> reps;
        for (std::size_t r = 0; r < repeats; ++r)
            reps.push_back(scaling_probe(n, cfg, splitmix64(seed + 1000 * n + r)));
        auto median_of = [&](auto get) {
            std::vector<double> v;
            for (const auto& rr : reps) v.push_back(get(rr));
            std::sort(v.begin(), v.end());
            return v[v.size() / 2];
        };
        ScalingRow row = reps[reps.size() / 2];
        row.n_garments = n;
        row.candidate_gen_time = median_of([](const ScalingRow& r) { return r.candidate_gen_time; });
        row.milp_solve_time = median_of([](const ScalingRow& r) { return r.milp_solve_time; });
        rows.push_back(row);
    }
    return rows;
}

inline std::string scaling_csv(const std::vector<ScalingRow>& rows) {
    std::ostringstream out;
    out << "n_garments,n_segments,candidate_gen_s,milp_solve_s,plan_size,status\n";
    for (const auto& r : rows)
        out << r.n_garments << "," << r.n_segments << "," << format_double(r.candidate_gen_time) << ","
            << format_double(r.milp_solve_time) << "," << r.plan_size << "," << r.solver_status << "\n";
    return out.str();
}

}  // namespace declutter
