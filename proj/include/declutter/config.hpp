#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "declutter/candidates.hpp"
#include "declutter/core.hpp"
#include "declutter/geometry.hpp"
#include "declutter/policies.hpp"
#include "declutter/predictor.hpp"
#include "declutter/scene.hpp"
#include "declutter/setcover.hpp"

namespace declutter {

// Every tunable of the simulator, planners, and benchmark in one place.
// All fields can be overridden from a `key = value` config file.
struct Config {
    // workspace grid
    double workspace_width = 1.0;   // meters
    double workspace_height = 0.6;  // meters
    double cell_size = 0.002;       // meters per cell (2 mm -> 500 x 300 grid)
    double basket_x = 1.2;          // outside the workspace rectangle
    double basket_y = 0.3;

    GripperSpec gripper;       // d1 = 0.12, d2 = 0.04
    PredictorConfig predictor; // b = 100 px at 2 mm
    CandidateConfig candidates;
    SolverConfig solver;
    PolicyConfig policy;
    SceneConfig scene;

    // consolidation chain budget, resolution independent
    double grasp_area_threshold_m2 = 0.06;

    // garment shape library
    std::uint64_t library_seed = 97;
    std::size_t library_size = 10;
    double garment_area_lo = 0.01;
    double garment_area_hi = 0.06;
    double thickness_lo = 0.005;
    double thickness_hi = 0.015;
    int shuffle_moves = 10;
    std::size_t garment_count = 10;

    // scaling study uses smaller blobs so 35 of them fit without overlap
    double scaling_area_lo = 0.004;
    double scaling_area_hi = 0.008;

    // benchmark
    std::vector<std::string> bench_policies = {"random",        "max_height",   "max_volume", "segment",
                                               "hybrid_height", "hybrid_volume", "consolidation"};
    std::size_t episodes = 25;
    std::uint64_t seed = 1;
    int max_step_factor = 50;
    int workers = 0;  // 0 = hardware concurrency

    GridMeta grid_meta() const {
        const int w = static_cast<int>(std::lround(workspace_width / cell_size));
        const int h = static_cast<int>(std::lround(workspace_height / cell_size));
        return GridMeta(w, h, cell_size, {cell_size / 2, cell_size / 2});
    }

    PolicyContext policy_context() const {
        PolicyContext ctx;
        ctx.gripper = gripper;
        ctx.predictor = predictor;
        ctx.candidates = candidates;
        ctx.solver = solver;
        ctx.policy = policy;
        ctx.policy.grasp_area_threshold = grasp_area_threshold_m2 / (cell_size * cell_size);
        ctx.basket = {basket_x, basket_y};
        return ctx;
    }

    std::string serialize() const {
        std::ostringstream out;
        auto kv = [&](const char* key, const std::string& value) { out << key << " = " << value << "\n"; };
        auto kd = [&](const char* key, double v) { kv(key, format_double(v)); };
        kd("workspace_width", workspace_width);
        kd("workspace_height", workspace_height);
        kd("cell_size", cell_size);
        kd("basket_x", basket_x);
        kd("basket_y", basket_y);
        kd("gripper_d1", gripper.d1);
        kd("gripper_d2", gripper.d2);
        kd("predictor_b", predictor.b);
        kd("predictor_reference_cell", predictor.reference_cell_size);
        kd("candidate_r", candidates.r);
        kv("candidate_k", std::to_string(candidates.k));
        kv("candidate_l", std::to_string(candidates.l));
        kd("solver_q", solver.q);
        kd("solver_time_budget", solver.time_budget);
        kv("solver_node_budget", std::to_string(solver.node_budget));
        kd("height_threshold", policy.height_threshold);
        kd("volume_radius", policy.volume_radius);
        kd("grasp_area_threshold_m2", grasp_area_threshold_m2);
        kv("staleness_window", std::to_string(policy.staleness_window));
        kd("staleness_tol", policy.staleness_tol);
        kd("pca_radius", policy.pca_radius);
        kv("fill_kernel", std::to_string(policy.fill_kernel));
        kd("compaction", scene.compaction);
        kd("compaction_min_scale", scene.compaction_min_scale);
        kv("min_visible", std::to_string(scene.min_visible));
        kv("library_seed", std::to_string(library_seed));
        kv("library_size", std::to_string(library_size));
        kd("garment_area_lo", garment_area_lo);
        kd("garment_area_hi", garment_area_hi);
        kd("thickness_lo", thickness_lo);
        kd("thickness_hi", thickness_hi);
        kv("shuffle_moves", std::to_string(shuffle_moves));
        kv("garment_count", std::to_string(garment_count));
        kd("scaling_area_lo", scaling_area_lo);
        kd("scaling_area_hi", scaling_area_hi);
        std::string pol;
        for (const auto& p : bench_policies) {
            if (!pol.empty()) pol += ",";
            pol += p;
        }
        kv("policies", pol);
        kv("episodes", std::to_string(episodes));
        kv("seed", std::to_string(seed));
        kv("max_step_factor", std::to_string(max_step_factor));
        // `workers` is an execution detail with no effect on results; it stays
        // out of the fingerprint so parallel and serial runs hash alike.
        return out.str();
    }

    std::uint64_t hash() const { return fnv1a64(serialize()); }

    // Apply one `key = value` override; unknown keys are errors.
    void set(const std::string& key, const std::string& value) {
        auto d = [&] { return parse_double(value); };
        auto i = [&] { return static_cast<int>(std::stol(value)); };
        auto u = [&] { return static_cast<std::uint64_t>(std::stoull(value)); };
        if (key == "workspace_width") workspace_width = d();
        else if (key == "workspace_height") workspace_height = d();
        else if (key == "cell_size") cell_size = d();
        else if (key == "basket_x") basket_x = d();
        else if (key == "basket_y") basket_y = d();
        else if (key == "gripper_d1") gripper.d1 = d();
        else if (key == "gripper_d2") gripper.d2 = d();
        else if (key == "predictor_b") predictor.b = d();
        else if (key == "predictor_reference_cell") predictor.reference_cell_size = d();
        else if (key == "candidate_r") candidates.r = d();
        else if (key == "candidate_k") candidates.k = i();
        else if (key == "candidate_l") candidates.l = i();
        else if (key == "solver_q") solver.q = d();
        else if (key == "solver_time_budget") solver.time_budget = d();
        else if (key == "solver_node_budget") solver.node_budget = u();
        else if (key == "height_threshold") policy.height_threshold = d();
        else if (key == "volume_radius") policy.volume_radius = d();
        else if (key == "grasp_area_threshold_m2") grasp_area_threshold_m2 = d();
        else if (key == "staleness_window") policy.staleness_window = i();
        else if (key == "staleness_tol") policy.staleness_tol = d();
        else if (key == "pca_radius") policy.pca_radius = d();
        else if (key == "fill_kernel") policy.fill_kernel = i();
        else if (key == "compaction") scene.compaction = d();
        else if (key == "compaction_min_scale") scene.compaction_min_scale = d();
        else if (key == "min_visible") scene.min_visible = static_cast<std::size_t>(u());
        else if (key == "library_seed") library_seed = u();
        else if (key == "library_size") library_size = static_cast<std::size_t>(u());
        else if (key == "garment_area_lo") garment_area_lo = d();
        else if (key == "garment_area_hi") garment_area_hi = d();
        else if (key == "thickness_lo") thickness_lo = d();
        else if (key == "thickness_hi") thickness_hi = d();
        else if (key == "shuffle_moves") shuffle_moves = i();
        else if (key == "garment_count") garment_count = static_cast<std::size_t>(u());
        else if (key == "scaling_area_lo") scaling_area_lo = d();
        else if (key == "scaling_area_hi") scaling_area_hi = d();
        else if (key == "policies") {
            bench_policies.clear();
            std::string cur;
            for (char c : value) {
                if (c == ',') {
                    if (!cur.empty()) bench_policies.push_back(cur);
                    cur.clear();
                } else if (!std::isspace(static_cast<unsigned char>(c))) {
                    cur += c;
                }
            }
            if (!cur.empty()) bench_policies.push_back(cur);
        } else if (key == "episodes") episodes = static_cast<std::size_t>(u());
        else if (key == "seed") seed = u();
        else if (key == "max_step_factor") max_step_factor = i();
        else if (key == "workers") workers = i();
        else throw std::invalid_argument("unknown config key: " + key);
    }
};

}  // namespace declutter
