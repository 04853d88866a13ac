// Command-line front end: scene generation, set-cover solving, single
// episodes, the full benchmark, and the garment-count scaling study.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "declutter/declutter.hpp"

using namespace declutter;

namespace {

Config load_config_or_default(const std::string& path) {
    if (path.empty()) return Config{};
    return load_config(path);
}

int cmd_generate(const std::string& config_path, std::size_t garments, std::uint64_t seed,
                 const std::string& out) {
    Config cfg = load_config_or_default(config_path);
    const GridMeta meta = cfg.grid_meta();
    auto library = make_shape_library(meta, cfg.library_seed, cfg.library_size, cfg.garment_area_lo,
                                      cfg.garment_area_hi, cfg.thickness_lo, cfg.thickness_hi);
    Scene scene = generate_scene(library, garments, meta, {cfg.basket_x, cfg.basket_y}, cfg.gripper,
                                 cfg.predictor, cfg.scene, seed, cfg.shuffle_moves);
    save_scene(scene, out);
    std::cout << "wrote " << out << " (" << scene.stack.size() << " garments, seed " << seed << ")\n";
    return 0;
}

int cmd_solve(const std::string& instance_path, const std::string& strategy, double budget) {
    InstanceFile inst = load_instance(instance_path);
    MilpInstance milp = build_milp(inst.P, inst.q, inst.conflicts);
    SolverConfig cfg;
    cfg.q = inst.q;
    if (budget > 0) cfg.time_budget = budget;

    SolveOutcome out;
    if (strategy == "greedy") {
        out = solve_greedy(milp);
    } else {
        out = solve_exact(milp, cfg);
        if (out.status == SolveStatus::Unknown) {
            std::cout << "# exact search exhausted its budget without an incumbent; greedy fallback\n";
            out = solve_greedy(milp);
        }
    }

    std::cout << "status " << to_string(out.status) << "\n";
    std::cout << "objective " << out.plan.objective() << "\n";
    std::cout << "selected";
    for (int i : out.plan.selected) std::cout << " " << i;
    std::cout << "\n";
    if (!out.dropped_garments.empty()) {
        std::cout << "dropped";
        for (int j : out.dropped_garments) std::cout << " " << j;
        std::cout << "\n";
    }
    std::cout << "failure";
    for (double f : plan_failure_prob(out.plan, inst.P)) std::cout << " " << format_double(f);
    std::cout << "\n";
    std::cout << "nodes " << out.nodes_explored << "\n";
    std::cout << "wall_time " << format_double(out.wall_time) << "\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& scene_path, const std::string& policy,
            std::uint64_t seed, long max_steps, const std::string& out) {
    Config cfg = load_config_or_default(config_path);
    Scene scene = load_scene(scene_path);
    PolicyKind kind = policy_from_name(policy);
    Rng rng = Rng::derive(seed, 0xd0);
    const std::size_t steps = max_steps > 0
                                  ? static_cast<std::size_t>(max_steps)
                                  : cfg.max_step_factor * std::max<std::size_t>(1, scene.stack.size());
    EpisodeRecord rec = run_episode(std::move(scene), kind, cfg, rng, steps);
    std::cout << rec.serialize();
    if (!out.empty()) {
        write_file(out, rec.serialize());
        std::cerr << "record written to " << out << "\n";
    }
    return rec.completed ? 0 : 2;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir) {
    Config cfg = load_config(config_path);
    BenchReport report = bench(cfg);
    std::filesystem::create_directories(out_dir);
    write_file(out_dir + "/report.txt", report_table(report));
    write_file(out_dir + "/episodes.csv", report_csv(report));
    std::cout << report_table(report);
    std::cout << "report written to " << out_dir << "\n";
    return 0;
}

int cmd_scaling(const std::string& config_path, std::size_t n_min, std::size_t n_max, std::size_t step,
                std::size_t repeats, std::uint64_t seed, double budget, const std::string& out) {
    Config cfg = load_config_or_default(config_path);
    if (budget > 0) cfg.solver.time_budget = budget;
    std::vector<std::size_t> n_list;
    for (std::size_t n = n_min; n <= n_max; n += step) n_list.push_back(n);
    std::vector<ScalingRow> rows = scaling_bench(n_list, repeats, cfg, seed);
    const std::string csv = scaling_csv(rows);
    std::cout << csv;
    if (!out.empty()) {
        write_file(out, csv);
        std::cerr << "scaling table written to " << out << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Garment decluttering planners, simulator, and benchmark"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "config file (key = value lines)")->check(CLI::ExistingFile);

    auto* gen = app.add_subcommand("generate", "generate a random scene file");
    std::size_t gen_n = 10;
    std::uint64_t gen_seed = 1;
    std::string gen_out = "scene.txt";
    gen->add_option("--garments", gen_n, "number of garments");
    gen->add_option("--seed", gen_seed, "scene seed");
    gen->add_option("--out", gen_out, "output scene file")->required();

    auto* solve = app.add_subcommand("solve", "solve a set-cover instance file");
    std::string solve_instance, solve_strategy = "exact";
    double solve_budget = 0.0;
    solve->add_option("--instance", solve_instance, "instance file")->required()->check(CLI::ExistingFile);
    solve->add_option("--strategy", solve_strategy, "exact|greedy")
        ->check(CLI::IsMember({"exact", "greedy"}));
    solve->add_option("--budget", solve_budget, "time budget in seconds");

    auto* run = app.add_subcommand("run", "run one episode on a scene file");
    std::string run_scene, run_policy = "segment", run_out = "episode.txt";
    std::uint64_t run_seed = 1;
    long run_max_steps = 0;
    run->add_option("--scene", run_scene, "scene file")->required()->check(CLI::ExistingFile);
    run->add_option("--policy", run_policy, "policy name");
    run->add_option("--seed", run_seed, "episode seed");
    run->add_option("--max-steps", run_max_steps, "step bound (default 50x garments)");
    run->add_option("--out", run_out, "episode record file");

    auto* bench_cmd = app.add_subcommand("bench", "full benchmark over seeded scenes");
    std::string bench_out = "bench_out";
    bench_cmd->add_option("--out", bench_out, "output directory")->required();

    auto* scaling = app.add_subcommand("scaling", "planning-time scaling study");
    std::size_t sc_min = 5, sc_max = 35, sc_step = 5, sc_repeats = 5;
    std::uint64_t sc_seed = 1;
    double sc_budget = 60.0;
    std::string sc_out;
    scaling->add_option("--min", sc_min, "smallest garment count");
    scaling->add_option("--max", sc_max, "largest garment count");
    scaling->add_option("--step", sc_step, "garment count increment");
    scaling->add_option("--repeats", sc_repeats, "scenes per garment count");
    scaling->add_option("--seed", sc_seed, "base seed");
    scaling->add_option("--budget", sc_budget, "exact solver budget per solve, seconds");
    scaling->add_option("--out", sc_out, "output csv file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_generate(config_path, gen_n, gen_seed, gen_out);
        if (solve->parsed()) return cmd_solve(solve_instance, solve_strategy, solve_budget);
        if (run->parsed())
            return cmd_run(config_path, run_scene, run_policy, run_seed, run_max_steps, run_out);
        if (bench_cmd->parsed()) {
            if (config_path.empty()) {
                std::cerr << "bench requires --config\n";
                return 1;
            }
            return cmd_bench(config_path, bench_out);
        }
        if (scaling->parsed())
            return cmd_scaling(config_path, sc_min, sc_max, sc_step, sc_repeats, sc_seed, sc_budget, sc_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
