// Plans one segment-based cycle on a random scene and prints the grasp plan,
// then runs the full episode and reports the transport count.

#include <cstdio>

#include "declutter/declutter.hpp"

using namespace declutter;

int main() {
    Config cfg;
    const GridMeta meta = cfg.grid_meta();
    auto library = make_shape_library(meta, cfg.library_seed);
    Scene scene = generate_scene(library, 6, meta, {cfg.basket_x, cfg.basket_y}, cfg.gripper, cfg.predictor,
                                 cfg.scene, 2024);

    ObservedScene obs = observe(scene, cfg.scene.min_visible);
    std::printf("scene: %zu garments, %zu visible segments, foreground %zu px\n", scene.stack.size(),
                obs.segments.size(), area_pixels(obs.foreground));

    PolicyContext ctx = cfg.policy_context();
    ctx.basket = scene.basket;
    Rng rng(7);
    CyclePlan plan = plan_segment_cycle(obs, ctx, PlanOrder::NearestFirst, rng);
    std::printf("cycle plan: %zu grasps from %zu candidates (%s)\n", plan.grasps.size(), plan.n_candidates,
                to_string(plan.milp_status));
    for (const auto& g : plan.grasps)
        std::printf("  grasp at (%.3f, %.3f) theta %.2f, expected area %.0f px\n", g.grasp.x, g.grasp.y,
                    g.grasp.theta, g.expected_area_px);

    Rng episode_rng(8);
    EpisodeRecord rec = run_episode(scene, PolicyKind::Segment, cfg, episode_rng, 300);
    std::printf("episode: %zu transports, %zu removed, OpT %.2f\n", rec.transports, rec.objects_removed,
                rec.opt);
    return 0;
}
