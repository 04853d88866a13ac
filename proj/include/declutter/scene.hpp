#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "declutter/core.hpp"
#include "declutter/geometry.hpp"
#include "declutter/predictor.hpp"

namespace declutter {

// Garment outline in its local frame: a polygon unioned with a few discs.
// Control points are what the scene file stores.
struct BlobSpec {
    std::vector<Point> polygon;  // counter-clockwise
    struct Disc {
        double cx, cy, r;
    };
    std::vector<Disc> discs;

    bool operator==(const BlobSpec& o) const {
        if (polygon.size() != o.polygon.size() || discs.size() != o.discs.size()) return false;
        for (std::size_t i = 0; i < polygon.size(); ++i)
            if (polygon[i].x != o.polygon[i].x || polygon[i].y != o.polygon[i].y) return false;
        for (std::size_t i = 0; i < discs.size(); ++i)
            if (discs[i].cx != o.discs[i].cx || discs[i].cy != o.discs[i].cy || discs[i].r != o.discs[i].r)
                return false;
        return true;
    }
};

inline bool point_in_polygon(const std::vector<Point>& poly, double x, double y) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        if ((poly[i].y > y) != (poly[j].y > y) &&
            x < (poly[j].x - poly[i].x) * (y - poly[i].y) / (poly[j].y - poly[i].y) + poly[i].x)
            inside = !inside;
    }
    return inside;
}

struct GarmentPose {
    double x = 0.0;
    double y = 0.0;
    double rotation = 0.0;
    double scale = 1.0;  // compaction accumulator

    bool operator==(const GarmentPose& o) const {
        return x == o.x && y == o.y && rotation == o.rotation && scale == o.scale;
    }
};

// One garment on the surface. Geometry is either a blob outline or, for
// exact-raster test fixtures, an explicit list of local cell offsets.
struct Garment {
    int id = 0;
    BlobSpec blob;
    std::vector<std::pair<int, int>> cells;  // used when blob is empty
    GarmentPose pose;
    double thickness = 0.01;
    std::size_t nominal_area = 0;  // pixels of the canonical (scale 1) mask
    BitMask posed;                 // current mask on the workspace grid, clipped

    bool uses_cells() const { return blob.polygon.empty() && blob.discs.empty(); }

    bool same_definition(const Garment& o) const {
        return id == o.id && blob == o.blob && cells == o.cells && pose == o.pose &&
               thickness == o.thickness;
    }
};

namespace detail {

inline bool blob_contains_local(const BlobSpec& blob, double lx, double ly) {
    if (!blob.polygon.empty() && point_in_polygon(blob.polygon, lx, ly)) return true;
    for (const auto& d : blob.discs) {
        const double dx = lx - d.cx, dy = ly - d.cy;
        if (dx * dx + dy * dy <= d.r * d.r) return true;
    }
    return false;
}

inline double blob_radius(const BlobSpec& blob) {
    double r = 0.0;
    for (const auto& p : blob.polygon) r = std::max(r, std::hypot(p.x, p.y));
    for (const auto& d : blob.discs) r = std::max(r, std::hypot(d.cx, d.cy) + d.r);
    return r;
}

}  // namespace detail

// Rasterize a garment's current pose onto the grid. Blob garments map each
// cell center back into the local frame; cell-list garments translate (and,
// when transformed, rotate/scale) their offsets directly.
inline BitMask rasterize_garment(const Garment& g, const GridMeta& meta) {
    BitMask out(meta);
    if (g.uses_cells()) {
        const double c = std::cos(g.pose.rotation), s = std::sin(g.pose.rotation);
        for (auto [ox, oy] : g.cells) {
            double lx = ox * g.pose.scale, ly = oy * g.pose.scale;
            double wx = lx * c - ly * s, wy = lx * s + ly * c;
            int ix = meta.to_ix(g.pose.x) + static_cast<int>(std::lround(wx));
            int iy = meta.to_iy(g.pose.y) + static_cast<int>(std::lround(wy));
            if (meta.contains(ix, iy)) out.cells[meta.index(ix, iy)] = 1;
        }
        return out;
    }
    const double r = detail::blob_radius(g.blob) * g.pose.scale;
    int x0 = std::max(0, meta.to_ix(g.pose.x - r) - 1);
    int x1 = std::min(meta.width - 1, meta.to_ix(g.pose.x + r) + 1);
    int y0 = std::max(0, meta.to_iy(g.pose.y - r) - 1);
    int y1 = std::min(meta.height - 1, meta.to_iy(g.pose.y + r) + 1);
    const double c = std::cos(-g.pose.rotation), s = std::sin(-g.pose.rotation);
    const double inv = 1.0 / g.pose.scale;
    for (int iy = y0; iy <= y1; ++iy) {
        for (int ix = x0; ix <= x1; ++ix) {
            Point p = meta.cell_center(ix, iy);
            const double dx = p.x - g.pose.x, dy = p.y - g.pose.y;
            const double lx = (dx * c - dy * s) * inv;
            const double ly = (dx * s + dy * c) * inv;
            if (detail::blob_contains_local(g.blob, lx, ly)) out.cells[meta.index(ix, iy)] = 1;
        }
    }
    return out;
}

// Ground truth world state. The stack is ordered bottom -> top; later entries
// occlude earlier ones. Values are immutable: operations return new scenes.
struct Scene {
    GridMeta meta;
    std::vector<Garment> stack;
    Point basket{1.2, 0.3};
    std::uint64_t rng_seed = 0;

    bool same_definition(const Scene& o) const {
        if (!(meta == o.meta) || basket.x != o.basket.x || basket.y != o.basket.y ||
            rng_seed != o.rng_seed || stack.size() != o.stack.size())
            return false;
        for (std::size_t i = 0; i < stack.size(); ++i)
            if (!stack[i].same_definition(o.stack[i])) return false;
        return true;
    }
};

struct Segment {
    int id = 0;
    BitMask mask;
};

// What a planner may see. truth_link maps segment id -> garment id and is
// reserved for the simulator and tests; policies must not read it.
struct ObservedScene {
    BitMask foreground;
    std::vector<Segment> segments;
    ScalarField heights;
    std::unordered_map<int, int> truth_link;
};

inline ScalarField height_field(const Scene& scene) {
    ScalarField h(scene.meta);
    for (const auto& g : scene.stack)
        for (std::size_t i = 0; i < g.posed.cells.size(); ++i)
            if (g.posed.cells[i]) h.values[i] += g.thickness;
    return h;
}

// Occlusion-aware observation: a garment's segment is its posed mask minus
// everything stacked above it; garments with fewer than min_visible exposed
// cells produce no segment but still contribute to foreground and heights.
// Segment ids are fresh per observation.
inline ObservedScene observe(const Scene& scene, std::size_t min_visible) {
    ObservedScene obs;
    obs.foreground = BitMask(scene.meta);
    obs.heights = ScalarField(scene.meta);
    std::vector<int> topmost(scene.meta.cell_count(), -1);
    for (std::size_t gi = 0; gi < scene.stack.size(); ++gi) {
        const auto& g = scene.stack[gi];
        for (std::size_t i = 0; i < g.posed.cells.size(); ++i) {
            if (!g.posed.cells[i]) continue;
            obs.foreground.cells[i] = 1;
            obs.heights.values[i] += g.thickness;
            topmost[i] = static_cast<int>(gi);
        }
    }
    int next_id = 0;
    for (std::size_t gi = 0; gi < scene.stack.size(); ++gi) {
        BitMask visible(scene.meta);
        std::size_t count = 0;
        for (std::size_t i = 0; i < visible.cells.size(); ++i) {
            if (topmost[i] == static_cast<int>(gi)) {
                visible.cells[i] = 1;
                ++count;
            }
        }
        if (count >= min_visible && count > 0) {
            int sid = next_id++;
            obs.truth_link[sid] = scene.stack[gi].id;
            obs.segments.push_back({sid, std::move(visible)});
        }
    }
    return obs;
}

struct SceneConfig {
    double compaction = 0.9;
    double compaction_min_scale = 0.4;
    std::size_t min_visible = 50;
};

// Success of a grasp on each garment is an independent Bernoulli draw from
// the analytic predictor applied to the garment's TRUE posed mask, occluded
// parts included. Held garments keep their stack order.
inline std::pair<Scene, std::vector<Garment>> apply_grasp(const Scene& scene, const Grasp& grasp,
                                                          const GripperSpec& gripper,
                                                          const PredictorConfig& pred_cfg, Rng& rng) {
    Scene next = scene;
    std::vector<Garment> held;
    BitMask e = rasterize_ellipse(gripper.ellipse(grasp.x, grasp.y, grasp.theta), scene.meta);
    std::vector<std::size_t> on;
    for (std::size_t c = 0; c < e.cells.size(); ++c)
        if (e.cells[c]) on.push_back(c);
    const double b = pred_cfg.b_for(scene.meta);

    std::vector<Garment> remaining;
    remaining.reserve(next.stack.size());
    for (auto& g : next.stack) {
        std::size_t a = 0;
        for (std::size_t c : on) a += g.posed.cells[c];
        const double p = overlap_probability(static_cast<double>(a), b);
        if (rng.bernoulli(p))
            held.push_back(std::move(g));
        else
            remaining.push_back(std::move(g));
    }
    next.stack = std::move(remaining);
    return {std::move(next), std::move(held)};
}

// Drop the held garments at `place`: each is translated so its centroid lands
// there (snapped to whole cells so the raster pattern is preserved), shrunk
// by the compaction factor, and pushed onto the top of the stack.
inline Scene apply_place(const Scene& scene, std::vector<Garment> held, Point place,
                         const SceneConfig& cfg) {
    Scene next = scene;
    for (auto& g : held) {
        const double step = scene.meta.cell_size;
        const double dx = std::round((place.x - g.pose.x) / step) * step;
        const double dy = std::round((place.y - g.pose.y) / step) * step;
        g.pose.x += dx;
        g.pose.y += dy;
        if (cfg.compaction != 1.0)
            g.pose.scale = std::max(cfg.compaction_min_scale, g.pose.scale * cfg.compaction);
        g.posed = rasterize_garment(g, scene.meta);
        next.stack.push_back(std::move(g));
    }
    return next;
}

// Held garments leave the world for good. Transport counting is owned by the
// episode runner.
inline Scene transport(const Scene& scene, const std::vector<Garment>&) { return scene; }

// Simulated pick-and-place shuffling: pick point uniform over the foreground
// cells, place point uniform over the workspace rectangle.
inline Scene shuffle(Scene scene, int n_moves, const GripperSpec& gripper, const PredictorConfig& pred_cfg,
                     const SceneConfig& cfg, Rng& rng) {
    for (int mv = 0; mv < n_moves; ++mv) {
        ObservedScene obs = observe(scene, 0);
        std::vector<std::size_t> fg;
        for (std::size_t i = 0; i < obs.foreground.cells.size(); ++i)
            if (obs.foreground.cells[i]) fg.push_back(i);
        if (fg.empty()) break;
        const std::size_t pick_idx = fg[rng.uniform_index(fg.size())];
        const int ix = static_cast<int>(pick_idx % scene.meta.width);
        const int iy = static_cast<int>(pick_idx / scene.meta.width);
        Point pick = scene.meta.cell_center(ix, iy);
        const double theta = rng.uniform(-std::numbers::pi / 2, std::numbers::pi / 2);
        Point place{rng.uniform(scene.meta.min_x(), scene.meta.max_x()),
                    rng.uniform(scene.meta.min_y(), scene.meta.max_y())};
        auto [picked, held] = apply_grasp(scene, Grasp{pick.x, pick.y, theta}, gripper, pred_cfg, rng);
        scene = apply_place(picked, std::move(held), place, cfg);
    }
    return scene;
}

// Procedural garment shapes: a convex-ish polygon unioned with a few discs,
// rescaled so the rasterized area hits the requested target.
inline Garment make_blob_garment(int id, double target_area_m2, double thickness, const GridMeta& meta,
                                 Rng& rng) {
    BlobSpec blob;
    const int n_vertices = rng.uniform_int(6, 9);
    const double base_r = std::sqrt(target_area_m2 / std::numbers::pi);
    std::vector<double> angles(n_vertices);
    for (auto& a : angles) a = rng.uniform(0.0, 2 * std::numbers::pi);
    std::sort(angles.begin(), angles.end());
    for (double a : angles)
        blob.polygon.push_back({base_r * rng.uniform(0.6, 1.0) * std::cos(a),
                                base_r * rng.uniform(0.6, 1.0) * std::sin(a)});
    const int n_discs = rng.uniform_int(2, 3);
    for (int i = 0; i < n_discs; ++i) {
        const double a = rng.uniform(0.0, 2 * std::numbers::pi);
        const double d = rng.uniform(0.0, 0.5 * base_r);
        blob.discs.push_back({d * std::cos(a), d * std::sin(a), base_r * rng.uniform(0.3, 0.6)});
    }

    Garment g;
    g.id = id;
    g.blob = blob;
    g.thickness = thickness;
    // Measure at a pose in the middle of a throwaway grid, then rescale the
    // control points to hit the target area; recenter on the raster centroid.
    GridMeta probe(512, 512, meta.cell_size, {-256 * meta.cell_size, -256 * meta.cell_size});
    g.pose = {0.0, 0.0, 0.0, 1.0};
    BitMask m = rasterize_garment(g, probe);
    const std::size_t measured = area_pixels(m);
    if (measured == 0) throw std::runtime_error("make_blob_garment: degenerate shape");
    const double target_px = target_area_m2 / (meta.cell_size * meta.cell_size);
    const double k = std::sqrt(target_px / static_cast<double>(measured));
    for (auto& p : blob.polygon) {
        p.x *= k;
        p.y *= k;
    }
    for (auto& d : blob.discs) {
        d.cx *= k;
        d.cy *= k;
        d.r *= k;
    }
    g.blob = blob;
    m = rasterize_garment(g, probe);
    double cx = 0.0, cy = 0.0;
    std::size_t cnt = 0;
    for (int iy = 0; iy < probe.height; ++iy)
        for (int ix = 0; ix < probe.width; ++ix)
            if (m.cells[probe.index(ix, iy)]) {
                Point p = probe.cell_center(ix, iy);
                cx += p.x;
                cy += p.y;
                ++cnt;
            }
    cx /= static_cast<double>(cnt);
    cy /= static_cast<double>(cnt);
    for (auto& p : blob.polygon) {
        p.x -= cx;
        p.y -= cy;
    }
    for (auto& d : blob.discs) {
        d.cx -= cx;
        d.cy -= cy;
    }
    g.blob = blob;
    g.nominal_area = area_pixels(rasterize_garment(g, probe));
    return g;
}

// The reusable 10-shape test library: areas span 0.01-0.06 m^2, thickness
// 5-15 mm.
inline std::vector<Garment> make_shape_library(const GridMeta& meta, std::uint64_t seed,
                                               std::size_t count = 10, double area_lo = 0.01,
                                               double area_hi = 0.06, double thick_lo = 0.005,
                                               double thick_hi = 0.015) {
    Rng rng = Rng::derive(seed, 0x11b5a7);
    std::vector<Garment> lib;
    for (std::size_t i = 0; i < count; ++i) {
        const double area = rng.uniform(area_lo, area_hi);
        const double thick = rng.uniform(thick_lo, thick_hi);
        lib.push_back(make_blob_garment(static_cast<int>(i), area, thick, meta, rng));
    }
    return lib;
}

// Random scene: n library garments at uniform poses, then 10 shuffle moves
// (dump-and-shuffle reset).
inline Scene generate_scene(const std::vector<Garment>& library, std::size_t n, const GridMeta& meta,
                            Point basket, const GripperSpec& gripper, const PredictorConfig& pred_cfg,
                            const SceneConfig& cfg, std::uint64_t seed, int shuffle_moves = 10) {
    if (n > library.size()) throw std::invalid_argument("generate_scene: n exceeds library size");
    Rng rng = Rng::derive(seed, 0x5ce9e);
    Scene scene;
    scene.meta = meta;
    scene.basket = basket;
    scene.rng_seed = seed;
    // Sample n distinct library entries.
    std::vector<std::size_t> idx(library.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + rng.uniform_index(idx.size() - i);
        std::swap(idx[i], idx[j]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        Garment g = library[idx[i]];
        g.id = static_cast<int>(i);
        g.pose.x = rng.uniform(meta.min_x(), meta.max_x());
        g.pose.y = rng.uniform(meta.min_y(), meta.max_y());
        g.pose.rotation = rng.uniform(-std::numbers::pi, std::numbers::pi);
        g.pose.scale = 1.0;
        g.posed = rasterize_garment(g, meta);
        scene.stack.push_back(std::move(g));
    }
    if (n == 0) return scene;
    return shuffle(std::move(scene), shuffle_moves, gripper, pred_cfg, cfg, rng);
}

}  // namespace declutter
