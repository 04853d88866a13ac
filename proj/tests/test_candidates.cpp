#include <catch_amalgamated.hpp>

#include <map>
#include <numbers>
#include <set>

#include "declutter/candidates.hpp"
#include "declutter/scene.hpp"

using namespace declutter;

namespace {

const GridMeta kMeta(64, 64, 0.002, {0.001, 0.001});

// Independent key computation: per-cell nearest-distance scan per segment.
std::map<std::size_t, std::vector<int>> brute_keys(const BitMask& fg, const std::vector<BitMask>& segs,
                                                   double r) {
    std::map<std::size_t, std::vector<int>> keys;
    const double limit = (r / fg.meta.cell_size) * (r / fg.meta.cell_size);
    for (int y = 0; y < fg.meta.height; ++y)
        for (int x = 0; x < fg.meta.width; ++x) {
            if (!fg.at(x, y)) continue;
            std::vector<int> key;
            for (std::size_t j = 0; j < segs.size(); ++j) {
                bool near = false;
                for (int sy = 0; sy < fg.meta.height && !near; ++sy)
                    for (int sx = 0; sx < fg.meta.width && !near; ++sx)
                        if (segs[j].at(sx, sy)) {
                            const double d2 = static_cast<double>(sx - x) * (sx - x) +
                                              static_cast<double>(sy - y) * (sy - y);
                            if (d2 <= limit) near = true;
                        }
                if (near) key.push_back(static_cast<int>(j));
            }
            keys[fg.meta.index(x, y)] = key;
        }
    return keys;
}

BitMask rect(const GridMeta& meta, int x0, int y0, int x1, int y1) {
    BitMask m(meta);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) m.set(x, y);
    return m;
}

Garment rect_garment(int id, int x0, int y0, int x1, int y1) {
    Garment g;
    g.id = id;
    const int cx = (x0 + x1) / 2, cy = (y0 + y1) / 2;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) g.cells.push_back({x - cx, y - cy});
    Point c = kMeta.cell_center(cx, cy);
    g.pose = {c.x, c.y, 0.0, 1.0};
    g.thickness = 0.01;
    g.nominal_area = g.cells.size();
    g.posed = rasterize_garment(g, kMeta);
    return g;
}

void check_against_oracle(const BitMask& fg, const std::vector<BitMask>& segs, double r) {
    auto oracle = brute_keys(fg, segs, r);
    std::vector<Partition> parts = partition_foreground(fg, segs, r);

    // disjoint and covering
    std::size_t total = 0;
    BitMask seen(fg.meta);
    for (const auto& p : parts) {
        REQUIRE(p.cell_count == area_pixels(p.cells));
        total += p.cell_count;
        for (std::size_t i = 0; i < p.cells.cells.size(); ++i)
            if (p.cells.cells[i]) {
                REQUIRE(seen.cells[i] == 0);
                seen.cells[i] = 1;
                REQUIRE(fg.cells[i] == 1);
            }
    }
    REQUIRE(total == area_pixels(fg));

    // per-cell keys match the brute-force computation
    for (const auto& p : parts)
        for (std::size_t i = 0; i < p.cells.cells.size(); ++i)
            if (p.cells.cells[i]) REQUIRE(oracle.at(i) == p.key);

    // ids follow sorted key order
    for (std::size_t i = 1; i < parts.size(); ++i) {
        REQUIRE(parts[i - 1].key < parts[i].key);
        REQUIRE(parts[i - 1].id == static_cast<int>(i - 1));
    }
}

}  // namespace

TEST_CASE("partition basics") {
    // one segment: a single partition covering it
    BitMask seg = rect(kMeta, 10, 10, 20, 20);
    std::vector<Partition> one = partition_foreground(seg, {seg}, 0.004);
    REQUIRE(one.size() == 1);
    REQUIRE(one[0].key == std::vector<int>{0});
    REQUIRE(one[0].cells == seg);

    // two far-apart segments: two partitions, no interaction
    BitMask a = rect(kMeta, 5, 5, 12, 12), b = rect(kMeta, 45, 45, 55, 55);
    BitMask fg(kMeta);
    for (std::size_t i = 0; i < fg.cells.size(); ++i) fg.cells[i] = a.cells[i] | b.cells[i];
    std::vector<Partition> two = partition_foreground(fg, {a, b}, 0.004);
    REQUIRE(two.size() == 2);
    REQUIRE(two[0].key == std::vector<int>{0});
    REQUIRE(two[1].key == std::vector<int>{1});

    // two segments one empty column apart, r = 5 cells: {A}, {B}, {A,B}
    BitMask left = rect(kMeta, 10, 20, 30, 30), right = rect(kMeta, 32, 20, 52, 30);
    BitMask fg2(kMeta);
    for (std::size_t i = 0; i < fg2.cells.size(); ++i) fg2.cells[i] = left.cells[i] | right.cells[i];
    const double r5 = 5 * kMeta.cell_size;
    std::vector<Partition> three = partition_foreground(fg2, {left, right}, r5);
    REQUIRE(three.size() == 3);
    REQUIRE(three[0].key == std::vector<int>{0});
    REQUIRE(three[1].key == (std::vector<int>{0, 1}));
    REQUIRE(three[2].key == std::vector<int>{1});
    // the shared partition is the boundary band straddling the gap; its exact
    // extent is pinned by the brute-force oracle
    for (std::size_t i = 0; i < three[1].cells.cells.size(); ++i)
        if (three[1].cells.cells[i]) {
            const int x = static_cast<int>(i % kMeta.width);
            REQUIRE(x >= 32 - 5);
            REQUIRE(x <= 30 + 5);
        }
    check_against_oracle(fg2, {left, right}, r5);

    // cells with no nearby segment form the empty-key partition
    BitMask lonely(kMeta);
    lonely.set(60, 60);
    BitMask fg3 = fg2;
    fg3.set(60, 60);
    std::vector<Partition> with_empty = partition_foreground(fg3, {left, right}, r5);
    REQUIRE(with_empty.size() == 4);
    REQUIRE(with_empty[0].key.empty());
    REQUIRE(with_empty[0].cell_count == 1);
}

TEST_CASE("partition keys match brute force on random observed scenes") {
    Rng rng(71);
    for (int trial = 0; trial < 20; ++trial) {
        Scene s;
        s.meta = kMeta;
        const int n = rng.uniform_int(2, 4);
        for (int g = 0; g < n; ++g) {
            const int w = rng.uniform_int(3, 9), h = rng.uniform_int(3, 9);
            const int x0 = rng.uniform_int(2, 50), y0 = rng.uniform_int(2, 50);
            s.stack.push_back(rect_garment(g, x0, y0, x0 + w, y0 + h));
        }
        ObservedScene obs = observe(s, 1);
        std::vector<BitMask> segs;
        for (const auto& seg : obs.segments) segs.push_back(seg.mask);
        const double r = rng.uniform(0.002, 0.012);
        check_against_oracle(obs.foreground, segs, r);
    }
}

TEST_CASE("sample_candidates counts, orientations, determinism") {
    CandidateConfig cfg;  // k=5, l=6
    REQUIRE(cfg.k == 5);
    REQUIRE(cfg.l == 6);

    Rng rng(3);
    REQUIRE(sample_candidates({}, cfg, rng).empty());

    BitMask seg = rect(kMeta, 10, 10, 25, 25);
    std::vector<Partition> parts = partition_foreground(seg, {seg}, 0.004);
    Rng r1(9), r2(9);
    std::vector<GraspCandidate> c1 = sample_candidates(parts, cfg, r1);
    std::vector<GraspCandidate> c2 = sample_candidates(parts, cfg, r2);
    REQUIRE(c1.size() == 30);  // k * l
    REQUIRE(c1.size() == c2.size());
    for (std::size_t i = 0; i < c1.size(); ++i) {
        REQUIRE(c1[i].x == c2[i].x);
        REQUIRE(c1[i].y == c2[i].y);
        REQUIRE(c1[i].theta == c2[i].theta);
    }

    // orientations are exactly the l equally spaced values, no duplicates
    std::set<double> thetas;
    for (std::size_t i = 0; i < 6; ++i) {
        thetas.insert(c1[i].theta);
        REQUIRE(c1[i].theta == Catch::Approx(-std::numbers::pi / 2 + i * std::numbers::pi / 6));
    }
    REQUIRE(thetas.size() == 6);

    // sampled points are distinct cells of the partition
    std::set<std::pair<double, double>> points;
    for (const auto& c : c1) {
        points.insert({c.x, c.y});
        const int ix = kMeta.to_ix(c.x), iy = kMeta.to_iy(c.y);
        REQUIRE(parts[0].cells.test(ix, iy));
        REQUIRE(c.partition_id == parts[0].id);
    }
    REQUIRE(points.size() == 5);

    // clamped: partition with 2 cells yields 2 * l candidates
    BitMask tiny(kMeta);
    tiny.set(5, 5);
    tiny.set(6, 5);
    std::vector<Partition> small = partition_foreground(tiny, {tiny}, 0.004);
    Rng r3(4);
    REQUIRE(sample_candidates(small, cfg, r3).size() == 2 * 6);

    // empty-key partitions are skipped
    BitMask far_fg = tiny;
    far_fg.set(50, 50);
    std::vector<Partition> with_empty = partition_foreground(far_fg, {tiny}, 0.004);
    REQUIRE(with_empty.size() == 2);
    Rng r4(4);
    std::vector<GraspCandidate> cands = sample_candidates(with_empty, cfg, r4);
    REQUIRE(cands.size() == 2 * 6);
    for (const auto& c : cands) REQUIRE_FALSE(c.partition_id == with_empty[0].id);
}

TEST_CASE("conflict is same-partition, symmetric") {
    GraspCandidate a{0.1, 0.1, 0.0, 3};
    GraspCandidate b{0.1, 0.1, 0.5, 3};  // same point, different theta
    GraspCandidate c{0.2, 0.2, 0.0, 4};
    REQUIRE(conflict(a, b));
    REQUIRE_FALSE(conflict(a, c));
    REQUIRE(conflict(a, b) == conflict(b, a));
    REQUIRE(conflict(a, c) == conflict(c, a));

    std::vector<std::pair<int, int>> pairs = conflict_pairs({a, b, c});
    REQUIRE(pairs.size() == 1);
    REQUIRE(pairs[0] == std::make_pair(0, 1));
}
