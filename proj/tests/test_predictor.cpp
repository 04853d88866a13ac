#include <catch_amalgamated.hpp>

#include <numbers>

#include "declutter/predictor.hpp"

using namespace declutter;

namespace {

// Segment made of `inside` cells taken from the ellipse interior plus
// `outside` filler cells from the far corner of the grid.
BitMask segment_with_overlap(const GridMeta& meta, const BitMask& ellipse, std::size_t inside,
                             std::size_t outside) {
    BitMask seg(meta);
    std::size_t taken = 0;
    for (std::size_t i = 0; i < ellipse.cells.size() && taken < inside; ++i)
        if (ellipse.cells[i]) {
            seg.cells[i] = 1;
            ++taken;
        }
    REQUIRE(taken == inside);
    std::size_t filled = 0;
    for (std::size_t i = ellipse.cells.size(); i-- > 0 && filled < outside;)
        if (!ellipse.cells[i]) {
            seg.cells[i] = 1;
            ++filled;
        }
    REQUIRE(filled == outside);
    return seg;
}

}  // namespace

TEST_CASE("grasp_prob follows a/(a+b)") {
    GridMeta meta(200, 150, 0.002, {0.001, 0.001});
    GripperSpec gripper;  // 0.12 x 0.04
    PredictorConfig cfg;  // b = 100 at 2 mm
    Grasp g{0.2, 0.15, 0.4};
    BitMask ellipse = rasterize_ellipse(gripper.ellipse(g.x, g.y, g.theta), meta);
    REQUIRE(area_pixels(ellipse) > 400);

    BitMask far_seg(meta);
    far_seg.set(2, 2);
    REQUIRE(grasp_prob(g, far_seg, gripper, cfg) == 0.0);

    BitMask seg100 = segment_with_overlap(meta, ellipse, 100, 0);
    REQUIRE(grasp_prob(g, seg100, gripper, cfg) == Catch::Approx(0.5).margin(1e-12));

    BitMask seg300 = segment_with_overlap(meta, ellipse, 300, 50);
    REQUIRE(grasp_prob(g, seg300, gripper, cfg) == Catch::Approx(0.75).margin(1e-12));
}

TEST_CASE("grasp_prob strictly increasing in overlap, bounded below 1") {
    GridMeta meta(200, 150, 0.002, {0.001, 0.001});
    GripperSpec gripper;
    PredictorConfig cfg;
    Grasp g{0.2, 0.15, 0.0};
    BitMask ellipse = rasterize_ellipse(gripper.ellipse(g.x, g.y, g.theta), meta);
    double prev = -1.0;
    for (std::size_t a : {0u, 10u, 50u, 200u, 400u}) {
        BitMask seg = segment_with_overlap(meta, ellipse, a, 7);
        const double p = grasp_prob(g, seg, gripper, cfg);
        REQUIRE(p > prev);
        REQUIRE(p >= 0.0);
        REQUIRE(p < 1.0);
        prev = p;
    }
}

TEST_CASE("grasp_prob translation equivariance and circle invariance") {
    GridMeta meta(200, 150, 0.002, {0.001, 0.001});
    GripperSpec gripper;
    PredictorConfig cfg;
    Grasp g{0.15, 0.12, -0.6};
    BitMask ellipse = rasterize_ellipse(gripper.ellipse(g.x, g.y, g.theta), meta);
    BitMask seg = segment_with_overlap(meta, ellipse, 137, 21);

    // shift both grasp and segment by whole cells
    const int dx = 17, dy = -9;
    BitMask shifted(meta);
    for (int y = 0; y < meta.height; ++y)
        for (int x = 0; x < meta.width; ++x) {
            const int sx = x - dx, sy = y - dy;
            if (meta.contains(sx, sy) && seg.at(sx, sy)) shifted.set(x, y);
        }
    Grasp g2{g.x + dx * meta.cell_size, g.y + dy * meta.cell_size, g.theta};
    REQUIRE(grasp_prob(g2, shifted, gripper, cfg) ==
            Catch::Approx(grasp_prob(g, seg, gripper, cfg)).margin(1e-12));

    // circular gripper: orientation cannot matter
    GripperSpec circle{0.05, 0.05};
    const double p0 = grasp_prob({g.x, g.y, 0.0}, seg, circle, cfg);
    for (double theta : {-1.2, -0.3, 0.7, 1.5}) {
        REQUIRE(grasp_prob({g.x, g.y, theta}, seg, circle, cfg) == p0);
    }
}

TEST_CASE("b rescales with resolution") {
    PredictorConfig cfg;  // b=100 at 0.002
    GridMeta fine(10, 10, 0.001, {0.0005, 0.0005});
    GridMeta coarse(10, 10, 0.004, {0.002, 0.002});
    REQUIRE(cfg.b_for(fine) == Catch::Approx(400.0));
    REQUIRE(cfg.b_for(coarse) == Catch::Approx(25.0));
}

TEST_CASE("prob_matrix batches grasp_prob") {
    GridMeta meta(200, 150, 0.002, {0.001, 0.001});
    GripperSpec gripper;
    PredictorConfig cfg;

    std::vector<BitMask> segments;
    BitMask e0 = rasterize_ellipse(gripper.ellipse(0.1, 0.1, 0.0), meta);
    segments.push_back(segment_with_overlap(meta, e0, 120, 30));
    segments.push_back(segment_with_overlap(meta, e0, 40, 300));

    ProbMatrix empty = prob_matrix({}, segments, gripper, cfg);
    REQUIRE(empty.n == 0);
    REQUIRE(empty.m == 2);

    std::vector<Grasp> cands = {{0.1, 0.1, 0.0}, {0.1, 0.1, 0.0}, {0.25, 0.2, 1.1}};
    ProbMatrix P = prob_matrix(cands, segments, gripper, cfg);
    REQUIRE(P.n == 3);
    for (std::size_t j = 0; j < 2; ++j) REQUIRE(P.at(0, j) == P.at(1, j));  // identical candidates
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            REQUIRE(P.at(i, j) ==
                    Catch::Approx(grasp_prob(cands[i], segments[j], gripper, cfg)).margin(1e-12));

    // single candidate, segment of 900 cells fully under the ellipse
    GridMeta big(400, 300, 0.002, {0.001, 0.001});
    GripperSpec wide{0.2, 0.08};
    BitMask eb = rasterize_ellipse(wide.ellipse(0.4, 0.3, 0.0), big);
    REQUIRE(area_pixels(eb) >= 900);
    std::vector<BitMask> seg900 = {segment_with_overlap(big, eb, 900, 0)};
    ProbMatrix P9 = prob_matrix({{0.4, 0.3, 0.0}}, seg900, wide, cfg);
    REQUIRE(P9.at(0, 0) == Catch::Approx(0.9).margin(1e-12));
}

TEST_CASE("expected_area sums p times segment area") {
    GridMeta meta(300, 200, 0.002, {0.001, 0.001});
    GripperSpec gripper;
    PredictorConfig cfg;
    cfg.b = 300.0;
    cfg.reference_cell_size = meta.cell_size;  // b stays 300 px here

    Grasp g{0.3, 0.2, 0.0};
    BitMask ellipse = rasterize_ellipse(gripper.ellipse(g.x, g.y, g.theta), meta);
    REQUIRE(area_pixels(ellipse) >= 400);

    REQUIRE(expected_area(g, {}, gripper, cfg) == 0.0);
    BitMask nowhere(meta);
    nowhere.set(1, 1);
    REQUIRE(expected_area(g, {nowhere}, gripper, cfg) == 0.0);

    // p = 300/(300+300) = 0.5 over a 400 px segment -> 200
    std::vector<BitMask> one = {segment_with_overlap(meta, ellipse, 300, 100)};
    REQUIRE(expected_area(g, one, gripper, cfg) == Catch::Approx(200.0).margin(1e-9));

    // plus p = 100/400 = 0.25 over an 800 px segment -> 400 total
    std::vector<BitMask> two = one;
    two.push_back(segment_with_overlap(meta, ellipse, 100, 700));
    REQUIRE(expected_area(g, two, gripper, cfg) == Catch::Approx(400.0).margin(1e-9));
}
