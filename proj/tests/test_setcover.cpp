#include <catch_amalgamated.hpp>

#include <cmath>

#include "declutter/setcover.hpp"
#include "support.hpp"

using namespace declutter;
using declutter::testsupport::make_random_instance;

namespace {

ProbMatrix matrix(std::size_t n, std::size_t m, const std::vector<double>& vals) {
    ProbMatrix P(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) P.at(i, j) = vals[i * m + j];
    return P;
}

bool plan_is_valid(const GraspPlan& plan, const MilpInstance& inst) {
    for (auto [i, j] : inst.conflicts) {
        bool has_i = false, has_j = false;
        for (int s : plan.selected) {
            if (s == i) has_i = true;
            if (s == j) has_j = true;
        }
        if (has_i && has_j) return false;
    }
    return true;
}

bool plan_satisfies(const GraspPlan& plan, const MilpInstance& inst, const std::vector<int>& dropped) {
    for (std::size_t j = 0; j < inst.m; ++j) {
        if (std::find(dropped.begin(), dropped.end(), static_cast<int>(j)) != dropped.end()) continue;
        double cov = 0.0;
        for (int i : plan.selected) cov += inst.contrib(i, j);
        if (cov < inst.need(j) - kLogTol) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("build_milp computes log-domain coefficients") {
    MilpInstance inst = build_milp(matrix(1, 1, {0.7}), 0.7, {});
    REQUIRE(inst.a_at(0, 0) == std::log1p(-0.7));
    REQUIRE(inst.b[0] == std::log1p(-0.7));
    SolveOutcome out = solve_exact(inst);
    REQUIRE(out.status == SolveStatus::Optimal);
    REQUIRE(out.plan.selected == std::vector<int>{0});

    MilpInstance zero = build_milp(matrix(1, 2, {0.0, 0.5}), 0.7, {});
    REQUIRE(zero.a_at(0, 0) == 0.0);  // log 1

    ProbMatrix bad(1, 1);
    bad.at(0, 0) = 1.0;
    REQUIRE_THROWS_AS(build_milp(bad, 0.7, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(build_milp(matrix(1, 1, {0.5}), 1.0, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(build_milp(matrix(1, 1, {0.5}), 0.0, {}), std::invalid_argument);
}

TEST_CASE("single-garment arithmetic: p=0.5, q=0.7 needs exactly 2 grasps") {
    // ceil(log 0.3 / log 0.5) = ceil(1.737) = 2
    MilpInstance inst = build_milp(matrix(4, 1, {0.5, 0.5, 0.5, 0.5}), 0.7, {});
    SolveOutcome exact = solve_exact(inst);
    REQUIRE(exact.status == SolveStatus::Optimal);
    REQUIRE(exact.plan.objective() == 2);
    SolveOutcome greedy = solve_greedy(inst);
    REQUIRE(greedy.plan.objective() == 2);
    REQUIRE(greedy.dropped_garments.empty());
}

TEST_CASE("classic set cover embedding") {
    // universe {0,1,2}; sets {0,1}, {1,2}, {2}; p = 0.99 per covered garment
    ProbMatrix P(3, 3);
    P.at(0, 0) = P.at(0, 1) = 0.99;
    P.at(1, 1) = P.at(1, 2) = 0.99;
    P.at(2, 2) = 0.99;
    MilpInstance inst = build_milp(P, 0.7, {});
    SolveOutcome exact = solve_exact(inst);
    SolveOutcome brute = brute_force(inst);
    REQUIRE(exact.status == SolveStatus::Optimal);
    REQUIRE(exact.plan.objective() == 2);
    REQUIRE(brute.plan.objective() == 2);
    REQUIRE(brute.plan.selected == (std::vector<int>{0, 1}));
}

TEST_CASE("conflicting duplicates force a relaxation") {
    // one garment needs two p=0.5 grasps, but the only two candidates overlap
    MilpInstance inst = build_milp(matrix(2, 1, {0.5, 0.5}), 0.7, {{0, 1}});
    SolveOutcome exact = solve_exact(inst);
    REQUIRE(exact.status == SolveStatus::Relaxed);
    REQUIRE(exact.dropped_garments == std::vector<int>{0});
    SolveOutcome brute = brute_force(inst);
    REQUIRE(brute.status == SolveStatus::Relaxed);
    REQUIRE(brute.dropped_garments == std::vector<int>{0});
    REQUIRE(exact.plan.objective() == brute.plan.objective());
}

TEST_CASE("empty and degenerate instances") {
    MilpInstance none = build_milp(ProbMatrix(0, 0), 0.7, {});
    REQUIRE(solve_exact(none).status == SolveStatus::Optimal);
    REQUIRE(solve_exact(none).plan.selected.empty());
    REQUIRE(brute_force(none).plan.selected.empty());

    MilpInstance no_garments = build_milp(ProbMatrix(3, 0), 0.7, {});
    SolveOutcome out = solve_exact(no_garments);
    REQUIRE(out.status == SolveStatus::Optimal);
    REQUIRE(out.plan.selected.empty());

    ProbMatrix big(21, 1);
    REQUIRE_THROWS_AS(brute_force(build_milp(big, 0.7, {})), std::invalid_argument);
}

TEST_CASE("exact equals brute force on random instances") {
    Rng rng(1009);
    int relaxed_seen = 0;
    for (int trial = 0; trial < 200; ++trial) {
        auto ri = make_random_instance(rng, 12, 5, 0.95, 0.2, 0.3);
        MilpInstance inst = build_milp(ri.P, 0.7, ri.conflicts);
        SolveOutcome exact = solve_exact(inst);
        SolveOutcome brute = brute_force(inst);
        REQUIRE(exact.plan.objective() == brute.plan.objective());
        REQUIRE(exact.dropped_garments == brute.dropped_garments);
        REQUIRE(exact.status == brute.status);
        REQUIRE(plan_is_valid(exact.plan, inst));
        REQUIRE(plan_is_valid(brute.plan, inst));
        REQUIRE(plan_satisfies(exact.plan, inst, exact.dropped_garments));
        if (exact.status == SolveStatus::Relaxed) ++relaxed_seen;

        // feasibility certificate in probability space
        std::vector<double> failure = plan_failure_prob(exact.plan, ri.P);
        for (std::size_t j = 0; j < ri.P.m; ++j) {
            if (std::find(exact.dropped_garments.begin(), exact.dropped_garments.end(), static_cast<int>(j)) !=
                exact.dropped_garments.end())
                continue;
            REQUIRE(failure[j] <= 0.3 + 1e-9);
        }
    }
    INFO("relaxed instances seen: " << relaxed_seen);
}

TEST_CASE("greedy never beats exact and finds single-candidate covers") {
    Rng rng(2027);
    for (int trial = 0; trial < 100; ++trial) {
        auto ri = make_random_instance(rng, 12, 5, 0.95, 0.2, 0.3);
        MilpInstance inst = build_milp(ri.P, 0.7, ri.conflicts);
        SolveOutcome exact = solve_exact(inst);
        SolveOutcome greedy = solve_greedy(inst);
        REQUIRE(plan_is_valid(greedy.plan, inst));
        REQUIRE(plan_satisfies(greedy.plan, inst, greedy.dropped_garments));
        if (exact.dropped_garments.empty() && greedy.dropped_garments.empty())
            REQUIRE(greedy.plan.objective() >= exact.plan.objective());
    }

    // an instance solvable by one candidate is solved with one pick
    ProbMatrix P(3, 2);
    P.at(0, 0) = 0.4;
    P.at(1, 0) = 0.9;
    P.at(1, 1) = 0.8;
    P.at(2, 1) = 0.6;
    SolveOutcome greedy = solve_greedy(build_milp(P, 0.7, {}));
    REQUIRE(greedy.plan.selected == std::vector<int>{1});
}

TEST_CASE("adding a candidate never increases the exact optimum") {
    Rng rng(3011);
    for (int trial = 0; trial < 50; ++trial) {
        auto ri = make_random_instance(rng, 10, 4, 0.9, 0.15, 0.3);
        MilpInstance inst = build_milp(ri.P, 0.7, ri.conflicts);
        SolveOutcome before = solve_exact(inst);

        ProbMatrix wider(ri.P.n + 1, ri.P.m);
        for (std::size_t i = 0; i < ri.P.n; ++i)
            for (std::size_t j = 0; j < ri.P.m; ++j) wider.at(i, j) = ri.P.at(i, j);
        for (std::size_t j = 0; j < ri.P.m; ++j) wider.at(ri.P.n, j) = rng.uniform(0.0, 0.9);
        MilpInstance grown = build_milp(wider, 0.7, ri.conflicts);
        SolveOutcome after = solve_exact(grown);
        if (before.status == SolveStatus::Optimal && after.status == SolveStatus::Optimal)
            REQUIRE(after.plan.objective() <= before.plan.objective());
    }
}

TEST_CASE("plan_failure_prob multiplies independent misses") {
    ProbMatrix P(2, 1);
    P.at(0, 0) = 0.5;
    P.at(1, 0) = 0.5;
    GraspPlan empty;
    REQUIRE(plan_failure_prob(empty, P) == std::vector<double>{1.0});
    GraspPlan one{{0}};
    ProbMatrix P7(1, 1);
    P7.at(0, 0) = 0.7;
    REQUIRE(plan_failure_prob(one, P7)[0] == Catch::Approx(0.3));
    GraspPlan both{{0, 1}};
    REQUIRE(plan_failure_prob(both, P)[0] == Catch::Approx(0.25));
}

TEST_CASE("node budget stops the search with a usable outcome") {
    // incumbent found on the first dive, proof cut off by the budget
    Rng rng(4001);
    ProbMatrix P(40, 8);
    for (std::size_t i = 0; i < P.n; ++i)
        for (std::size_t j = 0; j < P.m; ++j) P.at(i, j) = rng.uniform(0.05, 0.3);
    MilpInstance inst = build_milp(P, 0.7, {});
    SolverConfig cfg;
    cfg.node_budget = 2000;
    SolveOutcome out = solve_exact(inst, cfg);
    REQUIRE((out.status == SolveStatus::Optimal || out.status == SolveStatus::FeasibleIncumbent));
    REQUIRE(plan_satisfies(out.plan, inst, out.dropped_garments));
    REQUIRE(out.nodes_explored <= cfg.node_budget + 1024);

    // budget too small to even finish the first dive: unknown, greedy steps in
    ProbMatrix thin(1500, 1);
    for (std::size_t i = 0; i < thin.n; ++i) thin.at(i, 0) = 0.001;
    MilpInstance long_inst = build_milp(thin, 0.7, {});
    SolverConfig tiny;
    tiny.node_budget = 1;
    SolveOutcome unknown = solve_exact(long_inst, tiny);
    REQUIRE(unknown.status == SolveStatus::Unknown);
    SolveOutcome fallback = solve_greedy(long_inst);
    REQUIRE(fallback.dropped_garments.empty());
    REQUIRE(plan_satisfies(fallback.plan, long_inst, {}));
}
