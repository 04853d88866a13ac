#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "declutter/predictor.hpp"

namespace declutter {

constexpr double kLogTol = 1e-9;  // slack on log-domain constraint comparisons

// Covering program in log space: A[i][j] = log(1 - p_ij) <= 0,
// b[j] = log(1 - q_j) < 0. A plan x must satisfy sum_i x_i A[i][j] <= b[j]
// per garment, with at most one candidate selected from any conflict pair.
struct MilpInstance {
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<double> A;  // n x m, row-major
    std::vector<double> b;
    std::vector<std::pair<int, int>> conflicts;

    double a_at(std::size_t i, std::size_t j) const { return A[i * m + j]; }
    // Positive covering contribution of candidate i toward garment j.
    double contrib(std::size_t i, std::size_t j) const { return -a_at(i, j); }
    double need(std::size_t j) const { return -b[j]; }
};

struct GraspPlan {
    std::vector<int> selected;  // ascending candidate indices
    std::size_t objective() const { return selected.size(); }
};

enum class SolveStatus { Optimal, FeasibleIncumbent, Infeasible, Relaxed, Unknown };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::FeasibleIncumbent: return "feasible-incumbent";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Relaxed: return "relaxed";
        case SolveStatus::Unknown: return "unknown";
    }
    return "?";
}

struct SolverConfig {
    double q = 0.7;
    double time_budget = 10.0;           // seconds, <= 0 means unlimited
    std::uint64_t node_budget = 20'000'000;
    enum class Strategy { Exact, Greedy } strategy = Strategy::Exact;
};

struct SolveOutcome {
    GraspPlan plan;
    SolveStatus status = SolveStatus::Unknown;
    std::vector<int> dropped_garments;
    std::uint64_t nodes_explored = 0;
    double wall_time = 0.0;
};

inline MilpInstance build_milp(const ProbMatrix& P, double q, std::vector<std::pair<int, int>> conflicts) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("build_milp: q must be in (0, 1)");
    MilpInstance inst;
    inst.n = P.n;
    inst.m = P.m;
    inst.A.resize(P.n * P.m);
    for (std::size_t i = 0; i < P.n; ++i)
        for (std::size_t j = 0; j < P.m; ++j) {
            const double p = P.at(i, j);
            if (!(p >= 0.0) || p >= 1.0) throw std::invalid_argument("build_milp: p must be in [0, 1)");
            inst.A[i * P.m + j] = std::log1p(-p);
        }
    inst.b.assign(P.m, std::log1p(-q));
    inst.conflicts = std::move(conflicts);
    return inst;
}

inline std::vector<double> plan_failure_prob(const GraspPlan& plan, const ProbMatrix& P) {
    std::vector<double> failure(P.m, 1.0);
    for (int i : plan.selected)
        for (std::size_t j = 0; j < P.m; ++j) failure[j] *= 1.0 - P.at(static_cast<std::size_t>(i), j);
    return failure;
}

namespace detail {

struct ConflictGraph {
    std::size_t n = 0;
    std::size_t words = 0;
    std::vector<std::uint64_t> adj;  // n x words bitset rows

    explicit ConflictGraph(const MilpInstance& inst) : n(inst.n), words((inst.n + 63) / 64), adj(inst.n * words, 0) {
        for (auto [i, j] : inst.conflicts) {
            if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n)
                throw std::invalid_argument("conflict index out of range");
            if (i == j) continue;
            set(i, j);
            set(j, i);
        }
    }
    void set(int i, int j) { adj[static_cast<std::size_t>(i) * words + j / 64] |= 1ULL << (j % 64); }
    bool test(int i, int j) const {
        return adj[static_cast<std::size_t>(i) * words + j / 64] >> (j % 64) & 1;
    }
    const std::uint64_t* row(int i) const { return adj.data() + static_cast<std::size_t>(i) * words; }
};

// Max achievable coverage of garment j over conflict-free candidate subsets.
// Clique components contribute their best member; small general components
// are solved exactly as a max-weight independent set; oversized non-clique
// components fall back to the (optimistic) sum of members.
inline std::vector<double> max_coverage_per_garment(const MilpInstance& inst, const ConflictGraph& graph) {
    const std::size_t n = inst.n, m = inst.m;
    std::vector<int> comp(n, -1);
    std::vector<std::vector<int>> members;
    for (std::size_t s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        const int c = static_cast<int>(members.size());
        members.emplace_back();
        std::vector<std::size_t> stack{s};
        comp[s] = c;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            members[c].push_back(static_cast<int>(u));
            for (std::size_t v = 0; v < n; ++v)
                if (comp[v] < 0 && graph.test(static_cast<int>(u), static_cast<int>(v))) {
                    comp[v] = c;
                    stack.push_back(v);
                }
        }
    }

    std::vector<double> cover(m, 0.0);
    for (const auto& mem : members) {
        const std::size_t sz = mem.size();
        std::size_t edges = 0;
        for (std::size_t a = 0; a < sz; ++a)
            for (std::size_t b = a + 1; b < sz; ++b)
                if (graph.test(mem[a], mem[b])) ++edges;
        const bool clique = edges == sz * (sz - 1) / 2;
        for (std::size_t j = 0; j < m; ++j) {
            if (clique) {
                double best = 0.0;
                for (int i : mem) best = std::max(best, inst.contrib(i, j));
                cover[j] += best;
            } else if (sz > 25) {
                for (int i : mem) cover[j] += inst.contrib(i, j);
            } else {
                // exact MWIS by DFS with a remaining-sum bound
                double best = 0.0;
                std::vector<double> w(sz);
                for (std::size_t a = 0; a < sz; ++a) w[a] = inst.contrib(mem[a], j);
                std::vector<double> suffix(sz + 1, 0.0);
                for (std::size_t a = sz; a-- > 0;) suffix[a] = suffix[a + 1] + w[a];
                std::vector<std::uint8_t> blocked(sz, 0);
                auto dfs = [&](auto&& self, std::size_t pos, double acc) -> void {
                    best = std::max(best, acc);
                    if (pos == sz || acc + suffix[pos] <= best) return;
                    if (!blocked[pos]) {
                        std::vector<std::size_t> touched;
                        for (std::size_t b2 = pos + 1; b2 < sz; ++b2)
                            if (!blocked[b2] && graph.test(mem[pos], mem[b2])) {
                                blocked[b2] = 1;
                                touched.push_back(b2);
                            }
                        self(self, pos + 1, acc + w[pos]);
                        for (std::size_t b2 : touched) blocked[b2] = 0;
                    }
                    self(self, pos + 1, acc);
                };
                dfs(dfs, 0, 0.0);
                cover[j] += best;
            }
        }
    }
    return cover;
}

struct BBResult {
    bool completed = false;  // search space exhausted
    bool found = false;
    std::vector<int> best;
    std::uint64_t nodes = 0;
};

class BranchAndBound {
public:
    BranchAndBound(const MilpInstance& inst, const ConflictGraph& graph, const std::vector<std::uint8_t>& active,
                   std::uint64_t node_budget, std::chrono::steady_clock::time_point deadline, bool has_deadline)
        : inst_(inst),
          graph_(graph),
          active_(active),
          node_budget_(node_budget),
          deadline_(deadline),
          has_deadline_(has_deadline) {}

    BBResult run() {
        const std::size_t n = inst_.n, m = inst_.m;
        // Branch order: decreasing total contribution to active garments,
        // ties by lowest index.
        order_.resize(n);
        for (std::size_t i = 0; i < n; ++i) order_[i] = static_cast<int>(i);
        std::vector<double> score(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j)
                if (active_[j]) score[i] += inst_.contrib(i, j);
        std::stable_sort(order_.begin(), order_.end(),
                         [&](int a, int b) { return score[a] > score[b]; });

        deficit_.resize(m);
        for (std::size_t j = 0; j < m; ++j) deficit_[j] = active_[j] ? inst_.need(j) : 0.0;
        blocked_.assign(n, 0);
        selected_.clear();
        best_obj_ = n + 1;
        stopped_ = false;
        nodes_ = 0;
        dfs(0);

        BBResult res;
        res.completed = !stopped_;
        res.found = best_obj_ <= n;
        res.best = best_;
        res.nodes = nodes_;
        return res;
    }

private:
    bool satisfied() const {
        for (std::size_t j = 0; j < inst_.m; ++j)
            if (deficit_[j] > kLogTol) return false;
        return true;
    }

    // Admissible lower bound on the candidates still needed: the
    // most-violated-garment bound, strengthened by summing over garments
    // whose remaining supports are disjoint.
    std::size_t bound(std::size_t pos) {
        const std::size_t m = inst_.m, n = inst_.n;
        avail_.clear();
        for (std::size_t t = pos; t < n; ++t)
            if (!blocked_[order_[t]]) avail_.push_back(order_[t]);

        struct Unsat {
            std::size_t j;
            double maxc;
            std::size_t support;
        };
        std::vector<Unsat> unsat;
        for (std::size_t j = 0; j < m; ++j) {
            if (deficit_[j] <= kLogTol) continue;
            double maxc = 0.0;
            std::size_t support = 0;
            for (int i : avail_) {
                const double c = inst_.contrib(i, j);
                if (c > 0.0) {
                    ++support;
                    maxc = std::max(maxc, c);
                }
            }
            if (maxc <= 0.0) return kInfeasibleBound;
            unsat.push_back({j, maxc, support});
        }
        if (unsat.empty()) return 0;

        auto needed = [&](const Unsat& u) {
            return static_cast<std::size_t>(std::ceil(deficit_[u.j] / u.maxc - 1e-12));
        };
        std::size_t lb1 = 0;
        for (const auto& u : unsat) lb1 = std::max(lb1, needed(u));

        // Disjoint-support sum: greedily claim supports, smallest first.
        std::stable_sort(unsat.begin(), unsat.end(), [](const Unsat& a, const Unsat& b) {
            return a.support < b.support;
        });
        const std::size_t words = (n + 63) / 64;
        used_.assign(words, 0);
        scratch_.assign(words, 0);
        std::size_t lb2 = 0;
        for (const auto& u : unsat) {
            std::fill(scratch_.begin(), scratch_.end(), 0);
            bool overlap = false;
            for (int i : avail_) {
                if (inst_.contrib(i, u.j) > 0.0) {
                    if (used_[i / 64] >> (i % 64) & 1) {
                        overlap = true;
                        break;
                    }
                    scratch_[i / 64] |= 1ULL << (i % 64);
                }
            }
            if (overlap) continue;
            lb2 += needed(u);
            for (std::size_t w = 0; w < words; ++w) used_[w] |= scratch_[w];
        }
        return std::max(lb1, lb2);
    }

    void dfs(std::size_t pos) {
        if (stopped_) return;
        ++nodes_;
        if ((nodes_ & 1023) == 0) {
            if (nodes_ >= node_budget_ ||
                (has_deadline_ && std::chrono::steady_clock::now() >= deadline_)) {
                stopped_ = true;
                return;
            }
        }
        if (satisfied()) {
            if (selected_.size() < best_obj_) {
                best_obj_ = selected_.size();
                best_ = selected_;
                std::sort(best_.begin(), best_.end());
            }
            return;
        }
        const std::size_t lb = bound(pos);
        if (lb == kInfeasibleBound || selected_.size() + lb >= best_obj_) return;
        if (pos == inst_.n) return;

        const int i = order_[pos];
        if (!blocked_[i]) {
            selected_.push_back(i);
            for (std::size_t j = 0; j < inst_.m; ++j) deficit_[j] -= inst_.contrib(i, j);
            block_neighbors(i, +1);
            dfs(pos + 1);
            block_neighbors(i, -1);
            for (std::size_t j = 0; j < inst_.m; ++j) deficit_[j] += inst_.contrib(i, j);
            selected_.pop_back();
        }
        dfs(pos + 1);
    }

    void block_neighbors(int i, int delta) {
        const std::uint64_t* row = graph_.row(i);
        for (std::size_t w = 0; w < graph_.words; ++w) {
            std::uint64_t bits = row[w];
            while (bits) {
                const int v = static_cast<int>(w * 64 + std::countr_zero(bits));
                blocked_[v] += delta;
                bits &= bits - 1;
            }
        }
    }

    static constexpr std::size_t kInfeasibleBound = std::numeric_limits<std::size_t>::max();

    const MilpInstance& inst_;
    const ConflictGraph& graph_;
    const std::vector<std::uint8_t>& active_;
    std::uint64_t node_budget_;
    std::chrono::steady_clock::time_point deadline_;
    bool has_deadline_;

    std::vector<int> order_;
    std::vector<double> deficit_;
    std::vector<int> blocked_;
    std::vector<int> selected_;
    std::vector<int> best_;
    std::size_t best_obj_ = 0;
    std::vector<int> avail_;
    std::vector<std::uint64_t> used_, scratch_;
    std::uint64_t nodes_ = 0;
    bool stopped_ = false;
};

}  // namespace detail

// Exact depth-first branch-and-bound. Garments whose target is unreachable
// are dropped from the constraint set (reported in dropped_garments, status
// relaxed) so the remaining instance can still be solved; the drop rule
// depends only on the instance, so the brute-force oracle reproduces it.
inline SolveOutcome solve_exact(const MilpInstance& inst, const SolverConfig& cfg = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    const bool has_deadline = cfg.time_budget > 0.0;
    const auto deadline = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double>(has_deadline ? cfg.time_budget : 0.0));

    detail::ConflictGraph graph(inst);
    SolveOutcome out;
    std::vector<std::uint8_t> active(inst.m, 1);

    // Garments beyond reach of even the full candidate set are dropped up
    // front.
    {
        std::vector<double> total(inst.m, 0.0);
        for (std::size_t i = 0; i < inst.n; ++i)
            for (std::size_t j = 0; j < inst.m; ++j) total[j] += inst.contrib(i, j);
        for (std::size_t j = 0; j < inst.m; ++j)
            if (inst.need(j) > total[j] + kLogTol) {
                active[j] = 0;
                out.dropped_garments.push_back(static_cast<int>(j));
            }
    }

    detail::BBResult res;
    while (true) {
        const std::uint64_t remaining =
            cfg.node_budget > out.nodes_explored ? cfg.node_budget - out.nodes_explored : 1;
        detail::BranchAndBound bb(inst, graph, active, remaining, deadline, has_deadline);
        res = bb.run();
        out.nodes_explored += res.nodes;
        if (res.found || !res.completed) break;

        // Complete search with no feasible plan: relax.
        std::vector<double> cover = detail::max_coverage_per_garment(inst, graph);
        std::vector<int> newly;
        for (std::size_t j = 0; j < inst.m; ++j)
            if (active[j] && inst.need(j) > cover[j] + kLogTol) newly.push_back(static_cast<int>(j));
        if (newly.empty()) {
            // Jointly infeasible: drop the hardest remaining garment.
            int pick = -1;
            double worst = -1.0;
            for (std::size_t j = 0; j < inst.m; ++j)
                if (active[j] && inst.need(j) > worst) {
                    worst = inst.need(j);
                    pick = static_cast<int>(j);
                }
            if (pick < 0) break;  // nothing left to relax
            newly.push_back(pick);
        }
        for (int j : newly) {
            active[j] = 0;
            out.dropped_garments.push_back(j);
        }
        std::sort(out.dropped_garments.begin(), out.dropped_garments.end());
    }

    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (res.found) {
        out.plan.selected = res.best;
        out.status = !res.completed             ? SolveStatus::FeasibleIncumbent
                     : out.dropped_garments.empty() ? SolveStatus::Optimal
                                                    : SolveStatus::Relaxed;
    } else {
        out.status = res.completed ? SolveStatus::Infeasible : SolveStatus::Unknown;
    }
    return out;
}

// Greedy cover: repeatedly take the non-conflicting candidate with the
// largest marginal log-coverage, capped at each garment's remaining need.
inline SolveOutcome solve_greedy(const MilpInstance& inst) {
    const auto t0 = std::chrono::steady_clock::now();
    detail::ConflictGraph graph(inst);
    SolveOutcome out;
    std::vector<double> deficit(inst.m);
    for (std::size_t j = 0; j < inst.m; ++j) deficit[j] = inst.need(j);
    std::vector<std::uint8_t> taken(inst.n, 0), blocked(inst.n, 0);

    while (true) {
        bool any_unsat = false;
        for (std::size_t j = 0; j < inst.m; ++j)
            if (deficit[j] > kLogTol) any_unsat = true;
        if (!any_unsat) break;

        int best_i = -1;
        double best_gain = 0.0;
        for (std::size_t i = 0; i < inst.n; ++i) {
            if (taken[i] || blocked[i]) continue;
            double gain = 0.0;
            for (std::size_t j = 0; j < inst.m; ++j)
                if (deficit[j] > kLogTol) gain += std::min(deficit[j], inst.contrib(i, j));
            if (gain > best_gain + kLogTol) {
                best_gain = gain;
                best_i = static_cast<int>(i);
            }
        }
        if (best_i < 0) break;
        taken[best_i] = 1;
        out.plan.selected.push_back(best_i);
        for (std::size_t j = 0; j < inst.m; ++j) deficit[j] -= inst.contrib(best_i, j);
        for (std::size_t v = 0; v < inst.n; ++v)
            if (graph.test(best_i, static_cast<int>(v))) blocked[v] = 1;
    }

    std::sort(out.plan.selected.begin(), out.plan.selected.end());
    for (std::size_t j = 0; j < inst.m; ++j)
        if (deficit[j] > kLogTol) out.dropped_garments.push_back(static_cast<int>(j));
    out.status = out.dropped_garments.empty() ? SolveStatus::FeasibleIncumbent : SolveStatus::Relaxed;
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// Exhaustive oracle for tests: all 2^n subsets, minimum cardinality wins,
// ties broken by lexicographically smallest index set. Applies the same
// unreachable-garment relaxation rule as solve_exact.
inline SolveOutcome brute_force(const MilpInstance& inst) {
    if (inst.n > 20) throw std::invalid_argument("brute_force: n must be <= 20");
    const auto t0 = std::chrono::steady_clock::now();
    detail::ConflictGraph graph(inst);
    SolveOutcome out;
    std::vector<std::uint8_t> active(inst.m, 1);

    const std::uint32_t total = 1u << inst.n;
    std::vector<std::uint8_t> valid(total, 1);
    for (std::uint32_t mask = 0; mask < total; ++mask)
        for (auto [i, j] : inst.conflicts)
            if ((mask >> i & 1) && (mask >> j & 1)) {
                valid[mask] = 0;
                break;
            }

    auto indices_of = [&](std::uint32_t mask) {
        std::vector<int> v;
        for (std::size_t i = 0; i < inst.n; ++i)
            if (mask >> i & 1) v.push_back(static_cast<int>(i));
        return v;
    };

    while (true) {
        bool found = false;
        std::uint32_t best_mask = 0;
        std::vector<int> best_idx;
        std::vector<double> best_cover(inst.m, 0.0);  // per-garment max coverage over valid subsets
        for (std::uint32_t mask = 0; mask < total; ++mask) {
            if (!valid[mask]) continue;
            bool ok = true;
            for (std::size_t j = 0; j < inst.m; ++j) {
                double cov = 0.0;
                for (std::size_t i = 0; i < inst.n; ++i)
                    if (mask >> i & 1) cov += inst.contrib(i, j);
                best_cover[j] = std::max(best_cover[j], cov);
                if (active[j] && cov < inst.need(j) - kLogTol) ok = false;
            }
            if (!ok) continue;
            auto idx = indices_of(mask);
            if (!found || idx.size() < best_idx.size() ||
                (idx.size() == best_idx.size() && idx < best_idx)) {
                found = true;
                best_mask = mask;
                best_idx = std::move(idx);
            }
        }
        if (found) {
            out.plan.selected = indices_of(best_mask);
            out.status = out.dropped_garments.empty() ? SolveStatus::Optimal : SolveStatus::Relaxed;
            break;
        }
        std::vector<int> newly;
        for (std::size_t j = 0; j < inst.m; ++j)
            if (active[j] && best_cover[j] < inst.need(j) - kLogTol) newly.push_back(static_cast<int>(j));
        if (newly.empty()) {
            int pick = -1;
            double worst = -1.0;
            for (std::size_t j = 0; j < inst.m; ++j)
                if (active[j] && inst.need(j) > worst) {
                    worst = inst.need(j);
                    pick = static_cast<int>(j);
                }
            if (pick < 0) {
                out.status = SolveStatus::Infeasible;
                break;
            }
            newly.push_back(pick);
        }
        for (int j : newly) {
            active[j] = 0;
            out.dropped_garments.push_back(j);
        }
        std::sort(out.dropped_garments.begin(), out.dropped_garments.end());
    }

    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace declutter
