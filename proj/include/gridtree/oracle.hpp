#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridtree/flow.hpp"
#include "gridtree/model.hpp"
#include "gridtree/rounding.hpp"

namespace gridtree {

struct LimitExceededError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exhaustive enumeration refuses beyond this many edges.
inline long enumeration_limit() {
    const char* env = std::getenv("GRIDTREE_ORACLE_LIMIT");
    if (env == nullptr || *env == '\0') return 24;
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == nullptr || *end != '\0' || v < 0 || v > 62)
        throw std::invalid_argument("GRIDTREE_ORACLE_LIMIT must be an integer in [0, 62]");
    return v;
}

enum class Objective { MinMaxLoad, MaxMinLoad, MinReserve };

inline const char* objective_name(Objective o) {
    switch (o) {
        case Objective::MinMaxLoad: return "min-max-load";
        case Objective::MaxMinLoad: return "max-min-load";
        case Objective::MinReserve: return "min-reserve";
    }
    return "?";
}

inline std::optional<Objective> parse_objective(const std::string& name) {
    if (name == "min-max-load" || name == "min-m") return Objective::MinMaxLoad;
    if (name == "max-min-load" || name == "max-m") return Objective::MaxMinLoad;
    if (name == "min-reserve" || name == "min-r") return Objective::MinReserve;
    return std::nullopt;
}

namespace detail {

// edge indices ordered by (min endpoint rank, max endpoint rank)
inline std::vector<int> edges_by_rank(const Network& net, std::vector<int> edges) {
    auto key = [&](int e) {
        auto [a, b] = net.edge(e);
        int ra = net.number(a), rb = net.number(b);
        return std::pair<int, int>(std::min(ra, rb), std::max(ra, rb));
    };
    std::sort(edges.begin(), edges.end(), [&](int x, int y) { return key(x) < key(y); });
    return edges;
}

// direction of edge e for one counter bit: 0 orients lower rank -> higher rank
inline uint8_t bit_to_dir(const Network& net, int e, bool bit) {
    auto [a, b] = net.edge(e);
    bool first_is_low = net.number(a) < net.number(b);
    return static_cast<uint8_t>(bit == first_is_low ? 1 : 0);
}

struct SubtreeView {
    std::vector<uint8_t> in_tree;  // node mask
    std::vector<int> nodes;        // members, discovery order
    std::vector<int> edges;        // internal edges, (min,max)-rank order
};

// the component of root in net minus the edge {root, banned}
inline SubtreeView subtree_away_from(const Network& net, int root, int banned) {
    SubtreeView view;
    view.in_tree.assign(static_cast<size_t>(net.n()), 0);
    std::vector<int> stack{root};
    view.in_tree[static_cast<size_t>(root)] = 1;
    std::vector<int> raw_edges;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        view.nodes.push_back(v);
        for (auto [nb, e] : net.adj(v)) {
            if (v == root && nb == banned) continue;
            if (view.in_tree[static_cast<size_t>(nb)]) continue;
            view.in_tree[static_cast<size_t>(nb)] = 1;
            raw_edges.push_back(e);
            stack.push_back(nb);
        }
    }
    view.edges = edges_by_rank(net, std::move(raw_edges));
    return view;
}

// A + B*f with f the flow drawn through the special arc.
struct LinFlow {
    Rational a, b;
    LinFlow operator+(const LinFlow& o) const { return {a + o.a, b + o.b}; }
    LinFlow over(long d) const { return {a / Rational(d), b / Rational(d)}; }
};

}  // namespace detail

// Every orientation of the whole tree, deterministically: counter bit i flips
// the i-th edge in (min,max)-rank order away from its low->high default.
inline void enumerate_orientations(const Network& net,
                                   const std::function<void(const Orientation&)>& fn) {
    long m = net.edge_count();
    if (m > enumeration_limit())
        throw LimitExceededError("instance has " + std::to_string(m) +
                                 " edges, above the enumeration limit of " +
                                 std::to_string(enumeration_limit()));
    std::vector<int> all(static_cast<size_t>(m));
    for (int e = 0; e < m; ++e) all[static_cast<size_t>(e)] = e;
    std::vector<int> order = detail::edges_by_rank(net, all);

    Orientation o;
    o.dir.assign(static_cast<size_t>(m), 0);
    unsigned long long total = 1ULL << m;
    for (unsigned long long counter = 0; counter < total; ++counter) {
        for (long i = 0; i < m; ++i) {
            int e = order[static_cast<size_t>(i)];
            o.dir[static_cast<size_t>(e)] =
                detail::bit_to_dir(net, e, ((counter >> i) & 1ULL) != 0ULL);
        }
        fn(o);
    }
}

struct OracleOptimum {
    std::optional<Orientation> orientation;  // first achiever in enumeration order
    Rational value;                          // meaningful iff orientation is set
    unsigned long feasible_count = 0;
};

inline OracleOptimum brute_force_optimum(const Network& net, Objective objective,
                                         FlowOptions opts = {}) {
    OracleOptimum result;
    enumerate_orientations(net, [&](const Orientation& o) {
        FlowAssignment fa = compute_flow(net, o);
        if (!check_feasible(net, fa, opts).feasible) return;
        ++result.feasible_count;
        auto [lo, hi, reserve] = objectives(net, fa);
        Rational value;
        bool better = false;
        switch (objective) {
            case Objective::MinMaxLoad:
                value = hi;
                better = !result.orientation || value < result.value;
                break;
            case Objective::MaxMinLoad:
                value = lo;
                better = !result.orientation || result.value < value;
                break;
            case Objective::MinReserve:
                value = reserve;
                better = !result.orientation || value < result.value;
                break;
        }
        if (better) {
            result.orientation = o;
            result.value = value;
        }
    });
    return result;
}

struct IOValues {
    std::optional<Rational> demand;  // min exact flow into the head subtree; empty = +inf
    std::optional<Rational> supply;  // max exact flow out of the tail subtree; empty = -inf
};

namespace detail {

// Exact and rounded flows over the subtree at v fed through (u, v), for every
// orientation of the internal edges: yields (rounded arc flow on (u,v),
// exact arc flow on (u,v)) of each semi-orientation that is feasible on the
// subtree's nodes and whose rounded source loads fall within [m_lo, m_hi].
inline void enumerate_outgoing(const Network& net, int u, int v, const RoundingContext& ctx,
                               const Rational& m_lo, const Rational& m_hi, FlowOptions opts,
                               const std::function<void(const Rational&, const Rational&)>& fn) {
    SubtreeView view = subtree_away_from(net, v, u);
    long m = static_cast<long>(view.edges.size());
    if (m > enumeration_limit())
        throw LimitExceededError("subtree has " + std::to_string(m) +
                                 " edges, above the enumeration limit");

    const size_t nn = static_cast<size_t>(net.n());
    std::vector<uint8_t> dir(view.edges.size());
    std::vector<int> din(nn), pending(nn);
    std::vector<Rational> exact(nn), rounded(nn);

    unsigned long long total = 1ULL << m;
    for (unsigned long long counter = 0; counter < total; ++counter) {
        for (long i = 0; i < m; ++i)
            dir[static_cast<size_t>(i)] =
                bit_to_dir(net, view.edges[static_cast<size_t>(i)], ((counter >> i) & 1ULL) != 0ULL);

        // tail/head per internal edge
        std::vector<std::pair<int, int>> arc(view.edges.size());
        for (size_t i = 0; i < view.edges.size(); ++i) {
            auto [a, b] = net.edge(view.edges[i]);
            arc[i] = dir[i] == 0 ? std::make_pair(a, b) : std::make_pair(b, a);
        }
        for (int w : view.nodes) {
            din[static_cast<size_t>(w)] = 0;
            pending[static_cast<size_t>(w)] = 0;
        }
        din[static_cast<size_t>(v)] = 1;  // the arc from u
        for (auto [t, h] : arc) {
            ++din[static_cast<size_t>(h)];
            ++pending[static_cast<size_t>(t)];
        }

        std::vector<int> stack;
        for (int w : view.nodes)
            if (pending[static_cast<size_t>(w)] == 0) stack.push_back(w);

        bool ok = true;
        while (ok && !stack.empty()) {
            int w = stack.back();
            stack.pop_back();
            const Node& nd = net.node(w);
            int d = din[static_cast<size_t>(w)];

            Rational out_sum(0);
            std::vector<std::pair<int, Rational>> succ;
            for (size_t i = 0; i < arc.size(); ++i)
                if (arc[i].first == w) {
                    out_sum += exact[static_cast<size_t>(arc[i].second)];
                    succ.emplace_back(net.number(arc[i].second),
                                      rounded[static_cast<size_t>(arc[i].second)]);
                }
            std::sort(succ.begin(), succ.end(),
                      [](const auto& x, const auto& y) { return x.first < y.first; });
            std::vector<Rational> elems;
            if (nd.kind == NodeKind::Sink) {
                elems.push_back(Rational(nd.value));
                out_sum += Rational(nd.value);
            }
            for (auto& [rank, val] : succ) {
                (void)rank;
                elems.push_back(val);
            }

            long divisor = nd.kind == NodeKind::Source ? d + 1 : d;
            if (divisor == 0) {
                // unfed switch: usable only when nothing is demanded
                if (nd.kind != NodeKind::Switch || !opts.allow_deactivated_switches ||
                    !out_sum.is_zero()) {
                    ok = false;
                    break;
                }
                exact[static_cast<size_t>(w)] = Rational(0);
                rounded[static_cast<size_t>(w)] = Rational(0);
            } else {
                Rational fw = out_sum / Rational(divisor);
                exact[static_cast<size_t>(w)] = fw;
                rounded[static_cast<size_t>(w)] = oplus(elems, divisor, ctx);
                if (nd.kind == NodeKind::Switch && !nd.unbounded &&
                    Rational(nd.value) < fw * Rational(d)) {
                    ok = false;
                    break;
                }
                if (nd.kind == NodeKind::Source) {
                    if (Rational(nd.value) < fw) {
                        ok = false;
                        break;
                    }
                    Rational load = rounded[static_cast<size_t>(w)] / Rational(nd.value);
                    if (load < m_lo || m_hi < load) {
                        ok = false;
                        break;
                    }
                }
            }
            for (size_t i = 0; i < arc.size(); ++i)
                if (arc[i].second == w && --pending[static_cast<size_t>(arc[i].first)] == 0)
                    stack.push_back(arc[i].first);
        }
        if (ok) fn(rounded[static_cast<size_t>(v)], exact[static_cast<size_t>(v)]);
    }
}

}  // namespace detail

// All (rounded arc flow, minimal exact arc flow) pairs over feasible outgoing
// semi-orientations of (u, v).
inline std::map<Rational, Rational> outgoing_profile(const Network& net, int u, int v,
                                                     const Rational& m_lo, const Rational& m_hi,
                                                     const RoundingContext& ctx,
                                                     FlowOptions opts = {}) {
    std::map<Rational, Rational> profile;
    detail::enumerate_outgoing(net, u, v, ctx, m_lo, m_hi, opts,
                               [&](const Rational& f_tilde, const Rational& f) {
                                   auto it = profile.find(f_tilde);
                                   if (it == profile.end())
                                       profile.emplace(f_tilde, f);
                                   else if (f < it->second)
                                       it->second = f;
                               });
    return profile;
}

// Max exact flow the subtree at u can push through (u, v) when the rounded
// arc flow is pinned to f_tilde. Flows in the subtree are linear in the drawn
// amount f, so each semi-orientation admits an extreme f given by its
// tightest capacity/production threshold; rounded flows (and thus the load
// window) do not depend on f.
inline std::optional<Rational> brute_force_supply(const Network& net, int u, int v,
                                                  const Rational& f_tilde, const Rational& m_lo,
                                                  const Rational& m_hi,
                                                  const RoundingContext& ctx,
                                                  FlowOptions opts = {}) {
    detail::SubtreeView view = detail::subtree_away_from(net, u, v);
    long m = static_cast<long>(view.edges.size());
    if (m > enumeration_limit())
        throw LimitExceededError("subtree has " + std::to_string(m) +
                                 " edges, above the enumeration limit");

    const size_t nn = static_cast<size_t>(net.n());
    std::vector<int> din(nn), pending(nn);
    std::vector<detail::LinFlow> exact(nn);
    std::vector<Rational> rounded(nn);
    std::optional<Rational> best;

    unsigned long long total = 1ULL << m;
    for (unsigned long long counter = 0; counter < total; ++counter) {
        std::vector<std::pair<int, int>> arc(view.edges.size());
        for (long i = 0; i < m; ++i) {
            int e = view.edges[static_cast<size_t>(i)];
            auto [a, b] = net.edge(e);
            arc[static_cast<size_t>(i)] =
                detail::bit_to_dir(net, e, ((counter >> i) & 1ULL) != 0ULL) == 0
                    ? std::make_pair(a, b)
                    : std::make_pair(b, a);
        }
        // the arc toward v carries (0, 1) up front, so it is never pending
        for (int w : view.nodes) {
            din[static_cast<size_t>(w)] = 0;
            pending[static_cast<size_t>(w)] = 0;
        }
        for (auto [t, h] : arc) {
            ++din[static_cast<size_t>(h)];
            ++pending[static_cast<size_t>(t)];
        }

        std::vector<int> stack;
        for (int w : view.nodes)
            if (pending[static_cast<size_t>(w)] == 0) stack.push_back(w);

        bool ok = true;
        std::optional<Rational> ub;  // tightest upper bound on f
        auto add_ub = [&](const Rational& r) {
            if (!ub || r < *ub) ub = r;
        };

        while (ok && !stack.empty()) {
            int w = stack.back();
            stack.pop_back();
            const Node& nd = net.node(w);
            int d = din[static_cast<size_t>(w)];

            detail::LinFlow out_sum{Rational(0), Rational(0)};
            std::vector<std::pair<int, Rational>> succ;
            if (w == u) {
                out_sum = out_sum + detail::LinFlow{Rational(0), Rational(1)};
                succ.emplace_back(net.number(v), f_tilde);
            }
            for (size_t i = 0; i < arc.size(); ++i)
                if (arc[i].first == w) {
                    out_sum = out_sum + exact[static_cast<size_t>(arc[i].second)];
                    succ.emplace_back(net.number(arc[i].second),
                                      rounded[static_cast<size_t>(arc[i].second)]);
                }
            std::sort(succ.begin(), succ.end(),
                      [](const auto& x, const auto& y) { return x.first < y.first; });
            std::vector<Rational> elems;
            if (nd.kind == NodeKind::Sink) {
                elems.push_back(Rational(nd.value));
                out_sum.a += Rational(nd.value);
            }
            for (auto& [rank, val] : succ) {
                (void)rank;
                elems.push_back(val);
            }

            long divisor = nd.kind == NodeKind::Source ? d + 1 : d;
            if (divisor == 0) {
                if (nd.kind != NodeKind::Switch || !opts.allow_deactivated_switches ||
                    !out_sum.a.is_zero()) {
                    ok = false;
                    break;
                }
                if (!out_sum.b.is_zero()) add_ub(Rational(0));
                exact[static_cast<size_t>(w)] = {Rational(0), Rational(0)};
                rounded[static_cast<size_t>(w)] = Rational(0);
            } else {
                detail::LinFlow fw = out_sum.over(divisor);
                exact[static_cast<size_t>(w)] = fw;
                rounded[static_cast<size_t>(w)] = oplus(elems, divisor, ctx);
                if (nd.kind == NodeKind::Switch && !nd.unbounded) {
                    // (a + b f) * d <= cap
                    Rational slack = Rational(nd.value) - fw.a * Rational(d);
                    if (fw.b.is_zero()) {
                        if (slack.is_negative()) {
                            ok = false;
                            break;
                        }
                    } else {
                        add_ub(slack / (fw.b * Rational(d)));
                    }
                }
                if (nd.kind == NodeKind::Source) {
                    Rational slack = Rational(nd.value) - fw.a;
                    if (fw.b.is_zero()) {
                        if (slack.is_negative()) {
                            ok = false;
                            break;
                        }
                    } else {
                        add_ub(slack / fw.b);
                    }
                    Rational load = rounded[static_cast<size_t>(w)] / Rational(nd.value);
                    if (load < m_lo || m_hi < load) {
                        ok = false;
                        break;
                    }
                }
            }
            for (size_t i = 0; i < arc.size(); ++i)
                if (arc[i].second == w && --pending[static_cast<size_t>(arc[i].first)] == 0)
                    stack.push_back(arc[i].first);
        }
        if (!ok) continue;
        if (!ub) throw std::logic_error("unbounded supply: no constraint limits the drawn flow");
        if (ub->is_negative()) continue;
        if (!best || *best < *ub) best = *ub;
    }
    return best;
}

// The two table values ground truth: demand = min over feasible outgoing
// semi-orientations whose rounded arc flow equals f_tilde; supply = max flow
// deliverable from the other side under the same rounded key.
inline IOValues brute_force_io(const Network& net, int u, int v, const Rational& f_tilde,
                               const Rational& m_lo, const Rational& m_hi,
                               const RoundingContext& ctx, FlowOptions opts = {}) {
    IOValues io;
    auto profile = outgoing_profile(net, u, v, m_lo, m_hi, ctx, opts);
    auto it = profile.find(f_tilde);
    if (it != profile.end()) io.demand = it->second;
    io.supply = brute_force_supply(net, u, v, f_tilde, m_lo, m_hi, ctx, opts);
    return io;
}

}  // namespace gridtree
