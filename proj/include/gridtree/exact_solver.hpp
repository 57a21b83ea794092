#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gridtree/flow.hpp"
#include "gridtree/model.hpp"
#include "gridtree/rational.hpp"

namespace gridtree {

namespace detail {

// Exact two-value dynamic program over directed edges: for the arc (u, v),
// demand(u, v) is the least flow the subtree at v can accept through it and
// supply(u, v) the greatest flow the subtree at u can push through it. An
// orientation sending u -> v exists iff demand <= supply; witnesses store
// which child edges enter the node in the optimal choice.
class ExactDP {
public:
    ExactDP(const Network& net, FlowOptions opts) : net_(net), opts_(opts) {
        size_t m = static_cast<size_t>(net.edge_count()) * 2;
        demand_.assign(m, std::nullopt);
        supply_.assign(m, std::nullopt);
        demand_done_.assign(m, 0);
        supply_done_.assign(m, 0);
        demand_enter_.assign(m, {});
        supply_enter_.assign(m, {});
    }

    // arc u -> v along edge e
    int arc_index(int e, int v) const {
        return 2 * e + (net_.edge(e).second == v ? 0 : 1);
    }

    const std::optional<Rational>& demand(int u, int v, int e) {
        int idx = arc_index(e, v);
        if (!demand_done_[static_cast<size_t>(idx)]) compute_demand(u, v, e, idx);
        return demand_[static_cast<size_t>(idx)];
    }

    const std::optional<Rational>& supply(int u, int v, int e) {
        int idx = arc_index(e, v);
        if (!supply_done_[static_cast<size_t>(idx)]) compute_supply(u, v, e, idx);
        return supply_[static_cast<size_t>(idx)];
    }

    // orient the subtree at v so that it accepts its minimal demand from u
    void expand_demand(int v, int e, Orientation& o) {
        int idx = 2 * e + (net_.edge(e).second == v ? 0 : 1);
        const std::vector<int>& enter = demand_enter_[static_cast<size_t>(idx)];
        for (auto [c, e2] : net_.adj(v)) {
            if (e2 == e) continue;
            bool entering = std::find(enter.begin(), enter.end(), e2) != enter.end();
            set_arc(o, e2, entering ? c : v, entering ? v : c);
            if (entering)
                expand_supply(c, e2, o);
            else
                expand_demand(c, e2, o);
        }
    }

    // orient the subtree at u so that it can deliver its maximal supply to
    // the far end of e; by downward closure the same directions remain
    // feasible for any smaller draw
    void expand_supply(int u, int e, Orientation& o) {
        int idx = 2 * e + (net_.edge(e).second == u ? 1 : 0);
        const std::vector<int>& enter = supply_enter_[static_cast<size_t>(idx)];
        for (auto [c, e2] : net_.adj(u)) {
            if (e2 == e) continue;
            bool entering = std::find(enter.begin(), enter.end(), e2) != enter.end();
            set_arc(o, e2, entering ? c : u, entering ? u : c);
            if (entering)
                expand_supply(c, e2, o);
            else
                expand_demand(c, e2, o);
        }
    }

private:
    struct Child {
        int node;
        int edge;
        std::optional<Rational> dem;  // demand(parent, child)
        std::optional<Rational> sup;  // supply(child, parent)
    };

    std::vector<Child> children_of(int node, int skip_edge) {
        std::vector<Child> kids;
        for (auto [c, e2] : net_.adj(node)) {
            if (e2 == skip_edge) continue;
            kids.push_back({c, e2, demand(node, c, e2), supply(c, node, e2)});
        }
        return kids;
    }

    // children eligible to enter alongside bottleneck b: supply at least as
    // large, ties broken toward higher numbering
    bool eligible(const Child& j, const Child& b) const {
        if (*j.sup != *b.sup) return *b.sup < *j.sup;
        return net_.number(b.node) <= net_.number(j.node);
    }

    void compute_demand(int u, int v, int e, int idx) {
        (void)u;
        demand_done_[static_cast<size_t>(idx)] = 1;
        const Node& nd = net_.node(v);
        std::vector<Child> kids = children_of(v, e);
        Rational pow = nd.kind == NodeKind::Sink ? Rational(nd.value) : Rational(0);

        std::optional<Rational> best;
        std::vector<int> best_enter;
        auto consider = [&](const Rational& flow, std::vector<int> enter) {
            if (!best || flow < *best) {
                best = flow;
                best_enter = std::move(enter);
            }
        };

        // entering set empty: every child is fed its minimal demand
        {
            bool valid = true;
            Rational numerator = pow;
            for (const Child& k : kids) {
                if (!k.dem) {
                    valid = false;
                    break;
                }
                numerator += *k.dem;
            }
            if (valid && node_accepts(nd, numerator, 1)) {
                long div = nd.kind == NodeKind::Source ? 2 : 1;
                consider(numerator / Rational(div), {});
            }
        }

        // bottleneck child b enters; so does every child with supply at
        // least as large (shrinking the flow and keeping b the binding one)
        for (const Child& b : kids) {
            if (!b.sup) continue;
            bool valid = true;
            Rational numerator = pow;
            std::vector<int> enter;
            long in_count = 0;
            for (const Child& k : kids) {
                if (k.sup && eligible(k, b)) {
                    enter.push_back(k.edge);
                    ++in_count;
                } else if (k.dem) {
                    numerator += *k.dem;
                } else {
                    valid = false;
                    break;
                }
            }
            if (!valid || !node_accepts(nd, numerator, in_count + 1)) continue;
            long div = (nd.kind == NodeKind::Source ? in_count + 2 : in_count + 1);
            Rational flow = numerator / Rational(div);
            if (*b.sup < flow) continue;
            consider(flow, std::move(enter));
        }

        demand_[static_cast<size_t>(idx)] = best;
        demand_enter_[static_cast<size_t>(idx)] = std::move(best_enter);
    }

    // capacity/production at the accepting node; numerator equals the total
    // demanded there, in_degree the number of entering arcs
    bool node_accepts(const Node& nd, const Rational& numerator, long in_degree) const {
        if (nd.kind == NodeKind::Switch)
            return nd.unbounded || numerator <= Rational(nd.value);
        if (nd.kind == NodeKind::Source) {
            Rational flow = numerator / Rational(in_degree + 1);
            return flow <= Rational(nd.value);
        }
        return true;
    }

    void compute_supply(int u, int v, int e, int idx) {
        (void)v;
        supply_done_[static_cast<size_t>(idx)] = 1;
        const Node& nd = net_.node(u);
        std::vector<Child> kids = children_of(u, e);
        Rational pow = nd.kind == NodeKind::Sink ? Rational(nd.value) : Rational(0);

        std::optional<Rational> best;
        std::vector<int> best_enter;
        auto consider = [&](const Rational& f, std::vector<int> enter) {
            if (f.is_negative()) return;
            if (!best || *best < f) {
                best = f;
                best_enter = std::move(enter);
            }
        };

        // no entering arc: a source drains itself; a switch may only rest
        if (nd.kind == NodeKind::Source) {
            bool valid = true;
            Rational fed(0);
            for (const Child& k : kids) {
                if (!k.dem) {
                    valid = false;
                    break;
                }
                fed += *k.dem;
            }
            if (valid) consider(Rational(nd.value) - fed, {});
        } else if (nd.kind == NodeKind::Switch && opts_.allow_deactivated_switches) {
            bool all_zero = true;
            for (const Child& k : kids)
                if (!k.dem || !k.dem->is_zero()) {
                    all_zero = false;
                    break;
                }
            if (all_zero) consider(Rational(0), {});
        }

        for (const Child& b : kids) {
            if (!b.sup) continue;
            bool valid = true;
            Rational fed = pow;
            std::vector<int> enter;
            long in_count = 0;
            for (const Child& k : kids) {
                if (k.sup && eligible(k, b)) {
                    enter.push_back(k.edge);
                    ++in_count;
                } else if (k.dem) {
                    fed += *k.dem;
                } else {
                    valid = false;
                    break;
                }
            }
            if (!valid) continue;
            Rational per_arc = *b.sup;
            long div = in_count;
            if (nd.kind == NodeKind::Switch) {
                if (!nd.unbounded)
                    per_arc = min(per_arc, Rational(nd.value) / Rational(in_count));
            } else if (nd.kind == NodeKind::Source) {
                per_arc = min(per_arc, Rational(nd.value));
                div = in_count + 1;
            }
            consider(Rational(div) * per_arc - fed, std::move(enter));
        }

        supply_[static_cast<size_t>(idx)] = best;
        supply_enter_[static_cast<size_t>(idx)] = std::move(best_enter);
    }

    void set_arc(Orientation& o, int e, int tail, int head) const {
        (void)head;
        o.dir[static_cast<size_t>(e)] = net_.edge(e).first == tail ? 0 : 1;
    }

    const Network& net_;
    FlowOptions opts_;
    std::vector<std::optional<Rational>> demand_, supply_;
    std::vector<uint8_t> demand_done_, supply_done_;
    std::vector<std::vector<int>> demand_enter_, supply_enter_;
};

}  // namespace detail

// Feasibility with witness: try both directions of the numbering-smallest
// edge; a feasible orientation sending u -> v exists iff the subtree demand
// at v does not exceed the subtree supply at u.
inline std::optional<Orientation> valid(const Network& net, FlowOptions opts = {}) {
    if (net.edge_count() == 0) {
        // single node: a lone source or deactivated switch is feasible
        const Node& nd = net.node(0);
        bool ok = nd.kind == NodeKind::Source ||
                  (nd.kind == NodeKind::Switch && opts.allow_deactivated_switches);
        if (!ok) return std::nullopt;
        Orientation o;
        return o;
    }

    detail::ExactDP dp(net, opts);
    int e = net.numbering_smallest_edge();
    auto [a, b] = net.edge(e);
    for (auto [u, v] : {std::pair<int, int>{a, b}, std::pair<int, int>{b, a}}) {
        const std::optional<Rational>& dem = dp.demand(u, v, e);
        const std::optional<Rational>& sup = dp.supply(u, v, e);
        if (!dem || !sup || *sup < *dem) continue;
        Orientation o;
        o.dir.assign(static_cast<size_t>(net.edge_count()), 0);
        o.dir[static_cast<size_t>(e)] = net.edge(e).first == u ? 0 : 1;
        dp.expand_demand(v, e, o);
        dp.expand_supply(u, e, o);
        if (!check_feasible(net, o, opts).feasible)
            throw std::logic_error("reconstructed orientation fails the feasibility check");
        return o;
    }
    return std::nullopt;
}

// Scale the whole instance by q = den(max_load), then replace each scaled
// production q * Prod(s) by num(max_load) * Prod(s): feasible orientations of
// the result are exactly those with max load <= max_load on the original.
inline Network truncate_productions(const Network& net, const Rational& max_load) {
    if (!(Rational(0) < max_load && max_load <= Rational(1)))
        throw std::invalid_argument("truncate_productions: max load must lie in (0, 1]");
    const mpz_class& p = max_load.num();
    const mpz_class& q = max_load.den();

    std::vector<Node> nodes;
    nodes.reserve(static_cast<size_t>(net.n()));
    for (int i = 0; i < net.n(); ++i) {
        Node nd = net.node(i);
        nd.value *= nd.kind == NodeKind::Source ? p : q;
        nodes.push_back(std::move(nd));
    }
    std::vector<std::pair<std::string, std::string>> edges;
    edges.reserve(static_cast<size_t>(net.edge_count()));
    for (int e = 0; e < net.edge_count(); ++e) {
        auto [s, t] = net.edge(e);
        edges.emplace_back(net.node(s).id, net.node(t).id);
    }
    std::vector<std::string> numbering;
    numbering.reserve(static_cast<size_t>(net.n()));
    for (int r = 1; r <= net.n(); ++r) numbering.push_back(net.node(net.node_at_rank(r)).id);
    return Network(std::move(nodes), std::move(edges), std::move(numbering));
}

struct MinMaxLoadResult {
    Orientation orientation;
    Rational value;  // the exact optimal maximum load
    long iterations = 0;
};

namespace detail {

// nearest multiple of 2^(floor(log2(b-a)) - 8) to the midpoint, kept strictly
// inside (a, b): probing on a coarse dyadic grid keeps the denominators of
// later truncations small, which the iteration bound depends on
inline Rational dyadic_midpoint(const Rational& a, const Rational& b) {
    Rational width = b - a;
    Rational mid = a + width / Rational(2);
    Rational grid = Rational::pow2(width.floor_log2() - 8);
    Rational snapped = Rational((mid / grid + Rational(1, 2)).floor()) * grid;
    if (a < snapped && snapped < b) return snapped;
    return mid;
}

}  // namespace detail

// Dichotomy on the optimal maximum load. The upper end of the interval is
// always an achieved maximum load; once the interval is narrower than the
// least possible gap between achievable values, it *is* the optimum.
inline std::optional<MinMaxLoadResult> solve_min_max_load(const Network& net,
                                                          FlowOptions opts = {}) {
    if (net.sources().empty())
        throw std::domain_error("solve_min_max_load: network has no source");

    MinMaxLoadResult result;
    auto probe = [&](const Rational& max_load) {
        ++result.iterations;
        return valid(truncate_productions(net, max_load), opts);
    };
    auto max_load_of = [&](const Orientation& o) {
        return std::get<1>(objectives(net, compute_flow(net, o)));
    };

    std::optional<Orientation> found = probe(Rational(1));
    if (!found) return std::nullopt;
    result.orientation = *found;

    Rational a(0);
    Rational b = max_load_of(*found);

    // achievable maximum loads have denominator at most n^n * sigma, so any
    // two distinct ones differ by more than this
    mpz_class n_pow_n;
    mpz_ui_pow_ui(n_pow_n.get_mpz_t(), static_cast<unsigned long>(net.n()),
                  static_cast<unsigned long>(net.n()));
    mpz_class base = n_pow_n * std::max(net.max_production(), mpz_class(1));
    mpz_class quartic = base * base;
    quartic *= quartic;
    Rational eps_term(mpz_class(1), quartic);

    while (eps_term <= b - a) {
        Rational mid = detail::dyadic_midpoint(a, b);
        if (std::optional<Orientation> o = probe(mid)) {
            result.orientation = *o;
            b = max_load_of(*o);
        } else {
            a = mid;
        }
    }
    result.value = b;
    return result;
}

}  // namespace gridtree
