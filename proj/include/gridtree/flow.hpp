#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "gridtree/model.hpp"
#include "gridtree/rational.hpp"

namespace gridtree {

struct FlowOptions {
    // A switch with no entering arc would normally violate the demand
    // constraint. When this is set (the default), such a switch counts as
    // deactivated -- and therefore feasible -- provided the flow it would
    // have to forward is exactly zero. Sinks are always strict.
    bool allow_deactivated_switches = true;
};

// Exact equal-split flow induced by an orientation. entering[v] is F(v);
// undefined (switch/sink with no entering arc) is tracked separately and is
// never reported as zero.
struct FlowAssignment {
    std::vector<Rational> arc_flow;        // per edge, along its oriented direction
    std::vector<Rational> entering;        // F(v); meaningless when !entering_defined[v]
    std::vector<uint8_t> entering_defined;
    std::vector<Rational> demanded;        // sum of outgoing flows (+ pow for sinks)
    std::vector<int> in_degree;

    bool defined(int v) const { return entering_defined[static_cast<size_t>(v)] != 0; }
};

enum class ViolationKind { Demand, Capacity, Production };

inline const char* violation_name(ViolationKind k) {
    switch (k) {
        case ViolationKind::Demand: return "demand";
        case ViolationKind::Capacity: return "capacity";
        case ViolationKind::Production: return "production";
    }
    return "?";
}

struct Violation {
    int node;
    ViolationKind kind;
};

struct FeasibilityReport {
    bool feasible = true;
    std::vector<Violation> violations;

    bool has(const Network& net, const std::string& id, ViolationKind kind) const {
        for (const Violation& v : violations)
            if (v.node == net.index_of(id) && v.kind == kind) return true;
        return false;
    }
};

// Exact flow on every arc by a reverse-topological sweep of the oriented
// tree: a node's entering flow depends only on its outgoing arcs.
inline FlowAssignment compute_flow(const Network& net, const Orientation& o) {
    const int n = net.n();
    FlowAssignment fa;
    fa.arc_flow.assign(static_cast<size_t>(net.edge_count()), Rational(0));
    fa.entering.assign(static_cast<size_t>(n), Rational(0));
    fa.entering_defined.assign(static_cast<size_t>(n), 1);
    fa.demanded.assign(static_cast<size_t>(n), Rational(0));
    fa.in_degree.assign(static_cast<size_t>(n), 0);

    std::vector<int> out_degree(static_cast<size_t>(n), 0);
    for (int e = 0; e < net.edge_count(); ++e) {
        auto [t, h] = o.arc(net, e);
        ++out_degree[static_cast<size_t>(t)];
        ++fa.in_degree[static_cast<size_t>(h)];
    }

    // Kahn sweep from the arc-free frontier upward.
    std::vector<int> pending = out_degree;
    std::vector<int> stack;
    for (int v = 0; v < n; ++v)
        if (pending[static_cast<size_t>(v)] == 0) stack.push_back(v);

    std::vector<char> done(static_cast<size_t>(n), 0);
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        done[static_cast<size_t>(v)] = 1;

        Rational out_sum(0);
        for (auto [nb, e] : net.adj(v)) {
            if (o.tail(net, e) == v) out_sum += fa.arc_flow[static_cast<size_t>(e)];
            (void)nb;
        }
        const Node& nd = net.node(v);
        Rational demanded = out_sum;
        if (nd.kind == NodeKind::Sink) demanded += Rational(nd.value);
        fa.demanded[static_cast<size_t>(v)] = demanded;

        int din = fa.in_degree[static_cast<size_t>(v)];
        if (nd.kind == NodeKind::Source) {
            fa.entering[static_cast<size_t>(v)] = demanded / Rational(din + 1);
        } else if (din > 0) {
            fa.entering[static_cast<size_t>(v)] = demanded / Rational(din);
        } else {
            fa.entering_defined[static_cast<size_t>(v)] = 0;
        }

        // every entering arc of v carries F(v)
        if (fa.defined(v)) {
            for (auto [nb, e] : net.adj(v)) {
                if (o.head(net, e) != v) continue;
                fa.arc_flow[static_cast<size_t>(e)] = fa.entering[static_cast<size_t>(v)];
                int t = o.tail(net, e);
                if (--pending[static_cast<size_t>(t)] == 0) stack.push_back(t);
                (void)nb;
            }
        } else {
            // Undefined entering flow: the arcs into v carry no defined value.
            // Their tails still have to be released; the flow stays 0 and v is
            // reported as a demand violation downstream.
            for (auto [nb, e] : net.adj(v)) {
                if (o.head(net, e) != v) continue;
                int t = o.tail(net, e);
                if (--pending[static_cast<size_t>(t)] == 0) stack.push_back(t);
                (void)nb;
            }
        }
    }
    for (int v = 0; v < n; ++v)
        if (!done[static_cast<size_t>(v)])
            throw std::logic_error("flow sweep failed to settle; orientation is not a DAG");
    return fa;
}

inline FeasibilityReport check_feasible(const Network& net, const FlowAssignment& fa,
                                        const FlowOptions& opts = {}) {
    FeasibilityReport report;
    for (int v = 0; v < net.n(); ++v) {
        const Node& nd = net.node(v);
        int din = fa.in_degree[static_cast<size_t>(v)];
        if (nd.kind == NodeKind::Switch) {
            if (din == 0) {
                bool deactivated = opts.allow_deactivated_switches &&
                                   fa.demanded[static_cast<size_t>(v)].is_zero();
                if (!deactivated) report.violations.push_back({v, ViolationKind::Demand});
                continue;
            }
            if (!nd.unbounded &&
                fa.entering[static_cast<size_t>(v)] * Rational(din) > Rational(nd.value))
                report.violations.push_back({v, ViolationKind::Capacity});
        } else if (nd.kind == NodeKind::Sink) {
            if (din == 0) report.violations.push_back({v, ViolationKind::Demand});
        } else {
            if (fa.entering[static_cast<size_t>(v)] > Rational(nd.value))
                report.violations.push_back({v, ViolationKind::Production});
        }
    }
    report.feasible = report.violations.empty();
    return report;
}

inline FeasibilityReport check_feasible(const Network& net, const Orientation& o,
                                        const FlowOptions& opts = {}) {
    return check_feasible(net, compute_flow(net, o), opts);
}

// load(s) = F(s) / Prod(s)
inline Rational load_of(const Network& net, const FlowAssignment& fa, int source) {
    return fa.entering[static_cast<size_t>(source)] / Rational(net.node(source).value);
}

// (min load, max load, reserve) over all sources.
inline std::tuple<Rational, Rational, Rational> objectives(const Network& net,
                                                           const FlowAssignment& fa) {
    std::vector<int> srcs = net.sources();
    if (srcs.empty()) throw std::domain_error("objectives: network has no source");
    Rational lo = load_of(net, fa, srcs[0]), hi = lo;
    for (size_t k = 1; k < srcs.size(); ++k) {
        Rational l = load_of(net, fa, srcs[k]);
        if (l < lo) lo = l;
        if (hi < l) hi = l;
    }
    return {lo, hi, hi - lo};
}

}  // namespace gridtree
