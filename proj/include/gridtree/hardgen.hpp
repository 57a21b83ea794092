#pragma once

#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "gridtree/model.hpp"
#include "gridtree/rational.hpp"

namespace gridtree {

namespace detail {

inline bool encodable(const mpz_class& x, int m) {
    return x >= 0 && m >= 3 && x + 2 < (mpz_class(1) << static_cast<unsigned>(m));
}

// Appends the alternating sink/source chain that, seen from attach_id,
// demands exactly 2 + x/2^m on the arc into its last source. Sink j carries
// 2 plus bit j-1 of x+2; the first source produces 2, the others 3.
inline std::vector<std::string> append_encoding_chain(
    std::vector<Node>& nodes, std::vector<std::pair<std::string, std::string>>& edges,
    const std::string& prefix, const mpz_class& x, int m, const std::string& attach_id) {
    if (!encodable(x, m))
        throw std::invalid_argument("encoding chain needs x >= 0, m >= 3 and x + 2 < 2^m");
    mpz_class enc = x + 2;
    std::vector<std::string> ids;
    std::string prev;
    for (int j = 1; j <= m; ++j) {
        std::string sink_id = prefix + "p" + std::to_string(j);
        std::string source_id = prefix + "s" + std::to_string(j);
        long bit = mpz_tstbit(enc.get_mpz_t(), static_cast<mp_bitcnt_t>(j - 1));
        nodes.push_back(Node::sink(sink_id, 2 + bit));
        nodes.push_back(Node::source(source_id, j == 1 ? 2 : 3));
        if (!prev.empty()) edges.push_back({prev, sink_id});
        edges.push_back({sink_id, source_id});
        prev = source_id;
        ids.push_back(sink_id);
        ids.push_back(source_id);
    }
    edges.push_back({prev, attach_id});
    return ids;
}

// Directs the chain so every arc points away from the attachment: the
// attachment feeds the last source, each sink feeds the source before it,
// and each source feeds its own sink. Any other direction of a chain edge
// breaks a demand or capacity constraint.
inline void direct_chain_inward(const Network& net, Orientation& o,
                                const std::vector<std::string>& chain_ids,
                                const std::string& attach_id);

inline void direct_edge(const Network& net, Orientation& o, const std::string& tail_id,
                        const std::string& head_id) {
    int tail = net.index_of(tail_id);
    int head = net.index_of(head_id);
    for (auto [nb, e] : net.adj(tail)) {
        if (nb == head) {
            o.dir[static_cast<size_t>(e)] = net.edge(e).first == tail ? 0 : 1;
            return;
        }
    }
    throw std::invalid_argument("no edge between '" + tail_id + "' and '" + head_id + "'");
}

inline void direct_chain_inward(const Network& net, Orientation& o,
                                const std::vector<std::string>& chain_ids,
                                const std::string& attach_id) {
    const size_t len = chain_ids.size();
    for (size_t j = 0; j + 1 < len; j += 2) {
        direct_edge(net, o, chain_ids[j + 1], chain_ids[j]);  // source feeds its sink
        if (j + 2 < len) direct_edge(net, o, chain_ids[j + 2], chain_ids[j + 1]);
    }
    direct_edge(net, o, attach_id, chain_ids[len - 1]);
}

}  // namespace detail

// Standalone encoding chain plus one terminal neighbor of the given kind.
// The terminal supplies (source, production 3), relays (switch, unbounded)
// or absorbs one extra unit (sink, power 1).
inline Network gen_gadget(const mpz_class& x, int m, NodeKind terminal) {
    if (!detail::encodable(x, m))
        throw std::invalid_argument("gen_gadget needs x >= 0, m >= 3 and x + 2 < 2^m");
    std::vector<Node> nodes;
    std::vector<std::pair<std::string, std::string>> edges;
    detail::append_encoding_chain(nodes, edges, "", x, m, "v");
    switch (terminal) {
        case NodeKind::Source: nodes.push_back(Node::source("v", 3)); break;
        case NodeKind::Switch: nodes.push_back(Node::switch_unbounded("v")); break;
        case NodeKind::Sink: nodes.push_back(Node::sink("v", 1)); break;
    }
    return Network(std::move(nodes), edges);
}

struct ReductionOptions {
    // Switch capacities default to the unbounded token; the strict mode
    // writes the total sink power instead, an explicit bound no feasible
    // flow can reach.
    bool strict_capacities = false;
};

// Where every role of the subset-sum instance landed, plus the encoded
// (pre-scaled) item values. Item indexes are 1-based throughout.
struct ReductionMeta {
    int n_items = 0;
    std::vector<mpz_class> xs;  // encoded item values (inputs times scale)
    mpz_class target = 0;       // encoded target (input target times scale)
    int scale = 1;
    int m = 0;  // chain length parameter: every chain has 2m nodes

    std::vector<std::string> t_ids, r_ids, s_ids, q_ids, w_ids, v_ids;  // index i-1
    std::string s_id, w_id, s_c_id, w_c_id, p_c_id;
    std::vector<std::string> item_sink_ids;                        // interface sinks p_i
    std::vector<std::vector<std::string>> item_sink_chain_ids;     // chain behind each p_i
    std::vector<std::string> shared_sink_chain_ids;                // chain hanging off w
};

// Subset-sum instance encoded as an orientation problem: a feasible
// orientation with load reserve exactly 2/3 exists iff some subset of xs
// sums to B. Inputs are doubled first so every chain value fits m bits,
// and m is the smallest length satisfying all encoding bounds.
inline std::pair<Network, ReductionMeta> gen_subset_sum_reduction(
    const std::vector<mpz_class>& xs, const mpz_class& B, ReductionOptions opts = {}) {
    const int n = static_cast<int>(xs.size());
    if (n < 7) throw std::invalid_argument("gen_subset_sum_reduction needs at least 7 items");
    if (B < 1) throw std::invalid_argument("gen_subset_sum_reduction needs a positive target");
    for (const mpz_class& x : xs)
        if (x < 1 || x > B)
            throw std::invalid_argument("gen_subset_sum_reduction needs 1 <= x_i <= B");

    ReductionMeta meta;
    meta.n_items = n;
    meta.scale = 2;
    meta.target = 2 * B;
    mpz_class sum = 0, largest = 0;
    for (const mpz_class& x : xs) {
        meta.xs.push_back(2 * x);
        sum += 2 * x;
        if (2 * x > largest) largest = 2 * x;
    }

    // smallest m with 2^m above: the encoded target plus 2 (so the shared
    // chain value fits), the encoded slack, and largest * (3n + 1) (so item
    // flows stay under the relay threshold). Doubling already guarantees
    // 2^m - 2 * x_i + 2 < 2^m for the item chains.
    int m = 3;
    auto fits = [&](int mm) {
        mpz_class lim = mpz_class(1) << static_cast<unsigned>(mm);
        return lim > meta.target + 2 && lim > sum - meta.target &&
               lim > largest * (3 * n + 1);
    };
    while (!fits(m)) ++m;
    meta.m = m;
    mpz_class two_m = mpz_class(1) << static_cast<unsigned>(m);

    std::vector<Node> nodes;
    std::vector<std::pair<std::string, std::string>> edges;
    std::vector<size_t> switch_slots;  // patched afterwards in strict mode

    auto add_switch = [&](const std::string& id) {
        switch_slots.push_back(nodes.size());
        nodes.push_back(Node::switch_unbounded(id));
    };

    meta.s_id = "s";
    meta.w_id = "w";
    meta.s_c_id = "sc";
    meta.w_c_id = "wc";
    meta.p_c_id = "pc";
    nodes.push_back(Node::source("s", 6));
    add_switch("w");
    nodes.push_back(Node::source("sc", 10));
    add_switch("wc");
    nodes.push_back(Node::sink("pc", 10));
    edges.push_back({"s", "w"});
    edges.push_back({"wc", "sc"});
    edges.push_back({"pc", "sc"});

    for (int i = 1; i <= n; ++i) {
        std::string suffix = std::to_string(i);
        meta.t_ids.push_back("t" + suffix);
        meta.r_ids.push_back("r" + suffix);
        meta.s_ids.push_back("s" + suffix);
        meta.q_ids.push_back("q" + suffix);
        meta.w_ids.push_back("w" + suffix);
        meta.v_ids.push_back("v" + suffix);
        meta.item_sink_ids.push_back("p" + suffix);
        nodes.push_back(Node::source("t" + suffix, 4));
        nodes.push_back(Node::source("r" + suffix, 4));
        nodes.push_back(Node::source("s" + suffix, 2));
        nodes.push_back(Node::sink("q" + suffix, 4));
        add_switch("w" + suffix);
        add_switch("v" + suffix);
        nodes.push_back(Node::sink("p" + suffix, 1));
        edges.push_back({"p" + suffix, "t" + suffix});
        edges.push_back({"t" + suffix, "w" + suffix});
        edges.push_back({"w" + suffix, "w"});
        edges.push_back({"q" + suffix, "r" + suffix});
        edges.push_back({"r" + suffix, "v" + suffix});
        edges.push_back({"v" + suffix, "w"});
        edges.push_back({"s" + suffix, "w"});
    }
    edges.push_back({"s" + std::to_string(n), "wc"});

    for (int i = 1; i <= n; ++i) {
        mpz_class x = two_m - 2 * meta.xs[static_cast<size_t>(i - 1)];
        meta.item_sink_chain_ids.push_back(detail::append_encoding_chain(
            nodes, edges, "g" + std::to_string(i) + "_", x, m, meta.item_sink_ids[static_cast<size_t>(i - 1)]));
    }
    meta.shared_sink_chain_ids =
        detail::append_encoding_chain(nodes, edges, "gw_", meta.target, m, "w");

    if (opts.strict_capacities) {
        mpz_class total = 0;
        for (const Node& nd : nodes)
            if (nd.kind == NodeKind::Sink) total += nd.value;
        for (size_t slot : switch_slots) {
            nodes[slot].unbounded = false;
            nodes[slot].value = total;
        }
    }

    return {Network(std::move(nodes), edges), std::move(meta)};
}

// The canonical orientation for an item subset I: every forced arc, plus
// the two free edges of item i flipped inward exactly when i is in I. With
// the subset summing to the target this is feasible with objectives
// (1/3, 1, 2/3); other subsets lower the relay flow below the balance point
// or overload the unit sources.
inline Orientation witness_orientation(const Network& net, const ReductionMeta& meta,
                                       const std::set<int>& items) {
    for (int i : items)
        if (i < 1 || i > meta.n_items)
            throw std::invalid_argument("witness_orientation: item index out of range");

    Orientation o;
    o.dir.assign(static_cast<size_t>(net.edge_count()), 0);
    detail::direct_edge(net, o, meta.s_id, meta.w_id);
    detail::direct_edge(net, o, meta.s_ids.back(), meta.w_c_id);
    detail::direct_edge(net, o, meta.s_c_id, meta.w_c_id);
    detail::direct_edge(net, o, meta.s_c_id, meta.p_c_id);
    for (int i = 1; i <= meta.n_items; ++i) {
        size_t k = static_cast<size_t>(i - 1);
        bool chosen = items.count(i) > 0;
        detail::direct_edge(net, o, meta.t_ids[k], meta.item_sink_ids[k]);
        detail::direct_edge(net, o, meta.w_id, meta.w_ids[k]);
        detail::direct_edge(net, o, meta.r_ids[k], meta.q_ids[k]);
        detail::direct_edge(net, o, meta.w_id, meta.v_ids[k]);
        detail::direct_edge(net, o, meta.s_ids[k], meta.w_id);
        if (chosen) {
            detail::direct_edge(net, o, meta.w_ids[k], meta.t_ids[k]);
            detail::direct_edge(net, o, meta.r_ids[k], meta.v_ids[k]);
        } else {
            detail::direct_edge(net, o, meta.t_ids[k], meta.w_ids[k]);
            detail::direct_edge(net, o, meta.v_ids[k], meta.r_ids[k]);
        }
        detail::direct_chain_inward(net, o, meta.item_sink_chain_ids[k], meta.item_sink_ids[k]);
    }
    detail::direct_chain_inward(net, o, meta.shared_sink_chain_ids, meta.w_id);
    return o;
}

struct InapproxOptions {
    // Upper bound on the bit length of any generated integer.
    long max_bits = 1L << 20;
    bool strict_capacities = false;
};

struct InapproxMeta {
    ReductionMeta reduction;
    int exponent_c = 0;
    mpz_class ratio = 0;        // 2^(N^c), the targeted approximation gap
    mpz_class ballast = 0;      // extra production and sink power per source
    mpz_class denominator = 0;  // global scale clearing the probe production
    Rational probe_production;  // the rational production assigned to s
    std::vector<std::string> ballast_ids;
};

// Amplified variant: every source except s gains a private high-power sink
// and matching production, and s's production is squeezed to barely above
// 2; the rational value is cleared by scaling the whole instance. Note that
// the private sinks raise the flow relayed through w far above the squeezed
// production, so no orientation of this instance is feasible under the
// equal-split flow semantics; see the tests for the exact behavior.
inline std::pair<Network, InapproxMeta> gen_inapprox_instance(const std::vector<mpz_class>& xs,
                                                              const mpz_class& B, int c,
                                                              InapproxOptions opts = {}) {
    if (c < 1) throw std::invalid_argument("gen_inapprox_instance needs c >= 1");
    auto [base, reduction] = gen_subset_sum_reduction(xs, B, {opts.strict_capacities});

    InapproxMeta meta;
    meta.reduction = std::move(reduction);
    meta.exponent_c = c;

    mpz_class exponent;
    mpz_pow_ui(exponent.get_mpz_t(), mpz_class(base.n()).get_mpz_t(), static_cast<unsigned>(c));
    long n_plus_1_bits = mpz_sizeinbase(mpz_class(meta.reduction.n_items + 1).get_mpz_t(), 2);
    // ballast * denominator has about 2 * (N^c + m + log2(n+1)) + 7 bits
    mpz_class bits_needed = 2 * (exponent + meta.reduction.m + n_plus_1_bits) + 8;
    if (bits_needed > opts.max_bits)
        throw std::length_error("gen_inapprox_instance: integer budget exceeded");

    meta.ratio = mpz_class(1) << static_cast<mp_bitcnt_t>(exponent.get_ui());
    meta.denominator = meta.ratio * (meta.reduction.n_items + 1)
                       << static_cast<unsigned>(meta.reduction.m);
    meta.probe_production = Rational(2) + Rational(mpz_class(1), meta.denominator);
    meta.ballast = 40 * meta.denominator + 10;

    std::vector<Node> nodes;
    std::vector<std::pair<std::string, std::string>> edges;
    for (const Node& nd : base.nodes()) {
        Node copy = nd;
        if (copy.id == meta.reduction.s_id) {
            copy.value = 2 * meta.denominator + 1;
        } else if (copy.kind == NodeKind::Source) {
            copy.value = (copy.value + meta.ballast) * meta.denominator;
        } else if (!copy.unbounded) {
            copy.value *= meta.denominator;
        }
        nodes.push_back(std::move(copy));
    }
    for (auto [a, b] : base.edges()) edges.emplace_back(base.node(a).id, base.node(b).id);
    for (int i = 0; i < base.n(); ++i) {
        const Node& nd = base.node(i);
        if (nd.kind != NodeKind::Source || nd.id == meta.reduction.s_id) continue;
        std::string sink_id = nd.id + "_ballast";
        nodes.push_back(Node::sink(sink_id, meta.ballast * meta.denominator));
        edges.push_back({nd.id, sink_id});
        meta.ballast_ids.push_back(sink_id);
    }
    if (opts.strict_capacities) {
        mpz_class total = 0;
        for (const Node& nd : nodes)
            if (nd.kind == NodeKind::Sink) total += nd.value;
        for (Node& nd : nodes)
            if (nd.kind == NodeKind::Switch) nd.value = total;
    }

    return {Network(std::move(nodes), edges), std::move(meta)};
}

struct RandomTreeProfile {
    int source_weight = 1;
    int switch_weight = 1;
    int sink_weight = 1;
    long prod_lo = 2, prod_hi = 9;
    long cap_lo = 1, cap_hi = 30;
    long pow_lo = 1, pow_hi = 9;
    int unbounded_percent = 25;  // share of switches without a capacity
};

// Seeded random tree from a uniform Pruefer sequence. The first two nodes
// are pinned to a source and a sink so every instance has both; remaining
// kinds follow the profile weights. All draws use modulo reduction so the
// output is identical across platforms.
inline Network gen_random_tree(int n, unsigned long seed, RandomTreeProfile profile = {}) {
    if (n < 2) throw std::invalid_argument("gen_random_tree needs at least 2 nodes");
    if (profile.source_weight < 1)
        throw std::invalid_argument("gen_random_tree needs a positive source weight");
    if (profile.switch_weight < 0 || profile.sink_weight < 1)
        throw std::invalid_argument("gen_random_tree needs sinks and non-negative weights");
    if (profile.prod_lo < 1 || profile.prod_hi < profile.prod_lo || profile.cap_lo < 0 ||
        profile.cap_hi < profile.cap_lo || profile.pow_lo < 0 || profile.pow_hi < profile.pow_lo ||
        profile.unbounded_percent < 0 || profile.unbounded_percent > 100)
        throw std::invalid_argument("gen_random_tree: malformed value ranges");

    std::mt19937_64 rng(seed);
    auto draw = [&](long lo, long hi) {
        return lo + static_cast<long>(rng() % static_cast<unsigned long>(hi - lo + 1));
    };

    std::vector<std::pair<int, int>> raw_edges;
    if (n == 2) {
        raw_edges.push_back({0, 1});
    } else {
        std::vector<int> prufer(static_cast<size_t>(n - 2));
        for (int& x : prufer) x = static_cast<int>(rng() % static_cast<unsigned long>(n));
        std::vector<int> degree(static_cast<size_t>(n), 1);
        for (int x : prufer) ++degree[static_cast<size_t>(x)];
        std::set<int> leaves;
        for (int v = 0; v < n; ++v)
            if (degree[static_cast<size_t>(v)] == 1) leaves.insert(v);
        for (int x : prufer) {
            int leaf = *leaves.begin();
            leaves.erase(leaves.begin());
            raw_edges.push_back({leaf, x});
            if (--degree[static_cast<size_t>(x)] == 1) leaves.insert(x);
        }
        auto it = leaves.begin();
        int a = *it++;
        raw_edges.push_back({a, *it});
    }

    const int total_weight = profile.source_weight + profile.switch_weight + profile.sink_weight;
    std::vector<Node> nodes;
    for (int v = 0; v < n; ++v) {
        std::string id = "v" + std::to_string(v);
        int roll = v == 0   ? 0
                   : v == 1 ? profile.source_weight + profile.switch_weight
                            : static_cast<int>(rng() % static_cast<unsigned long>(total_weight));
        if (roll < profile.source_weight) {
            nodes.push_back(Node::source(id, draw(profile.prod_lo, profile.prod_hi)));
        } else if (roll < profile.source_weight + profile.switch_weight) {
            if (static_cast<int>(rng() % 100) < profile.unbounded_percent)
                nodes.push_back(Node::switch_unbounded(id));
            else
                nodes.push_back(Node::switch_node(id, draw(profile.cap_lo, profile.cap_hi)));
        } else {
            nodes.push_back(Node::sink(id, draw(profile.pow_lo, profile.pow_hi)));
        }
    }

    std::vector<std::pair<std::string, std::string>> edges;
    for (auto [a, b] : raw_edges)
        edges.push_back({nodes[static_cast<size_t>(a)].id, nodes[static_cast<size_t>(b)].id});
    return Network(std::move(nodes), edges);
}

}  // namespace gridtree
