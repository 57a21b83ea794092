#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "gridtree/rational.hpp"

namespace gridtree {

using json = nlohmann::ordered_json;

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class NodeKind { Source, Switch, Sink };

inline const char* kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::Source: return "source";
        case NodeKind::Switch: return "switch";
        case NodeKind::Sink: return "sink";
    }
    return "?";
}

// One tree node. `value` holds prod (source), cap (bounded switch) or pow
// (sink); `unbounded` marks switches with no capacity limit.
struct Node {
    std::string id;
    NodeKind kind = NodeKind::Switch;
    mpz_class value = 0;
    bool unbounded = false;

    static Node source(std::string id, mpz_class prod) {
        return Node{std::move(id), NodeKind::Source, std::move(prod), false};
    }
    static Node switch_node(std::string id, mpz_class cap) {
        return Node{std::move(id), NodeKind::Switch, std::move(cap), false};
    }
    static Node switch_unbounded(std::string id) {
        return Node{std::move(id), NodeKind::Switch, 0, true};
    }
    static Node sink(std::string id, mpz_class pow) {
        return Node{std::move(id), NodeKind::Sink, std::move(pow), false};
    }
};

// Immutable tree instance: typed nodes, undirected edges, and a total node
// numbering (1..n) that fixes fold orders and tie-breaking everywhere.
class Network {
public:
    Network(std::vector<Node> nodes, const std::vector<std::pair<std::string, std::string>>& edge_ids,
            const std::vector<std::string>& numbering_ids = {})
        : nodes_(std::move(nodes)) {
        const int n = static_cast<int>(nodes_.size());
        if (n == 0) throw ValidationError("network has no nodes");
        for (int i = 0; i < n; ++i) {
            const Node& nd = nodes_[i];
            if (nd.id.empty()) throw ValidationError("node with empty id");
            if (!index_.emplace(nd.id, i).second)
                throw ValidationError("duplicate node id '" + nd.id + "'");
            if (nd.kind == NodeKind::Source && nd.value <= 0)
                throw ValidationError("source '" + nd.id + "' must have positive production");
            if (nd.kind != NodeKind::Source && nd.value < 0)
                throw ValidationError("node '" + nd.id + "' has a negative parameter");
            if (nd.kind != NodeKind::Switch && nd.unbounded)
                throw ValidationError("node '" + nd.id + "': only switches may be unbounded");
        }
        adj_.resize(static_cast<size_t>(n));
        for (const auto& [a, b] : edge_ids) {
            int ia = index_of(a), ib = index_of(b);
            if (ia == ib) throw ValidationError("self-loop at '" + a + "'");
            int e = static_cast<int>(edges_.size());
            edges_.emplace_back(ia, ib);
            adj_[static_cast<size_t>(ia)].emplace_back(ib, e);
            adj_[static_cast<size_t>(ib)].emplace_back(ia, e);
        }
        if (static_cast<int>(edges_.size()) != n - 1)
            throw ValidationError("edge count " + std::to_string(edges_.size()) +
                                  " does not match tree size " + std::to_string(n - 1));
        check_connected();
        check_no_multi_edge();
        set_numbering(numbering_ids);
    }

    int n() const { return static_cast<int>(nodes_.size()); }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const Node& node(int i) const { return nodes_[static_cast<size_t>(i)]; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    const std::pair<int, int>& edge(int e) const { return edges_[static_cast<size_t>(e)]; }
    // (neighbor index, edge index) pairs in declaration order.
    const std::vector<std::pair<int, int>>& adj(int i) const { return adj_[static_cast<size_t>(i)]; }

    int index_of(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw ValidationError("unknown node id '" + id + "'");
        return it->second;
    }
    bool has_node(const std::string& id) const { return index_.count(id) > 0; }

    // 1-based rank of node i in the numbering.
    int number(int i) const { return number_[static_cast<size_t>(i)]; }
    // node index holding 1-based rank r.
    int node_at_rank(int r) const { return by_number_[static_cast<size_t>(r - 1)]; }

    bool is_source(int i) const { return node(i).kind == NodeKind::Source; }
    bool is_switch(int i) const { return node(i).kind == NodeKind::Switch; }
    bool is_sink(int i) const { return node(i).kind == NodeKind::Sink; }

    std::vector<int> sources() const {
        std::vector<int> out;
        for (int i = 0; i < n(); ++i)
            if (is_source(i)) out.push_back(i);
        return out;
    }

    // Total power demand: the global flow bound.
    mpz_class total_power() const {
        mpz_class t = 0;
        for (const Node& nd : nodes_)
            if (nd.kind == NodeKind::Sink) t += nd.value;
        return t;
    }

    mpz_class max_production() const {
        mpz_class m = 0;
        for (const Node& nd : nodes_)
            if (nd.kind == NodeKind::Source && nd.value > m) m = nd.value;
        return m;
    }

    // Edge whose (min rank, max rank) pair is smallest; anchors solver combination steps.
    int numbering_smallest_edge() const {
        int best = 0;
        auto key = [&](int e) {
            auto [a, b] = edge(e);
            int ra = number(a), rb = number(b);
            return std::pair<int, int>(std::min(ra, rb), std::max(ra, rb));
        };
        for (int e = 1; e < edge_count(); ++e)
            if (key(e) < key(best)) best = e;
        return best;
    }

private:
    void check_connected() const {
        if (n() == 1) return;
        std::vector<char> seen(static_cast<size_t>(n()), 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int visited = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (auto [nb, e] : adj(v)) {
                (void)e;
                if (!seen[static_cast<size_t>(nb)]) {
                    seen[static_cast<size_t>(nb)] = 1;
                    ++visited;
                    stack.push_back(nb);
                }
            }
        }
        if (visited != n()) throw ValidationError("edge set is not connected");
    }

    void check_no_multi_edge() const {
        std::vector<std::pair<int, int>> canon;
        canon.reserve(edges_.size());
        for (auto [a, b] : edges_) canon.emplace_back(std::min(a, b), std::max(a, b));
        std::sort(canon.begin(), canon.end());
        if (std::adjacent_find(canon.begin(), canon.end()) != canon.end())
            throw ValidationError("duplicate edge");
    }

    void set_numbering(const std::vector<std::string>& ids) {
        const int nn = n();
        number_.assign(static_cast<size_t>(nn), 0);
        by_number_.assign(static_cast<size_t>(nn), 0);
        if (ids.empty()) {
            for (int i = 0; i < nn; ++i) {
                number_[static_cast<size_t>(i)] = i + 1;
                by_number_[static_cast<size_t>(i)] = i;
            }
            return;
        }
        if (static_cast<int>(ids.size()) != nn)
            throw ValidationError("numbering must list every node exactly once");
        for (int r = 0; r < nn; ++r) {
            int idx = index_of(ids[static_cast<size_t>(r)]);
            if (number_[static_cast<size_t>(idx)] != 0)
                throw ValidationError("numbering repeats node '" + ids[static_cast<size_t>(r)] + "'");
            number_[static_cast<size_t>(idx)] = r + 1;
            by_number_[static_cast<size_t>(r)] = idx;
        }
    }

    std::vector<Node> nodes_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<std::pair<int, int>>> adj_;
    std::unordered_map<std::string, int> index_;
    std::vector<int> number_;
    std::vector<int> by_number_;
};

// A direction for every tree edge: dir[e] == 0 keeps the declared endpoint
// order (first -> second), 1 reverses it.
struct Orientation {
    std::vector<uint8_t> dir;

    std::pair<int, int> arc(const Network& net, int e) const {
        auto [a, b] = net.edge(e);
        return dir[static_cast<size_t>(e)] ? std::pair<int, int>(b, a) : std::pair<int, int>(a, b);
    }
    int tail(const Network& net, int e) const { return arc(net, e).first; }
    int head(const Network& net, int e) const { return arc(net, e).second; }
};

// --- JSON instance documents ---------------------------------------------

namespace detail {

inline mpz_class json_to_mpz(const json& j, const std::string& where) {
    if (j.is_number_unsigned()) return mpz_class(static_cast<unsigned long>(j.get<uint64_t>()));
    if (j.is_number_integer()) return mpz_class(static_cast<long>(j.get<int64_t>()));
    if (j.is_string()) {
        mpz_class v;
        if (v.set_str(j.get<std::string>(), 10) != 0)
            throw ParseError(where + ": '" + j.get<std::string>() + "' is not an integer");
        return v;
    }
    throw ParseError(where + ": expected an integer or digit string");
}

inline json mpz_to_json(const mpz_class& v) {
    // Numbers beyond 2^53 lose digits in double-based JSON readers; emit
    // digit strings there and plain numbers otherwise.
    static const mpz_class lim = mpz_class(1) << 53;
    if (v >= 0 && v < lim) return json(v.get_ui());
    if (v < 0 && -v < lim) return json(-static_cast<int64_t>(mpz_class(-v).get_ui()));
    return json(v.get_str());
}

}  // namespace detail

inline Network parse_network_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("instance document must be a JSON object");
    if (!doc.contains("nodes") || !doc["nodes"].is_array())
        throw ParseError("instance document needs a 'nodes' array");
    if (!doc.contains("edges") || !doc["edges"].is_array())
        throw ParseError("instance document needs an 'edges' array");

    std::vector<Node> nodes;
    int pos = 0;
    for (const json& jn : doc["nodes"]) {
        std::string where = "nodes[" + std::to_string(pos++) + "]";
        if (!jn.is_object()) throw ParseError(where + ": expected an object");
        if (!jn.contains("id") || !jn["id"].is_string())
            throw ParseError(where + ": missing string 'id'");
        if (!jn.contains("kind") || !jn["kind"].is_string())
            throw ParseError(where + ": missing string 'kind'");
        std::string id = jn["id"].get<std::string>();
        std::string kind = jn["kind"].get<std::string>();
        if (kind == "source") {
            if (!jn.contains("prod")) throw ParseError(where + ": source needs 'prod'");
            nodes.push_back(Node::source(id, detail::json_to_mpz(jn["prod"], where + ".prod")));
        } else if (kind == "switch") {
            if (!jn.contains("cap")) throw ParseError(where + ": switch needs 'cap'");
            const json& c = jn["cap"];
            if (c.is_string() && c.get<std::string>() == "unbounded")
                nodes.push_back(Node::switch_unbounded(id));
            else
                nodes.push_back(Node::switch_node(id, detail::json_to_mpz(c, where + ".cap")));
        } else if (kind == "sink") {
            if (!jn.contains("pow")) throw ParseError(where + ": sink needs 'pow'");
            nodes.push_back(Node::sink(id, detail::json_to_mpz(jn["pow"], where + ".pow")));
        } else {
            throw ParseError(where + ": unknown kind '" + kind + "'");
        }
    }

    std::vector<std::pair<std::string, std::string>> edges;
    pos = 0;
    for (const json& je : doc["edges"]) {
        std::string where = "edges[" + std::to_string(pos++) + "]";
        if (!je.is_array() || je.size() != 2 || !je[0].is_string() || !je[1].is_string())
            throw ParseError(where + ": expected a pair of node ids");
        edges.emplace_back(je[0].get<std::string>(), je[1].get<std::string>());
    }

    std::vector<std::string> numbering;
    if (doc.contains("numbering")) {
        if (!doc["numbering"].is_array()) throw ParseError("'numbering' must be an array of ids");
        for (const json& jid : doc["numbering"]) {
            if (!jid.is_string()) throw ParseError("'numbering' must be an array of ids");
            numbering.push_back(jid.get<std::string>());
        }
    }

    return Network(std::move(nodes), edges, numbering);
}

inline Network parse_network(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("instance document: ") + e.what());
    }
    return parse_network_json(doc);
}

inline json network_to_json(const Network& net) {
    json doc;
    doc["nodes"] = json::array();
    for (int i = 0; i < net.n(); ++i) {
        const Node& nd = net.node(i);
        json jn;
        jn["id"] = nd.id;
        jn["kind"] = kind_name(nd.kind);
        switch (nd.kind) {
            case NodeKind::Source: jn["prod"] = detail::mpz_to_json(nd.value); break;
            case NodeKind::Switch:
                jn["cap"] = nd.unbounded ? json("unbounded") : detail::mpz_to_json(nd.value);
                break;
            case NodeKind::Sink: jn["pow"] = detail::mpz_to_json(nd.value); break;
        }
        doc["nodes"].push_back(std::move(jn));
    }
    doc["edges"] = json::array();
    for (auto [a, b] : net.edges())
        doc["edges"].push_back(json::array({net.node(a).id, net.node(b).id}));
    doc["numbering"] = json::array();
    for (int r = 1; r <= net.n(); ++r)
        doc["numbering"].push_back(net.node(net.node_at_rank(r)).id);
    return doc;
}

inline std::string serialize_network(const Network& net) { return network_to_json(net).dump(2) + "\n"; }

inline Orientation parse_orientation_json(const Network& net, const json& doc) {
    if (!doc.is_object() || !doc.contains("arcs") || !doc["arcs"].is_array())
        throw ParseError("orientation document needs an 'arcs' array");
    Orientation o;
    o.dir.assign(static_cast<size_t>(net.edge_count()), 0);
    std::vector<char> covered(static_cast<size_t>(net.edge_count()), 0);
    int pos = 0;
    for (const json& ja : doc["arcs"]) {
        std::string where = "arcs[" + std::to_string(pos++) + "]";
        if (!ja.is_array() || ja.size() != 2 || !ja[0].is_string() || !ja[1].is_string())
            throw ParseError(where + ": expected [tail, head] ids");
        int tail = net.index_of(ja[0].get<std::string>());
        int head = net.index_of(ja[1].get<std::string>());
        int e = -1;
        for (auto [nb, ei] : net.adj(tail))
            if (nb == head) e = ei;
        if (e < 0) throw ParseError(where + ": no edge between those nodes");
        if (covered[static_cast<size_t>(e)]) throw ParseError(where + ": edge directed twice");
        covered[static_cast<size_t>(e)] = 1;
        o.dir[static_cast<size_t>(e)] = net.edge(e).first == tail ? 0 : 1;
    }
    for (int e = 0; e < net.edge_count(); ++e)
        if (!covered[static_cast<size_t>(e)])
            throw ParseError("orientation leaves edge [" + net.node(net.edge(e).first).id + ", " +
                             net.node(net.edge(e).second).id + "] undirected");
    return o;
}

inline Orientation parse_orientation(const Network& net, const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("orientation document: ") + e.what());
    }
    return parse_orientation_json(net, doc);
}

inline json orientation_to_json(const Network& net, const Orientation& o) {
    json doc;
    doc["arcs"] = json::array();
    for (int e = 0; e < net.edge_count(); ++e) {
        auto [t, h] = o.arc(net, e);
        doc["arcs"].push_back(json::array({net.node(t).id, net.node(h).id}));
    }
    return doc;
}

// Multiply every production, capacity and power by q >= 1. Unbounded
// capacities stay unbounded; the feasible orientation set is unchanged.
inline Network scale_instance(const Network& net, const mpz_class& q) {
    if (q < 1) throw ValidationError("scale factor must be >= 1");
    std::vector<Node> nodes;
    nodes.reserve(static_cast<size_t>(net.n()));
    for (const Node& nd : net.nodes()) {
        Node copy = nd;
        if (!copy.unbounded) copy.value *= q;
        nodes.push_back(std::move(copy));
    }
    std::vector<std::pair<std::string, std::string>> edges;
    for (auto [a, b] : net.edges()) edges.emplace_back(net.node(a).id, net.node(b).id);
    std::vector<std::string> numbering;
    for (int r = 1; r <= net.n(); ++r) numbering.push_back(net.node(net.node_at_rank(r)).id);
    return Network(std::move(nodes), edges, numbering);
}

}  // namespace gridtree
