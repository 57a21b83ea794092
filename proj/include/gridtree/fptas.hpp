#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "gridtree/flow.hpp"
#include "gridtree/model.hpp"
#include "gridtree/rational.hpp"
#include "gridtree/rounding.hpp"

namespace gridtree {

// How one neighbor of the decomposed node is oriented in a table witness,
// and the rounded flow on the corresponding arc. Fed children carry their
// own chosen key; entering children all share the entry's entering_key.
struct ChildChoice {
    int edge = -1;
    bool entering = false;
    Rational key;
};

// One finite table value together with the decomposition that attained it.
struct TableEntry {
    Rational value;
    Rational entering_key;
    std::vector<ChildChoice> children;
};

namespace detail {

// One slot of the rounded-flow fold, consumed in numbering order. Fixed
// slots always fold `value` (the seeded arc key, or a sink's power term);
// child slots either fold a key from the child's demand table or join the
// entering set and fold nothing.
struct FoldSlot {
    bool fixed = false;
    Rational value;
    int kid = -1;
};

struct FoldPick {
    bool entered = false;
    Rational key;
};

struct FoldBest {
    Rational cost;
    std::vector<FoldPick> picks;
};

// Deterministic tie order on assignments: entering before any fed key,
// fed keys ascending, positions compared in fold order.
inline bool picks_less(const std::vector<FoldPick>& a, const std::vector<FoldPick>& b) {
    size_t m = std::min(a.size(), b.size());
    for (size_t i = 0; i < m; ++i) {
        if (a[i].entered != b[i].entered) return a[i].entered;
        if (!a[i].entered && a[i].key != b[i].key) return a[i].key < b[i].key;
    }
    return a.size() < b.size();
}

// States after consuming a prefix of the slots: (fold accumulator, number
// of entering children so far) -> cheapest assignment.
using FoldStates = std::map<std::pair<Rational, int>, FoldBest>;

// Minimizes the summed demand of fed children over all ways to fold the
// slots with the given divisor. may_enter gates which children may join the
// entering set; must_enter (a kid index, -1 for none) is forced to join.
inline FoldStates run_fold(const std::vector<FoldSlot>& slots,
                           const std::vector<const std::map<Rational, TableEntry>*>& kid_maps,
                           long divisor, const std::vector<char>& may_enter, int must_enter,
                           const RoundingContext& ctx) {
    Rational div(divisor);
    FoldStates cur;
    cur[{Rational(0), 0}] = FoldBest{Rational(0), {}};
    for (const FoldSlot& slot : slots) {
        FoldStates next;
        auto relax = [&](Rational acc, int cnt, Rational cost, std::vector<FoldPick> picks) {
            auto key = std::make_pair(std::move(acc), cnt);
            auto it = next.find(key);
            if (it == next.end()) {
                next.emplace(std::move(key), FoldBest{std::move(cost), std::move(picks)});
            } else if (cost < it->second.cost ||
                       (cost == it->second.cost && picks_less(picks, it->second.picks))) {
                it->second = FoldBest{std::move(cost), std::move(picks)};
            }
        };
        for (const auto& [state, best] : cur) {
            const auto& [acc, cnt] = state;
            if (slot.fixed) {
                relax(round_down(acc + slot.value / div, ctx), cnt, best.cost, best.picks);
                continue;
            }
            if (slot.kid != must_enter) {
                for (const auto& [key, entry] : *kid_maps[static_cast<size_t>(slot.kid)]) {
                    std::vector<FoldPick> picks = best.picks;
                    picks.push_back(FoldPick{false, key});
                    relax(round_down(acc + key / div, ctx), cnt, best.cost + entry.value,
                          std::move(picks));
                }
            }
            if (may_enter[static_cast<size_t>(slot.kid)] || slot.kid == must_enter) {
                std::vector<FoldPick> picks = best.picks;
                picks.push_back(FoldPick{true, Rational(0)});
                relax(acc, cnt + 1, best.cost, std::move(picks));
            }
        }
        cur = std::move(next);
    }
    return cur;
}

}  // namespace detail

// Inner assignment problem behind the tables: pick exactly d children to
// join the entering set (fold position k forced to join when d > 0, and only
// positions >= k allowed; k = p + 1 when d = 0) and rounded flows for the
// fed ones, so that folding the leading values and then the children in
// order with divisor d_prime lands exactly on `target`. Entering children
// fold nothing, which matches folding a zero. Minimizes the summed demand
// of the fed children.
struct XiResult {
    Rational cost;
    std::vector<detail::FoldPick> assignment;
};

inline std::optional<XiResult> xi_dp(
    const std::vector<const std::map<Rational, TableEntry>*>& children,
    const std::vector<Rational>& leading, const Rational& target, int d, long d_prime, int k,
    const RoundingContext& ctx) {
    int p = static_cast<int>(children.size());
    if (d < 0 || d > p) throw std::invalid_argument("xi_dp: d out of range");
    if (d_prime < d || d_prime > d + 2) throw std::invalid_argument("xi_dp: d_prime out of range");
    if (d_prime < 1) throw std::invalid_argument("xi_dp: divisor must be positive");
    if (d == 0 ? k != p + 1 : (k < 1 || k > p - d + 1))
        throw std::invalid_argument("xi_dp: k out of range");

    std::vector<detail::FoldSlot> slots;
    for (const Rational& v : leading) slots.push_back(detail::FoldSlot{true, v, -1});
    std::vector<char> may(static_cast<size_t>(p), 0);
    for (int j = 0; j < p; ++j) {
        slots.push_back(detail::FoldSlot{false, Rational(0), j});
        may[static_cast<size_t>(j)] = (j + 1 >= k) ? 1 : 0;
    }
    detail::FoldStates res =
        detail::run_fold(slots, children, d_prime, may, d > 0 ? k - 1 : -1, ctx);
    auto it = res.find({target, d});
    if (it == res.end()) return std::nullopt;
    return XiResult{it->second.cost, it->second.picks};
}

// Windowed demand/supply tables for every directed arc of a tree network.
//
// For an arc (u, v) and rounded arc flow key f:
//   demand(u, v, f): the least exact flow the subtree hanging at v accepts
//     on the arc when every arc of that subtree is oriented, v's rounded
//     entering flow recomputes to f via the fold, every capacity, production
//     and demand constraint holds inside, and every source in the subtree
//     has rounded load within [window_lo, window_hi]. Absent key = +inf.
//   supply(u, v, f): the greatest exact flow the rest of the tree (the side
//     of u, with the arc key seeded to f) can push onto the arc under the
//     same constraints on that side. nullopt = -inf; computed on demand and
//     memoized.
//
// Downward closure makes the two composable: the arc is realizable at key f
// iff demand(u, v, f) <= supply(u, v, f).
class IOTables {
public:
    IOTables(const Network& net, const RoundingContext& ctx, Rational window_lo,
             Rational window_hi, FlowOptions opts = {})
        : net_(net),
          ctx_(ctx),
          lo_(std::move(window_lo)),
          hi_(std::move(window_hi)),
          opts_(opts) {
        if (lo_.is_negative() || hi_ < lo_)
            throw std::invalid_argument("IOTables: window must satisfy 0 <= lo <= hi");
        size_t arcs = static_cast<size_t>(net_.edge_count()) * 2;
        demand_.assign(arcs, {});
        demand_done_.assign(arcs, 0);
        supply_.assign(arcs, {});

        // Demand maps are filled from the leaves inward so that each one only
        // reads finished maps of strictly smaller subtrees.
        std::vector<std::tuple<int, int, int>> order;  // (subtree size, edge, head)
        for (int e = 0; e < net_.edge_count(); ++e) {
            auto [a, b] = net_.edge(e);
            order.emplace_back(subtree_size(b, e), e, b);
            order.emplace_back(subtree_size(a, e), e, a);
        }
        std::sort(order.begin(), order.end());
        for (auto& [size, e, head] : order) {
            (void)size;
            compute_demand_map(e, head);
        }
    }

    const Network& network() const { return net_; }
    const RoundingContext& context() const { return ctx_; }
    const Rational& window_lo() const { return lo_; }
    const Rational& window_hi() const { return hi_; }

    const std::map<Rational, TableEntry>& demand_table(int u, int v, int e) const {
        require_endpoints(u, v, e);
        return demand_[static_cast<size_t>(arc_index(e, v))];
    }

    std::optional<Rational> demand(int u, int v, int e, const Rational& key) const {
        const auto& tab = demand_table(u, v, e);
        auto it = tab.find(key);
        if (it == tab.end()) return std::nullopt;
        return it->second.value;
    }

    std::optional<Rational> supply(int u, int v, int e, const Rational& key) {
        require_endpoints(u, v, e);
        return supply_value(u, v, e, key);
    }

    const TableEntry* supply_witness(int u, int v, int e, const Rational& key) {
        require_endpoints(u, v, e);
        supply_value(u, v, e, key);
        const SupplySlot& slot = supply_[static_cast<size_t>(arc_index(e, v))].at(key);
        return slot.value ? &slot.entry : nullptr;
    }

    size_t demand_entry_count() const {
        size_t total = 0;
        for (const auto& m : demand_) total += m.size();
        return total;
    }
    size_t supply_entry_count() const {
        size_t total = 0;
        for (const auto& m : supply_) total += m.size();
        return total;
    }

    // Orients the whole tree if any key of the numbering-smallest edge is
    // realizable in either direction; verifies the witness before returning.
    std::optional<Orientation> combine() {
        if (net_.edge_count() == 0) {
            const Node& nd = net_.node(0);
            bool ok = false;
            if (nd.kind == NodeKind::Source) ok = !lo_.is_positive();
            else if (nd.kind == NodeKind::Switch) ok = opts_.allow_deactivated_switches;
            if (!ok) return std::nullopt;
            Orientation o;
            return o;
        }
        int e = net_.numbering_smallest_edge();
        auto [a, b] = net_.edge(e);
        for (auto [u, v] : {std::make_pair(a, b), std::make_pair(b, a)}) {
            const auto& tab = demand_[static_cast<size_t>(arc_index(e, v))];
            for (const auto& [key, entry] : tab) {
                std::optional<Rational> sup = supply_value(u, v, e, key);
                if (!sup || entry.value > *sup) continue;
                Orientation o;
                o.dir.assign(static_cast<size_t>(net_.edge_count()), 0);
                o.dir[static_cast<size_t>(e)] = (net_.edge(e).first == u) ? 0 : 1;
                expand_demand(v, e, key, o);
                expand_supply(u, e, key, o);
                verify(o);
                return o;
            }
        }
        return std::nullopt;
    }

    // Loose superset of the rounded loads any source can take in a fully
    // oriented network whose arcs realize table keys: every fold of demand
    // keys over the source's neighbors, for every entering count. 0 and 1
    // are always included.
    std::vector<Rational> source_load_candidates() {
        std::set<Rational> loads;
        loads.insert(Rational(0));
        loads.insert(Rational(1));
        for (int s : net_.sources()) {
            Rational prod(net_.node(s).value);
            std::vector<KidInfo> kids = kids_of(s, -1);
            std::vector<detail::FoldSlot> slots;
            std::vector<const std::map<Rational, TableEntry>*> maps;
            build_child_slots(kids, slots, maps);
            int p = static_cast<int>(kids.size());
            std::vector<char> may(static_cast<size_t>(p), 1);
            for (int d = 0; d <= p; ++d) {
                detail::FoldStates res =
                    detail::run_fold(slots, maps, d + 1, may, -1, ctx_);
                for (const auto& [state, best] : res) {
                    (void)best;
                    if (state.second != d) continue;
                    Rational load = state.first / prod;
                    if (!load.is_negative() && load <= Rational(1)) loads.insert(load);
                }
            }
        }
        return std::vector<Rational>(loads.begin(), loads.end());
    }

private:
    struct KidInfo {
        int node = -1;
        int edge = -1;
        int rank = 0;
    };
    struct SupplySlot {
        std::optional<Rational> value;
        TableEntry entry;
    };

    int arc_index(int e, int head) const {
        return 2 * e + (net_.edge(e).second == head ? 0 : 1);
    }

    void require_endpoints(int u, int v, int e) const {
        auto [a, b] = net_.edge(e);
        if (!((a == u && b == v) || (a == v && b == u)))
            throw std::invalid_argument("IOTables: edge does not join the given nodes");
    }

    int subtree_size(int head, int banned_edge) const {
        int count = 0;
        std::vector<int> stack = {head};
        std::vector<char> seen(static_cast<size_t>(net_.n()), 0);
        seen[static_cast<size_t>(head)] = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            ++count;
            for (auto [nb, e] : net_.adj(v)) {
                if (e == banned_edge || seen[static_cast<size_t>(nb)]) continue;
                seen[static_cast<size_t>(nb)] = 1;
                stack.push_back(nb);
            }
        }
        return count;
    }

    std::vector<KidInfo> kids_of(int node, int banned_edge) const {
        std::vector<KidInfo> kids;
        for (auto [nb, e] : net_.adj(node)) {
            if (e == banned_edge) continue;
            kids.push_back(KidInfo{nb, e, net_.number(nb)});
        }
        std::sort(kids.begin(), kids.end(),
                  [](const KidInfo& a, const KidInfo& b) { return a.rank < b.rank; });
        return kids;
    }

    void build_child_slots(const std::vector<KidInfo>& kids,
                           std::vector<detail::FoldSlot>& slots,
                           std::vector<const std::map<Rational, TableEntry>*>& maps) const {
        for (size_t j = 0; j < kids.size(); ++j) {
            int idx = arc_index(kids[j].edge, kids[j].node);
            if (!demand_done_[static_cast<size_t>(idx)])
                throw std::logic_error("IOTables: demand map used before it was built");
            slots.push_back(detail::FoldSlot{false, Rational(0), static_cast<int>(j)});
            maps.push_back(&demand_[static_cast<size_t>(idx)]);
        }
    }

    bool window_ok(const Rational& load) const { return lo_ <= load && load <= hi_; }

    TableEntry make_entry(const std::vector<KidInfo>& kids,
                          const std::vector<detail::FoldPick>& picks,
                          const Rational& partner) const {
        TableEntry entry;
        entry.entering_key = partner;
        for (size_t j = 0; j < kids.size(); ++j) {
            const detail::FoldPick& pk = picks[j];
            entry.children.push_back(
                ChildChoice{kids[j].edge, pk.entered, pk.entered ? partner : pk.key});
        }
        return entry;
    }

    // Demand side of arc (u, v): decomposes at v over its other neighbors.
    // Entering children are consulted at the arc's own key; fed children
    // contribute their demands and their keys to v's fold.
    void compute_demand_map(int e, int v) {
        int idx = arc_index(e, v);
        if (demand_done_[static_cast<size_t>(idx)]) return;
        const Node& nd = net_.node(v);
        bool is_source = nd.kind == NodeKind::Source;
        bool is_sink = nd.kind == NodeKind::Sink;
        bool bounded = nd.kind == NodeKind::Switch && !nd.unbounded;
        Rational pow = is_sink ? Rational(nd.value) : Rational(0);

        std::vector<KidInfo> kids = kids_of(v, e);
        int p = static_cast<int>(kids.size());
        std::vector<detail::FoldSlot> slots;
        std::vector<const std::map<Rational, TableEntry>*> maps;
        if (is_sink) slots.push_back(detail::FoldSlot{true, pow, -1});
        build_child_slots(kids, slots, maps);

        std::map<Rational, TableEntry> out;
        auto consider = [&](const Rational& key, const Rational& flow,
                            const std::vector<detail::FoldPick>& picks) {
            auto it = out.find(key);
            if (it != out.end() && it->second.value <= flow) return;
            TableEntry entry = make_entry(kids, picks, key);
            entry.value = flow;
            out[key] = std::move(entry);
        };

        std::map<Rational, std::vector<std::optional<Rational>>> sup_cache;
        auto sup_at = [&](const Rational& t) -> const std::vector<std::optional<Rational>>& {
            auto it = sup_cache.find(t);
            if (it != sup_cache.end()) return it->second;
            std::vector<std::optional<Rational>> vals;
            for (const KidInfo& k : kids) vals.push_back(supply_value(k.node, v, k.edge, t));
            return sup_cache.emplace(t, std::move(vals)).first->second;
        };

        std::map<std::tuple<long, int, std::uint64_t>, detail::FoldStates> runs;
        auto fold_for = [&](long div, const std::vector<char>& may,
                            int must) -> const detail::FoldStates& {
            std::uint64_t bits = 0;
            for (int j = 0; j < p && j < 60; ++j)
                if (may[static_cast<size_t>(j)]) bits |= std::uint64_t(1) << j;
            auto key = std::make_tuple(div, must, bits);
            auto it = runs.find(key);
            if (it != runs.end()) return it->second;
            return runs.emplace(key, detail::run_fold(slots, maps, div, may, must, ctx_))
                .first->second;
        };

        std::vector<char> all_may(static_cast<size_t>(p), 1);
        for (int d = 0; d <= p; ++d) {
            long div = d + (is_source ? 2 : 1);
            const detail::FoldStates& loose = fold_for(div, all_may, -1);
            for (const auto& [state, loose_best] : loose) {
                if (state.second != d) continue;
                const Rational& t = state.first;
                if (is_source && !window_ok(t / Rational(nd.value))) continue;
                if (d == 0) {
                    Rational flow = (loose_best.cost + pow) / Rational(div);
                    if (bounded && flow * Rational(d + 1) > Rational(nd.value)) continue;
                    if (is_source && flow > Rational(nd.value)) continue;
                    consider(t, flow, loose_best.picks);
                    continue;
                }
                const auto& sup = sup_at(t);
                for (int ci = 0; ci < p; ++ci) {
                    if (!sup[static_cast<size_t>(ci)]) continue;
                    const Rational& oc = *sup[static_cast<size_t>(ci)];
                    std::vector<char> may(static_cast<size_t>(p), 0);
                    for (int j = 0; j < p; ++j) {
                        if (!sup[static_cast<size_t>(j)]) continue;
                        const Rational& oj = *sup[static_cast<size_t>(j)];
                        if (oj > oc || (oj == oc && kids[static_cast<size_t>(j)].rank >=
                                                        kids[static_cast<size_t>(ci)].rank))
                            may[static_cast<size_t>(j)] = 1;
                    }
                    const detail::FoldStates& res = fold_for(div, may, ci);
                    auto rit = res.find({t, d});
                    if (rit == res.end()) continue;
                    Rational flow = (rit->second.cost + pow) / Rational(div);
                    if (flow > oc) continue;
                    if (bounded && flow * Rational(d + 1) > Rational(nd.value)) continue;
                    if (is_source && flow > Rational(nd.value)) continue;
                    consider(t, flow, rit->second.picks);
                }
            }
        }
        demand_[static_cast<size_t>(idx)] = std::move(out);
        demand_done_[static_cast<size_t>(idx)] = 1;
    }

    // Supply side of arc (u, v): decomposes at u over its other neighbors,
    // with the queried key seeded at v's fold position. Entering children
    // are consulted at u's recomputed fold value.
    std::optional<Rational> supply_value(int u, int v, int e, const Rational& query) {
        int idx = arc_index(e, v);
        auto& memo = supply_[static_cast<size_t>(idx)];
        auto hit = memo.find(query);
        if (hit != memo.end()) return hit->second.value;
        memo[query] = SupplySlot{};  // settled below; guards against cycles

        const Node& nd = net_.node(u);
        bool is_source = nd.kind == NodeKind::Source;
        bool is_sink = nd.kind == NodeKind::Sink;
        bool is_switch = nd.kind == NodeKind::Switch;
        bool bounded = is_switch && !nd.unbounded;
        Rational pow = is_sink ? Rational(nd.value) : Rational(0);

        std::vector<KidInfo> kids = kids_of(u, e);
        int p = static_cast<int>(kids.size());
        int v_rank = net_.number(v);

        std::vector<detail::FoldSlot> slots;
        std::vector<const std::map<Rational, TableEntry>*> maps;
        if (is_sink) slots.push_back(detail::FoldSlot{true, pow, -1});
        {
            // merge the seeded arc into the children's fold order by rank
            std::vector<detail::FoldSlot> child_slots;
            std::vector<const std::map<Rational, TableEntry>*> child_maps;
            build_child_slots(kids, child_slots, child_maps);
            size_t j = 0;
            bool seeded = false;
            for (; j < kids.size(); ++j) {
                if (!seeded && v_rank < kids[j].rank) {
                    slots.push_back(detail::FoldSlot{true, query, -1});
                    seeded = true;
                }
                slots.push_back(child_slots[j]);
            }
            if (!seeded) slots.push_back(detail::FoldSlot{true, query, -1});
            maps = std::move(child_maps);
        }

        std::optional<Rational> best;
        TableEntry best_entry;
        auto consider = [&](const Rational& flow, const std::vector<detail::FoldPick>& picks,
                            const Rational& partner) {
            if (flow.is_negative()) return;
            if (best && *best >= flow) return;
            best = flow;
            best_entry = make_entry(kids, picks, partner);
            best_entry.value = flow;
        };

        // A deactivated switch pushes nothing but is feasible when every
        // child can rest at zero; the seeded key is unconstrained then.
        if (is_switch && opts_.allow_deactivated_switches) {
            bool ok = true;
            for (size_t j = 0; ok && j < maps.size(); ++j) {
                auto it = maps[j]->find(Rational(0));
                ok = it != maps[j]->end() && it->second.value.is_zero();
            }
            if (ok) {
                std::vector<detail::FoldPick> picks(static_cast<size_t>(p),
                                                    detail::FoldPick{false, Rational(0)});
                consider(Rational(0), picks, Rational(0));
            }
        }

        std::map<Rational, std::vector<std::optional<Rational>>> sup_cache;
        auto sup_at = [&](const Rational& g) -> const std::vector<std::optional<Rational>>& {
            auto it = sup_cache.find(g);
            if (it != sup_cache.end()) return it->second;
            std::vector<std::optional<Rational>> vals;
            for (const KidInfo& k : kids) vals.push_back(supply_value(k.node, u, k.edge, g));
            return sup_cache.emplace(g, std::move(vals)).first->second;
        };

        std::map<std::tuple<long, int, std::uint64_t>, detail::FoldStates> runs;
        auto fold_for = [&](long div, const std::vector<char>& may,
                            int must) -> const detail::FoldStates& {
            std::uint64_t bits = 0;
            for (int j = 0; j < p && j < 60; ++j)
                if (may[static_cast<size_t>(j)]) bits |= std::uint64_t(1) << j;
            auto key = std::make_tuple(div, must, bits);
            auto it = runs.find(key);
            if (it != runs.end()) return it->second;
            return runs.emplace(key, detail::run_fold(slots, maps, div, may, must, ctx_))
                .first->second;
        };

        std::vector<char> all_may(static_cast<size_t>(p), 1);
        int d_lo = is_source ? 0 : 1;
        for (int d = d_lo; d <= p; ++d) {
            long div = d + (is_source ? 1 : 0);
            if (div < 1) continue;
            const detail::FoldStates& loose = fold_for(div, all_may, -1);
            for (const auto& [state, loose_best] : loose) {
                if (state.second != d) continue;
                const Rational& g = state.first;
                if (is_source && !window_ok(g / Rational(nd.value))) continue;
                if (d == 0) {
                    consider(Rational(nd.value) - loose_best.cost, loose_best.picks, g);
                    continue;
                }
                const auto& sup = sup_at(g);
                for (int ci = 0; ci < p; ++ci) {
                    if (!sup[static_cast<size_t>(ci)]) continue;
                    const Rational& oc = *sup[static_cast<size_t>(ci)];
                    std::vector<char> may(static_cast<size_t>(p), 0);
                    for (int j = 0; j < p; ++j) {
                        if (!sup[static_cast<size_t>(j)]) continue;
                        const Rational& oj = *sup[static_cast<size_t>(j)];
                        if (oj > oc || (oj == oc && kids[static_cast<size_t>(j)].rank >=
                                                        kids[static_cast<size_t>(ci)].rank))
                            may[static_cast<size_t>(j)] = 1;
                    }
                    const detail::FoldStates& res = fold_for(div, may, ci);
                    auto rit = res.find({g, d});
                    if (rit == res.end()) continue;
                    Rational term;
                    if (is_source)
                        term = Rational(d + 1) * min(oc, Rational(nd.value));
                    else if (bounded)
                        term = min(Rational(d) * oc, Rational(nd.value));
                    else
                        term = Rational(d) * oc;
                    consider(term - rit->second.cost - pow, rit->second.picks, g);
                }
            }
        }

        SupplySlot slot;
        slot.value = best;
        if (best) slot.entry = std::move(best_entry);
        memo[query] = std::move(slot);
        return best;
    }

    void expand_demand(int v, int e, const Rational& key, Orientation& o) {
        const auto& tab = demand_[static_cast<size_t>(arc_index(e, v))];
        const TableEntry& entry = tab.at(key);
        for (const ChildChoice& cc : entry.children) {
            auto [a, b] = net_.edge(cc.edge);
            int c = (a == v) ? b : a;
            if (cc.entering) {
                o.dir[static_cast<size_t>(cc.edge)] = (a == c) ? 0 : 1;
                expand_supply(c, cc.edge, entry.entering_key, o);
            } else {
                o.dir[static_cast<size_t>(cc.edge)] = (a == v) ? 0 : 1;
                expand_demand(c, cc.edge, cc.key, o);
            }
        }
    }

    void expand_supply(int u, int e, const Rational& key, Orientation& o) {
        auto [a, b] = net_.edge(e);
        int head = (a == u) ? b : a;
        const SupplySlot& slot = supply_[static_cast<size_t>(arc_index(e, head))].at(key);
        if (!slot.value) throw std::logic_error("IOTables: expanding an absent supply entry");
        for (const ChildChoice& cc : slot.entry.children) {
            auto [x, y] = net_.edge(cc.edge);
            int c = (x == u) ? y : x;
            if (cc.entering) {
                o.dir[static_cast<size_t>(cc.edge)] = (x == c) ? 0 : 1;
                expand_supply(c, cc.edge, slot.entry.entering_key, o);
            } else {
                o.dir[static_cast<size_t>(cc.edge)] = (x == u) ? 0 : 1;
                expand_demand(c, cc.edge, cc.key, o);
            }
        }
    }

    void verify(const Orientation& o) const {
        if (!check_feasible(net_, o, opts_).feasible)
            throw std::logic_error("IOTables: reconstructed orientation fails feasibility");
        if (!net_.sources().empty()) {
            auto [mn, mx, diff] = rounded_objectives(net_, o, ctx_);
            (void)diff;
            if (mn < lo_ || mx > hi_)
                throw std::logic_error("IOTables: reconstructed orientation leaves the window");
        }
    }

    const Network& net_;
    const RoundingContext& ctx_;
    Rational lo_, hi_;
    FlowOptions opts_;
    std::vector<std::map<Rational, TableEntry>> demand_;
    std::vector<char> demand_done_;
    std::vector<std::map<Rational, SupplySlot>> supply_;
};

inline IOTables compute_tables(const Network& net, const RoundingContext& ctx,
                               const Rational& window_lo, const Rational& window_hi,
                               FlowOptions opts = {}) {
    return IOTables(net, ctx, window_lo, window_hi, opts);
}

// Some orientation is feasible with every source's rounded load inside
// [window_lo, window_hi] iff this returns one.
inline std::optional<Orientation> feasible_with_bounds(const Network& net,
                                                       const RoundingContext& ctx,
                                                       const Rational& window_lo,
                                                       const Rational& window_hi,
                                                       FlowOptions opts = {}) {
    IOTables tables(net, ctx, window_lo, window_hi, opts);
    return tables.combine();
}

struct FptasResult {
    Orientation orientation;
    Rational value;
};

// All rounded loads a probe window could need to pin: loose fold-reachable
// loads of every source under the vacuous window, plus 0 and 1.
inline std::vector<Rational> candidate_rounded_loads(const Network& net,
                                                     const RoundingContext& ctx,
                                                     FlowOptions opts = {}) {
    IOTables tables(net, ctx, Rational(0), Rational(1), opts);
    return tables.source_load_candidates();
}

// Maximizes the minimum source load within factor (1 - eps_prime) (and
// additive eps_prime): binary search for the highest feasible rounded lower
// bound, then report the witness's exact objective. Empty iff no orientation
// is feasible at all.
inline std::optional<FptasResult> solve_max_min_load_fptas(const Network& net,
                                                           const Rational& eps_prime,
                                                           FlowOptions opts = {}) {
    RoundingContext ctx(net, eps_prime);
    std::vector<Rational> cand = candidate_rounded_loads(net, ctx, opts);
    std::optional<Orientation> cur = feasible_with_bounds(net, ctx, Rational(0), Rational(1), opts);
    if (!cur) return std::nullopt;
    size_t lo = 0, hi = cand.size();  // cand[0] == 0 is feasible
    while (lo + 1 < hi) {
        size_t mid = (lo + hi) / 2;
        if (auto o = feasible_with_bounds(net, ctx, cand[mid], Rational(1), opts)) {
            cur = std::move(o);
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Rational value = std::get<0>(objectives(net, compute_flow(net, *cur)));
    return FptasResult{std::move(*cur), std::move(value)};
}

// Minimizes the spread between the highest and lowest source load within
// additive 3 * eps_prime: sweep candidate windows by increasing width (ties:
// higher lower bound first), return the first feasible one's witness with
// its exact spread. Empty iff no orientation is feasible at all.
inline std::optional<FptasResult> solve_min_reserve_fptas(const Network& net,
                                                          const Rational& eps_prime,
                                                          FlowOptions opts = {}) {
    RoundingContext ctx(net, eps_prime);
    std::vector<Rational> cand = candidate_rounded_loads(net, ctx, opts);
    struct Window {
        Rational width;
        Rational lo;
        Rational hi;
    };
    std::vector<Window> windows;
    for (size_t i = 0; i < cand.size(); ++i)
        for (size_t j = i; j < cand.size(); ++j)
            windows.push_back(Window{cand[j] - cand[i], cand[i], cand[j]});
    std::sort(windows.begin(), windows.end(), [](const Window& a, const Window& b) {
        if (a.width != b.width) return a.width < b.width;
        return b.lo < a.lo;
    });
    for (const Window& w : windows) {
        if (auto o = feasible_with_bounds(net, ctx, w.lo, w.hi, opts)) {
            Rational value = std::get<2>(objectives(net, compute_flow(net, *o)));
            return FptasResult{std::move(*o), std::move(value)};
        }
    }
    return std::nullopt;
}

}  // namespace gridtree
