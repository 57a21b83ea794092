// Acceptance gate: the shipped guarantees checked end to end, one pass/fail
// line per criterion. Exit code is the number of failed criteria. Tolerances
// are pinned in code: all value comparisons are exact rational equality, the
// per-criterion wall-clock limits are the constants below.
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gridtree/exact_solver.hpp"
#include "gridtree/fptas.hpp"
#include "gridtree/hardgen.hpp"
#include "gridtree/oracle.hpp"

using namespace gridtree;

namespace {

constexpr double kFigureLimitMs = 1.0;       // per computation, criteria 1 and 2
constexpr double kGadgetLimitMs = 60000.0;   // criterion 7
constexpr double kWitnessLimitMs = 300000.0; // criterion 8
constexpr double kSuiteLimitMs = 600000.0;   // criteria 4/5/6/9 combined
constexpr int kSuiteSize = 200;              // seeded trees, 4..12 edges
constexpr int kTableSampleStride = 25;       // every k-th instance gets table checks
constexpr int kSupplyProbeCap = 12;          // supply probes per directed edge

struct Criterion {
    std::string title;
    bool ok = true;
    std::string first_failure;
    long checks = 0;
    double ms = 0.0;

    explicit Criterion(std::string t) : title(std::move(t)) {}
    void require(bool cond, const std::string& what) {
        ++checks;
        if (!cond && ok) {
            ok = false;
            first_failure = what;
        }
    }
};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string data_path(const std::string& name) {
    return std::string(GRIDTREE_DATA_DIR) + "/" + name;
}

Network figure1() { return parse_network(read_file(data_path("figure1.json"))); }

Orientation fig1_orientation(const Network& net, char which) {
    return parse_orientation(
        net, read_file(data_path(std::string("figure1_orientation_") + which + ".json")));
}

int edge_between(const Network& net, const std::string& a, const std::string& b) {
    int ia = net.index_of(a), ib = net.index_of(b);
    for (auto [nb, e] : net.adj(ia))
        if (nb == ib) return e;
    throw std::runtime_error("no edge between " + a + " and " + b);
}

uint8_t dir_towards(const Network& net, int e, const std::string& head) {
    return net.node(net.edge(e).second).id == head ? 0 : 1;
}

void orient(const Network& net, Orientation& o, const std::string& tail,
            const std::string& head) {
    int e = edge_between(net, tail, head);
    o.dir[static_cast<size_t>(e)] = dir_towards(net, e, head);
}

// |value - printed/1e5| <= 1e-5, in exact arithmetic
bool prints_as(const Rational& value, long printed_times_1e5) {
    return abs(value - Rational(printed_times_1e5, 100000)) <= Rational(1, 100000);
}

double to_double(const Rational& r) { return r.num().get_d() / r.den().get_d(); }

// ---------------------------------------------------------------- criterion 1

void run_criterion1(Criterion& c) {
    Network net = figure1();
    struct Expect {
        char which;
        bool feasible;
        Rational lo, hi, reserve;
    };
    std::vector<Expect> cases = {
        {'b', true, Rational(3, 5), Rational(1), Rational(2, 5)},
        {'d', true, Rational(1, 2), Rational(7, 10), Rational(1, 5)},
    };
    for (const Expect& ex : cases) {
        Orientation o = fig1_orientation(net, ex.which);
        auto t0 = Clock::now();
        FlowAssignment fa = compute_flow(net, o);
        auto [lo, hi, reserve] = objectives(net, fa);
        bool feasible = check_feasible(net, fa, {}).feasible;
        double ms = ms_since(t0);
        std::string tag = std::string("orientation (") + ex.which + ")";
        c.require(feasible == ex.feasible, tag + " feasibility");
        c.require(lo == ex.lo && hi == ex.hi && reserve == ex.reserve,
                  tag + " objectives, got (" + lo.to_string() + ", " + hi.to_string() + ", " +
                      reserve.to_string() + ")");
        c.require(ms < kFigureLimitMs, tag + " took " + std::to_string(ms) + " ms");
    }
    struct Reject {
        char which;
        std::string node;
        ViolationKind kind;
    };
    std::vector<Reject> rejects = {
        {'c', "w2", ViolationKind::Capacity},
        {'c', "s2", ViolationKind::Production},
        {'e', "p2", ViolationKind::Demand},
        {'f', "w2", ViolationKind::Demand},
    };
    for (const Reject& rj : rejects) {
        Orientation o = fig1_orientation(net, rj.which);
        auto t0 = Clock::now();
        FeasibilityReport rep = check_feasible(net, o);
        double ms = ms_since(t0);
        std::string tag = std::string("orientation (") + rj.which + ")";
        c.require(!rep.feasible, tag + " must be rejected");
        c.require(rep.has(net, rj.node, rj.kind),
                  tag + " missing " + violation_name(rj.kind) + " violation at " + rj.node);
        c.require(ms < kFigureLimitMs, tag + " check took " + std::to_string(ms) + " ms");
    }
}

// ---------------------------------------------------------------- criterion 2

void run_criterion2(Criterion& c) {
    Network net = figure1();
    RoundingContext ctx(net, Rational(1, 10));
    c.require(ctx.eps() == Rational(1, 42250),
              "eps for eps'=1/10 on 8 nodes, got " + ctx.eps().to_string());

    auto t0 = Clock::now();
    Rational a10 = round_down(Rational(10), ctx);
    Rational a20 = round_down(Rational(20), ctx);
    Rational a50 = round_down(Rational(50), ctx);
    double ms = ms_since(t0);
    c.require(a10 == Rational::parse("422496/42250"), "a(10), got " + a10.to_string());
    c.require(a20 == Rational::parse("422496/21125"), "a(20), got " + a20.to_string());
    c.require(a50 == Rational::parse("211248/4225"), "a(50), got " + a50.to_string());
    c.require(prints_as(a10, 999991), "a(10) printed decimals");
    c.require(prints_as(a20, 1999981), "a(20) printed decimals");
    c.require(prints_as(a50, 4999952), "a(50) printed decimals");
    c.require(ms < kFigureLimitMs, "round_down trio took " + std::to_string(ms) + " ms");

    Orientation b = fig1_orientation(net, 'b');
    auto t1 = Clock::now();
    RoundedFlowAssignment rf = rounded_flow(net, b, ctx);
    double ms2 = ms_since(t1);
    size_t s1 = static_cast<size_t>(net.index_of("s1"));
    size_t s2 = static_cast<size_t>(net.index_of("s2"));
    c.require(rf.entering_rounded[s1] == Rational::parse("1267488/21125"),
              "rounded source flow at s1, got " + rf.entering_rounded[s1].to_string());
    c.require(rf.entering_rounded[s2] == Rational::parse("422496/21125"),
              "rounded source flow at s2, got " + rf.entering_rounded[s2].to_string());
    c.require(prints_as(rf.entering_rounded[s1], 5999943), "s1 printed decimals");
    c.require(prints_as(rf.entering_rounded[s2], 1999981), "s2 printed decimals");
    c.require(ms2 < kFigureLimitMs, "rounded_flow took " + std::to_string(ms2) + " ms");
}

// ---------------------------------------------------------------- criterion 3

void run_criterion3(Criterion& c) {
    std::vector<Node> nodes = {Node::switch_node("d", 100), Node::switch_unbounded("c"),
                               Node::source("s2", 20), Node::sink("p2", 15)};
    std::vector<std::pair<std::string, std::string>> edges = {
        {"c", "d"}, {"c", "s2"}, {"c", "p2"}};
    Network net(nodes, edges, {"d", "c", "s2", "p2"});
    RoundingContext ctx = RoundingContext::raw_eps(net, Rational(1));
    IOTables tables(net, ctx, Rational(1, 5), Rational(1, 2));
    int cc = net.index_of("c"), d = net.index_of("d");
    int e_cd = edge_between(net, "c", "d");

    auto sup = tables.supply(cc, d, e_cd, Rational(4));
    c.require(sup.has_value(), "o(u,v,4) undefined");
    if (sup) c.require(*sup == Rational(5), "o(u,v,4), got " + sup->to_string());

    auto dem = tables.demand(d, cc, e_cd, Rational(4));
    c.require(dem.has_value(), "i(u,v,4) undefined");
    if (dem) c.require(*dem == Rational(15, 2), "i(u,v,4), got " + dem->to_string());
}

// ---------------------------------------------------------------- criterion 7

Orientation chain_fed_orientation(const Network& net, int m) {
    Orientation o;
    o.dir.assign(static_cast<size_t>(net.edge_count()), 0);
    for (int j = 1; j <= m; ++j) {
        std::string p = "p" + std::to_string(j);
        std::string s = "s" + std::to_string(j);
        orient(net, o, s, p);
        if (j > 1) orient(net, o, p, "s" + std::to_string(j - 1));
    }
    orient(net, o, "v", "s" + std::to_string(m));
    return o;
}

void run_criterion7(Criterion& c) {
    for (int m = 3; m <= 5; ++m) {
        for (mpz_class x = 0; x + 2 < (mpz_class(1) << static_cast<unsigned>(m)); ++x) {
            std::string tag = "gadget x=" + x.get_str() + " m=" + std::to_string(m);
            Network g = gen_gadget(x, m, NodeKind::Source);
            Orientation o = chain_fed_orientation(g, m);
            FlowAssignment fa = compute_flow(g, o);
            c.require(check_feasible(g, fa, {}).feasible, tag + " forced orientation feasible");
            int terminal_arc = edge_between(g, "v", "s" + std::to_string(m));
            Rational want =
                Rational(2) + Rational(x, mpz_class(1) << static_cast<unsigned>(m));
            c.require(fa.arc_flow[static_cast<size_t>(terminal_arc)] == want,
                      tag + " terminal flow, got " +
                          fa.arc_flow[static_cast<size_t>(terminal_arc)].to_string());
            OracleOptimum best = brute_force_optimum(g, Objective::MinMaxLoad);
            c.require(best.feasible_count == 1, tag + " feasible count " +
                                                    std::to_string(best.feasible_count));
            c.require(best.orientation.has_value() && best.orientation->dir == o.dir,
                      tag + " oracle orientation differs from the forced one");
        }
    }
}

// ---------------------------------------------------------------- criterion 8

struct EnumerationStats {
    unsigned long feasible = 0;
    Rational best_reserve;
    bool any = false;
};

// all 4^n joint orientations of the free edge pairs; every other edge stays
// at its forced witness direction
EnumerationStats sweep_free_edges(const Network& net, const ReductionMeta& meta) {
    Orientation o = witness_orientation(net, meta, {});
    const int n = meta.n_items;
    struct FreePair {
        int t_edge;
        uint8_t t_fed, t_feeds;
        int r_edge;
        uint8_t r_feeds, r_fed;
    };
    std::vector<FreePair> fp;
    for (int i = 0; i < n; ++i) {
        size_t k = static_cast<size_t>(i);
        FreePair p;
        p.t_edge = edge_between(net, meta.t_ids[k], meta.w_ids[k]);
        p.t_fed = dir_towards(net, p.t_edge, meta.t_ids[k]);
        p.t_feeds = static_cast<uint8_t>(1 - p.t_fed);
        p.r_edge = edge_between(net, meta.r_ids[k], meta.v_ids[k]);
        p.r_feeds = dir_towards(net, p.r_edge, meta.v_ids[k]);
        p.r_fed = static_cast<uint8_t>(1 - p.r_feeds);
        fp.push_back(p);
    }
    EnumerationStats stats;
    unsigned long total = 1UL << (2 * n);
    for (unsigned long mask = 0; mask < total; ++mask) {
        for (int i = 0; i < n; ++i) {
            const FreePair& p = fp[static_cast<size_t>(i)];
            bool t_in = ((mask >> (2 * i)) & 1UL) != 0;
            bool r_in = ((mask >> (2 * i + 1)) & 1UL) != 0;
            o.dir[static_cast<size_t>(p.t_edge)] = t_in ? p.t_fed : p.t_feeds;
            o.dir[static_cast<size_t>(p.r_edge)] = r_in ? p.r_feeds : p.r_fed;
        }
        FlowAssignment fa = compute_flow(net, o);
        if (!check_feasible(net, fa, {}).feasible) continue;
        ++stats.feasible;
        auto [lo, hi, reserve] = objectives(net, fa);
        (void)lo;
        (void)hi;
        if (!stats.any || reserve < stats.best_reserve) {
            stats.best_reserve = reserve;
            stats.any = true;
        }
    }
    return stats;
}

void run_criterion8(Criterion& c) {
    auto [pos, pmeta] = gen_subset_sum_reduction(std::vector<mpz_class>(7, 1), 3);
    Orientation w = witness_orientation(pos, pmeta, {1, 2, 3});
    FlowAssignment fa = compute_flow(pos, w);
    c.require(check_feasible(pos, fa, {}).feasible, "positive witness feasible");
    auto [lo, hi, reserve] = objectives(pos, fa);
    c.require(lo == Rational(1, 3) && hi == Rational(1) && reserve == Rational(2, 3),
              "positive witness objectives, got (" + lo.to_string() + ", " + hi.to_string() +
                  ", " + reserve.to_string() + ")");

    EnumerationStats ps = sweep_free_edges(pos, pmeta);
    c.require(ps.any, "positive sweep found no feasible pattern");
    c.require(ps.best_reserve == Rational(2, 3),
              "positive sweep best reserve, got " + ps.best_reserve.to_string());

    auto [neg, nmeta] = gen_subset_sum_reduction(std::vector<mpz_class>(7, 2), 3);
    EnumerationStats ns = sweep_free_edges(neg, nmeta);
    c.require(ns.any, "negative sweep found no feasible pattern");
    c.require(ns.best_reserve > Rational(2, 3),
              "negative sweep reserve not above 2/3, got " + ns.best_reserve.to_string());
}

// ------------------------------------------------- criteria 4, 5, 6, 9 suite

double iteration_bound(const Network& net) {
    double n = static_cast<double>(net.n());
    double sigma = net.max_production().get_d();
    return 4.0 * n * std::log2(n * sigma);
}

void sampled_table_check(const Network& net, const RoundingContext& ctx, Criterion& c,
                         const std::string& label) {
    Rational lo(0), hi(1);
    FlowOptions opts{};
    IOTables tables(net, ctx, lo, hi, opts);
    for (int e = 0; e < net.edge_count(); ++e) {
        auto [a, b] = net.edge(e);
        for (auto [u, v] : {std::make_pair(a, b), std::make_pair(b, a)}) {
            std::string tag = label + " " + net.node(u).id + "->" + net.node(v).id;
            auto profile = outgoing_profile(net, u, v, lo, hi, ctx, opts);
            const auto& tab = tables.demand_table(u, v, e);
            c.require(profile.size() == tab.size(), tag + " table key count");
            int nth = 0, probes = 0;
            for (const auto& [key, want] : profile) {
                auto got = tables.demand(u, v, e, key);
                c.require(got.has_value() && *got == want,
                          tag + " demand at key " + key.to_string());
                if (nth++ % 7 == 0 && probes < kSupplyProbeCap) {
                    ++probes;
                    auto osup = brute_force_supply(net, u, v, key, lo, hi, ctx, opts);
                    auto tsup = tables.supply(u, v, e, key);
                    bool agree = osup.has_value() == tsup.has_value() &&
                                 (!osup || *osup == *tsup);
                    c.require(agree, tag + " supply at key " + key.to_string());
                }
            }
        }
    }
}

void run_suite(Criterion& c4, Criterion& c5, Criterion& c6, Criterion& c9) {
    const std::vector<Rational> eps_primes = {Rational(1, 4), Rational(1, 10)};
    for (int i = 0; i < kSuiteSize; ++i) {
        int edges = 4 + i % 9;
        unsigned long seed = static_cast<unsigned long>(i + 1);
        Network net = gen_random_tree(edges + 1, seed);
        std::string label =
            "tree n=" + std::to_string(net.n()) + " seed=" + std::to_string(seed);

        bool any_feasible = false;
        std::optional<Rational> best_max, best_min, best_reserve;
        std::vector<Orientation> feasibles;
        enumerate_orientations(net, [&](const Orientation& o) {
            FlowAssignment fa = compute_flow(net, o);
            if (!check_feasible(net, fa, {}).feasible) return;
            any_feasible = true;
            auto [lo, hi, reserve] = objectives(net, fa);
            if (!best_max || hi < *best_max) best_max = hi;
            if (!best_min || lo > *best_min) best_min = lo;
            if (!best_reserve || reserve < *best_reserve) best_reserve = reserve;
            feasibles.push_back(o);
        });

        // 4a: the dichotomy solver matches the oracle exactly; 9: its bound
        std::optional<MinMaxLoadResult> exact = solve_min_max_load(net);
        c4.require(exact.has_value() == any_feasible, label + " min-max-load feasibility");
        if (exact && best_max)
            c4.require(exact->value == *best_max,
                       label + " min-max-load value " + exact->value.to_string() + " vs " +
                           best_max->to_string());
        if (exact)
            c9.require(static_cast<double>(exact->iterations) <= iteration_bound(net),
                       label + " iterations " + std::to_string(exact->iterations) +
                           " above bound " + std::to_string(iteration_bound(net)));

        // 4b: valid agrees with oracle feasibility
        std::optional<Orientation> witness = valid(net);
        c4.require(witness.has_value() == any_feasible, label + " valid verdict");
        if (witness)
            c4.require(check_feasible(net, *witness, {}).feasible,
                       label + " valid returned an infeasible orientation");

        for (const Rational& ep : eps_primes) {
            std::string elabel = label + " eps'=" + ep.to_string();
            RoundingContext ctx = build_grids(net, ep);

            // 5: per-arc bracket; 6: membership of every observed rounded flow
            for (const Orientation& o : feasibles) {
                FlowAssignment fa = compute_flow(net, o);
                RoundedFlowAssignment rf = rounded_flow(net, o, ctx);
                for (int e = 0; e < net.edge_count(); ++e) {
                    const Rational& f = fa.arc_flow[static_cast<size_t>(e)];
                    const Rational& a = rf.arc_rounded[static_cast<size_t>(e)];
                    c5.require(a <= f && f * (Rational(1) - ep) <= a,
                               elabel + " arc " + std::to_string(e) + " bracket: flow " +
                                   f.to_string() + " rounded " + a.to_string());
                    c6.require(ctx.grid().contains(a),
                               elabel + " rounded flow " + a.to_string() + " not in the grid");
                }
            }

            // 6: polynomial grid-size bound
            double size = ctx.grid().size().get_d();
            double pi = std::max(ctx.grid().total_power().get_d(), 1.0);
            double n = static_cast<double>(net.n());
            double inv_eps = to_double(Rational(1) / ctx.eps());
            double bound = (n * std::log2(n) + std::log2(pi) + 1.0) * (1.0 + inv_eps) + 1.0;
            c6.require(size <= bound, elabel + " grid size " + std::to_string(size) +
                                          " above bound " + std::to_string(bound));

            // 4d: FPTAS guarantees against the oracle optima
            std::optional<FptasResult> mm = solve_max_min_load_fptas(net, ep);
            c4.require(mm.has_value() == any_feasible, elabel + " max-min-load feasibility");
            if (mm && best_min) {
                c4.require(check_feasible(net, mm->orientation, {}).feasible,
                           elabel + " max-min-load orientation infeasible");
                Rational got =
                    std::get<0>(objectives(net, compute_flow(net, mm->orientation)));
                c4.require(got == mm->value, elabel + " max-min-load reported value");
                c4.require(got <= *best_min, elabel + " max-min-load beats the oracle");
                c4.require(got >= *best_min - ep,
                           elabel + " max-min-load absolute guarantee: got " +
                               got.to_string() + " optimum " + best_min->to_string());
                c4.require(got >= *best_min * (Rational(1) - ep),
                           elabel + " max-min-load relative guarantee: got " +
                               got.to_string() + " optimum " + best_min->to_string());
            }
            std::optional<FptasResult> mr = solve_min_reserve_fptas(net, ep);
            c4.require(mr.has_value() == any_feasible, elabel + " min-reserve feasibility");
            if (mr && best_reserve) {
                c4.require(check_feasible(net, mr->orientation, {}).feasible,
                           elabel + " min-reserve orientation infeasible");
                Rational got =
                    std::get<2>(objectives(net, compute_flow(net, mr->orientation)));
                c4.require(got == mr->value, elabel + " min-reserve reported value");
                c4.require(got >= *best_reserve, elabel + " min-reserve beats the oracle");
                c4.require(got <= *best_reserve + Rational(3) * ep,
                           elabel + " min-reserve guarantee: got " + got.to_string() +
                               " optimum " + best_reserve->to_string());
            }

            // 4c: sampled table entries against the brute-force ground truth
            if (i % kTableSampleStride == 0) sampled_table_check(net, ctx, c4, elabel);
        }
    }
}

void report(const Criterion& c, int index) {
    if (c.ok) {
        std::printf("criterion %d (%s): PASS (%ld checks, %.1f ms)\n", index, c.title.c_str(),
                    c.checks, c.ms);
    } else {
        std::printf("criterion %d (%s): FAIL: %s\n", index, c.title.c_str(),
                    c.first_failure.c_str());
    }
}

}  // namespace

int main() {
    Criterion c1("worked-figure fidelity");
    Criterion c2("rounded-flow fidelity");
    Criterion c3("worked demand/supply tables");
    Criterion c4("oracle equivalence suite");
    Criterion c5("rounding-error bracket");
    Criterion c6("grid bound and membership");
    Criterion c7("encoding-chain law");
    Criterion c8("subset-sum witness");
    Criterion c9("dichotomy iteration bound");

    auto timed = [](Criterion& c, auto&& fn) {
        auto t0 = Clock::now();
        fn(c);
        c.ms = ms_since(t0);
    };
    timed(c1, run_criterion1);
    timed(c2, run_criterion2);
    timed(c3, run_criterion3);
    timed(c7, run_criterion7);
    c7.require(c7.ms < kGadgetLimitMs, "runtime " + std::to_string(c7.ms) + " ms");
    timed(c8, run_criterion8);
    c8.require(c8.ms < kWitnessLimitMs, "runtime " + std::to_string(c8.ms) + " ms");

    auto t0 = Clock::now();
    run_suite(c4, c5, c6, c9);
    double suite_ms = ms_since(t0);
    c4.ms = suite_ms;
    c5.ms = suite_ms;
    c6.ms = suite_ms;
    c9.ms = suite_ms;
    c4.require(suite_ms < kSuiteLimitMs, "suite runtime " + std::to_string(suite_ms) + " ms");

    const Criterion* all[] = {&c1, &c2, &c3, &c4, &c5, &c6, &c7, &c8, &c9};
    int failures = 0;
    for (int i = 0; i < 9; ++i) {
        report(*all[i], i + 1);
        failures += all[i]->ok ? 0 : 1;
    }
    if (failures == 0)
        std::printf("all 9 acceptance criteria passed\n");
    else
        std::printf("%d acceptance criteria FAILED\n", failures);
    return failures;
}
