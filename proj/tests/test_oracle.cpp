#include "gridtree/oracle.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

using namespace gridtree;

namespace {

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

Network two_node(long prod, long pow) {
    return Network({Node::source("s", prod), Node::sink("p", pow)}, {{"s", "p"}});
}

unsigned long count_orientations(const Network& net) {
    unsigned long count = 0;
    enumerate_orientations(net, [&](const Orientation&) { ++count; });
    return count;
}

}  // namespace

TEST(Oracle, EnumerationCounts) {
    EXPECT_EQ(count_orientations(two_node(4, 4)), 2UL);

    Network path3({Node::source("s", 5), Node::switch_node("w", 10), Node::sink("p", 3)},
                  {{"s", "w"}, {"w", "p"}});
    EXPECT_EQ(count_orientations(path3), 4UL);

    EXPECT_EQ(count_orientations(figure1()), 128UL);

    Network lone({Node::source("s", 1)}, {});
    EXPECT_EQ(count_orientations(lone), 1UL);
}

TEST(Oracle, EnumerationOrderIsDeterministic) {
    Network net = figure1();
    std::vector<std::vector<uint8_t>> first_pass;
    enumerate_orientations(net, [&](const Orientation& o) {
        if (first_pass.size() < 8) first_pass.push_back(o.dir);
    });

    // counter 0 orients every edge from its lower-numbered endpoint; on this
    // instance that is exactly the recorded orientation (d)
    Orientation d = fig1_orientation(net, 'd');
    EXPECT_EQ(first_pass[0], d.dir);

    // counter 1 flips only the (min,max)-rank-first edge, [s1, w1]
    Orientation flipped = d;
    for (int e = 0; e < net.edge_count(); ++e) {
        auto [a, b] = net.edge(e);
        if ((net.node(a).id == "s1" && net.node(b).id == "w1") ||
            (net.node(a).id == "w1" && net.node(b).id == "s1"))
            flipped.dir[static_cast<size_t>(e)] ^= 1;
    }
    EXPECT_EQ(first_pass[1], flipped.dir);

    size_t at = 0;
    bool same = true;
    enumerate_orientations(net, [&](const Orientation& o) {
        if (at < first_pass.size() && o.dir != first_pass[at]) same = false;
        ++at;
    });
    EXPECT_TRUE(same);
    EXPECT_EQ(at, 128UL);
}

TEST(Oracle, EnumerationLimit) {
    ASSERT_EQ(setenv("GRIDTREE_ORACLE_LIMIT", "3", 1), 0);
    EXPECT_EQ(enumeration_limit(), 3);
    EXPECT_THROW(count_orientations(figure1()), LimitExceededError);

    ASSERT_EQ(setenv("GRIDTREE_ORACLE_LIMIT", "junk", 1), 0);
    EXPECT_THROW(enumeration_limit(), std::invalid_argument);
    ASSERT_EQ(setenv("GRIDTREE_ORACLE_LIMIT", "70", 1), 0);
    EXPECT_THROW(enumeration_limit(), std::invalid_argument);

    ASSERT_EQ(unsetenv("GRIDTREE_ORACLE_LIMIT"), 0);
    EXPECT_EQ(enumeration_limit(), 24);
    EXPECT_NO_THROW(count_orientations(figure1()));
}

TEST(Oracle, Figure1Optima) {
    Network net = figure1();

    OracleOptimum min_max = brute_force_optimum(net, Objective::MinMaxLoad);
    ASSERT_TRUE(min_max.orientation.has_value());
    EXPECT_EQ(min_max.value, Rational(7, 10));

    OracleOptimum max_min = brute_force_optimum(net, Objective::MaxMinLoad);
    ASSERT_TRUE(max_min.orientation.has_value());
    EXPECT_EQ(max_min.value, Rational(3, 5));

    OracleOptimum min_reserve = brute_force_optimum(net, Objective::MinReserve);
    ASSERT_TRUE(min_reserve.orientation.has_value());
    EXPECT_EQ(min_reserve.value, Rational(1, 5));

    EXPECT_GT(min_max.feasible_count, 0UL);
    EXPECT_EQ(min_max.feasible_count, max_min.feasible_count);
    EXPECT_EQ(min_max.feasible_count, min_reserve.feasible_count);

    // each winner is itself feasible and achieves its reported value
    auto check = [&](const OracleOptimum& r, int which) {
        EXPECT_TRUE(check_feasible(net, *r.orientation).feasible);
        auto [lo, hi, reserve] = objectives(net, compute_flow(net, *r.orientation));
        if (which == 0) {
            EXPECT_EQ(hi, r.value);
        } else if (which == 1) {
            EXPECT_EQ(lo, r.value);
        } else {
            EXPECT_EQ(reserve, r.value);
        }
    };
    check(min_max, 0);
    check(max_min, 1);
    check(min_reserve, 2);

    // the recorded orientation (d) attains the min-max optimum
    auto [lo_d, hi_d, res_d] = objectives(net, compute_flow(net, fig1_orientation(net, 'd')));
    EXPECT_EQ(hi_d, min_max.value);
    EXPECT_EQ(res_d, min_reserve.value);
    auto [lo_b, hi_b, res_b] = objectives(net, compute_flow(net, fig1_orientation(net, 'b')));
    EXPECT_EQ(lo_b, max_min.value);
    EXPECT_LE(min_max.value, hi_b);
}

TEST(Oracle, InfeasibleInstanceYieldsEmptyOptimum) {
    Network net = two_node(4, 5);
    for (Objective obj : {Objective::MinMaxLoad, Objective::MaxMinLoad, Objective::MinReserve}) {
        OracleOptimum r = brute_force_optimum(net, obj);
        EXPECT_FALSE(r.orientation.has_value());
        EXPECT_EQ(r.feasible_count, 0UL);
    }
}

TEST(Oracle, ObjectiveNames) {
    EXPECT_EQ(parse_objective("min-max-load"), Objective::MinMaxLoad);
    EXPECT_EQ(parse_objective("min-m"), Objective::MinMaxLoad);
    EXPECT_EQ(parse_objective("max-min-load"), Objective::MaxMinLoad);
    EXPECT_EQ(parse_objective("max-m"), Objective::MaxMinLoad);
    EXPECT_EQ(parse_objective("min-reserve"), Objective::MinReserve);
    EXPECT_EQ(parse_objective("min-r"), Objective::MinReserve);
    EXPECT_FALSE(parse_objective("min-R ").has_value());
    EXPECT_STREQ(objective_name(Objective::MinReserve), "min-reserve");
}

TEST(Oracle, LeafSinkDemandProfile) {
    Network net = two_node(10, 5);
    RoundingContext ctx(net, Rational(1, 10));  // eps = 1/250
    int s = net.index_of("s"), p = net.index_of("p");

    Rational key = round_down(Rational(5), ctx);
    EXPECT_EQ(key, Rational(624, 125));
    EXPECT_LT(key, Rational(5));

    auto profile = outgoing_profile(net, s, p, Rational(0), Rational(1), ctx);
    ASSERT_EQ(profile.size(), 1UL);
    EXPECT_EQ(profile.begin()->first, key);
    EXPECT_EQ(profile.begin()->second, Rational(5));

    IOValues io = brute_force_io(net, s, p, key, Rational(0), Rational(1), ctx);
    ASSERT_TRUE(io.demand.has_value());
    EXPECT_EQ(*io.demand, Rational(5));
    ASSERT_TRUE(io.supply.has_value());
    EXPECT_EQ(*io.supply, Rational(10));  // the source's production is the only bound

    // a key that no semi-orientation realizes
    IOValues miss = brute_force_io(net, s, p, Rational(5), Rational(0), Rational(1), ctx);
    EXPECT_FALSE(miss.demand.has_value());
}

TEST(Oracle, SemiOrientationWorkedExample) {
    Network net = figure1();
    RoundingContext ctx(net, Rational(1, 10));  // eps = 1/42250
    int u = net.index_of("w2"), v = net.index_of("w1");

    // the two demand-satisfying structures of the subtree at w1
    auto profile = outgoing_profile(net, u, v, Rational(0), Rational(1), ctx);
    ASSERT_EQ(profile.size(), 2UL);
    Rational key_low = Rational::parse("105624/4225");    // w1 fed by w2 and s1
    Rational key_high = Rational::parse("1161856/21125"); // w1 feeds s1
    ASSERT_TRUE(profile.count(key_low) == 1 && profile.count(key_high) == 1);
    EXPECT_EQ(profile.at(key_low), Rational(25));
    EXPECT_EQ(profile.at(key_high), Rational(55));

    // keys are the recomputed folds, idempotent under rounding
    EXPECT_EQ(round_down(key_low, ctx), key_low);
    EXPECT_EQ(round_down(key_high, ctx), key_high);

    IOValues at_low = brute_force_io(net, u, v, key_low, Rational(0), Rational(1), ctx);
    ASSERT_TRUE(at_low.demand.has_value());
    EXPECT_EQ(*at_low.demand, Rational(25));
    IOValues at_high = brute_force_io(net, u, v, key_high, Rational(0), Rational(1), ctx);
    ASSERT_TRUE(at_high.demand.has_value());
    EXPECT_EQ(*at_high.demand, Rational(55));

    // With the load window at [0, 1] the only demand-satisfying supply
    // structure (s2 -> w3 -> w2) is rejected: the rounded flows inherit the
    // key, putting s2's rounded load near 45/20. Relaxing the window exposes
    // the underlying threshold analysis: s2's production pins f to 0.
    EXPECT_FALSE(at_low.supply.has_value());
    EXPECT_FALSE(at_high.supply.has_value());
    auto relaxed_low = brute_force_supply(net, u, v, key_low, Rational(0), Rational(4), ctx);
    ASSERT_TRUE(relaxed_low.has_value());
    EXPECT_EQ(*relaxed_low, Rational(0));
    auto relaxed_high = brute_force_supply(net, u, v, key_high, Rational(0), Rational(4), ctx);
    ASSERT_TRUE(relaxed_high.has_value());
    EXPECT_EQ(*relaxed_high, Rational(0));

    // consistency: no feasible full orientation sends w2 -> w1 (both variants
    // overload w2), so demand > supply on this arc is expected
    unsigned long w2_to_w1 = 0;
    enumerate_orientations(net, [&](const Orientation& o) {
        if (!check_feasible(net, o).feasible) return;
        for (int e = 0; e < net.edge_count(); ++e)
            if (o.tail(net, e) == u && o.head(net, e) == v) ++w2_to_w1;
    });
    EXPECT_EQ(w2_to_w1, 0UL);
}

TEST(Oracle, SupplyThresholds) {
    Network net({Node::source("s", 10), Node::switch_node("w", 8), Node::sink("p", 6)},
                {{"s", "w"}, {"w", "p"}});
    RoundingContext ctx(net, Rational(1, 10));
    int w = net.index_of("w"), p = net.index_of("p");

    // capacity of w binds before the production of s
    Rational key = round_down(Rational(6), ctx);
    auto supply = brute_force_supply(net, w, p, key, Rational(0), Rational(1), ctx);
    ASSERT_TRUE(supply.has_value());
    EXPECT_EQ(*supply, Rational(8));

    // downward closure at the boundary: demands below 8 stay feasible as full
    // orientations, 9 does not
    Network below({Node::source("s", 10), Node::switch_node("w", 8), Node::sink("p", 5)},
                  {{"s", "w"}, {"w", "p"}});
    Network above({Node::source("s", 10), Node::switch_node("w", 8), Node::sink("p", 9)},
                  {{"s", "w"}, {"w", "p"}});
    EXPECT_GT(brute_force_optimum(below, Objective::MinMaxLoad).feasible_count, 0UL);
    EXPECT_EQ(brute_force_optimum(above, Objective::MinMaxLoad).feasible_count, 0UL);
}

TEST(Oracle, SupplyWindowFilters) {
    Network net = two_node(10, 5);
    RoundingContext ctx(net, Rational(1, 10));
    int s = net.index_of("s"), p = net.index_of("p");
    Rational key = round_down(Rational(5), ctx);  // rounded load of s is 624/1250

    auto tight = brute_force_supply(net, s, p, key, Rational(3, 5), Rational(1), ctx);
    EXPECT_FALSE(tight.has_value());
    auto loose = brute_force_supply(net, s, p, key, Rational(2, 5), Rational(1), ctx);
    ASSERT_TRUE(loose.has_value());
    EXPECT_EQ(*loose, Rational(10));
}

TEST(Oracle, DeactivatedSwitchSupply) {
    Network net({Node::switch_node("w1", 5), Node::switch_node("w2", 5), Node::sink("p", 1)},
                {{"w1", "w2"}, {"w2", "p"}});
    RoundingContext ctx(net, Rational(1, 10));
    int w2 = net.index_of("w2"), p = net.index_of("p");

    // either orientation of [w1, w2] leaves an unfed switch, so the drawn
    // flow is pinned to zero by the deactivation rule
    Rational key = round_down(Rational(1), ctx);
    auto supply = brute_force_supply(net, w2, p, key, Rational(0), Rational(1), ctx);
    ASSERT_TRUE(supply.has_value());
    EXPECT_EQ(*supply, Rational(0));

    FlowOptions strict;
    strict.allow_deactivated_switches = false;
    auto none = brute_force_supply(net, w2, p, key, Rational(0), Rational(1), ctx, strict);
    EXPECT_FALSE(none.has_value());

    // demand of the sink exceeds the deliverable 0: the whole net is infeasible
    IOValues io = brute_force_io(net, w2, p, key, Rational(0), Rational(1), ctx);
    ASSERT_TRUE(io.demand.has_value());
    EXPECT_EQ(*io.demand, Rational(1));
    EXPECT_EQ(brute_force_optimum(net, Objective::MinMaxLoad).feasible_count, 0UL);
}
