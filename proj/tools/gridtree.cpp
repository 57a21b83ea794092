// Command line front end: flow reports, feasibility checks, exact and
// approximating solvers, the brute-force oracle, instance generators and a
// CSV benchmark harness. All reports are deterministic for identical argv
// and input files; the bench wall-time column is the one exception unless
// --stable zeroes it.
#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gridtree/exact_solver.hpp"
#include "gridtree/fptas.hpp"
#include "gridtree/hardgen.hpp"
#include "gridtree/oracle.hpp"

using namespace gridtree;

namespace {

constexpr int kOk = 0;
constexpr int kInfeasible = 1;
constexpr int kUsage = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

// exact string is authoritative; the decimal is 6 significant digits
json dual(const Rational& r) {
    json j;
    j["exact"] = r.to_string();
    j["decimal"] = "≈" + approx_decimal(r);
    return j;
}

json violations_to_json(const Network& net, const FeasibilityReport& report) {
    json arr = json::array();
    for (const Violation& v : report.violations) {
        json jv;
        jv["node"] = net.node(v.node).id;
        jv["kind"] = violation_name(v.kind);
        arr.push_back(jv);
    }
    return arr;
}

void emit(const json& doc) { std::cout << doc.dump(2) << "\n"; }

void emit_error(const std::string& type, const std::string& message) {
    json doc;
    doc["error"]["type"] = type;
    doc["error"]["message"] = message;
    std::cerr << doc.dump(2) << "\n";
}

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

std::vector<mpz_class> parse_values(const std::string& text) {
    std::vector<mpz_class> out;
    for (const std::string& item : split_csv(text)) out.push_back(mpz_class(item));
    if (out.empty()) throw std::invalid_argument("expected a comma-separated value list");
    return out;
}

struct IoArgs {
    std::string instance;
    std::string orientation;
    std::string objective;
    std::string eps_prime;
    bool rounded = false;
    bool strict_switches = false;
};

FlowOptions flow_options(const IoArgs& a) {
    return FlowOptions{.allow_deactivated_switches = !a.strict_switches};
}

Objective require_objective(const std::string& name) {
    std::optional<Objective> obj = parse_objective(name);
    if (!obj) throw std::invalid_argument("unknown objective '" + name + "'");
    return *obj;
}

json flow_report(const Network& net, const Orientation& o, const FlowAssignment& fa,
                 const FeasibilityReport& report) {
    json doc;
    doc["feasible"] = report.feasible;
    doc["arcs"] = json::array();
    for (int e = 0; e < net.edge_count(); ++e) {
        auto [t, h] = o.arc(net, e);
        json ja;
        ja["tail"] = net.node(t).id;
        ja["head"] = net.node(h).id;
        ja["flow"] = dual(fa.arc_flow[static_cast<size_t>(e)]);
        doc["arcs"].push_back(ja);
    }
    doc["loads"] = json::array();
    for (int s : net.sources()) {
        json jl;
        jl["id"] = net.node(s).id;
        jl["load"] = dual(load_of(net, fa, s));
        doc["loads"].push_back(jl);
    }
    doc["violations"] = violations_to_json(net, report);
    return doc;
}

int cmd_flow(const IoArgs& a) {
    Network net = parse_network(read_file(a.instance));
    Orientation o = parse_orientation(net, read_file(a.orientation));
    FlowAssignment fa = compute_flow(net, o);
    FeasibilityReport report = check_feasible(net, fa, flow_options(a));
    json doc = flow_report(net, o, fa, report);
    if (a.rounded) {
        if (a.eps_prime.empty())
            throw std::invalid_argument("--rounded requires --eps-prime");
        RoundingContext ctx(net, Rational::parse(a.eps_prime));
        RoundedFlowAssignment rf = rounded_flow(net, o, ctx);
        json jr;
        jr["eps_prime"] = ctx.eps_prime()->to_string();
        jr["eps"] = ctx.eps().to_string();
        jr["arcs"] = json::array();
        for (int e = 0; e < net.edge_count(); ++e) {
            auto [t, h] = o.arc(net, e);
            json ja;
            ja["tail"] = net.node(t).id;
            ja["head"] = net.node(h).id;
            ja["flow"] = dual(rf.arc_rounded[static_cast<size_t>(e)]);
            jr["arcs"].push_back(ja);
        }
        jr["loads"] = json::array();
        for (int s : net.sources()) {
            json jl;
            jl["id"] = net.node(s).id;
            jl["load"] = dual(rf.entering_rounded[static_cast<size_t>(s)] /
                              Rational(net.node(s).value));
            jr["loads"].push_back(jl);
        }
        doc["rounded"] = jr;
    }
    emit(doc);
    return report.feasible ? kOk : kInfeasible;
}

int cmd_check(const IoArgs& a) {
    Network net = parse_network(read_file(a.instance));
    Orientation o = parse_orientation(net, read_file(a.orientation));
    FeasibilityReport report = check_feasible(net, o, flow_options(a));
    json doc;
    doc["feasible"] = report.feasible;
    doc["violations"] = violations_to_json(net, report);
    emit(doc);
    return report.feasible ? kOk : kInfeasible;
}

int cmd_solve(const IoArgs& a) {
    Network net = parse_network(read_file(a.instance));
    FlowOptions opts = flow_options(a);
    Objective objective = require_objective(a.objective);

    if (objective == Objective::MinMaxLoad) {
        if (!a.eps_prime.empty())
            throw std::invalid_argument("min-max-load is solved exactly; --eps-prime does not apply");
        std::optional<MinMaxLoadResult> result = solve_min_max_load(net, opts);
        json doc;
        doc["objective"] = objective_name(objective);
        doc["feasible"] = result.has_value();
        if (!result) {
            emit(doc);
            return kInfeasible;
        }
        doc["value"] = dual(result->value);
        doc["iterations"] = result->iterations;
        doc["orientation"] = orientation_to_json(net, result->orientation);
        emit(doc);
        return kOk;
    }

    if (a.eps_prime.empty())
        throw std::invalid_argument("--eps-prime is required for " + a.objective);
    Rational eps_prime = Rational::parse(a.eps_prime);
    reset_rational_op_count();
    std::optional<FptasResult> result =
        objective == Objective::MaxMinLoad ? solve_max_min_load_fptas(net, eps_prime, opts)
                                           : solve_min_reserve_fptas(net, eps_prime, opts);
    uint64_t ops = rational_op_count();

    json doc;
    doc["objective"] = objective_name(objective);
    doc["eps_prime"] = eps_prime.to_string();
    doc["feasible"] = result.has_value();
    if (!result) {
        emit(doc);
        return kInfeasible;
    }
    doc["value"] = dual(result->value);
    RoundingContext ctx(net, eps_prime);
    auto [rounded_lo, rounded_hi, rounded_spread] =
        rounded_objectives(net, result->orientation, ctx);
    (void)rounded_hi;
    doc["rounded_value"] =
        dual(objective == Objective::MaxMinLoad ? rounded_lo : rounded_spread);
    doc["orientation"] = orientation_to_json(net, result->orientation);
    json stats;
    stats["grid_size"] = build_grids(net, eps_prime).grid().size().get_str();
    IOTables tables(net, ctx, Rational(0), Rational(1), opts);
    stats["entries"] = tables.demand_entry_count() + tables.supply_entry_count();
    stats["rational_ops"] = ops;
    doc["table_stats"] = stats;
    emit(doc);
    return kOk;
}

int cmd_oracle(const IoArgs& a) {
    Network net = parse_network(read_file(a.instance));
    Objective objective = require_objective(a.objective);
    OracleOptimum best = brute_force_optimum(net, objective, flow_options(a));
    json doc;
    doc["objective"] = objective_name(objective);
    doc["feasible"] = best.orientation.has_value();
    if (best.orientation) {
        doc["value"] = dual(best.value);
        doc["orientation"] = orientation_to_json(net, *best.orientation);
    }
    doc["count_feasible"] = best.feasible_count;
    emit(doc);
    return best.orientation ? kOk : kInfeasible;
}

json strings(const std::vector<std::string>& v) {
    json arr = json::array();
    for (const std::string& s : v) arr.push_back(s);
    return arr;
}

json reduction_meta_json(const ReductionMeta& rm, int node_count) {
    json jm;
    jm["kind"] = "reduction";
    jm["n_items"] = rm.n_items;
    jm["scale"] = rm.scale;
    jm["xs"] = json::array();
    for (const mpz_class& x : rm.xs) jm["xs"].push_back(x.get_str());
    jm["target"] = rm.target.get_str();
    jm["m"] = rm.m;
    jm["node_count"] = node_count;
    json roles;
    roles["s"] = rm.s_id;
    roles["w"] = rm.w_id;
    roles["s_c"] = rm.s_c_id;
    roles["w_c"] = rm.w_c_id;
    roles["p_c"] = rm.p_c_id;
    roles["t"] = strings(rm.t_ids);
    roles["r"] = strings(rm.r_ids);
    roles["s_items"] = strings(rm.s_ids);
    roles["q"] = strings(rm.q_ids);
    roles["w_items"] = strings(rm.w_ids);
    roles["v_items"] = strings(rm.v_ids);
    roles["item_sinks"] = strings(rm.item_sink_ids);
    json chains = json::array();
    for (const auto& chain : rm.item_sink_chain_ids) chains.push_back(strings(chain));
    roles["item_chains"] = chains;
    roles["shared_chain"] = strings(rm.shared_sink_chain_ids);
    jm["roles"] = roles;
    return jm;
}

struct GenerateArgs {
    std::string xs;
    std::string target;
    std::string x = "0";
    int m = 3;
    std::string terminal = "source";
    int exponent = 1;
    long max_bits = 1L << 20;
    bool strict_capacities = false;
    int n = 8;
    unsigned long seed = 1;
    RandomTreeProfile profile;
    std::string out;
    std::string meta_out;
};

NodeKind parse_terminal(const std::string& name) {
    if (name == "source") return NodeKind::Source;
    if (name == "switch") return NodeKind::Switch;
    if (name == "sink") return NodeKind::Sink;
    throw std::invalid_argument("terminal must be source, switch or sink");
}

int emit_generated(const Network& net, json meta, const GenerateArgs& a) {
    json doc;
    doc["instance"] = network_to_json(net);
    doc["meta"] = std::move(meta);
    if (!a.out.empty()) write_file(a.out, doc["instance"].dump(2) + "\n");
    if (!a.meta_out.empty()) write_file(a.meta_out, doc["meta"].dump(2) + "\n");
    emit(doc);
    return kOk;
}

int cmd_generate_random(const GenerateArgs& a) {
    Network net = gen_random_tree(a.n, a.seed, a.profile);
    json meta;
    meta["kind"] = "random";
    meta["n"] = a.n;
    meta["seed"] = a.seed;
    meta["node_count"] = net.n();
    json prof;
    prof["source_weight"] = a.profile.source_weight;
    prof["switch_weight"] = a.profile.switch_weight;
    prof["sink_weight"] = a.profile.sink_weight;
    prof["prod"] = json::array({a.profile.prod_lo, a.profile.prod_hi});
    prof["cap"] = json::array({a.profile.cap_lo, a.profile.cap_hi});
    prof["pow"] = json::array({a.profile.pow_lo, a.profile.pow_hi});
    prof["unbounded_percent"] = a.profile.unbounded_percent;
    meta["profile"] = prof;
    return emit_generated(net, meta, a);
}

int cmd_generate_gadget(const GenerateArgs& a) {
    mpz_class x(a.x);
    Network net = gen_gadget(x, a.m, parse_terminal(a.terminal));
    json meta;
    meta["kind"] = "gadget";
    meta["x"] = x.get_str();
    meta["m"] = a.m;
    meta["terminal"] = a.terminal;
    meta["node_count"] = net.n();
    return emit_generated(net, meta, a);
}

int cmd_generate_reduction(const GenerateArgs& a) {
    auto [net, rm] =
        gen_subset_sum_reduction(parse_values(a.xs), mpz_class(a.target),
                                 ReductionOptions{.strict_capacities = a.strict_capacities});
    return emit_generated(net, reduction_meta_json(rm, net.n()), a);
}

int cmd_generate_inapprox(const GenerateArgs& a) {
    InapproxOptions opts;
    opts.max_bits = a.max_bits;
    opts.strict_capacities = a.strict_capacities;
    auto [net, im] =
        gen_inapprox_instance(parse_values(a.xs), mpz_class(a.target), a.exponent, opts);
    const ReductionMeta& rm = im.reduction;
    int base_nodes = 2 * rm.m * (rm.n_items + 1) + 7 * rm.n_items + 5;
    json meta;
    meta["kind"] = "inapprox";
    meta["exponent_c"] = im.exponent_c;
    meta["ratio"] = im.ratio.get_str();
    meta["ballast"] = im.ballast.get_str();
    meta["denominator"] = im.denominator.get_str();
    meta["probe_production"] = im.probe_production.to_string();
    meta["ballast_sinks"] = strings(im.ballast_ids);
    meta["node_count"] = net.n();
    meta["reduction"] = reduction_meta_json(rm, base_nodes);
    return emit_generated(net, meta, a);
}

struct BenchArgs {
    std::string suite = "random";
    std::string sizes = "6,8,10";
    int seeds = 10;
    std::string eps_prime = "1/4";
    std::string objectives = "min-max-load,max-min-load,min-reserve";
    bool stable = false;
};

int cmd_bench(const BenchArgs& a) {
    if (a.suite != "random")
        throw std::invalid_argument("unknown suite '" + a.suite + "' (available: random)");
    if (a.seeds < 1) throw std::invalid_argument("--seeds must be at least 1");
    std::vector<int> sizes;
    for (const std::string& tok : split_csv(a.sizes)) {
        int n = std::stoi(tok);
        if (n < 2) throw std::invalid_argument("--sizes entries must be at least 2");
        sizes.push_back(n);
    }
    std::vector<std::string> objectives = split_csv(a.objectives);
    for (const std::string& tok : objectives)
        if (tok != "min-max-load" && tok != "max-min-load" && tok != "min-reserve" &&
            tok != "oracle")
            throw std::invalid_argument("unknown bench objective '" + tok + "'");
    Rational eps_prime = Rational::parse(a.eps_prime);

    std::ostringstream csv;
    csv << "instance,n,grid_size,eps_prime,objective,value,wall_ms,rational_ops\n";
    for (int n : sizes) {
        for (unsigned long seed = 1; seed <= static_cast<unsigned long>(a.seeds); ++seed) {
            Network net = gen_random_tree(n, seed);
            std::string id = "random-n" + std::to_string(n) + "-s" + std::to_string(seed);
            for (const std::string& objective : objectives) {
                std::string grid, eps_col, value;
                bool fptas = objective == "max-min-load" || objective == "min-reserve";
                if (fptas) {
                    eps_col = eps_prime.to_string();
                    grid = build_grids(net, eps_prime).grid().size().get_str();
                }
                reset_rational_op_count();
                auto t0 = std::chrono::steady_clock::now();
                if (objective == "min-max-load") {
                    auto r = solve_min_max_load(net);
                    value = r ? r->value.to_string() : "infeasible";
                } else if (objective == "max-min-load") {
                    auto r = solve_max_min_load_fptas(net, eps_prime);
                    value = r ? r->value.to_string() : "infeasible";
                } else if (objective == "min-reserve") {
                    auto r = solve_min_reserve_fptas(net, eps_prime);
                    value = r ? r->value.to_string() : "infeasible";
                } else if (net.edge_count() > enumeration_limit()) {
                    value = "skipped";
                } else {
                    OracleOptimum best = brute_force_optimum(net, Objective::MinMaxLoad);
                    value = best.orientation ? best.value.to_string() : "infeasible";
                }
                auto t1 = std::chrono::steady_clock::now();
                uint64_t ops = rational_op_count();
                std::string wall = "0";
                if (!a.stable) {
                    double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
                    char buf[32];
                    std::snprintf(buf, sizeof buf, "%.3f", ms);
                    wall = buf;
                }
                csv << id << ',' << net.n() << ',' << grid << ',' << eps_col << ','
                    << objective << ',' << value << ',' << wall << ',' << ops << "\n";
            }
        }
    }
    std::cout << csv.str();
    return kOk;
}

const char* classify(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e)) return "input";
    if (dynamic_cast<const ValidationError*>(&e)) return "input";
    if (dynamic_cast<const LimitExceededError*>(&e)) return "limit";
    if (dynamic_cast<const GridOverflowError*>(&e)) return "budget";
    if (dynamic_cast<const std::length_error*>(&e)) return "budget";
    if (dynamic_cast<const std::invalid_argument*>(&e)) return "usage";
    return "error";
}

int run(int argc, char** argv) {
    CLI::App app{"equal-split orientation toolkit for tree-shaped networks"};
    app.require_subcommand(1);

    IoArgs io;
    GenerateArgs gen_args;
    BenchArgs bench_args;

    auto add_instance = [&](CLI::App* cmd) {
        cmd->add_option("--instance", io.instance, "instance JSON file")->required();
    };
    auto add_orientation = [&](CLI::App* cmd) {
        cmd->add_option("--orientation", io.orientation, "orientation JSON file")->required();
    };
    auto add_strict = [&](CLI::App* cmd) {
        cmd->add_flag("--no-switch-deactivation", io.strict_switches,
                      "treat a switch without an entering arc as a demand violation");
    };

    CLI::App* flow_cmd = app.add_subcommand(
        "flow", "per-arc flows, per-source loads and violations for an orientation");
    add_instance(flow_cmd);
    add_orientation(flow_cmd);
    add_strict(flow_cmd);
    flow_cmd->add_flag("--rounded", io.rounded, "add rounded flows and loads to the report");
    flow_cmd->add_option("--eps-prime", io.eps_prime, "eps' for the rounded report");

    CLI::App* check_cmd =
        app.add_subcommand("check", "feasibility verdict and violations for an orientation");
    add_instance(check_cmd);
    add_orientation(check_cmd);
    add_strict(check_cmd);

    CLI::App* solve_cmd = app.add_subcommand(
        "solve", "optimize an objective (min-max-load exactly, the others approximately)");
    add_instance(solve_cmd);
    add_strict(solve_cmd);
    solve_cmd->add_option("--objective", io.objective,
                          "min-max-load | max-min-load | min-reserve")
        ->required();
    solve_cmd->add_option("--eps-prime", io.eps_prime,
                          "approximation parameter in (0, 1/2), e.g. 1/10");

    CLI::App* oracle_cmd =
        app.add_subcommand("oracle", "brute-force optimum by full orientation enumeration");
    add_instance(oracle_cmd);
    add_strict(oracle_cmd);
    oracle_cmd->add_option("--objective", io.objective,
                           "min-max-load | max-min-load | min-reserve")
        ->required();

    CLI::App* gen_cmd = app.add_subcommand("generate", "instance generators");
    gen_cmd->require_subcommand(1);
    auto add_out = [&](CLI::App* cmd) {
        cmd->add_option("--out", gen_args.out, "also write the instance JSON to this file");
        cmd->add_option("--meta-out", gen_args.meta_out, "also write the meta JSON to this file");
    };
    CLI::App* gen_random = gen_cmd->add_subcommand("random", "seeded random tree");
    gen_random->add_option("--n", gen_args.n, "node count")->required();
    gen_random->add_option("--seed", gen_args.seed, "random seed")->required();
    gen_random->add_option("--source-weight", gen_args.profile.source_weight);
    gen_random->add_option("--switch-weight", gen_args.profile.switch_weight);
    gen_random->add_option("--sink-weight", gen_args.profile.sink_weight);
    gen_random->add_option("--prod-lo", gen_args.profile.prod_lo);
    gen_random->add_option("--prod-hi", gen_args.profile.prod_hi);
    gen_random->add_option("--cap-lo", gen_args.profile.cap_lo);
    gen_random->add_option("--cap-hi", gen_args.profile.cap_hi);
    gen_random->add_option("--pow-lo", gen_args.profile.pow_lo);
    gen_random->add_option("--pow-hi", gen_args.profile.pow_hi);
    gen_random->add_option("--unbounded-percent", gen_args.profile.unbounded_percent);
    add_out(gen_random);

    CLI::App* gen_gadget_cmd = gen_cmd->add_subcommand("gadget", "binary encoding chain");
    gen_gadget_cmd->add_option("--x", gen_args.x, "encoded value (x + 2 must fit m bits)")
        ->required();
    gen_gadget_cmd->add_option("--m", gen_args.m, "chain length parameter, at least 3")
        ->required();
    gen_gadget_cmd->add_option("--terminal", gen_args.terminal, "source | switch | sink");
    add_out(gen_gadget_cmd);

    CLI::App* gen_reduction = gen_cmd->add_subcommand(
        "reduction", "subset-sum instance encoded as an orientation problem");
    gen_reduction->add_option("--xs", gen_args.xs, "comma-separated item values")->required();
    gen_reduction->add_option("--target,--B", gen_args.target, "subset-sum target")->required();
    gen_reduction->add_flag("--strict-capacities", gen_args.strict_capacities,
                            "write explicit capacities instead of the unbounded token");
    add_out(gen_reduction);

    CLI::App* gen_inapprox = gen_cmd->add_subcommand(
        "inapprox", "reduction amplified with private high-power sinks");
    gen_inapprox->add_option("--xs", gen_args.xs, "comma-separated item values")->required();
    gen_inapprox->add_option("--target,--B", gen_args.target, "subset-sum target")->required();
    gen_inapprox->add_option("--exponent", gen_args.exponent, "gap exponent c, at least 1");
    gen_inapprox->add_option("--max-bits", gen_args.max_bits, "integer bit budget");
    gen_inapprox->add_flag("--strict-capacities", gen_args.strict_capacities);
    add_out(gen_inapprox);

    CLI::App* bench_cmd =
        app.add_subcommand("bench", "CSV benchmark over generated instance suites");
    bench_cmd->add_option("--suite", bench_args.suite, "instance suite (random)");
    bench_cmd->add_option("--sizes", bench_args.sizes, "comma-separated node counts");
    bench_cmd->add_option("--seeds", bench_args.seeds, "seeds 1..K per size");
    bench_cmd->add_option("--eps-prime", bench_args.eps_prime, "eps' for the approximating rows");
    bench_cmd->add_option("--objectives", bench_args.objectives,
                          "comma-separated: min-max-load,max-min-load,min-reserve,oracle");
    bench_cmd->add_flag("--stable", bench_args.stable,
                        "zero the wall-time column for byte-identical output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        emit_error("usage", e.what());
        return kUsage;
    }

    try {
        if (*flow_cmd) return cmd_flow(io);
        if (*check_cmd) return cmd_check(io);
        if (*solve_cmd) return cmd_solve(io);
        if (*oracle_cmd) return cmd_oracle(io);
        if (*gen_random) return cmd_generate_random(gen_args);
        if (*gen_gadget_cmd) return cmd_generate_gadget(gen_args);
        if (*gen_reduction) return cmd_generate_reduction(gen_args);
        if (*gen_inapprox) return cmd_generate_inapprox(gen_args);
        if (*bench_cmd) return cmd_bench(bench_args);
    } catch (const std::exception& e) {
        emit_error(classify(e), e.what());
        return kUsage;
    }
    emit_error("usage", "no subcommand given");
    return kUsage;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
