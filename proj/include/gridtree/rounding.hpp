#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "gridtree/flow.hpp"
#include "gridtree/model.hpp"
#include "gridtree/rational.hpp"

namespace gridtree {

struct GridOverflowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The universe of representable rounded flows. Values partition cleanly by
// octave: a nonzero member with floor_log2 = i is k * 2^i * eps with
// k in [ceil(1/eps), the largest k below 2/eps]; this covers every output of
// the rounding function. The set is trimmed to [x_lo, Pi]: nonzero rounded
// flows of feasible orientations are at least (1 - eps') / Dmax (every exact
// flow is a power divided by at most one in-degree-plus-one factor per node)
// and at most the total power Pi. Never materialized: counting and
// membership are arithmetic.
class FlowGrid {
public:
    FlowGrid(const Network& net, const Rational& eps, const Rational& eps_prime,
             const mpz_class& budget) noexcept(false)
        : eps_(eps) {
        pi_ = net.total_power();
        // full-octave k range: k*eps in [1, 2)
        k_lo_ = ceil_div(eps.den(), eps.num());
        k_hi_ = floor_strict_div(2 * eps.den(), eps.num());

        mpz_class dmax = 1;
        for (int v = 0; v < net.n(); ++v) {
            long deg = static_cast<long>(net.adj(v).size());
            dmax *= deg + (net.is_source(v) ? 1 : 0);
        }
        if (dmax < 1) dmax = 1;
        x_lo_ = (Rational(1) - eps_prime) / Rational(dmax);

        // octave exponent window
        if (pi_ > 0) {
            i_max_ = Rational(pi_).floor_log2();
            mpz_class n_pow_n;
            mpz_ui_pow_ui(n_pow_n.get_mpz_t(), static_cast<unsigned long>(net.n()),
                          static_cast<unsigned long>(net.n()));
            long kappa = ceil_log2(n_pow_n);  // = ceil(n * log2 n)
            i_min_ = std::max(-kappa - 1, x_lo_.floor_log2());
            if (i_min_ > i_max_) i_min_ = i_max_;
        } else {
            i_max_ = -1;
            i_min_ = 0;  // empty octave range: grid is {0}
        }

        count_ = 1;  // the value 0
        for (long i = i_min_; i <= i_max_; ++i) {
            auto [lo, hi] = octave_k_range(i);
            if (lo <= hi) count_ += hi - lo + 1;
            if (count_ > budget)
                throw GridOverflowError("rounded-flow grid exceeds the configured budget of " +
                                        budget.get_str() + " values");
        }
    }

    const mpz_class& size() const { return count_; }
    const mpz_class& total_power() const { return pi_; }
    const Rational& lower_cutoff() const { return x_lo_; }

    bool contains(const Rational& f) const {
        if (f.is_zero()) return true;
        if (f.is_negative()) return false;
        if (f < x_lo_ || Rational(pi_) < f) return false;
        long i = f.floor_log2();
        if (i < i_min_ || i > i_max_) return false;
        Rational step = Rational::pow2(i) * eps_;
        Rational k = f / step;
        return k.is_integer();  // own-octave k bounds hold automatically
    }

    // Ascending enumeration (0 first); only safe for small grids, so refuse
    // beyond the cap.
    void enumerate(const std::function<void(const Rational&)>& fn,
                   unsigned long cap = 50'000'000) const {
        if (count_ > cap)
            throw GridOverflowError("grid too large to materialize: " + count_.get_str());
        fn(Rational(0));
        for (long i = i_min_; i <= i_max_; ++i) {
            auto [lo, hi] = octave_k_range(i);
            Rational step = Rational::pow2(i) * eps_;
            for (mpz_class k = lo; k <= hi; ++k) fn(Rational(k) * step);
        }
    }

    // members of octave i clipped to [x_lo, Pi]
    std::pair<mpz_class, mpz_class> octave_k_range(long i) const {
        Rational step = Rational::pow2(i) * eps_;
        mpz_class lo = k_lo_, hi = k_hi_;
        Rational lo_bound = x_lo_ / step;
        mpz_class lo_trim = ceil_rational(lo_bound);
        if (lo_trim > lo) lo = lo_trim;
        Rational hi_bound = Rational(pi_) / step;
        mpz_class hi_trim = hi_bound.floor();
        if (hi_trim < hi) hi = hi_trim;
        return {lo, hi};
    }

    long octave_min() const { return i_min_; }
    long octave_max() const { return i_max_; }

private:
    static mpz_class ceil_div(const mpz_class& a, const mpz_class& b) {
        mpz_class q;
        mpz_cdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
        return q;
    }
    // largest integer strictly below a/b
    static mpz_class floor_strict_div(const mpz_class& a, const mpz_class& b) {
        mpz_class q, r;
        mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
        if (r == 0) q -= 1;
        return q;
    }
    static mpz_class ceil_rational(const Rational& r) {
        return ceil_div(r.num(), r.den());
    }
    static long ceil_log2(const mpz_class& v) {
        size_t bits = mpz_sizeinbase(v.get_mpz_t(), 2);
        mpz_class pow;
        mpz_ui_pow_ui(pow.get_mpz_t(), 2, static_cast<unsigned long>(bits - 1));
        return pow == v ? static_cast<long>(bits - 1) : static_cast<long>(bits);
    }

    Rational eps_;
    mpz_class pi_;
    Rational x_lo_;
    long i_min_ = 0, i_max_ = -1;
    mpz_class k_lo_, k_hi_;
    mpz_class count_;
};

// eps, eps' and (optionally) the flow/load grids for one instance size.
class RoundingContext {
public:
    // eps = eps' / (n^2 + 1)^2
    RoundingContext(const Network& net, const Rational& eps_prime)
        : n_(net.n()), eps_prime_(eps_prime) {
        if (!(Rational(0) < eps_prime && eps_prime < Rational(1, 2)))
            throw std::invalid_argument("eps_prime must lie in (0, 1/2)");
        Rational m(static_cast<long>(n_) * n_ + 1);
        eps_ = eps_prime / (m * m);
    }

    // for worked examples that pin eps directly (no derived eps', no grids)
    static RoundingContext raw_eps(const Network& net, const Rational& eps) {
        if (!eps.is_positive()) throw std::invalid_argument("eps must be positive");
        RoundingContext ctx;
        ctx.n_ = net.n();
        ctx.eps_ = eps;
        return ctx;
    }

    const Rational& eps() const { return eps_; }
    const std::optional<Rational>& eps_prime() const { return eps_prime_; }
    int n() const { return n_; }

    bool has_grid() const { return grid_.has_value(); }
    const FlowGrid& grid() const {
        if (!grid_) throw std::logic_error("grids were not built for this context");
        return *grid_;
    }

    // L-grid: loads f/Prod(s) with f in the flow grid, clipped to [0, 1].
    bool load_grid_contains(const Network& net, const Rational& l) const {
        if (l.is_negative() || Rational(1) < l) return false;
        if (l.is_zero()) return true;
        for (int s : net.sources())
            if (grid().contains(l * Rational(net.node(s).value))) return true;
        return false;
    }

    mpz_class load_grid_size_bound(const Network& net) const {
        mpz_class total = 1;
        for (int s : net.sources()) {
            (void)s;
            total += grid().size();
        }
        return total;
    }

    friend RoundingContext build_grids(const Network& net, const Rational& eps_prime,
                                       const mpz_class& budget);

private:
    RoundingContext() = default;

    int n_ = 0;
    Rational eps_;
    std::optional<Rational> eps_prime_;
    std::optional<FlowGrid> grid_;
};

inline mpz_class default_grid_budget() { return mpz_class(1) << 62; }

inline RoundingContext build_grids(const Network& net, const Rational& eps_prime,
                                   const mpz_class& budget = default_grid_budget()) {
    RoundingContext ctx(net, eps_prime);
    ctx.grid_.emplace(net, ctx.eps(), eps_prime, budget);
    return ctx;
}

// a(f): f rounded down to the nearest multiple of e(f) = 2^floor(log2 f) * eps.
inline Rational round_down(const Rational& f, const RoundingContext& ctx) {
    if (f.is_zero()) return Rational(0);
    if (f.is_negative()) throw std::domain_error("round_down: negative flow");
    Rational e = Rational::pow2(f.floor_log2()) * ctx.eps();
    return Rational((f / e).floor()) * e;
}

// The fold: oplus((f_1..f_p), d) = a(oplus((f_1..f_p-1), d) + f_p / d),
// empty fold = 0. The recursive form is load-bearing: rounding must happen
// after every partial sum, exactly as the flow recomputation does it.
inline Rational oplus(const std::vector<Rational>& values, long d, const RoundingContext& ctx) {
    if (d < 1) throw std::invalid_argument("oplus: divisor must be >= 1");
    Rational acc(0);
    Rational divisor(d);
    for (const Rational& x : values) acc = round_down(acc + x / divisor, ctx);
    return acc;
}

// Rounded flow of Def-4.4 shape: recomputed with the fold, never rounded
// from the exact flow.
struct RoundedFlowAssignment {
    std::vector<Rational> arc_rounded;      // per edge, along its orientation
    std::vector<Rational> entering_rounded; // per node
    std::vector<uint8_t> entering_defined;  // switches/sinks with no entering arc are undefined

    bool defined(int v) const { return entering_defined[static_cast<size_t>(v)] != 0; }
};

inline RoundedFlowAssignment rounded_flow(const Network& net, const Orientation& o,
                                          const RoundingContext& ctx) {
    const int n = net.n();
    RoundedFlowAssignment rf;
    rf.arc_rounded.assign(static_cast<size_t>(net.edge_count()), Rational(0));
    rf.entering_rounded.assign(static_cast<size_t>(n), Rational(0));
    rf.entering_defined.assign(static_cast<size_t>(n), 1);

    std::vector<int> pending(static_cast<size_t>(n), 0);
    std::vector<int> in_degree(static_cast<size_t>(n), 0);
    for (int e = 0; e < net.edge_count(); ++e) {
        auto [t, h] = o.arc(net, e);
        ++pending[static_cast<size_t>(t)];
        ++in_degree[static_cast<size_t>(h)];
    }
    std::vector<int> stack;
    for (int v = 0; v < n; ++v)
        if (pending[static_cast<size_t>(v)] == 0) stack.push_back(v);

    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        const Node& nd = net.node(v);
        int din = in_degree[static_cast<size_t>(v)];

        // successors in numbering order; for sinks the power term folds first
        std::vector<std::pair<int, Rational>> succ;  // (head rank, rounded arc value)
        for (auto [nb, e] : net.adj(v)) {
            if (o.tail(net, e) != v) continue;
            succ.emplace_back(net.number(nb), rf.arc_rounded[static_cast<size_t>(e)]);
        }
        std::sort(succ.begin(), succ.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<Rational> elements;
        if (nd.kind == NodeKind::Sink) elements.push_back(Rational(nd.value));
        for (auto& [rank, val] : succ) {
            (void)rank;
            elements.push_back(val);
        }

        if (nd.kind == NodeKind::Source) {
            rf.entering_rounded[static_cast<size_t>(v)] = oplus(elements, din + 1, ctx);
        } else if (din > 0) {
            rf.entering_rounded[static_cast<size_t>(v)] = oplus(elements, din, ctx);
        } else {
            rf.entering_defined[static_cast<size_t>(v)] = 0;
        }

        for (auto [nb, e] : net.adj(v)) {
            (void)nb;
            if (o.head(net, e) != v) continue;
            if (rf.defined(v))
                rf.arc_rounded[static_cast<size_t>(e)] = rf.entering_rounded[static_cast<size_t>(v)];
            int t = o.tail(net, e);
            if (--pending[static_cast<size_t>(t)] == 0) stack.push_back(t);
        }
    }
    return rf;
}

// (rounded min load, rounded max load, difference) over sources.
inline std::tuple<Rational, Rational, Rational> rounded_objectives(const Network& net,
                                                                   const Orientation& o,
                                                                   const RoundingContext& ctx) {
    RoundedFlowAssignment rf = rounded_flow(net, o, ctx);
    std::vector<int> srcs = net.sources();
    if (srcs.empty()) throw std::domain_error("rounded_objectives: network has no source");
    auto load = [&](int s) {
        return rf.entering_rounded[static_cast<size_t>(s)] / Rational(net.node(s).value);
    };
    Rational lo = load(srcs[0]), hi = lo;
    for (size_t k = 1; k < srcs.size(); ++k) {
        Rational l = load(srcs[k]);
        if (l < lo) lo = l;
        if (hi < l) hi = l;
    }
    return {lo, hi, hi - lo};
}

}  // namespace gridtree
