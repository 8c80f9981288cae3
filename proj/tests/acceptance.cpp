#include "cocycle/averages.hpp"
#include "cocycle/eset.hpp"
#include "cocycle/random.hpp"
#include "cocycle/symbolic.hpp"
#include "cocycle/walk.hpp"

#include <CLI11.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace cocycle;

namespace {

const FixedAngle golden = resolve_alpha(AlphaSpec::golden());

/// Oscillation of the desk demonstration recorded by the first pilot run.
constexpr double pinned_oscillation = 0.10182381399999987;

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Timer {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const DeskSchedule& demo()
{
    static const DeskSchedule d = make_desk_schedule({{2, 6}, {30, 300}}, BoundSpec::constant(2));
    return d;
}

std::vector<FixedAngle> thetas(std::uint64_t seed, std::size_t n)
{
    std::vector<FixedAngle> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_theta(seed, i));
    return out;
}

// ---------------------------------------------------------------------------

Outcome three_routes(unsigned threads)
{
    const std::vector<std::uint64_t> Ns{64, 256, 512};
    const auto ex = exact_average_series(golden, demo().set, Ns);
    const auto rd = reduced_average_series(golden, demo().set, {}, Ns, 10000, 1, threads);
    MonteCarloOptions opt;
    opt.samples = 10000;
    opt.seed = 1;
    opt.threads = threads;
    const auto mc = mc_triple_average(golden, demo().set, Ns, opt);
    bool ok = true;
    std::ostringstream os;
    os.precision(6);
    for (std::size_t k = 0; k < Ns.size(); ++k) {
        const auto &e = ex.entries[k], &r = rd.entries[k], &m = mc.entries[k];
        const auto z = [](double a, double sa, double b, double sb) {
            return (a - b) / std::sqrt(sa * sa + sb * sb);
        };
        const double z_er = z(r.A, r.stderr_A, e.A, 0), z_em = z(m.A, m.stderr_A, e.A, 0);
        const double z_rm = z(r.A, r.stderr_A, m.A, m.stderr_A);
        ok = ok && std::fabs(z_er) <= 3 && std::fabs(z_em) <= 3 && std::fabs(z_rm) <= 3;
        os << " N=" << Ns[k] << ": exact " << e.A << " reduced " << r.A << " mc " << m.A << " (z " << z_er << ','
           << z_em << ',' << z_rm << ");";
    }
    return {ok, os.str()};
}

Outcome exact_regression()
{
    using big = boost::multiprecision::cpp_bin_float_100;
    PartitionStepFn f(golden);
    f.step();
    f.step();
    const auto levels = f.level_measures();
    const big alpha = (sqrt(big(5)) - 1) / 2;
    const auto measure = [&](std::int64_t v) {
        const Wide& w = levels.at(v);
        return ldexp(big(w.hi), 0) + ldexp(big(static_cast<std::uint64_t>(w.lo >> 64)), -64) +
               ldexp(big(static_cast<std::uint64_t>(w.lo)), -128);
    };
    const big err0 = abs(measure(0) - 2 * (1 - alpha));
    const big err2 = abs(measure(2) - (alpha - big(0.5)));
    const big errm2 = abs(measure(-2) - (alpha - big(0.5)));
    const big worst = std::max({err0, err2, errm2});
    const bool ok = levels.size() == 3 && worst < ldexp(big(1), -100);
    return {ok, fmt(" m(phi2=0)=%.15f m(phi2=+-2)=%.15f, worst error 2^%.1f", static_cast<double>(measure(0)),
                    static_cast<double>(measure(2)), worst == 0 ? -INFINITY : static_cast<double>(log2(worst)))};
}

Outcome desk_oscillation(unsigned threads)
{
    const auto Ns = merge_horizons(log_horizons(2, 6, 5), schedule_horizons(demo().schedule), 100, 1000000);
    const auto s = reduced_average_series(golden, demo().set, {}, Ns, 1000, 1, threads);
    const auto rep = oscillation_report(s, demo().schedule, demo().report);
    const double osc = rep.oscillation();
    const double rel = std::fabs(osc - pinned_oscillation) / pinned_oscillation;
    const bool ok = osc >= 0.10 && rel <= 0.05;
    return {ok, fmt(" oscillation %.6f (A from %.6f at N=%llu to %.6f at N=%llu), pinned %.6f, deviation %.2g%%", osc,
                    rep.min_A, static_cast<unsigned long long>(rep.N_min), rep.max_A,
                    static_cast<unsigned long long>(rep.N_max), pinned_oscillation, 100 * rel)};
}

Outcome paper_certificate()
{
    const auto C = BoundSpec::constant(2);
    const long double rho = 0.99L;
    const Schedule s = generate_paper_schedule(C, 10, rho);
    const auto rep = verify_schedule(s, C.fn);
    // Reference ratio: 50-digit evaluation for exact integers, rho for log-space values.
    using big = boost::multiprecision::cpp_bin_float_50;
    const auto oracle = [](long double m, long double c, const LogNum& y, const LogNum& x) {
        return static_cast<long double>(big(m) * big(c) * big(y.exact()) / sqrt(log(big(x.exact()))));
    };
    long double worst_rel = 0;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& row = rep.rows[i];
        const auto& iv = s.intervals[i];
        const LogNum end = iv.l + iv.r;
        const long double m = static_cast<long double>(i + 1);
        const long double want_b = end.is_exact() ? oracle(m, 2, iv.l, end) : rho;
        worst_rel = std::max(worst_rel, std::fabs(row.b.ratio - want_b) / want_b);
        if (row.has_c) {
            const auto& next = s.intervals[i + 1].l;
            const long double want_c = next.is_exact() ? oracle(m, 2, end + LogNum(1), next) : rho;
            worst_rel = std::max(worst_rel, std::fabs(row.c.ratio - want_c) / want_c);
        }
    }
    int flipped = 0, mutations = 0;
    for (std::size_t m = 1; m <= s.intervals.size(); ++m) {
        for (bool mutate_r : {true, false}) {
            if (!mutate_r && m < 2) continue;
            ++mutations;
            flipped += !verify_schedule(boundary_mutation(s, C.fn, m, mutate_r), C.fn).passes();
        }
    }
    const bool ok = rep.passes() && rep.max_ratio() <= rho * (1 + 1e-12L) && worst_rel <= 1e-12L && flipped == mutations;
    return {ok, fmt(" verdict %s, max ratio %.15Lf, worst relative error %.2Le, mutations flipped %d/%d, r1=%s l2~%s",
                    rep.passes() ? "pass" : "FAIL", rep.max_ratio(), worst_rel, flipped, mutations,
                    s.intervals[0].r.describe().c_str(), s.intervals[1].l.describe().c_str())};
}

Outcome aaronson_band(unsigned threads)
{
    const std::vector<std::uint64_t> ns{1000, 10000, 100000, 1000000, 10000000};
    const auto ts = thetas(1, 1000);
    const WalkOptions opts{ns, 0};
    const auto psi = parallel_map(ts.size(), threads, [&](std::size_t i) {
        const auto s = run_walk(ts[i], golden, ns.back(), opts);
        std::vector<double> r;
        for (const auto& cp : s.checkpoints) r.push_back(aaronson_ratio(cp.psi_at(0), cp.n));
        return r;
    });
    double lo = INFINITY, hi = 0, worst_sup = 0;
    std::ostringstream os;
    os.precision(4);
    for (std::size_t k = 0; k < ns.size(); ++k) {
        double sum = 0, sup = 0;
        for (const auto& r : psi) {
            sum += r[k];
            sup = std::max(sup, r[k]);
        }
        const double mean = sum / static_cast<double>(psi.size());
        lo = std::min(lo, mean);
        hi = std::max(hi, mean);
        worst_sup = std::max(worst_sup, sup / mean);
        os << " n=" << ns[k] << ": mean " << mean << " sup/mean " << sup / mean << ';';
    }
    const bool ok = hi / lo <= 10 && worst_sup <= 10;
    return {ok, os.str() + fmt(" band max/min %.4f", hi / lo)};
}

std::array<int, 2> ratio_decreases(const RatioTable& t)
{
    std::array<int, 2> d{0, 0};
    for (std::int64_t v = 1; v <= 3; ++v) {
        d[0] += t.at(v, 10000000).median_deviation < t.at(v, 100000).median_deviation;
        d[1] += t.at(-v, 10000000).median_deviation < t.at(-v, 100000).median_deviation;
    }
    return d;
}

Outcome ratio_trend(unsigned threads)
{
    const std::vector<std::int64_t> vs{-3, -2, -1, 1, 2, 3};
    const std::vector<std::uint64_t> ns{100000, 10000000};
    const auto t = ratio_check(golden, thetas(1, 100), vs, ns, threads);
    const auto d = ratio_decreases(t);
    std::ostringstream os;
    os.precision(4);
    for (auto v : vs) {
        os << " v=" << v << ": " << t.at(v, 100000).median_deviation << "->" << t.at(v, 10000000).median_deviation
           << ';';
    }
    os << " decreasing: " << d[0] << "/3 positive, " << d[1] << "/3 negative; other seeds (2..9) passing:";
    int passing = 0;
    for (std::uint64_t seed = 2; seed <= 9; ++seed) {
        const auto e = ratio_decreases(ratio_check(golden, thetas(seed, 100), vs, ns, threads));
        const bool p = e[0] >= 2 && e[1] >= 2;
        passing += p;
        os << ' ' << seed << (p ? "+" : "-");
    }
    os << " (" << passing << "/8)";
    return {d[0] >= 2 && d[1] >= 2, os.str()};
}

Outcome range_decay(unsigned threads)
{
    const auto rows = zero_entropy_proxy(golden, thetas(1, 100), {1000000}, threads);
    return {rows[0].max_ratio < 0.01, fmt(" max a_N/N at N=1e6: %.3g (mean %.3g)", rows[0].max_ratio, rows[0].mean_ratio)};
}

Outcome ergodicity(unsigned threads)
{
    CorrelationOptions opt;
    opt.samples = 10000;
    opt.seed = 1;
    opt.threads = threads;
    const CylinderSpec d({{0, 1}});
    const auto e = ergodicity_correlation(golden, ArcSet::whole(), d, ArcSet::whole(), d, 100000, opt);
    const double z = (e.lhs - e.rhs) / e.lhs_stderr;
    const double z_walk = (e.lhs - e.walk_prediction) / e.lhs_stderr;
    return {std::fabs(z) <= 4,
            fmt(" Cesaro correlation %.6f +- %.6f vs mu(D)^2 = %.4f (z = %.1f); finite-N identity 1/4 + E[Psi_N/N]/4 = "
                "%.6f (z = %.2f)",
                e.lhs, e.lhs_stderr, e.rhs, z, e.walk_prediction, z_walk)};
}

Outcome structural(unsigned threads)
{
    std::mt19937_64 rng(2024);
    std::vector<std::string> failed;
    const auto check = [&](bool ok, const char* name) {
        if (!ok) failed.push_back(name);
    };
    const auto small = make_desk_schedule({{2, 3}}, BoundSpec::constant(2));

    bool involution = true;
    for (int i = 0; i < 100000 && involution; ++i) {
        auto w = sample_omega(40, rng());
        w.shift(static_cast<std::int64_t>(rng() % 21) - 10);
        involution = apply_pi_E(apply_pi_E(w, demo().set), demo().set) == w;
    }
    check(involution, "pi_E involution");

    bool conj = true;
    for (int i = 0; i < 1000 && conj; ++i) {
        const FixedAngle theta = sample_theta(2, static_cast<std::uint64_t>(i));
        const auto omega = sample_omega(default_radius(1000), rng());
        SymbolicPoint s{theta, omega};
        SymbolicPoint t{theta, apply_pi_E(omega, small.set)};
        for (int n = 1; n <= 1000 && conj; ++n) {
            s = apply_S(std::move(s), golden, small.set);
            t = apply_T(std::move(t), golden);
            conj = s.theta == t.theta && s.window == apply_pi_E(t.window, small.set);
        }
    }
    check(conj, "S-conjugacy");

    bool offset = true, psi_sum = true;
    for (int i = 0; i < 200; ++i) {
        const FixedAngle theta{(static_cast<u128>(rng()) << 64) | rng()};
        const std::uint64_t n = 1 + rng() % 1000;
        const auto omega = sample_omega(64, rng());
        SymbolicPoint p{theta, omega};
        for (std::uint64_t k = 0; k < n; ++k) p = apply_T(std::move(p), golden);
        const auto s = run_walk(theta, golden, n, {{n}, 0});
        SymbolWindow direct = omega;
        direct.shift(s.checkpoints.at(0).height);
        offset = offset && p.theta == advance(theta, golden, n) && p.window == direct;
        std::uint64_t total = 0;
        for (const auto& [v, c] : s.histogram.sparse()) total += c;
        psi_sum = psi_sum && total == n;
    }
    check(offset, "offset identity");
    check(psi_sum, "sum of Psi");

    bool eset = true;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
        std::int64_t l = 2 + static_cast<std::int64_t>(rng() % 5);
        for (int k = 0; k < 4; ++k) {
            const std::int64_t r = 1 + static_cast<std::int64_t>(rng() % 20);
            pairs.emplace_back(l, r);
            l += r + 1 + static_cast<std::int64_t>(rng() % 10);
        }
        const auto d = make_desk_schedule(pairs, BoundSpec::constant(2));
        eset = eset && !d.set.contains(0) && !d.set.contains(1) && !d.set.contains(-1);
        for (std::int64_t v = 0; v < 300; ++v) {
            bool lin = false;
            for (const auto& [a, r] : pairs) lin = lin || (v >= a && v <= a + r);
            eset = eset && d.set.contains(v) == lin && d.set.contains(-v) == lin;
        }
    }
    check(eset, "ESet symmetry");

    bool semigroup = true;
    for (int i = 0; i < 100000; ++i) {
        const FixedAngle t{(static_cast<u128>(rng()) << 64) | rng()};
        const FixedAngle a{(static_cast<u128>(rng()) << 64) | rng()};
        const std::uint64_t m = rng() >> 1, n = rng() >> 1;
        semigroup = semigroup && advance(t, a, m + n) == advance(advance(t, a, m), a, n);
    }
    check(semigroup, "semigroup law");

    const unsigned many = std::max(2u, threads);
    const std::vector<std::uint64_t> Ns{10, 100, 1000};
    MonteCarloOptions o1, o2;
    o1.samples = o2.samples = 500;
    o1.threads = 1;
    o2.threads = many;
    const bool same = to_csv(reduced_average_series(golden, demo().set, {}, Ns, 500, 5, 1)) ==
                          to_csv(reduced_average_series(golden, demo().set, {}, Ns, 500, 5, many)) &&
                      to_csv(mc_triple_average(golden, demo().set, Ns, o1)) ==
                          to_csv(mc_triple_average(golden, demo().set, Ns, o2)) &&
                      estimate_constants(golden, thetas(3, 40), 5000, 3, 3, 1).M ==
                          estimate_constants(golden, thetas(3, 40), 5000, 3, 3, many).M;
    check(same, "thread invariance");

    std::string detail = " 7 suites:";
    if (failed.empty()) detail += " all exact checks hold";
    for (const auto& f : failed) detail += " failed " + f + ";";
    return {failed.empty(), detail};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance run: one PASS/FAIL line per criterion"};
    unsigned threads = 1;
    app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 1024u));
    std::vector<std::size_t> only;
    app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 9));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"three-route agreement", [&] { return three_routes(threads); }},
        {"exact level measures", [] { return exact_regression(); }},
        {"desk oscillation", [&] { return desk_oscillation(threads); }},
        {"paper-mode schedule certificate", [] { return paper_certificate(); }},
        {"Aaronson band", [&] { return aaronson_band(threads); }},
        {"ratio convergence trend", [&] { return ratio_trend(threads); }},
        {"range decay", [&] { return range_decay(threads); }},
        {"ergodicity correlation", [&] { return ergodicity(threads); }},
        {"structural suites", [&] { return structural(threads); }},
    };
    int failures = 0;
    std::size_t run = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!only.empty() && std::find(only.begin(), only.end(), i + 1) == only.end()) continue;
        ++run;
        const Timer t;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& ex) {
            o = {false, std::string(" error: ") + ex.what()};
        }
        failures += !o.pass;
        std::printf("%s %zu %s:%s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), t.seconds());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria pass\n", static_cast<int>(run) - failures, run);
    return failures == 0 ? 0 : 1;
}
