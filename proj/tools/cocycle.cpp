#include "cocycle/averages.hpp"
#include "cocycle/eset.hpp"
#include "cocycle/random.hpp"
#include "cocycle/rotation.hpp"
#include "cocycle/symbolic.hpp"
#include "cocycle/walk.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

using namespace cocycle;

namespace {

constexpr const char* config_schema = "cocycle-config/1";

enum Exit : int { ok = 0, config_error = 2, gate_failure = 3, budget_exceeded = 4 };

/// Options shared by every subcommand.
struct Common {
    std::string alpha = "golden";
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string out;
    std::string schema = config_schema;
};

/// Ordered key/value pairs echoed as the output header.
class Provenance {
public:
    explicit Provenance(std::string command) : command_(std::move(command)) {}

    template <class T>
    void add(const std::string& key, const T& value)
    {
        std::ostringstream os;
        os.precision(17);
        os << value;
        items_.emplace_back(key, os.str());
    }

    std::string header() const
    {
        std::ostringstream os;
        os << "# cocycle " << command_ << '\n';
        os << "# schema = " << config_schema << '\n';
        for (const auto& [k, v] : items_) os << "# " << k << " = " << v << '\n';
        return os.str();
    }

private:
    std::string command_;
    std::vector<std::pair<std::string, std::string>> items_;
};

void emit(const Common& c, const std::string& text)
{
    if (c.out.empty()) {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    if (!f) throw Error(Errc::InvalidArgument, "cannot open output file " + c.out);
    f << text;
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) {
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

template <class T>
T parse_number(const std::string& field, const std::string& text)
{
    std::istringstream is(text);
    T v{};
    is >> v;
    if (!is || !is.eof()) throw Error(Errc::ParseError, field + ": cannot read '" + text + "'");
    return v;
}

/// "2:6,30:300" -> {(2,6),(30,300)}
std::vector<std::pair<std::int64_t, std::int64_t>> parse_pairs(const std::string& s)
{
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    for (const auto& tok : split(s, ',')) {
        const auto parts = split(tok, ':');
        if (parts.size() != 2) throw Error(Errc::ParseError, "pairs: expected l:r, got '" + tok + "'");
        out.emplace_back(parse_number<std::int64_t>("pairs", parts[0]), parse_number<std::int64_t>("pairs", parts[1]));
    }
    return out;
}

/// "100,1000" or "log:2:6:5" (decades 10^2..10^6, five points per decade).
std::vector<std::uint64_t> parse_horizons(const std::string& s)
{
    if (s.starts_with("log:")) {
        const auto parts = split(s.substr(4), ':');
        if (parts.size() != 3) throw Error(Errc::ParseError, "ns: expected log:lo:hi:per_decade");
        return log_horizons(parse_number<int>("ns", parts[0]), parse_number<int>("ns", parts[1]),
                            parse_number<int>("ns", parts[2]));
    }
    std::vector<std::uint64_t> out;
    for (const auto& tok : split(s, ',')) out.push_back(parse_number<std::uint64_t>("ns", tok));
    return out;
}

std::vector<std::int64_t> parse_ints(const std::string& s)
{
    std::vector<std::int64_t> out;
    for (const auto& tok : split(s, ',')) out.push_back(parse_number<std::int64_t>("vs", tok));
    return out;
}

/// "0:0.25,0.5:1" or "all"
ArcSet parse_arcs(const std::string& s)
{
    if (s == "all") return ArcSet::whole();
    std::vector<std::pair<double, double>> pairs;
    for (const auto& tok : split(s, ',')) {
        const auto parts = split(tok, ':');
        if (parts.size() != 2) throw Error(Errc::ParseError, "arc: expected a:b, got '" + tok + "'");
        pairs.emplace_back(parse_number<double>("arc", parts[0]), parse_number<double>("arc", parts[1]));
    }
    return ArcSet::from_doubles(pairs);
}

/// "0=1,3=-1" or "none"
CylinderSpec parse_cylinder(const std::string& s)
{
    if (s == "none") return CylinderSpec{};
    std::vector<std::pair<std::int64_t, int>> c;
    for (const auto& tok : split(s, ',')) {
        const auto parts = split(tok, '=');
        if (parts.size() != 2) throw Error(Errc::ParseError, "cylinder: expected j=i, got '" + tok + "'");
        c.emplace_back(parse_number<std::int64_t>("cylinder", parts[0]), parse_number<int>("cylinder", parts[1]));
    }
    return CylinderSpec(c);
}

/// "const:2" or "loglog:c,slope"
BoundSpec parse_bound(const std::string& s)
{
    if (s.starts_with("const:")) return BoundSpec::constant(parse_number<long double>("bound", s.substr(6)));
    if (s.starts_with("loglog:")) {
        const auto parts = split(s.substr(7), ',');
        if (parts.size() != 2) throw Error(Errc::ParseError, "bound: expected loglog:c,slope");
        return BoundSpec::loglog(parse_number<long double>("bound", parts[0]),
                                 parse_number<long double>("bound", parts[1]));
    }
    throw Error(Errc::ParseError, "bound: expected const:<c> or loglog:<c>,<slope>, got '" + s + "'");
}

/// Decimal fraction in [0, 1) or a 32-digit hex fixed-point word prefixed with 0x.
FixedAngle parse_theta(const std::string& s)
{
    if (s.starts_with("0x")) return FixedAngle::from_hex(s.substr(2));
    const double x = parse_number<double>("theta", s);
    if (!(x >= 0 && x < 1)) throw Error(Errc::InvalidArgument, "theta must lie in [0, 1)");
    return FixedAngle::from_double(x);
}

std::vector<FixedAngle> theta_samples(std::uint64_t seed, std::size_t n)
{
    std::vector<FixedAngle> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_theta(seed, i));
    return out;
}

void add_common(Provenance& p, const Common& c)
{
    p.add("alpha", c.alpha);
    p.add("alpha_hex", resolve_alpha(parse_alpha(c.alpha)).hex());
    p.add("seed", c.seed);
}

// ---------------------------------------------------------------------------

struct WalkArgs {
    std::string theta;
    std::uint64_t n = 0;
    std::size_t samples = 1;
};

int cmd_walk(const Common& c, const WalkArgs& a)
{
    if (a.n < 1) throw Error(Errc::InvalidArgument, "--n must be at least 1");
    const FixedAngle alpha = resolve_alpha(parse_alpha(c.alpha));
    const auto thetas = a.theta.empty() ? theta_samples(c.seed, a.samples) : std::vector<FixedAngle>{parse_theta(a.theta)};
    Provenance p("walk");
    add_common(p, c);
    p.add("theta", a.theta.empty() ? "sampled" : a.theta);
    p.add("n", a.n);
    p.add("samples", thetas.size());
    const auto rows = parallel_map(thetas.size(), c.threads,
                                   [&](std::size_t i) { return to_csv_row(run_walk(thetas[i], alpha, a.n)); });
    std::string text = p.header() + walk_csv_header() + '\n';
    for (const auto& r : rows) text += r + '\n';
    emit(c, text);
    return ok;
}

struct ConstantsArgs {
    std::uint64_t n = 1000000;
    std::int64_t v_max = 3;
    std::size_t samples = 100;
};

int cmd_constants(const Common& c, const ConstantsArgs& a)
{
    const FixedAngle alpha = resolve_alpha(parse_alpha(c.alpha));
    const auto t = estimate_constants(alpha, theta_samples(c.seed, a.samples), a.n, a.v_max, c.seed, c.threads);
    Provenance p("constants");
    add_common(p, c);
    p.add("n", a.n);
    p.add("v-max", a.v_max);
    p.add("samples", a.samples);
    std::ostringstream os;
    os.precision(17);
    os << p.header();
    os << "# global_M = " << t.global_M << '\n';
    os << "# mean_psi_ratio = " << t.mean_psi_ratio << '\n';
    os << "v,M_v,M_minus_v,C_v\n";
    for (std::int64_t v = 0; v <= a.v_max; ++v) {
        os << v << ',' << t.M_at(v) << ',' << t.M_at(-v) << ',' << t.C_at(v) << '\n';
    }
    emit(c, os.str());
    return ok;
}

struct ScheduleArgs {
    std::string mode = "paper";
    std::string pairs = "2:6,30:300";
    std::string bound = "const:2";
    std::size_t m_max = 10;
    long double target_ratio = 0.99L;
    std::string in;
};

int cmd_schedule(const Common& c, const ScheduleArgs& a)
{
    const BoundSpec bound = parse_bound(a.bound);
    Schedule s;
    if (!a.in.empty()) {
        std::ifstream f(a.in);
        if (!f) throw Error(Errc::ParseError, "cannot read schedule file " + a.in);
        std::stringstream buf;
        buf << f.rdbuf();
        s = schedule_from_text(buf.str());
    } else if (a.mode == "paper") {
        s = generate_paper_schedule(bound, a.m_max, a.target_ratio);
    } else if (a.mode == "desk") {
        s = make_desk_schedule(parse_pairs(a.pairs), bound).schedule;
    } else {
        throw Error(Errc::InvalidArgument, "--mode must be paper or desk");
    }
    Provenance p("schedule");
    p.add("source", a.in.empty() ? a.mode : "file");
    p.add("bound", a.bound);
    if (a.in.empty() && a.mode == "paper") {
        p.add("m-max", a.m_max);
        p.add("target-ratio", static_cast<double>(a.target_ratio));
    }
    if (a.in.empty() && a.mode == "desk") p.add("pairs", a.pairs);
    const auto rep = verify_schedule(s, bound.fn);
    emit(c, p.header() + schedule_to_text(s) + report_to_text(rep));
    return ok;
}

struct AverageArgs {
    std::string set = "desk";
    std::string pairs = "2:6,30:300";
    std::string bound = "const:2";
    std::string ns = "64,256,512";
    std::size_t samples = 1000;
    std::size_t mc_samples = 0;
    bool exact = false;
    double quantile = 1.0;
    std::uint64_t calibration_horizon = 10000;
    std::size_t calibration_samples = 200;
    double sigma = 3.0;
    bool inject_fault = false;
};

using AnySet = std::variant<ESet, NoHeights, AllHeights>;

int cmd_average(const Common& c, const AverageArgs& a)
{
    const FixedAngle alpha = resolve_alpha(parse_alpha(c.alpha));
    const auto desk = make_desk_schedule(parse_pairs(a.pairs), parse_bound(a.bound));
    AnySet set;
    if (a.set == "desk") set = desk.set;
    else if (a.set == "empty") set = NoHeights{};
    else if (a.set == "all") set = AllHeights{};
    else throw Error(Errc::InvalidArgument, "--set must be desk, empty or all");

    const auto base = parse_horizons(a.ns);
    if (base.empty()) throw Error(Errc::InvalidArgument, "--ns is empty");
    const auto Ns = merge_horizons(base, schedule_horizons(desk.schedule), base.front(), base.back());
    if (a.exact && Ns.back() > exact_budget) {
        throw Error(Errc::BudgetExceeded, "exact route is limited to N <= " + std::to_string(exact_budget));
    }

    ThetaFilter filter;
    std::optional<QuantileFilter> qf;
    if (a.quantile < 1.0) {
        qf = calibrate_quantile_filter(alpha, a.quantile, a.calibration_horizon, desk.set.bounds().back().second,
                                       a.calibration_samples, c.seed, c.threads);
        filter = *qf;
    }

    std::vector<AverageSeries> routes;
    std::visit(
        [&](const auto& e) {
            routes.push_back(reduced_average_series(alpha, e, filter, Ns, a.samples, c.seed, c.threads));
            if (a.exact) routes.push_back(exact_average_series(alpha, e, Ns));
            if (a.mc_samples > 0) {
                MonteCarloOptions opt;
                opt.samples = a.mc_samples;
                opt.seed = c.seed;
                opt.threads = c.threads;
                opt.filter = filter;
                opt.inject_fault = a.inject_fault;
                routes.push_back(mc_triple_average(alpha, e, Ns, opt));
            }
        },
        set);

    bool gate = true;
    std::ostringstream gate_log;
    gate_log.precision(17);
    for (std::size_t i = 0; i < routes.size(); ++i) {
        for (std::size_t j = i + 1; j < routes.size(); ++j) {
            const bool exact_involved = routes[i].method == Method::exact || routes[j].method == Method::exact;
            if (exact_involved && qf) continue;
            for (std::size_t k = 0; k < Ns.size(); ++k) {
                const auto& x = routes[i].entries[k];
                const auto& y = routes[j].entries[k];
                if (!within_sigma(x.A, x.stderr_A, y.A, y.stderr_A, a.sigma)) {
                    gate = false;
                    gate_log << "# gate_fail = " << method_name(routes[i].method) << '/' << method_name(routes[j].method)
                             << " N=" << Ns[k] << " " << x.A << " vs " << y.A << '\n';
                }
            }
        }
    }

    const auto rep = oscillation_report(routes.front(), desk.schedule, desk.report);

    Provenance p("average");
    add_common(p, c);
    p.add("set", a.set);
    p.add("pairs", a.pairs);
    p.add("bound", a.bound);
    p.add("ns", a.ns);
    p.add("samples", a.samples);
    p.add("exact", a.exact ? "true" : "false");
    p.add("mc-samples", a.mc_samples);
    p.add("quantile", a.quantile);
    if (qf) {
        p.add("calibration-horizon", a.calibration_horizon);
        p.add("calibration-samples", a.calibration_samples);
        p.add("filter_threshold", qf->threshold);
    }
    p.add("sigma", a.sigma);
    if (a.inject_fault) p.add("inject-fault", "true");

    std::string text = p.header() + series_csv_header() + '\n';
    for (const auto& r : routes) text += to_csv(r);
    text += gate_log.str();
    text += "# gate = " + std::string(gate ? "pass" : "fail") + '\n';
    text += "# report = " + to_json(rep).dump() + '\n';
    emit(c, text);
    return gate ? ok : gate_failure;
}

struct RatioArgs {
    std::string vs = "-3,-2,-1,0,1,2,3";
    std::string ns = "100000,10000000";
    std::size_t samples = 100;
};

int cmd_ratio(const Common& c, const RatioArgs& a)
{
    const FixedAngle alpha = resolve_alpha(parse_alpha(c.alpha));
    const auto t = ratio_check(alpha, theta_samples(c.seed, a.samples), parse_ints(a.vs), parse_horizons(a.ns), c.threads);
    Provenance p("ratio");
    add_common(p, c);
    p.add("vs", a.vs);
    p.add("ns", a.ns);
    p.add("samples", a.samples);
    std::ostringstream os;
    os.precision(17);
    os << p.header() << "v,n,median_ratio,median_deviation\n";
    for (const auto& cell : t.cells) {
        os << cell.v << ',' << cell.n << ',' << cell.median_ratio << ',' << cell.median_deviation << '\n';
    }
    emit(c, os.str());
    return ok;
}

struct EntropyArgs {
    std::string ns = "log:2:6:1";
    std::size_t samples = 100;
};

int cmd_entropy(const Common& c, const EntropyArgs& a)
{
    const FixedAngle alpha = resolve_alpha(parse_alpha(c.alpha));
    const auto rows = zero_entropy_proxy(alpha, theta_samples(c.seed, a.samples), parse_horizons(a.ns), c.threads);
    Provenance p("entropy-proxy");
    add_common(p, c);
    p.add("ns", a.ns);
    p.add("samples", a.samples);
    std::ostringstream os;
    os.precision(17);
    os << p.header() << "N,mean_ratio,max_ratio\n";
    for (const auto& r : rows) os << r.N << ',' << r.mean_ratio << ',' << r.max_ratio << '\n';
    emit(c, os.str());
    return ok;
}

struct ErgodicityArgs {
    std::uint64_t n = 100000;
    std::size_t samples = 10000;
    std::string arc1 = "all", arc2 = "all";
    std::string cyl1 = "0=1", cyl2 = "0=1";
};

int cmd_ergodicity(const Common& c, const ErgodicityArgs& a)
{
    const FixedAngle alpha = resolve_alpha(parse_alpha(c.alpha));
    CorrelationOptions opt;
    opt.samples = a.samples;
    opt.seed = c.seed;
    opt.threads = c.threads;
    const auto e = ergodicity_correlation(alpha, parse_arcs(a.arc1), parse_cylinder(a.cyl1), parse_arcs(a.arc2),
                                          parse_cylinder(a.cyl2), a.n, opt);
    Provenance p("ergodicity");
    add_common(p, c);
    p.add("n", a.n);
    p.add("samples", a.samples);
    p.add("arc1", a.arc1);
    p.add("cyl1", a.cyl1);
    p.add("arc2", a.arc2);
    p.add("cyl2", a.cyl2);
    std::ostringstream os;
    os.precision(17);
    os << p.header() << "N,lhs,lhs_stderr,rhs,walk_prediction\n";
    os << a.n << ',' << e.lhs << ',' << e.lhs_stderr << ',' << e.rhs << ',' << e.walk_prediction << '\n';
    emit(c, os.str());
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Numerical workbench for a skew-product counterexample to triple-correlation convergence"};
    app.require_subcommand(1);
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.set_config("--config", "", "Key/value config file (TOML or INI); flags override it");
    Common common;
    app.add_option("--alpha", common.alpha, "golden | sqrt2m1 | sqrt3m1 | cf:[a0;a1,...,(p1,...)]@bound")
        ->capture_default_str();
    app.add_option("--seed", common.seed, "Seed for every stochastic quantity")->capture_default_str();
    app.add_option("--threads", common.threads, "Worker threads; never changes output")
        ->capture_default_str()
        ->check(CLI::Range(1u, 1024u));
    app.add_option("--out", common.out, "Output file (default stdout)");
    app.add_option("--schema", common.schema, "Config schema version")->capture_default_str();

    WalkArgs walk;
    auto* w = app.add_subcommand("walk", "Walk summaries as CSV rows");
    w->add_option("--theta", walk.theta, "Starting angle: decimal in [0,1) or 0x<32 hex digits>");
    w->add_option("--n", walk.n, "Number of steps N >= 1")->required();
    w->add_option("--samples", walk.samples, "Sampled starting angles when --theta is absent")->capture_default_str();

    ConstantsArgs cons;
    auto* k = app.add_subcommand("constants", "Empirical occupation constants M_v and C_v");
    k->add_option("--n", cons.n, "Horizon")->capture_default_str();
    k->add_option("--v-max", cons.v_max, "Largest |v|")->capture_default_str();
    k->add_option("--samples", cons.samples, "Theta samples")->capture_default_str();

    ScheduleArgs sched;
    auto* s = app.add_subcommand("schedule", "Generate or load a schedule and verify its conditions");
    s->add_option("--mode", sched.mode, "paper | desk")->capture_default_str();
    s->add_option("--pairs", sched.pairs, "Desk pairs l:r,l:r,...")->capture_default_str();
    s->add_option("--bound", sched.bound, "const:<c> | loglog:<c>,<slope>")->capture_default_str();
    s->add_option("--m-max", sched.m_max, "Intervals to generate")->capture_default_str();
    s->add_option("--target-ratio", sched.target_ratio, "Generator margin target in (0,1]")->capture_default_str();
    s->add_option("--in", sched.in, "Schedule text file to load instead of generating");

    AverageArgs avg;
    auto* a = app.add_subcommand("average", "Triple-correlation averages with route cross-checks");
    a->add_option("--set", avg.set, "desk | empty | all")->capture_default_str();
    a->add_option("--pairs", avg.pairs, "Desk pairs l:r,l:r,...")->capture_default_str();
    a->add_option("--bound", avg.bound, "Bound used for the attached condition report")->capture_default_str();
    a->add_option("--ns", avg.ns, "Horizons: N1,N2,... or log:lo:hi:per_decade")->capture_default_str();
    a->add_option("--samples", avg.samples, "Theta samples for the reduced route")->capture_default_str();
    a->add_option("--mc-samples", avg.mc_samples, "Samples for the Monte Carlo route (0 = off)")->capture_default_str();
    a->add_flag("--exact", avg.exact, "Also run the exact route");
    a->add_option("--quantile", avg.quantile, "Keep theta at or below this occupation-score quantile")
        ->capture_default_str();
    a->add_option("--calibration-horizon", avg.calibration_horizon, "Horizon for filter calibration")
        ->capture_default_str();
    a->add_option("--calibration-samples", avg.calibration_samples, "Samples for filter calibration")
        ->capture_default_str();
    a->add_option("--sigma", avg.sigma, "Gate width in combined standard errors")->capture_default_str();
    a->add_flag("--inject-fault", avg.inject_fault)->group("");

    RatioArgs ratio;
    auto* r = app.add_subcommand("ratio", "Medians of Psi^(v)_n / Psi_n");
    r->add_option("--vs", ratio.vs, "Heights v")->capture_default_str();
    r->add_option("--ns", ratio.ns, "Horizons")->capture_default_str();
    r->add_option("--samples", ratio.samples, "Theta samples")->capture_default_str();

    EntropyArgs ent;
    auto* e = app.add_subcommand("entropy-proxy", "Range decay a_N / N");
    e->add_option("--ns", ent.ns, "Horizons")->capture_default_str();
    e->add_option("--samples", ent.samples, "Theta samples")->capture_default_str();

    ErgodicityArgs erg;
    auto* g = app.add_subcommand("ergodicity", "Cesaro correlation of two cylinder sets");
    g->add_option("--n", erg.n, "Horizon N")->capture_default_str();
    g->add_option("--samples", erg.samples, "Monte Carlo samples")->capture_default_str();
    g->add_option("--arc1", erg.arc1, "Arcs a:b,... or all")->capture_default_str();
    g->add_option("--cyl1", erg.cyl1, "Cylinder j=i,... or none")->capture_default_str();
    g->add_option("--arc2", erg.arc2, "Arcs a:b,... or all")->capture_default_str();
    g->add_option("--cyl2", erg.cyl2, "Cylinder j=i,... or none")->capture_default_str();

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex);
        return config_error;
    }

    try {
        if (common.schema != config_schema) {
            throw Error(Errc::ParseError, "schema: expected " + std::string(config_schema) + ", got " + common.schema);
        }
        if (w->parsed()) return cmd_walk(common, walk);
        if (k->parsed()) return cmd_constants(common, cons);
        if (s->parsed()) return cmd_schedule(common, sched);
        if (a->parsed()) return cmd_average(common, avg);
        if (r->parsed()) return cmd_ratio(common, ratio);
        if (e->parsed()) return cmd_entropy(common, ent);
        if (g->parsed()) return cmd_ergodicity(common, erg);
    } catch (const Error& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return ex.code() == Errc::BudgetExceeded ? budget_exceeded : config_error;
    }
    return config_error;
}
