// andlab command-line front end. Exit codes: 0 ok, 1 solver failure,
// 2 hypotheses not met, 64 malformed config / usage.
#include <andlab/barrier.hpp>
#include <andlab/experiments.hpp>
#include <andlab/gri.hpp>
#include <andlab/multiscale.hpp>
#include <andlab/report.hpp>
#include <andlab/sperner.hpp>
#include <andlab/tilted.hpp>
#include <andlab/variation.hpp>

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <sstream>

using namespace andlab;

namespace {

constexpr int kExitHypotheses = 2;
constexpr int kExitUsage = 64;

struct Params {
    int L = 16;
    double lambda = 0.0;
    long trials = 100;
    std::uint64_t seed = 1;
    double eps = 0.1;
    double alpha = 1.0;
    double delta = 0.5;
    std::string out;
    std::string format = "csv";
    std::string v = "bernoulli";
    // subcommand specific
    std::string event = "e_g";
    int a = 60, b = 4;
    int n = 6;
    double rho = 1.0;
    double R = 0.0;
    int radius = 16;
    int K = 1;
    int side2 = 1;
    int sub = 8;
    std::vector<int> Ls{16, 32};
    double C = 4.0;
    bool freeze = false;
    int directions = 48;
};

// one entry per option: lets a JSON config fill whatever the flags left unset
struct Binding {
    std::string key;
    CLI::Option* opt;
    std::function<void(const Json&)> set;
    std::function<Json()> get;
};
using Registry = std::vector<Binding>;

template <class T>
CLI::Option* bind_opt(CLI::App* app, Registry& reg, const std::string& key, T& ref, const std::string& help) {
    auto* o = app->add_option("--" + key, ref, help)->capture_default_str();
    reg.push_back({key, o, [&ref](const Json& j) { ref = j.get<T>(); }, [&ref] { return Json(ref); }});
    return o;
}

void bind_flag(CLI::App* app, Registry& reg, const std::string& key, bool& ref, const std::string& help) {
    auto* o = app->add_flag("--" + key, ref, help);
    reg.push_back({key, o, [&ref](const Json& j) { ref = j.get<bool>(); }, [&ref] { return Json(ref); }});
}

struct UsageError : Error {
    using Error::Error;
};

void apply_config(const std::string& path, const std::string& command, Registry& reg) {
    Json cfg;
    try {
        cfg = Json::parse(read_file(path));
    } catch (const Json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    if (!cfg.is_object()) throw UsageError("config must be a JSON object");
    if (cfg.value("schema", 0) != 1) throw UsageError("config needs \"schema\": 1");
    for (const auto& [k, val] : cfg.items()) {
        if (k == "schema" || k == "command") {
            if (k == "command" && val != command) throw UsageError("config is for '" + val.dump() + "', not " + command);
            continue;
        }
        auto it = std::find_if(reg.begin(), reg.end(), [&](const Binding& b) { return b.key == k; });
        if (it == reg.end()) throw UsageError("config: unknown key '" + k + "'");
        if (it->opt->count() > 0) continue;  // flags win
        try {
            it->set(val);
        } catch (const Json::exception& e) {
            throw UsageError("config: bad value for '" + k + "': " + e.what());
        }
    }
}

Json resolved(const std::string& command, const Registry& reg) {
    Json j = {{"schema", 1}, {"command", command}};
    for (const auto& b : reg)
        if (b.key != "out" && b.key != "config") j[b.key] = b.get();
    return j;
}

class Output {
public:
    Output(std::string dir, Json meta) : dir_(std::move(dir)), meta_(std::move(meta)) {}
    const Json& meta() const { return meta_; }

    void csv(const std::string& name, const CsvTable& t) const { emit(name, t.str(meta_)); }
    void json(const std::string& name, Json body) const {
        body["meta"] = meta_;
        emit(name, body.dump(2) + "\n");
    }
    void svg(const std::string& name, SvgPlot p) const {
        p.comment = meta_.dump();
        emit(name, p.str());
    }
    void raw(const std::string& name, const std::string& bytes) const { emit(name, bytes); }

private:
    void emit(const std::string& name, const std::string& bytes) const {
        if (dir_.empty()) {
            std::cout << bytes;
        } else {
            atomic_write(std::filesystem::path(dir_) / name, bytes);
            std::cerr << "wrote " << (std::filesystem::path(dir_) / name).string() << "\n";
        }
    }
    std::string dir_;
    Json meta_;
};

// --v bernoulli | zero | one | file:PATH (whitespace or comma separated, L rows of L values, row y = 0 first)
PotentialField make_potential(const Params& p, const SiteSet& region) {
    if (p.v == "bernoulli") return sample_potential(region, p.seed);
    if (p.v == "zero") return PotentialField::constant(region, 0.0);
    if (p.v == "one") return PotentialField::constant(region, 1.0);
    if (p.v.rfind("file:", 0) == 0) {
        std::string text = read_file(p.v.substr(5));
        std::replace(text.begin(), text.end(), ',', ' ');
        std::istringstream in(text);
        std::vector<double> grid;
        for (double x; in >> x;) grid.push_back(x);
        if (!in.eof()) throw UsageError("potential file: non-numeric entry");
        if (grid.size() != std::size_t(p.L) * std::size_t(p.L))
            throw UsageError("potential file needs " + std::to_string(p.L * p.L) + " values, got " + std::to_string(grid.size()));
        std::vector<double> vals;
        for (Site s : region) {
            if (s.x < 0 || s.y < 0 || s.x >= p.L || s.y >= p.L) throw UsageError("potential file does not cover the region");
            vals.push_back(grid[std::size_t(s.y) * std::size_t(p.L) + std::size_t(s.x)]);
        }
        try {
            return PotentialField(region, vals, p.seed);
        } catch (const PreconditionError& e) {
            throw UsageError(std::string("potential file: ") + e.what());
        }
    }
    throw UsageError("--v must be bernoulli, zero, one or file:PATH");
}

PotentialMode potential_mode(const Params& p) {
    if (p.v == "bernoulli") return PotentialMode::bernoulli;
    if (p.v == "zero") return PotentialMode::zero;
    if (p.v == "one") return PotentialMode::one;
    throw UsageError("this subcommand samples fresh potentials per trial; --v must be bernoulli, zero or one");
}

void check_common(const Params& p) {
    if (p.L < 1) throw UsageError("--L must be positive");
    if (!(p.lambda >= 0.0 && p.lambda <= 9.0)) throw UsageError("--lambda must lie in [0, 9]");
    if (p.trials < 1) throw UsageError("--trials must be at least 1");
    if (p.format != "csv" && p.format != "json" && p.format != "svg" && p.format != "bin")
        throw UsageError("--format must be csv, json, svg or bin");
}

SiteSet square_sites(const Params& p) { return box_sites(0, 0, p.L, p.L); }

SvgPlot decay_plot(const ResolventMatrix& R, const DecayFit& fit) {
    SvgPlot plot;
    plot.title = "log|R(x,y)| against |x-y|";
    plot.xlabel = "|x-y|";
    plot.ylabel = "log|R(x,y)|";
    SvgPlot::Series pts;
    double dmax = 0.0;
    for (std::size_t i = 0; i < R.sites.size(); ++i)
        for (std::size_t j = i; j < R.sites.size(); ++j) {
            const double a = std::abs(R.entries(Eigen::Index(i), Eigen::Index(j)));
            if (a == 0.0) continue;
            const double d = distance(R.sites[i], R.sites[j]);
            pts.x.push_back(d);
            pts.y.push_back(std::log(a));
            dmax = std::max(dmax, d);
        }
    plot.series.push_back(pts);
    plot.series.push_back({{0.0, dmax}, {fit.A, fit.A - fit.m * dmax}, "#d62728", true});
    return plot;
}

Json fit_json(const DecayFit& f) {
    return {{"A", f.A}, {"m", f.m}, {"ls_slope", f.ls_slope}, {"ls_intercept", f.ls_intercept}, {"degenerate", f.degenerate}};
}

int cmd_spectrum(const Params& p, const Output& out) {
    const SiteSet Q = square_sites(p);
    const auto sp = eigendecompose(assemble_hq(Q, make_potential(p, Q)), false);
    std::vector<double> ev(sp.eigenvalues.data(), sp.eigenvalues.data() + sp.size());
    std::sort(ev.begin(), ev.end());
    if (p.format == "json") {
        out.json("spectrum.json", {{"eigenvalues", ev}});
    } else if (p.format == "svg") {
        SvgPlot plot;
        plot.title = "Dirichlet spectrum";
        plot.xlabel = "index";
        plot.ylabel = "eigenvalue";
        SvgPlot::Series s;
        for (std::size_t k = 0; k < ev.size(); ++k) s.x.push_back(double(k)), s.y.push_back(ev[k]);
        plot.series.push_back(s);
        out.svg("spectrum.svg", plot);
    } else {
        CsvTable t;
        t.header = {"index", "eigenvalue"};
        for (std::size_t k = 0; k < ev.size(); ++k) t.add({std::to_string(k), fmt_sig(ev[k])});
        out.csv("spectrum.csv", t);
    }
    return 0;
}

int cmd_resolvent(const Params& p, const Output& out) {
    const SiteSet Q = square_sites(p);
    const auto R = sparse_resolvent(Q, make_potential(p, Q), p.lambda);
    if (p.format == "bin") {
        out.raw("resolvent.alab1", alab1_encode(R.entries));
    } else if (p.format == "json") {
        std::vector<std::vector<double>> rows(Q.size());
        for (std::size_t i = 0; i < Q.size(); ++i)
            for (std::size_t j = 0; j < Q.size(); ++j) rows[i].push_back(R.entries(Eigen::Index(i), Eigen::Index(j)));
        out.json("resolvent.json", {{"lambda_bar", p.lambda}, {"order", "row-major (y, x)"}, {"entries", rows}});
    } else if (p.format == "svg") {
        out.svg("resolvent.svg", decay_plot(R, decay_fit(R)));
    } else {
        CsvTable t;
        t.header = {"x1", "y1", "x2", "y2", "R"};
        for (std::size_t i = 0; i < Q.size(); ++i)
            for (std::size_t j = 0; j < Q.size(); ++j)
                t.add({std::to_string(Q[i].x), std::to_string(Q[i].y), std::to_string(Q[j].x), std::to_string(Q[j].y),
                       fmt(R.entries(Eigen::Index(i), Eigen::Index(j)))});
        out.csv("resolvent.csv", t);
    }
    return 0;
}

int cmd_decay(const Params& p, const Output& out) {
    const SiteSet Q = square_sites(p);
    const auto R = sparse_resolvent(Q, make_potential(p, Q), p.lambda);
    const auto fit = decay_fit(R);
    if (p.format == "svg") {
        out.svg("decay.svg", decay_plot(R, fit));
    } else if (p.format == "json") {
        out.json("decay.json", fit_json(fit));
    } else {
        CsvTable t;
        t.header = {"A", "m", "ls_slope", "ls_intercept"};
        t.add({fmt(fit.A), fmt(fit.m), fmt(fit.ls_slope), fmt(fit.ls_intercept)});
        out.csv("decay.csv", t);
    }
    return 0;
}

int cmd_extend(const Params& p, const Output& out) {
    const auto rect = tilted(1, p.a, 1, p.b);
    const SiteSet region = tilted_sites(rect);
    const auto V = p.v.rfind("file:", 0) == 0 ? make_potential(p, region)
                                               : trial_potential(region, potential_mode(p), p.seed);
    Rng rng(hash_combine(p.seed, 0xb0));
    const auto w = WestBoundaryData::from_function(rect, [&](Site) { return rng.normal(); });
    const auto f = extend_from_west(w, V, p.lambda);
    const auto g = growth_bound_check(f);
    if (p.format == "json") {
        out.json("extend.json", {{"log_sup", f.log_sup()},
                                 {"log_sup_boundary", f.log_sup(true)},
                                 {"residual", f.residual},
                                 {"growth_log_ratio", g.measured_log_ratio},
                                 {"growth_bound_log", g.bound_log},
                                 {"growth_ok", g.ok}});
    } else {
        CsvTable t;
        t.header = {"s", "t", "x", "y", "psi"};
        for (Site s : f.sites())
            t.add({std::to_string(s.s()), std::to_string(s.t()), std::to_string(s.x), std::to_string(s.y), fmt(f.value(s))});
        out.csv("extend.csv", t);
    }
    return 0;
}

int cmd_sperner(const Params& p, const Output& out) {
    if (p.n < 1 || p.n > 12) throw UsageError("--n must lie in [1, 12] for exhaustive search");
    const auto r = exhaustive_max_family(p.n, p.rho);
    Json members = Json::array();
    for (Mask m : r.example.members) members.push_back(m);
    const Json body = {{"n", p.n},         {"rho", p.rho},         {"max_size", r.size},
                       {"proven", r.proven}, {"bound", sperner_bound(p.n, p.rho)}, {"example", members}};
    if (p.format == "json") {
        out.json("sperner.json", body);
    } else {
        CsvTable t;
        t.header = {"n", "rho", "max_size", "proven", "bound"};
        t.add({std::to_string(p.n), fmt(p.rho), std::to_string(r.size), r.proven ? "1" : "0", fmt(sperner_bound(p.n, p.rho))});
        out.csv("sperner.csv", t);
    }
    return r.proven ? 0 : 1;
}

int cmd_minmax(const Params& p, const Output& out) {
    long met = 0, held = 0;
    CsvTable t;
    t.header = {"trial", "n", "hypotheses_met", "conclusion_holds", "margin"};
    for (long k = 0; k < p.trials; ++k) {
        Rng rng(trial_seed(p.seed, std::uint64_t(k)));
        const auto inst = sample_variation_instance(rng);
        const auto v = minmax_variation_check(inst);
        met += v.hypotheses_met;
        held += v.hypotheses_met && v.conclusion_holds;
        t.add({std::to_string(k), std::to_string(inst.A.rows()), v.hypotheses_met ? "1" : "0", v.conclusion_holds ? "1" : "0",
               fmt(v.margin)});
    }
    if (p.format == "json")
        out.json("minmax.json", {{"instances", p.trials}, {"hypotheses_met", met}, {"conclusion_holds", held}});
    else
        out.csv("minmax.csv", t);
    if (met == 0) return kExitHypotheses;
    return held == met ? 0 : 1;
}

int cmd_barrier(const Params& p, const Output& out) {
    const SiteSet Q = square_sites(p);
    const auto V = make_potential(p, Q);
    const SiteSet X = V.ones();
    if (X.empty()) throw PreconditionError("the potential has no sites with V = 1");
    const double R = p.R > 0 ? p.R : std::max(1.0, rnet_check(X, Q, INFINITY).covering_radius);
    const auto v = principal_bound_check(Q, V, R);
    const Json body = {{"R", v.R},
                       {"L", v.L},
                       {"certificate", v.barrier.certificate},
                       {"eps_barrier", v.barrier.eps_barrier},
                       {"C_log", v.barrier.C_log},
                       {"nonnegative", v.nonnegative},
                       {"supersolution_found", v.supersolution_found},
                       {"C_prime", v.C_prime},
                       {"bounded", v.bounded},
                       {"lambda_min", v.lambda_min},
                       {"sandwich_ok", v.sandwich_ok},
                       {"certificate_bound_ok", v.certificate_bound_ok},
                       {"holds", v.holds}};
    if (p.format == "json") {
        out.json("barrier.json", body);
    } else {
        CsvTable t;
        t.header = {"x", "y", "psi"};
        for (std::size_t i = 0; i < Q.size(); ++i) t.add({std::to_string(Q[i].x), std::to_string(Q[i].y), fmt(v.barrier.psi[i])});
        out.csv("barrier.csv", t);
    }
    return v.holds ? 0 : 1;
}

int cmd_green(const Params& p, const Output& out) {
    const auto G = potential_kernel(p.radius);
    if (p.format == "json") {
        out.json("green.json", {{"radius", G.radius},
                                {"kappa", G.kappa},
                                {"kappa_annulus", G.kappa_annulus},
                                {"kappa_reference", G.kappa_literature},
                                {"max_defect", G.max_defect},
                                {"G_1_0", G({1, 0})},
                                {"G_1_1", G({1, 1})}});
    } else if (p.format == "svg") {
        SvgPlot plot;
        plot.title = "potential kernel along the axis";
        plot.xlabel = "x";
        plot.ylabel = "G(x, 0)";
        SvgPlot::Series s, a;
        for (int x = 0; x <= p.radius; ++x) {
            s.x.push_back(x);
            s.y.push_back(G({x, 0}));
            if (x > 0) a.x.push_back(x), a.y.push_back(kernel_asymptotic({x, 0}, G.kappa));
        }
        a.colour = "#d62728";
        a.line = true;
        plot.series = {s, a};
        out.svg("green.svg", plot);
    } else {
        CsvTable t;
        t.header = {"x", "y", "G"};
        for (int y = -p.radius; y <= p.radius; ++y)
            for (int x = -p.radius; x <= p.radius; ++x) t.add({std::to_string(x), std::to_string(y), fmt(G({x, y}))});
        out.csv("green.csv", t);
    }
    return 0;
}

void write_report(const Output& out, const EstimateReport& r, const std::string& format) {
    out.json("report.json", as_json(r, out.meta()));
    out.csv("trials.csv", trials_csv(r));
    if (format == "svg") {
        SvgPlot plot;
        plot.title = r.event + ": per-trial " + r.metric_name;
        plot.xlabel = "trial";
        plot.ylabel = r.metric_name;
        SvgPlot::Series s;
        for (const auto& t : r.log) s.x.push_back(double(t.trial)), s.y.push_back(t.metric);
        plot.series.push_back(s);
        out.svg("trials.svg", plot);
    }
}

int cmd_event(const Params& p, const Output& out) {
    ExperimentConfig c;
    try {
        c.event = parse_event(p.event);
    } catch (const FormatError& e) {
        throw UsageError(e.what());
    }
    c.L = p.L;
    c.lambda_bar = p.lambda;
    c.trials = p.trials;
    c.seed = p.seed;
    c.thresholds.alpha = p.alpha;
    c.thresholds.epsilon = p.eps;
    c.thresholds.delta = p.delta;
    c.potential = potential_mode(p);
    c.b = p.b;
    c.directions = p.directions;
    write_report(out, estimate_event_probability(c), p.format);
    return 0;
}

int cmd_basecase(const Params& p, const Output& out) {
    BaseCaseConfig c;
    c.L = p.L;
    c.epsilon = p.eps;
    c.delta = p.delta;
    c.trials = p.trials;
    c.seed = p.seed;
    c.C_net = p.C;
    c.freeze_grid_one = p.freeze;
    write_report(out, base_case_experiment(c), p.format);
    return 0;
}

int cmd_cover(const Params& p, const Output& out) {
    if ((p.L & (p.L - 1)) != 0) throw UsageError("--L must be dyadic");
    int alpha = 1;
    while (double(alpha) < std::pow(8.0, p.K)) alpha *= 2;
    const int L1 = alpha * p.side2;
    const DyadicSquare Q = square_at(0, 0, p.L);
    Rng rng(p.seed);
    std::vector<DyadicSquare> inner;
    const int cells = std::max(1, p.L / p.side2);
    for (int k = 0; k < p.K; ++k)
        inner.push_back(square_at(int(rng.integer(0, cells - 1)) * p.side2, int(rng.integer(0, cells - 1)) * p.side2, p.side2));
    const auto r = cover_disjointify(Q, inner, p.K, alpha, L1);
    CsvTable t;
    t.header = {"kind", "index", "x0", "y0", "side", "owner"};
    for (std::size_t k = 0; k < inner.size(); ++k)
        t.add({"inner", std::to_string(k), std::to_string(inner[k].corner.x), std::to_string(inner[k].corner.y),
               std::to_string(inner[k].side()), std::to_string(r.owner[k])});
    for (std::size_t k = 0; k < r.cover.size(); ++k)
        t.add({"cover", std::to_string(k), std::to_string(r.cover[k].corner.x), std::to_string(r.cover[k].corner.y),
               std::to_string(r.cover[k].side()), ""});
    if (p.format == "json")
        out.json("cover.json", {{"alpha", alpha}, {"L1", L1}, {"L3", r.L3}, {"merges", r.merges}, {"squares", r.cover.size()}});
    else
        out.csv("cover.csv", t);
    return 0;
}

int cmd_gri(const Params& p, const Output& out) {
    if (p.sub < 1 || p.sub > p.L) throw UsageError("--sub must lie in [1, L]");
    const SiteSet Q = square_sites(p);
    const auto V = make_potential(p, Q);
    Rng rng(hash_combine(p.seed, 0x671));
    const int off = (p.L - p.sub) / 2;
    const SiteSet Qp = box_sites(off, off, p.sub, p.sub);
    const Site x = Qp[std::size_t(rng.integer(0, long(Qp.size()) - 1))];
    const Site y = Q[std::size_t(rng.integer(0, long(Q.size()) - 1))];
    const auto g = gri_decompose(Q, Qp, V, p.lambda, x, y);
    const Json body = {{"x", {x.x, x.y}},
                       {"y", {y.x, y.y}},
                       {"R_Q_xy", g.rq_xy},
                       {"R_Qprime_xy", g.rqp_xy},
                       {"boundary_sum", g.boundary_sum},
                       {"exact_residual", g.exact_residual},
                       {"scale", g.scale},
                       {"boundary_pairs", g.boundary_pairs},
                       {"bound_rhs", g.bound_rhs},
                       {"bound_holds", g.bound_holds}};
    if (p.format == "json") {
        out.json("gri.json", body);
    } else {
        CsvTable t;
        t.header = {"R_Q_xy", "R_Qprime_xy", "boundary_sum", "exact_residual", "bound_holds"};
        t.add({fmt(g.rq_xy), fmt(g.rqp_xy), fmt(g.boundary_sum), fmt(g.exact_residual), g.bound_holds ? "1" : "0"});
        out.csv("gri.csv", t);
    }
    return 0;
}

int cmd_sweep(const Params& p, const Output& out) {
    const auto s = decay_statistics_sweep(p.Ls, p.lambda, p.trials, p.seed, potential_mode(p));
    out.csv("sweep_rows.csv", sweep_rows_csv(s));
    out.csv("sweep_summary.csv", sweep_summary_csv(s));
    out.json("sweep.json", {{"median_m_nonincreasing", s.median_m_nonincreasing}});
    if (p.format == "svg") {
        SvgPlot plot;
        plot.title = "median decay rate against L";
        plot.xlabel = "L";
        plot.ylabel = "median m";
        SvgPlot::Series q;
        for (const auto& r : s.summary) q.x.push_back(r.L), q.y.push_back(r.m_q50);
        q.line = true;
        plot.series.push_back(q);
        out.svg("sweep.svg", plot);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"andlab: Anderson-Bernoulli lattice laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kLibraryVersion);
    app.failure_message(CLI::FailureMessage::help);

    struct Sub {
        std::string name, help;
        std::function<int(const Params&, const Output&)> run;
        std::vector<std::string> extra;
    };
    const std::vector<Sub> subs = {
        {"spectrum", "Dirichlet spectrum of H_Q", cmd_spectrum, {}},
        {"resolvent", "resolvent (H_Q - lambda)^-1", cmd_resolvent, {}},
        {"decay", "fit |R(x,y)| <= e^{A - m|x-y|}", cmd_decay, {}},
        {"extend", "tilted-rectangle extension from west boundary data", cmd_extend, {"a", "b"}},
        {"sperner", "largest rho-Sperner family by exhaustive search", cmd_sperner, {"n", "rho"}},
        {"minmax", "random min-max variation instances", cmd_minmax, {}},
        {"barrier", "barrier and principal bound for the V = 1 net", cmd_barrier, {"R"}},
        {"green", "potential kernel table", cmd_green, {"radius"}},
        {"event", "Monte Carlo event probability", cmd_event, {"event", "b", "directions"}},
        {"basecase", "multiscale base-case experiment", cmd_basecase, {"C", "freeze"}},
        {"cover", "disjoint covering squares", cmd_cover, {"K", "side2"}},
        {"gri", "geometric resolvent identity at one pair", cmd_gri, {"sub"}},
        {"sweep", "decay statistics over several L", cmd_sweep, {"Ls"}},
    };

    Params p;
    std::string config_path;
    std::map<CLI::App*, Registry> regs;
    std::map<CLI::App*, const Sub*> which;
    for (const auto& s : subs) {
        auto* sc = app.add_subcommand(s.name, s.help);
        auto& reg = regs[sc];
        which[sc] = &s;
        sc->add_option("--config", config_path, "JSON config (\"schema\": 1); flags override it")->check(CLI::ExistingFile);
        bind_opt(sc, reg, "L", p.L, "side length");
        bind_opt(sc, reg, "lambda", p.lambda, "energy in [0, 9]");
        bind_opt(sc, reg, "trials", p.trials, "Monte Carlo trials");
        bind_opt(sc, reg, "seed", p.seed, "64-bit seed");
        bind_opt(sc, reg, "eps", p.eps, "epsilon");
        bind_opt(sc, reg, "alpha", p.alpha, "alpha");
        bind_opt(sc, reg, "delta", p.delta, "delta");
        bind_opt(sc, reg, "out", p.out, "output directory (stdout when absent)");
        bind_opt(sc, reg, "format", p.format, "csv, json, svg (or bin for resolvent)");
        bind_opt(sc, reg, "v", p.v, "bernoulli, zero, one or file:PATH");
        for (const auto& e : s.extra) {
            if (e == "a") bind_opt(sc, reg, e, p.a, "long side of the tilted rectangle");
            if (e == "b") bind_opt(sc, reg, e, p.b, "short side of the tilted rectangle");
            if (e == "n") bind_opt(sc, reg, e, p.n, "ground set size");
            if (e == "rho") bind_opt(sc, reg, e, p.rho, "rho in (0, 1]");
            if (e == "R") bind_opt(sc, reg, e, p.R, "net radius (default: measured)");
            if (e == "radius") bind_opt(sc, reg, e, p.radius, "kernel table radius");
            if (e == "event") bind_opt(sc, reg, e, p.event, "e_g, e_uc, e_ni or e_ex");
            if (e == "directions") bind_opt(sc, reg, e, p.directions, "random search directions (e_ni, e_ex)");
            if (e == "C") bind_opt(sc, reg, e, p.C, "net threshold constant");
            if (e == "freeze") bind_flag(sc, reg, e, p.freeze, "freeze V = 1 on the grid");
            if (e == "K") bind_opt(sc, reg, e, p.K, "number of inner squares");
            if (e == "side2") bind_opt(sc, reg, e, p.side2, "inner square side");
            if (e == "sub") bind_opt(sc, reg, e, p.sub, "side of the inner square Q'");
            if (e == "Ls") bind_opt(sc, reg, e, p.Ls, "side lengths")->delimiter(',');
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    CLI::App* sc = app.get_subcommands().front();
    const Sub& s = *which[sc];
    try {
        if (!config_path.empty()) apply_config(config_path, s.name, regs[sc]);
        check_common(p);
        const Json cfg = resolved(s.name, regs[sc]);
        std::cerr << "config " << cfg.dump() << "\n";
        return s.run(p, Output(p.out, meta_json(s.name, cfg)));
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << sc->help();
        return kExitUsage;
    } catch (const PreconditionError& e) {
        std::cerr << "hypotheses not met: " << e.what() << "\n";
        return kExitHypotheses;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
