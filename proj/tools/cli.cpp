#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "sawperc/coarsegrain.hpp"
#include "sawperc/environment.hpp"
#include "sawperc/error.hpp"
#include "sawperc/estimators.hpp"
#include "sawperc/measures.hpp"
#include "sawperc/parallel.hpp"
#include "sawperc/report.hpp"
#include "sawperc/rng.hpp"
#include "sawperc/version.hpp"
#include "sawperc/walks.hpp"

namespace sawperc::cli {

namespace {

/// Every tunable of every command. Each command binds the subset it uses.
struct Params {
    double p = 0.6;
    double p2 = 0.8;
    double tree_p = 1.0;
    double theta = 0.5;
    double alpha = 0.75;
    double K = kDefaultK;
    double C1 = kDefaultC1;
    double delta = 0.0;
    int n = 4;
    int d = 2;
    std::int64_t n0 = 4;
    std::int64_t m = 1;
    std::int64_t radius = 0;
    std::int64_t bx = 0;
    std::int64_t by = 0;
    std::size_t samples = 10000;
    std::size_t density_samples = 100000;
    std::size_t outer = 20;
    std::size_t inner = 2000;
    std::size_t max_draws = 0;
    std::uint64_t seed = 1;
    std::string law = "gaussian";
    std::string conditioning = "positive_Z";
    std::string animal;
    std::string out_file;
    std::vector<double> betas{0.0, 0.5, 1.0};
    bool exhaustive = false;
    bool table = false;
};

struct Context {
    Params& prm;
    std::ostream& out;
    Json results = Json::object();
    int exit_code = kExitOk;
};

struct Leaf {
    std::string name;
    CLI::App* app = nullptr;
    std::vector<std::pair<std::string, std::function<Json()>>> echo;
    std::function<void(Context&)> run;
};

template <class T>
void bind_option(Leaf& leaf, const std::string& key, T& ref, const std::string& desc)
{
    auto* opt = leaf.app->add_option("--" + key, ref, desc)->capture_default_str();
    if constexpr (std::is_same_v<T, std::vector<double>>) {
        opt->delimiter(',');
    }
    leaf.echo.emplace_back(key, [&ref] { return Json(ref); });
}

void bind_flag(Leaf& leaf, const std::string& key, bool& ref, const std::string& desc)
{
    leaf.app->add_flag("--" + key, ref, desc);
    leaf.echo.emplace_back(key, [&ref] { return Json(ref); });
}

/// Echoes the defaulted constants of the quadratic-form machinery.
void echo_constants(Leaf& leaf, Params& prm)
{
    leaf.echo.emplace_back("K", [&prm] { return Json(prm.K); });
    leaf.echo.emplace_back("C1", [&prm] { return Json(prm.C1); });
}

void kv(CsvWriter& w, const std::string& key, const std::string& value)
{
    w.row({key, value});
}

std::string str(const Count& c)
{
    return c.str();
}

Region ball(std::int64_t radius)
{
    return Region::centered(kOrigin, radius);
}

std::int64_t radius_or(const Params& prm, std::int64_t fallback)
{
    if (prm.radius < 0) throw ParameterError("--radius must be >= 0");
    return prm.radius == 0 ? fallback : prm.radius;
}

void require_samples(std::size_t samples, std::size_t minimum, const char* flag)
{
    if (samples < minimum) {
        throw ParameterError(std::string(flag) + " must be >= " + std::to_string(minimum));
    }
}

/// Horizontal row of m blocks starting at cell (0, 0).
Animal row_animal(std::int64_t m, std::int64_t n0)
{
    std::vector<Site> cells;
    for (std::int64_t i = 0; i < m; ++i) cells.push_back({i, 0});
    return Animal(cells, n0);
}

// --------------------------------------------------------------- saw

void saw_count(Context& c)
{
    const auto counts = saw_counts_up_to(c.prm.n);
    if (c.prm.table) {
        CsvWriter w(c.out);
        w.row({"n", "count"});
        for (std::size_t i = 0; i < counts.size(); ++i) w.row({std::to_string(i), str(counts[i])});
    } else {
        c.out << counts.back() << '\n';
    }
    Json rows = Json::array();
    for (const Count& v : counts) rows.push_back(v.str());
    c.results = Json{{"n", c.prm.n}, {"count", counts.back().str()}, {"counts", rows}};
}

void saw_open_count(Context& c)
{
    require_probability(c.prm.p, "--p");
    const auto env = sample_environment(ball(radius_or(c.prm, c.prm.n)), c.prm.p, c.prm.seed);
    const auto z = open_saw_counts(env, kOrigin, c.prm.n);
    CsvWriter w(c.out);
    w.row({"n", "open_count"});
    Json rows = Json::array();
    for (std::size_t i = 0; i < z.size(); ++i) {
        w.row({std::to_string(i), std::to_string(z[i])});
        rows.push_back(z[i]);
    }
    c.results = Json{{"open_counts", rows}};
}

void saw_restricted(Context& c)
{
    const auto r = restriction_radius(c.prm.n, c.prm.alpha);
    const Count v = count_restricted_saws(c.prm.n, c.prm.alpha);
    CsvWriter w(c.out);
    w.row({"n", "alpha", "radius", "restricted_count", "count"});
    const Count all = count_saws(c.prm.n);
    w.row({std::to_string(c.prm.n), format_real(c.prm.alpha), std::to_string(r), str(v), str(all)});
    c.results = Json{{"radius", r}, {"restricted_count", v.str()}, {"count", all.str()}};
}

void saw_trees(Context& c)
{
    Count t;
    const double p = c.prm.tree_p;
    if (p == 1.0) {
        t = count_lattice_trees(c.prm.n);
    } else {
        require_probability(p, "--p");
        t = count_open_trees(sample_environment(ball(radius_or(c.prm, c.prm.n)), p, c.prm.seed), kOrigin, c.prm.n);
    }
    CsvWriter w(c.out);
    w.row({"n", "p", "trees"});
    w.row({std::to_string(c.prm.n), format_real(p), str(t)});
    c.results = Json{{"trees", t.str()}};
}

void saw_endtoend(Context& c)
{
    const auto s = end_to_end_stats(c.prm.n);
    CsvWriter w(c.out);
    w.row({"n", "paths", "sum_square_end", "mean_square", "max_square_end"});
    w.row({std::to_string(s.n), str(s.paths), str(s.sum_square_end), format_real(s.mean_square),
           std::to_string(s.max_square_end)});
    c.results = Json{{"paths", s.paths.str()}, {"mean_square", s.mean_square}, {"max_square_end", s.max_square_end}};
}

void saw_hammersley(Context& c)
{
    require_probability(c.prm.p, "--p");
    const auto env = sample_environment(ball(radius_or(c.prm, c.prm.n + 2)), c.prm.p, c.prm.seed);
    CsvWriter w(c.out);
    w.row({"x2", "edge_open", "lhs", "rhs", "holds"});
    Json rows = Json::array();
    for (int d = 0; d < 4; ++d) {
        const Site x2{kStepDx[d], kStepDy[d]};
        const auto t = hammersley_terms(env, kOrigin, x2, c.prm.n);
        const std::string name = "(" + std::to_string(x2.x) + "," + std::to_string(x2.y) + ")";
        w.row({name, t.edge_open ? "1" : "0", str(t.lhs), str(t.rhs), t.holds() ? "1" : "0"});
        rows.push_back(Json{{"x2", name}, {"edge_open", t.edge_open}, {"lhs", t.lhs.str()}, {"rhs", t.rhs.str()},
                            {"holds", t.holds()}});
        if (t.edge_open && !t.holds()) c.exit_code = kExitInvariant;
    }
    c.results = Json{{"pairs", rows}};
}

// --------------------------------------------------------------- perc

void perc_sample(Context& c)
{
    require_probability(c.prm.p, "--p");
    const auto env = sample_environment(ball(radius_or(c.prm, 10)), c.prm.p, c.prm.seed);
    const auto cl = clusters(env);
    std::size_t largest = 0;
    for (std::size_t s : cl.size) largest = std::max(largest, s);
    const std::size_t origin_size = cl.size[cl.cluster_of(kOrigin)];
    CsvWriter w(c.out);
    w.row({"key", "value"});
    kv(w, "edges", std::to_string(env.region().edge_count()));
    kv(w, "open_edges", std::to_string(env.open_count()));
    kv(w, "clusters", std::to_string(cl.cluster_count()));
    kv(w, "largest_cluster", std::to_string(largest));
    kv(w, "origin_cluster", std::to_string(origin_size));
    kv(w, "origin_in_giant", origin_in_giant(env) ? "1" : "0");
    c.results = Json{{"edges", env.region().edge_count()},
                     {"open_edges", env.open_count()},
                     {"clusters", cl.cluster_count()},
                     {"largest_cluster", largest},
                     {"origin_cluster", origin_size},
                     {"origin_in_giant", origin_in_giant(env)}};
}

void perc_clusters(Context& c)
{
    require_probability(c.prm.p, "--p");
    const auto cl = clusters(sample_environment(ball(radius_or(c.prm, 10)), c.prm.p, c.prm.seed));
    CsvWriter w(c.out);
    w.row({"cluster", "size", "touches_boundary"});
    Json sizes = Json::array();
    for (std::size_t i = 0; i < cl.cluster_count(); ++i) {
        w.row({std::to_string(i), std::to_string(cl.size[i]), cl.touches_boundary[i] ? "1" : "0"});
        sizes.push_back(cl.size[i]);
    }
    c.results = Json{{"sizes", sizes}};
}

void write_target(Context& c, const std::function<void(std::ostream&)>& emit)
{
    if (c.prm.out_file.empty()) {
        emit(c.out);
        return;
    }
    std::ofstream f(c.prm.out_file);
    if (!f) throw ParameterError("cannot open --out file '" + c.prm.out_file + "'");
    emit(f);
}

void perc_dump(Context& c)
{
    require_probability(c.prm.p, "--p");
    const auto env = sample_environment(ball(radius_or(c.prm, 10)), c.prm.p, c.prm.seed);
    write_target(c, [&](std::ostream& o) { write_environment(o, env); });
    c.results = Json{{"open_edges", env.open_count()}};
}

void perc_potential(Context& c)
{
    const auto pot = sample_potential(ball(radius_or(c.prm, 10)), DistributionSpec::parse(c.prm.law), c.prm.seed);
    write_target(c, [&](std::ostream& o) { write_potential(o, pot); });
    c.results = Json{{"sites", pot.values().size()}};
}

// ------------------------------------------------------------- animal

void animal_count(Context& c)
{
    const auto a = count_animals(static_cast<int>(c.prm.m));
    CsvWriter w(c.out);
    w.row({"m", "animals"});
    w.row({std::to_string(c.prm.m), std::to_string(a)});
    c.results = Json{{"animals", a}};
}

void animal_enum(Context& c)
{
    const auto list = enumerate_animals(static_cast<int>(c.prm.m), c.prm.n0);
    write_animals(c.out, list);
    c.results = Json{{"animals", list.size()}};
}

void animal_decompose(Context& c)
{
    require_probability(c.prm.p, "--p");
    const auto env = sample_environment(ball(radius_or(c.prm, c.prm.n)), c.prm.p, c.prm.seed);
    const auto parts = decompose(env, kOrigin, c.prm.n, c.prm.n0);
    CsvWriter w(c.out);
    w.row({"animal", "size", "count"});
    Count total = 0;
    Json rows = Json::array();
    for (const auto& [a, n] : parts) {
        w.row({animal_to_line(a), std::to_string(a.size()), str(n)});
        rows.push_back(Json{{"animal", animal_to_line(a)}, {"count", n.str()}});
        total += n;
    }
    const Count z = count_open_saws(env, kOrigin, c.prm.n);
    if (total != z) c.exit_code = kExitInvariant;
    c.results = Json{{"parts", rows}, {"sum", total.str()}, {"open_count", z.str()}, {"identity", total == z}};
}

void animal_separate(Context& c)
{
    const Animal a = c.prm.animal.empty() ? grow_random_animal(static_cast<int>(c.prm.m), c.prm.seed, c.prm.n0)
                                          : animal_from_line(c.prm.animal, c.prm.n0);
    const auto s = extract_separated(a);
    CsvWriter w(c.out);
    w.row({"cell_x", "cell_y"});
    Json cells = Json::array();
    for (const Site& cell : s.cells) {
        w.row({std::to_string(cell.x), std::to_string(cell.y)});
        cells.push_back(Json::array({cell.x, cell.y}));
    }
    const auto guarantee = (static_cast<std::int64_t>(a.size()) + 12) / 13;
    if (static_cast<std::int64_t>(s.size()) < guarantee) c.exit_code = kExitInvariant;
    c.results = Json{{"animal", animal_to_line(a)}, {"size", a.size()}, {"separated", cells},
                     {"separated_size", s.size()}, {"guarantee", guarantee}};
}

// --------------------------------------------------------------- com

void com_qform(Context& c)
{
    require_samples(c.prm.samples, 4, "--samples");
    const auto spec = QFormSpec::make({c.prm.bx, c.prm.by, c.prm.n0}, c.prm.p, c.prm.K);
    const auto values = qform_samples(spec, c.prm.samples, c.prm.seed);
    const auto mean = mean_estimate(values);
    const auto var = variance_estimate(values);
    const double analytic = qform_variance_analytic(spec);
    const double threshold = std::exp(spec.K * spec.K);
    std::size_t on = 0;
    for (double q : values) on += q >= threshold;
    CsvWriter w(c.out);
    w.row({"key", "value"});
    kv(w, "mean", format_real(mean.mean));
    kv(w, "mean_se", format_real(mean.std_error));
    kv(w, "variance", format_real(var.mean));
    kv(w, "variance_se", format_real(var.std_error));
    kv(w, "variance_analytic", format_real(analytic));
    kv(w, "c1_statistic", format_real(qform_c1_statistic(spec.n0())));
    kv(w, "indicator_rate", format_real(static_cast<double>(on) / static_cast<double>(values.size())));
    c.results = Json{{"mean", to_json(mean)},
                     {"variance", to_json(var)},
                     {"variance_analytic", analytic},
                     {"c1_statistic", qform_c1_statistic(spec.n0())},
                     {"variance_within_c1", analytic <= c.prm.C1},
                     {"indicator_rate", static_cast<double>(on) / static_cast<double>(values.size())}};
}

void com_conditional(Context& c)
{
    require_samples(c.prm.samples, 4, "--samples");
    const auto spec = QFormSpec::make({0, 0, c.prm.n0}, c.prm.p, c.prm.K);
    const Path s = Path::straight(kOrigin, 1, 0, c.prm.n);
    const auto mom = qform_moments_under_ps(spec, s);
    const auto values = qform_samples_conditional(spec, s, c.prm.samples, c.prm.seed);
    const auto mean = mean_estimate(values);
    const auto var = variance_estimate(values);
    CsvWriter w(c.out);
    w.row({"key", "value"});
    kv(w, "mean_exact", format_real(mom.mean));
    kv(w, "mean_mc", format_real(mean.mean));
    kv(w, "mean_se", format_real(mean.std_error));
    kv(w, "variance_exact", format_real(mom.variance));
    kv(w, "variance_mc", format_real(var.mean));
    kv(w, "variance_se", format_real(var.std_error));
    kv(w, "variance_bound", format_real(mom.unconditioned_variance + mom.cross_term_bound));
    c.results = Json{{"moments", to_json(mom)}, {"mean_mc", to_json(mean)}, {"variance_mc", to_json(var)}};
}

void com_tilt(Context& c)
{
    require_samples(c.prm.samples, 2, "--samples");
    const auto spec = TiltSpec::make(c.prm.p, c.prm.n0, c.prm.m);
    const auto inv = inverse_moment_small(spec);
    const Animal a = row_animal(spec.m, spec.n0);
    const Region r({0, 0}, {spec.m * spec.n0, spec.n0});
    const auto mom = mc_moments(c.prm.samples, 2, [&](std::size_t i, std::span<double> out) {
        const auto env = sample_environment(r, spec.p, derive_seed(c.prm.seed, StreamTag::Environment, i));
        const double f = small_tilt_density(spec, env, a);
        out[0] = f;
        out[1] = 1.0 / f;
    });
    CsvWriter w(c.out);
    w.row({"key", "value"});
    kv(w, "lambda", format_real(spec.lambda));
    kv(w, "tilted_p", format_real(spec.tilted_p()));
    kv(w, "inverse_moment", format_real(inv.value));
    kv(w, "inverse_moment_bound", format_real(inv.bound));
    kv(w, "density_mean_mc", format_real(mom[0].mean()));
    kv(w, "density_mean_se", format_real(mom[0].std_error()));
    kv(w, "inverse_mean_mc", format_real(mom[1].mean()));
    kv(w, "inverse_mean_se", format_real(mom[1].std_error()));
    c.results = Json{{"lambda", spec.lambda},
                     {"tilted_p", spec.tilted_p()},
                     {"inverse_moment", to_json(inv)},
                     {"density_mean", to_json(mom[0].estimate())},
                     {"inverse_mean", to_json(mom[1].estimate())}};
}

void com_fredo(Context& c)
{
    const FredoSpec spec{c.prm.p, c.prm.n, c.prm.alpha, c.prm.d};
    const auto b = fredo_bundle(spec);
    CsvWriter w(c.out);
    w.row({"key", "value"});
    kv(w, "p_prime", format_real(b.p_prime));
    kv(w, "tilt_factor", format_real(b.tilt_factor));
    kv(w, "density_cost_bound", format_real(b.density_cost_bound));
    kv(w, "box_edges", format_real(b.box_edges));
    kv(w, "exact_density_cost", format_real(b.exact_density_cost));
    c.results = Json{{"bundle", to_json(b)}};
    if (spec.d == 2 && c.prm.samples > 0) {
        require_samples(c.prm.samples, 2, "--samples");
        require_samples(c.prm.density_samples, 2, "--density-samples");
        const auto mc = fredo_mc(spec, c.prm.samples, c.prm.density_samples, c.prm.seed);
        kv(w, "sqrt_z_mc", format_real(mc.sqrt_z.mean));
        kv(w, "sqrt_z_se", format_real(mc.sqrt_z.std_error));
        kv(w, "cs_bound", format_real(mc.cs_bound));
        kv(w, "density_ratio_mc", format_real(mc.density_ratio.mean));
        kv(w, "density_ratio_se", format_real(mc.density_ratio.std_error));
        c.results["mc"] = to_json(mc);
    }
}

void com_potential(Context& c)
{
    require_samples(c.prm.samples, 4, "--samples");
    const auto law = DistributionSpec::parse(c.prm.law);
    law.validate();
    const double delta = c.prm.delta == 0.0 ? potential_delta(c.prm.n0) : c.prm.delta;
    const Animal a = row_animal(c.prm.m, c.prm.n0);
    const Region r({0, 0}, {c.prm.m * c.prm.n0 - 1, c.prm.n0 - 1});
    const auto mom = mc_moments(c.prm.samples, 2, [&](std::size_t i, std::span<double> out) {
        const auto pot = sample_potential(r, law, derive_seed(c.prm.seed, StreamTag::Potential, i));
        const double f = potential_tilt_density(pot, a, delta);
        out[0] = f;
        out[1] = 1.0 / f;
    });
    const double inv = potential_tilt_inverse_moment(law, c.prm.m, c.prm.n0, delta);
    const auto q = potential_qform_samples({0, 0, c.prm.n0}, law, c.prm.samples, c.prm.seed);
    const auto qm = mean_estimate(q);
    const auto qv = variance_estimate(q);
    CsvWriter w(c.out);
    w.row({"key", "value"});
    kv(w, "delta", format_real(delta));
    kv(w, "inverse_moment", format_real(inv));
    kv(w, "density_mean_mc", format_real(mom[0].mean()));
    kv(w, "density_mean_se", format_real(mom[0].std_error()));
    kv(w, "inverse_mean_mc", format_real(mom[1].mean()));
    kv(w, "inverse_mean_se", format_real(mom[1].std_error()));
    kv(w, "qform_mean_mc", format_real(qm.mean));
    kv(w, "qform_variance_mc", format_real(qv.mean));
    kv(w, "qform_variance_exact", format_real(potential_qform_variance(c.prm.n0)));
    kv(w, "qform_variance_bound", format_real(potential_qform_variance_bound(c.prm.n0)));
    c.results = Json{{"delta", delta},
                     {"inverse_moment", inv},
                     {"density_mean", to_json(mom[0].estimate())},
                     {"inverse_mean", to_json(mom[1].estimate())},
                     {"qform_mean", to_json(qm)},
                     {"qform_variance", to_json(qv)},
                     {"qform_variance_exact", potential_qform_variance(c.prm.n0)},
                     {"qform_variance_bound", potential_qform_variance_bound(c.prm.n0)}};
}

// ----------------------------------------------------------- estimate

void estimate_annealed(Context& c)
{
    const auto g = annealed_growth(c.prm.p, c.prm.n);
    write_growth_csv(c.out, g);
    c.results = to_json(g);
}

void estimate_quenched(Context& c)
{
    QuenchedOptions o;
    o.conditioning = conditioning_from_string(c.prm.conditioning);
    o.region_radius = c.prm.radius;
    o.max_draws = c.prm.max_draws;
    const auto g = quenched_growth(c.prm.p, c.prm.n, c.prm.samples, c.prm.seed, o);
    write_growth_csv(c.out, g);
    c.results = to_json(g);
}

void estimate_fractional(Context& c)
{
    const auto f = fractional_moment(c.prm.p, c.prm.theta, c.prm.n, c.prm.samples, c.prm.seed);
    CsvWriter w(c.out);
    w.row({"n", "theta", "moment_mean", "moment_se", "annealed_power", "empirical_b"});
    w.row({std::to_string(f.n), format_real(f.theta), format_real(f.moment.mean), format_real(f.moment.std_error),
           format_real(f.annealed_power), format_real(f.empirical_b)});
    c.results = to_json(f);
}

void estimate_coupling(Context& c)
{
    CouplingOptions o{c.prm.outer, c.prm.inner, c.prm.exhaustive};
    const auto rep = coupling_experiment(c.prm.p, c.prm.p2, c.prm.n, c.prm.samples, c.prm.seed, o);
    CsvWriter w(c.out);
    w.row({"key", "value"});
    kv(w, "samples", std::to_string(rep.samples));
    kv(w, "monotonicity_violations", std::to_string(rep.monotonicity_violations));
    bool ok = rep.monotonicity_violations == 0;
    if (!rep.nested.empty()) {
        kv(w, "pooled_residual", format_real(rep.pooled_residual.mean));
        kv(w, "pooled_residual_se", format_real(rep.pooled_residual.std_error));
        kv(w, "identity_within_3se", rep.identity_holds() ? "1" : "0");
        ok = ok && rep.identity_holds();
    }
    if (rep.exhaustive_run) {
        kv(w, "exhaustive_configurations", std::to_string(rep.exhaustive_configurations));
        kv(w, "exhaustive_max_relative_error", format_real(rep.exhaustive_max_error));
        ok = ok && rep.exhaustive_max_error < 1e-12;
    }
    kv(w, "verified", ok ? "1" : "0");
    c.results = to_json(rep);
    if (!ok) c.exit_code = kExitInvariant;
}

void estimate_beta(Context& c)
{
    const auto rep = beta_monotonicity(DistributionSpec::parse(c.prm.law), c.prm.betas, c.prm.n, c.prm.samples,
                                       c.prm.seed);
    CsvWriter w(c.out);
    w.row({"beta", "lambda", "sites_mean", "sites_se", "steps_mean", "steps_se"});
    for (const auto& r : rep.rows) {
        w.row({format_real(r.beta), format_real(r.lambda), format_real(r.sites_normalized.mean),
               format_real(r.sites_normalized.std_error), format_real(r.steps_normalized.mean),
               format_real(r.steps_normalized.std_error)});
    }
    c.results = to_json(rep);
}

// ------------------------------------------------------------- config

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Flat key=value text ('#' comments) or a flat JSON object.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw ParameterError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string text = ss.str();
    std::vector<std::pair<std::string, std::string>> out;
    if (trim(text).rfind('{', 0) == 0) {
        Json j;
        try {
            j = Json::parse(text);
        } catch (const std::exception& e) {
            throw FormatError("config '" + path + "': " + e.what());
        }
        for (const auto& [k, v] : j.items()) {
            if (v.is_string()) {
                out.emplace_back(k, v.get<std::string>());
            } else if (v.is_array()) {
                std::string joined;
                for (const auto& x : v) joined += (joined.empty() ? "" : ",") + (x.is_string() ? x.get<std::string>() : x.dump());
                out.emplace_back(k, joined);
            } else if (v.is_object() || v.is_null()) {
                throw FormatError("config '" + path + "': key '" + k + "' must be a scalar or a list");
            } else {
                out.emplace_back(k, v.dump());
            }
        }
        return out;
    }
    std::istringstream lines(text);
    std::string line;
    int number = 0;
    while (std::getline(lines, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos || trim(line.substr(0, eq)).empty()) {
            throw FormatError("config '" + path + "' line " + std::to_string(number) + ": expected key=value");
        }
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        out.emplace_back(trim(line.substr(0, eq)), value);
    }
    return out;
}

/// The leaf named by the first family token and the next matching leaf token.
const Leaf* selected_leaf(const std::vector<std::string>& args, const std::vector<Leaf>& leaves)
{
    for (std::size_t i = 0; i < args.size(); ++i) {
        for (std::size_t j = i + 1; j < args.size(); ++j) {
            for (const Leaf& l : leaves) {
                if (l.name == args[i] + " " + args[j]) return &l;
            }
        }
    }
    return nullptr;
}

/// Appends config-file values (and SAWPERC_SEED) for keys absent from the
/// command line. Precedence: flag > SAWPERC_SEED (seed only) > file. A file
/// may carry keys for other commands; keys no command knows are rejected.
std::vector<std::string> resolve_args(const std::vector<std::string>& args, const CLI::App& root,
                                      const std::vector<Leaf>& leaves)
{
    std::set<std::string> given;
    std::string config;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) != 0) continue;
        const auto eq = a.find('=');
        const std::string key = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
        given.insert(key);
        if (key == "config") {
            if (eq != std::string::npos) {
                config = a.substr(eq + 1);
            } else if (i + 1 < args.size()) {
                config = args[i + 1];
            }
        }
    }
    std::vector<std::string> out = args;
    if (!config.empty()) {
        const Leaf* leaf = selected_leaf(args, leaves);
        auto known_to = [](const CLI::App& app, const std::string& key) {
            return app.get_option_no_throw("--" + key) != nullptr;
        };
        for (const auto& [key, value] : read_config(config)) {
            if (key == "config") throw FormatError("config files cannot include other config files");
            const bool at_root = known_to(root, key);
            if (!at_root && !std::any_of(leaves.begin(), leaves.end(),
                                         [&](const Leaf& l) { return known_to(*l.app, key); })) {
                throw FormatError("config '" + config + "': unknown key '" + key + "'");
            }
            if (!at_root && (leaf == nullptr || !known_to(*leaf->app, key))) continue;
            if (given.count(key) || (key == "seed" && std::getenv("SAWPERC_SEED"))) continue;
            out.push_back("--" + key + "=" + value);
        }
    }
    if (const char* env = std::getenv("SAWPERC_SEED"); env && !given.count("seed")) {
        out.push_back(std::string("--seed=") + env);
    }
    return out;
}

int exit_code_for(const Error& e)
{
    switch (e.kind()) {
    case ErrorKind::Resource: return kExitResource;
    case ErrorKind::Invariant: return kExitInvariant;
    default: return kExitConfig;
    }
}

} // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err)
{
    const auto start = std::chrono::steady_clock::now();
    Params prm;
    unsigned threads = 0;
    std::string json_path;
    std::string config_path;
    std::string fault;
    bool timings = false;
    bool version = false;

    CLI::App app{"Self-avoiding walks, trees and animals on percolation clusters and in random potentials."};
    app.name("sawperc");
    app.fallthrough();
    app.add_option("--config", config_path, "key=value or JSON file with option values");
    app.add_option("--seed", prm.seed, "Base seed (SAWPERC_SEED overrides the config file)")->capture_default_str();
    app.add_option("--threads", threads, "Cap on worker threads (0 = all cores); results do not depend on it");
    app.add_option("--json", json_path, "Write a JSON report with config echo to this file");
    app.add_flag("--timings", timings, "Include wall-clock timings in the JSON report");
    app.add_flag("--version", version, "Print the version and exit");

    std::vector<Leaf> leaves;
    auto family = [&](const std::string& name, const std::string& desc) {
        auto* f = app.add_subcommand(name, desc);
        f->require_subcommand(1);
        f->fallthrough();
        return f;
    };
    auto leaf = [&](CLI::App* fam, const std::string& name, const std::string& desc,
                    std::function<void(Context&)> fn) -> Leaf& {
        Leaf l;
        l.name = fam->get_name() + " " + name;
        l.app = fam->add_subcommand(name, desc);
        l.app->fallthrough();
        l.run = std::move(fn);
        leaves.push_back(std::move(l));
        return leaves.back();
    };
    leaves.reserve(32);

    auto* saw = family("saw", "Exact walk and tree enumeration");
    {
        auto& l = leaf(saw, "count", "s_n: self-avoiding walks from the origin", saw_count);
        bind_option(l, "n", prm.n, "Walk length");
        bind_flag(l, "table", prm.table, "Print s_0..s_n as CSV");
    }
    {
        auto& l = leaf(saw, "open-count", "Z_0..Z_n on a sampled percolation environment", saw_open_count);
        bind_option(l, "p", prm.p, "Bond probability");
        bind_option(l, "n", prm.n, "Walk length");
        bind_option(l, "radius", prm.radius, "Window radius (0 = n)");
    }
    {
        auto& l = leaf(saw, "restricted", "s_n(alpha): walks inside [-n^alpha, n^alpha]^2", saw_restricted);
        bind_option(l, "n", prm.n, "Walk length");
        bind_option(l, "alpha", prm.alpha, "Box exponent");
    }
    {
        auto& l = leaf(saw, "trees", "Lattice trees with n vertices containing the origin", saw_trees);
        bind_option(l, "n", prm.n, "Vertex count");
        bind_option(l, "p", prm.tree_p, "Bond probability (1 = full lattice)");
        bind_option(l, "radius", prm.radius, "Window radius (0 = n)");
    }
    {
        auto& l = leaf(saw, "endtoend", "End-to-end displacement statistics", saw_endtoend);
        bind_option(l, "n", prm.n, "Walk length");
    }
    {
        auto& l = leaf(saw, "hammersley", "Both sides of the Hammersley inequality at the origin", saw_hammersley);
        bind_option(l, "p", prm.p, "Bond probability");
        bind_option(l, "n", prm.n, "Walk length");
        bind_option(l, "radius", prm.radius, "Window radius (0 = n + 2)");
    }

    auto* perc = family("perc", "Percolation environments and potentials");
    {
        auto& l = leaf(perc, "sample", "Summary of one sampled environment", perc_sample);
        bind_option(l, "p", prm.p, "Bond probability");
        bind_option(l, "radius", prm.radius, "Window radius (0 = 10)");
    }
    {
        auto& l = leaf(perc, "clusters", "Open cluster sizes", perc_clusters);
        bind_option(l, "p", prm.p, "Bond probability");
        bind_option(l, "radius", prm.radius, "Window radius (0 = 10)");
    }
    {
        auto& l = leaf(perc, "dump", "Text dump of a sampled environment", perc_dump);
        bind_option(l, "p", prm.p, "Bond probability");
        bind_option(l, "radius", prm.radius, "Window radius (0 = 10)");
        bind_option(l, "out", prm.out_file, "Output file (default stdout)");
    }
    {
        auto& l = leaf(perc, "potential", "Text dump of a sampled site potential", perc_potential);
        bind_option(l, "law", prm.law, "gaussian | rademacher | bernoulli:<q>");
        bind_option(l, "radius", prm.radius, "Window radius (0 = 10)");
        bind_option(l, "out", prm.out_file, "Output file (default stdout)");
    }

    auto* animal = family("animal", "Lattice animals and coarse-graining");
    {
        auto& l = leaf(animal, "count", "a_m: m-cell animals containing the origin", animal_count);
        bind_option(l, "m", prm.m, "Animal size");
    }
    {
        auto& l = leaf(animal, "enum", "List m-cell animals, one per line", animal_enum);
        bind_option(l, "m", prm.m, "Animal size");
        bind_option(l, "n0", prm.n0, "Block side recorded with each animal");
    }
    {
        auto& l = leaf(animal, "decompose", "Z_n(A) for every animal A of open paths", animal_decompose);
        bind_option(l, "p", prm.p, "Bond probability");
        bind_option(l, "n", prm.n, "Walk length");
        bind_option(l, "n0", prm.n0, "Block side");
        bind_option(l, "radius", prm.radius, "Window radius (0 = n)");
    }
    {
        auto& l = leaf(animal, "separate", "Well-separated subset of an animal", animal_separate);
        bind_option(l, "m", prm.m, "Size of the random animal");
        bind_option(l, "n0", prm.n0, "Block side");
        bind_option(l, "animal", prm.animal, "Explicit animal '(x,y) (x,y) ...' instead of a random one");
    }

    auto* com = family("com", "Change-of-measure quantities");
    {
        auto& l = leaf(com, "qform", "Quadratic form Q_x: MC moments and the analytic variance", com_qform);
        bind_option(l, "p", prm.p, "Bond probability");
        bind_option(l, "n0", prm.n0, "Block side");
        bind_option(l, "bx", prm.bx, "Block x");
        bind_option(l, "by", prm.by, "Block y");
        bind_option(l, "samples", prm.samples, "Environments");
        bind_option(l, "K", prm.K, "Indicator threshold constant");
        bind_option(l, "C1", prm.C1, "Variance constant");
        echo_constants(l, prm);
    }
    {
        auto& l = leaf(com, "conditional", "Q_x under the law conditioned on a straight path", com_conditional);
        bind_option(l, "p", prm.p, "Bond probability");
        bind_option(l, "n0", prm.n0, "Block side");
        bind_option(l, "n", prm.n, "Length of the straight east path from the origin");
        bind_option(l, "samples", prm.samples, "Environments");
        bind_option(l, "K", prm.K, "Indicator threshold constant");
    }
    {
        auto& l = leaf(com, "tilt", "Small-m exponential tilt on a row of m blocks", com_tilt);
        bind_option(l, "p", prm.p, "Bond probability");
        bind_option(l, "n0", prm.n0, "Block side");
        bind_option(l, "m", prm.m, "Animal size");
        bind_option(l, "samples", prm.samples, "Environments");
    }
    {
        auto& l = leaf(com, "fredo", "Restricted-walk change-of-measure bound chain", com_fredo);
        bind_option(l, "p", prm.p, "Bond probability");
        bind_option(l, "n", prm.n, "Walk length");
        bind_option(l, "alpha", prm.alpha, "Box exponent");
        bind_option(l, "d", prm.d, "Dimension (MC only for d = 2)");
        bind_option(l, "samples", prm.samples, "Environments for E[sqrt(Z)] (0 skips MC)");
        bind_option(l, "density-samples", prm.density_samples, "Environments for E[dP/dP~]");
    }
    {
        auto& l = leaf(com, "potential", "Potential-model tilt and site quadratic form", com_potential);
        bind_option(l, "law", prm.law, "gaussian | rademacher | bernoulli:<q>");
        bind_option(l, "n0", prm.n0, "Block side");
        bind_option(l, "m", prm.m, "Animal size");
        bind_option(l, "delta", prm.delta, "Tilt strength (0 = 1/n0)");
        bind_option(l, "samples", prm.samples, "Potentials");
    }

    auto* est = family("estimate", "Monte Carlo estimators");
    {
        auto& l = leaf(est, "annealed", "log p + (1/n) log s_n", estimate_annealed);
        bind_option(l, "p", prm.p, "Bond probability");
        bind_option(l, "n", prm.n, "Largest walk length");
    }
    {
        auto& l = leaf(est, "quenched", "(1/n) E[log Z_n | conditioning] against the annealed value", estimate_quenched);
        bind_option(l, "p", prm.p, "Bond probability");
        bind_option(l, "n", prm.n, "Largest walk length");
        bind_option(l, "samples", prm.samples, "Retained environments");
        bind_option(l, "conditioning", prm.conditioning, "positive_Z | origin_in_giant");
        bind_option(l, "radius", prm.radius, "Window radius (0 = n, or 2n for origin_in_giant)");
        bind_option(l, "max-draws", prm.max_draws, "Draw cap (0 = 50 * samples)");
    }
    {
        auto& l = leaf(est, "fractional", "E[Z_n^theta] and the empirical contraction b", estimate_fractional);
        bind_option(l, "p", prm.p, "Bond probability");
        bind_option(l, "theta", prm.theta, "Moment order in (0, 1]");
        bind_option(l, "n", prm.n, "Walk length");
        bind_option(l, "samples", prm.samples, "Environments");
    }
    {
        auto& l = leaf(est, "coupling", "Monotone coupling and the conditional-expectation identity", estimate_coupling);
        bind_option(l, "p", prm.p, "Lower bond probability");
        bind_option(l, "p2", prm.p2, "Upper bond probability");
        bind_option(l, "n", prm.n, "Walk length");
        bind_option(l, "samples", prm.samples, "Coupled samples for the monotonicity check");
        bind_option(l, "outer", prm.outer, "Outer environments of the nested check (0 skips it)");
        bind_option(l, "inner", prm.inner, "Inner draws per outer environment");
        bind_flag(l, "exhaustive", prm.exhaustive, "Exact integration on the 12-edge window");
    }
    {
        auto& l = leaf(est, "beta", "E[(Z_n e^{-(n+1) lambda})^{1/2}] across a beta grid", estimate_beta);
        bind_option(l, "law", prm.law, "gaussian | rademacher | bernoulli:<q>");
        bind_option(l, "betas", prm.betas, "Ascending comma-separated grid");
        bind_option(l, "n", prm.n, "Walk length");
        bind_option(l, "samples", prm.samples, "Potentials");
    }

    auto* self = app.add_subcommand("selftest", "Oracle-equivalence checks");
    self->add_option("--inject-fault", fault, "Corrupt the named check (exercises failure reporting)")->group("");

    std::vector<std::string> args;
    try {
        args = resolve_args(raw_args, app, leaves);
    } catch (const Error& e) {
        err << "sawperc: " << e.what() << '\n';
        return exit_code_for(e);
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << "sawperc: " << e.what() << '\n';
        return kExitConfig;
    }
    if (version) {
        out << kVersion << '\n';
        return kExitOk;
    }
    set_thread_limit(threads);

    if (self->parsed()) {
        return selftest(out, fault);
    }
    Leaf* chosen = nullptr;
    for (Leaf& l : leaves) {
        if (l.app->parsed()) chosen = &l;
    }
    if (chosen == nullptr) {
        err << "sawperc: no command given\n" << app.help();
        return kExitConfig;
    }

    Context ctx{prm, out};
    try {
        chosen->run(ctx);
    } catch (const Error& e) {
        err << "sawperc " << chosen->name << ": " << e.what() << '\n';
        return exit_code_for(e);
    }

    if (!json_path.empty()) {
        Json config{{"seed", prm.seed}};
        for (const auto& [key, get] : chosen->echo) config[key] = get();
        Json report{{"schema", kReportSchemaVersion},
                    {"version", kVersion},
                    {"command", chosen->name},
                    {"config", config},
                    {"results", ctx.results}};
        if (timings) {
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            report["timings"] = Json{{"wall_seconds", secs}, {"threads", thread_limit()}};
        }
        std::ofstream f(json_path);
        if (!f) {
            err << "sawperc: cannot write JSON report '" << json_path << "'\n";
            return kExitConfig;
        }
        f << report.dump(2) << '\n';
    }
    return ctx.exit_code;
}

} // namespace sawperc::cli
