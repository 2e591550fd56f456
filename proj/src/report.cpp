#include "sawperc/report.hpp"

#include <charconv>
#include <ostream>

namespace sawperc {

std::string csv_field(std::string_view s)
{
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(s);
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_real(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void CsvWriter::row(const std::vector<std::string>& fields)
{
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out_ << ',';
        out_ << csv_field(fields[i]);
    }
    out_ << "\r\n";
}

Json to_json(const EstimateWithCI& e)
{
    return Json{{"mean", e.mean},
                {"std_error", e.std_error},
                {"n_samples", e.n_samples},
                {"conditioning", to_string(e.conditioning)}};
}

Json to_json(const GrowthSeries& g)
{
    Json rows = Json::array();
    for (const GrowthRow& r : g.rows) {
        Json row{{"n", r.n}, {"annealed", r.annealed}};
        if (g.retained > 0) {
            row["quenched"] = to_json(r.quenched);
            row["gap"] = r.gap;
            row["sample_annealed"] = r.sample_annealed;
        }
        rows.push_back(row);
    }
    Json out{{"p", g.p}, {"conditioning", to_string(g.conditioning)}};
    if (g.retained > 0) {
        out["region_radius"] = g.region_radius;
        out["draws"] = g.draws;
        out["retained"] = g.retained;
        out["retention"] = g.retention();
    }
    out["rows"] = rows;
    return out;
}

Json to_json(const FractionalMoment& f)
{
    return Json{{"p", f.p},
                {"theta", f.theta},
                {"n", f.n},
                {"moment", to_json(f.moment)},
                {"annealed_power", f.annealed_power},
                {"empirical_b", f.empirical_b}};
}

Json to_json(const CouplingReport& c)
{
    Json nested = Json::array();
    for (const NestedCheck& n : c.nested) {
        nested.push_back(Json{{"z_p2", n.z_p2}, {"target", n.target}, {"conditional_mean", to_json(n.conditional_mean)}});
    }
    Json out{{"p", c.p},
             {"p2", c.p2},
             {"n", c.n},
             {"samples", c.samples},
             {"monotonicity_violations", c.monotonicity_violations}};
    if (!c.nested.empty()) {
        out["nested"] = nested;
        out["pooled_residual"] = to_json(c.pooled_residual);
        out["identity_within_3se"] = c.identity_holds();
    }
    if (c.exhaustive_run) {
        out["exhaustive"] = Json{{"configurations", c.exhaustive_configurations},
                                 {"max_relative_error", c.exhaustive_max_error}};
    }
    return out;
}

Json to_json(const BetaReport& b)
{
    Json rows = Json::array();
    for (const BetaRow& r : b.rows) {
        rows.push_back(Json{{"beta", r.beta},
                            {"lambda", r.lambda},
                            {"sites_normalized", to_json(r.sites_normalized)},
                            {"steps_normalized", to_json(r.steps_normalized)},
                            {"sites_step", to_json(r.sites_step)},
                            {"steps_step", to_json(r.steps_step)}});
    }
    return Json{{"law", b.law.name()},
                {"n", b.n},
                {"samples", b.samples},
                {"rows", rows},
                {"sites_non_increasing", b.sites_non_increasing()},
                {"steps_non_increasing", b.steps_non_increasing()}};
}

Json to_json(const FredoBundle& b)
{
    Json out{{"p_prime", b.p_prime},
             {"tilt_factor", b.tilt_factor},
             {"density_cost_bound", b.density_cost_bound},
             {"box_radius", b.box_radius},
             {"box_edges", b.box_edges},
             {"box_edges_bound", b.box_edges_bound},
             {"exact_density_cost", b.exact_density_cost},
             {"intermediate_density_cost", b.intermediate_density_cost}};
    if (b.has_counts) {
        out["restricted_count"] = b.restricted_count.str();
        out["annealed_mean"] = b.annealed_mean;
        out["tilted_mean"] = b.tilted_mean;
        out["tilted_mean_bound"] = b.tilted_mean_bound;
    }
    return out;
}

Json to_json(const FredoMc& m)
{
    return Json{{"sqrt_z", to_json(m.sqrt_z)},
                {"density_ratio", to_json(m.density_ratio)},
                {"cs_bound", m.cs_bound},
                {"cs_bound_analytic", m.cs_bound_analytic}};
}

Json to_json(const ConditionalQFormMoments& m)
{
    return Json{{"mean", m.mean},
                {"variance", m.variance},
                {"unconditioned_variance", m.unconditioned_variance},
                {"cross_term_bound", m.cross_term_bound},
                {"variance_bounded", m.variance_bounded()}};
}

Json to_json(const BoundCheck& b)
{
    return Json{{"value", b.value}, {"bound", b.bound}, {"holds", b.holds()}};
}

void write_growth_csv(std::ostream& out, const GrowthSeries& g)
{
    CsvWriter w(out);
    w.row({"n", "annealed", "quenched_mean", "quenched_se", "gap", "retention"});
    const bool quenched = g.retained > 0;
    for (const GrowthRow& r : g.rows) {
        w.row({std::to_string(r.n), format_real(r.annealed), quenched ? format_real(r.quenched.mean) : "",
               quenched ? format_real(r.quenched.std_error) : "", quenched ? format_real(r.gap) : "",
               quenched ? format_real(g.retention()) : ""});
    }
}

} // namespace sawperc
