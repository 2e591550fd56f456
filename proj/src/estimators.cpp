#include "sawperc/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sawperc/error.hpp"
#include "sawperc/parallel.hpp"
#include "sawperc/rng.hpp"
#include "sawperc/walks.hpp"

namespace sawperc {

namespace {

void require_walk_length(int n, const char* what)
{
    if (n < 1 || n > kMaxSawLength) {
        throw ResourceError(std::string(what) + ": n must lie in [1, " + std::to_string(kMaxSawLength) + "]");
    }
}

void require_positive_probability(double p, const char* what)
{
    if (!(p > 0.0 && p <= 1.0)) {
        throw ParameterError(std::string(what) + ": p must lie in (0, 1]");
    }
}

std::vector<double> log_saw_counts(int n_max)
{
    const auto counts = saw_counts_up_to(n_max);
    std::vector<double> out;
    out.reserve(counts.size());
    for (const Count& c : counts) {
        out.push_back(std::log(c.convert_to<double>()));
    }
    return out;
}

} // namespace

GrowthSeries annealed_growth(double p, int n_max)
{
    require_positive_probability(p, "annealed_growth");
    require_walk_length(n_max, "annealed_growth");
    const auto log_s = log_saw_counts(n_max);
    GrowthSeries g;
    g.p = p;
    for (int n = 1; n <= n_max; ++n) {
        GrowthRow row;
        row.n = n;
        row.annealed = std::log(p) + log_s[static_cast<std::size_t>(n)] / n;
        g.rows.push_back(row);
    }
    return g;
}

GrowthSeries quenched_growth(double p, int n_max, std::size_t samples, std::uint64_t seed,
                             const QuenchedOptions& options)
{
    require_positive_probability(p, "quenched_growth");
    require_walk_length(n_max, "quenched_growth");
    if (samples < 100) {
        throw ParameterError("quenched_growth: samples must be >= 100");
    }
    if (options.conditioning == Conditioning::None) {
        throw ParameterError("quenched_growth: log Z_n needs a conditioning rule (positive_Z or origin_in_giant)");
    }
    const bool giant = options.conditioning == Conditioning::OriginInGiant;
    const std::int64_t min_radius = giant ? 2 * n_max : n_max;
    const std::int64_t radius = options.region_radius == 0 ? min_radius : options.region_radius;
    if (radius < min_radius) {
        throw ParameterError("quenched_growth: region radius must be >= " + std::to_string(min_radius));
    }
    const std::size_t max_draws = options.max_draws == 0 ? 50 * samples : options.max_draws;
    const Region region = Region::centered(kOrigin, radius);
    const auto width = static_cast<std::size_t>(n_max);

    GrowthSeries g = annealed_growth(p, n_max);
    g.conditioning = options.conditioning;
    g.region_radius = radius;

    std::vector<Moments> log_moments(width);
    std::vector<Moments> z_moments(width);
    std::vector<double> z(kReductionChunk * width);
    std::vector<char> keep(kReductionChunk);
    std::size_t draws = 0;
    std::size_t retained = 0;
    for (std::size_t begin = 0; begin < max_draws && retained < samples; begin += kReductionChunk) {
        const std::size_t count = std::min(kReductionChunk, max_draws - begin);
        parallel_for(count, [&](std::size_t k) {
            const auto env = sample_environment(region, p, derive_seed(seed, StreamTag::Environment, begin + k));
            const auto counts = open_saw_counts(env, kOrigin, n_max);
            keep[k] = counts[width] > 0 && (!giant || origin_in_giant(env));
            for (std::size_t n = 1; n <= width; ++n) {
                z[k * width + n - 1] = static_cast<double>(counts[n]);
            }
        });
        for (std::size_t k = 0; k < count && retained < samples; ++k) {
            draws = begin + k + 1;
            if (!keep[k]) continue;
            ++retained;
            for (std::size_t n = 1; n <= width; ++n) {
                const double zn = z[k * width + n - 1];
                log_moments[n - 1].add(std::log(zn) / static_cast<double>(n));
                z_moments[n - 1].add(zn);
            }
        }
    }
    if (retained == 0) {
        throw PreconditionError("quenched_growth: conditioning starvation, no environment among " +
                                std::to_string(draws) + " draws satisfied " + to_string(options.conditioning));
    }
    g.draws = draws;
    g.retained = retained;
    for (std::size_t i = 0; i < width; ++i) {
        GrowthRow& row = g.rows[i];
        row.quenched = log_moments[i].estimate(options.conditioning);
        row.gap = row.annealed - row.quenched.mean;
        row.sample_annealed = std::log(z_moments[i].mean()) / static_cast<double>(row.n);
    }
    return g;
}

FractionalMoment fractional_moment(double p, double theta, int n, std::size_t samples, std::uint64_t seed)
{
    require_positive_probability(p, "fractional_moment");
    require_walk_length(n, "fractional_moment");
    if (!(theta > 0.0 && theta <= 1.0)) {
        throw ParameterError("fractional_moment: theta must lie in (0, 1]");
    }
    if (samples < 2) {
        throw ParameterError("fractional_moment: samples must be >= 2");
    }
    const Region region = Region::centered(kOrigin, n);
    FractionalMoment out;
    out.p = p;
    out.theta = theta;
    out.n = n;
    out.moment = mc_moments(samples, [&](std::size_t i) {
        const auto env = sample_environment(region, p, derive_seed(seed, StreamTag::Environment, i));
        const double zn = static_cast<double>(open_saw_counts(env, kOrigin, n)[static_cast<std::size_t>(n)]);
        return theta == 1.0 ? zn : std::pow(zn, theta);
    }).estimate();
    const double s_n = count_saws(n).convert_to<double>();
    out.annealed_power = std::pow(std::pow(p, n) * s_n, theta);
    out.empirical_b = out.moment.mean > 0.0
                          ? std::pow(out.moment.mean, 1.0 / (n * theta)) / (p * std::pow(s_n, 1.0 / n))
                          : 0.0;
    return out;
}

std::pair<std::size_t, double> exhaustive_coupling_check(double p, double p2, int n)
{
    if (!(p > 0.0 && p < p2 && p2 <= 1.0)) {
        throw ParameterError("coupling: need 0 < p < p2 <= 1");
    }
    if (n < 0 || n > kMaxSawLength) {
        throw ResourceError("coupling: n out of range");
    }
    const Region window = Region::centered(kOrigin, 1);
    const auto edges = window.edges();
    const std::size_t m = edges.size();
    const std::size_t configs = std::size_t{1} << m;

    std::vector<double> z(configs);
    parallel_for(configs, [&](std::size_t mask) {
        EdgeEnvironment env(window);
        for (std::size_t k = 0; k < m; ++k) {
            if (mask >> k & 1u) env.set_open(edges[k], true);
        }
        z[mask] = static_cast<double>(open_saw_counts_in_region(env, kOrigin, n)[static_cast<std::size_t>(n)]);
    });

    const double r = p / p2;
    std::vector<double> errors(configs);
    std::vector<std::size_t> visited(configs);
    parallel_for(configs, [&](std::size_t mask) {
        const int open = __builtin_popcountll(mask);
        double expect = 0.0;
        std::size_t count = 0;
        // Every kept subset of the open edges of omega_p2.
        for (std::size_t sub = mask;; sub = (sub - 1) & mask) {
            const int kept = __builtin_popcountll(sub);
            expect += std::pow(r, kept) * std::pow(1.0 - r, open - kept) * z[sub];
            ++count;
            if (sub == 0) break;
        }
        const double target = std::pow(r, n) * z[mask];
        errors[mask] = std::fabs(expect - target) / std::max(1.0, target);
        visited[mask] = count;
    });
    std::size_t total = 0;
    for (std::size_t v : visited) total += v;
    return {total, *std::max_element(errors.begin(), errors.end())};
}

CouplingReport coupling_experiment(double p, double p2, int n, std::size_t samples, std::uint64_t seed,
                                   const CouplingOptions& options)
{
    if (!(p > 0.0 && p < p2 && p2 <= 1.0)) {
        throw ParameterError("coupling: need 0 < p < p2 <= 1");
    }
    require_walk_length(n, "coupling");
    const Region region = Region::centered(kOrigin, n);
    CouplingReport rep;
    rep.p = p;
    rep.p2 = p2;
    rep.n = n;
    rep.samples = samples;

    const auto violations = mc_collect(samples, [&](std::size_t i) {
        const auto field = sample_coupling_field(region, derive_seed(seed, StreamTag::Environment, i));
        const auto lo = open_saw_counts(threshold(field, p), kOrigin, n)[static_cast<std::size_t>(n)];
        const auto hi = open_saw_counts(threshold(field, p2), kOrigin, n)[static_cast<std::size_t>(n)];
        return lo > hi ? 1.0 : 0.0;
    });
    for (double v : violations) rep.monotonicity_violations += v != 0.0;

    if (options.outer > 0 && options.inner >= 2) {
        const double r = p / p2;
        struct Outer {
            std::vector<Edge> open;
            std::uint64_t inner_seed;
            double z;
            double target;
        };
        std::vector<Outer> outers(options.outer);
        parallel_for(options.outer, [&](std::size_t o) {
            const auto env = sample_environment(region, p2, derive_seed(seed, StreamTag::Estimator, o));
            const double zn = static_cast<double>(open_saw_counts(env, kOrigin, n)[static_cast<std::size_t>(n)]);
            outers[o] = {env.open_edges(), derive_seed(seed, StreamTag::NestedInner, o), zn, std::pow(r, n) * zn};
        });
        auto inner_z = [&](const Outer& o, std::size_t j) {
            const CounterRng rng(derive_seed(o.inner_seed, StreamTag::NestedInner, j));
            EdgeEnvironment env(region);
            for (const Edge& e : o.open) {
                if (rng.uniform(edge_key(e)) < r) env.set_open(e, true);
            }
            return static_cast<double>(open_saw_counts(env, kOrigin, n)[static_cast<std::size_t>(n)]);
        };
        const std::size_t inner = options.inner;
        const auto all = mc_collect(options.outer * inner, [&](std::size_t idx) {
            return inner_z(outers[idx / inner], idx % inner);
        });
        Moments pooled;
        for (std::size_t o = 0; o < options.outer; ++o) {
            Moments m;
            for (std::size_t j = 0; j < inner; ++j) {
                const double v = all[o * inner + j];
                m.add(v);
                pooled.add(v - outers[o].target);
            }
            rep.nested.push_back({outers[o].z, outers[o].target, m.estimate()});
        }
        rep.pooled_residual = pooled.estimate();
    }

    if (options.exhaustive) {
        const auto [configs, err] = exhaustive_coupling_check(p, p2, n);
        rep.exhaustive_run = true;
        rep.exhaustive_configurations = configs;
        rep.exhaustive_max_error = err;
    }
    return rep;
}

bool BetaReport::sites_non_increasing(double k) const
{
    return std::all_of(rows.begin(), rows.end(),
                       [&](const BetaRow& r) { return r.sites_step.mean <= k * r.sites_step.std_error; });
}

bool BetaReport::steps_non_increasing(double k) const
{
    return std::all_of(rows.begin(), rows.end(),
                       [&](const BetaRow& r) { return r.steps_step.mean <= k * r.steps_step.std_error; });
}

BetaReport beta_monotonicity(const DistributionSpec& law, std::span<const double> betas, int n,
                             std::size_t samples, std::uint64_t seed)
{
    law.validate();
    require_walk_length(n, "beta_monotonicity");
    if (betas.empty()) {
        throw ParameterError("beta_monotonicity: empty beta grid");
    }
    for (std::size_t k = 0; k < betas.size(); ++k) {
        if (!(betas[k] >= 0.0) || !std::isfinite(betas[k])) {
            throw ParameterError("beta_monotonicity: betas must be finite and >= 0");
        }
        if (k > 0 && !(betas[k] > betas[k - 1])) {
            throw ParameterError("beta_monotonicity: betas must be strictly ascending");
        }
    }
    if (samples < 2) {
        throw ParameterError("beta_monotonicity: samples must be >= 2");
    }
    const std::size_t b = betas.size();
    std::vector<double> lambda(b);
    for (std::size_t k = 0; k < b; ++k) lambda[k] = log_mgf(law, betas[k]);
    const double root_s = std::sqrt(count_saws(n).convert_to<double>());
    const Region region = Region::centered(kOrigin, n);

    const auto mom = mc_moments(samples, 4 * b, [&](std::size_t i, std::span<double> out) {
        const auto pot = sample_potential(region, law, derive_seed(seed, StreamTag::Potential, i));
        const auto logs = log_partition_functions(pot, betas, n);
        for (std::size_t k = 0; k < b; ++k) {
            if (betas[k] == 0.0) {
                out[k] = out[b + k] = root_s;
            } else {
                out[k] = std::exp(0.5 * (logs[k] - (n + 1) * lambda[k]));
                out[b + k] = std::exp(0.5 * (logs[k] - n * lambda[k]));
            }
            if (k > 0) {
                out[2 * b + k] = out[k] - out[k - 1];
                out[3 * b + k] = out[b + k] - out[b + k - 1];
            }
        }
    });

    BetaReport rep;
    rep.law = law;
    rep.n = n;
    rep.samples = samples;
    for (std::size_t k = 0; k < b; ++k) {
        BetaRow row;
        row.beta = betas[k];
        row.lambda = lambda[k];
        row.sites_normalized = mom[k].estimate();
        row.steps_normalized = mom[b + k].estimate();
        row.sites_step = mom[2 * b + k].estimate();
        row.steps_step = mom[3 * b + k].estimate();
        rep.rows.push_back(row);
    }
    return rep;
}

} // namespace sawperc
