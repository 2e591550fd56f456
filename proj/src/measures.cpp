#include "sawperc/measures.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "point_qform.hpp"
#include "sawperc/error.hpp"
#include "sawperc/parallel.hpp"
#include "sawperc/rng.hpp"

namespace sawperc {

using detail::kQFormBatch;
using detail::PointQuadraticForm;

// ------------------------------------------------------ PointQuadraticForm

namespace detail {

PointQuadraticForm::PointQuadraticForm(std::span<const double> xs, std::span<const double> ys, double scale)
    : w_(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(xs.size())), scale_(scale)
{
    const auto m = static_cast<Eigen::Index>(xs.size());
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < m; ++i) {
            w_(i, j) = i == j ? 0.0
                              : 1.0 / std::hypot(xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)],
                                                 ys[static_cast<std::size_t>(i)] - ys[static_cast<std::size_t>(j)]);
        }
    }
}

double PointQuadraticForm::evaluate(std::span<const double> v) const
{
    const Eigen::Map<const Eigen::VectorXd> x(v.data(), static_cast<Eigen::Index>(v.size()));
    return scale_ * x.dot(w_ * x);
}

void PointQuadraticForm::evaluate_batch(const Eigen::MatrixXd& values, std::span<double> out) const
{
    const Eigen::MatrixXd wv = w_ * values;
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        out[static_cast<std::size_t>(c)] = scale_ * values.col(c).dot(wv.col(c));
    }
}

double PointQuadraticForm::sum_inverse_square() const
{
    return w_.squaredNorm();
}

Eigen::VectorXd PointQuadraticForm::apply(std::span<const double> v) const
{
    const Eigen::Map<const Eigen::VectorXd> x(v.data(), static_cast<Eigen::Index>(v.size()));
    return w_ * x;
}

} // namespace detail

namespace {

void require_open_probability(double p, const char* what)
{
    if (!(p > 0.0 && p < 1.0)) {
        throw ParameterError(std::string(what) + ": p must lie in (0, 1)");
    }
}

void require_log_block(std::int64_t n0, const char* what)
{
    if (n0 < 2) {
        throw ParameterError(std::string(what) + ": n0 must be >= 2 so that log n0 > 0");
    }
}

PointQuadraticForm edge_kernel(std::span<const Edge> edges, double scale)
{
    std::vector<double> xs;
    std::vector<double> ys;
    for (const Edge& e : edges) {
        xs.push_back(e.mid_x());
        ys.push_back(e.mid_y());
    }
    return PointQuadraticForm(xs, ys, scale);
}

PointQuadraticForm site_kernel(std::span<const Site> sites, double scale)
{
    std::vector<double> xs;
    std::vector<double> ys;
    for (const Site& s : sites) {
        xs.push_back(static_cast<double>(s.x));
        ys.push_back(static_cast<double>(s.y));
    }
    return PointQuadraticForm(xs, ys, scale);
}

double site_scale(std::int64_t n0)
{
    const double n = static_cast<double>(n0);
    return 1.0 / (n * std::sqrt(std::log(n)));
}

/// Runs fill(i, column) for every sample and evaluates the form batch by batch.
template <typename Fill>
std::vector<double> batched_samples(const PointQuadraticForm& form, std::size_t samples, Fill fill)
{
    std::vector<double> out(samples);
    const std::size_t batches = (samples + kQFormBatch - 1) / kQFormBatch;
    const auto m = static_cast<Eigen::Index>(form.size());
    parallel_for(batches, [&](std::size_t b) {
        const std::size_t begin = b * kQFormBatch;
        const std::size_t count = std::min(samples, begin + kQFormBatch) - begin;
        Eigen::MatrixXd values(m, static_cast<Eigen::Index>(count));
        for (std::size_t c = 0; c < count; ++c) {
            fill(begin + c, values.col(static_cast<Eigen::Index>(c)).data());
        }
        form.evaluate_batch(values, std::span<double>(out).subspan(begin, count));
    });
    return out;
}

std::vector<std::uint64_t> edge_keys(std::span<const Edge> edges)
{
    std::vector<std::uint64_t> keys;
    keys.reserve(edges.size());
    for (const Edge& e : edges) {
        keys.push_back(edge_key(e));
    }
    return keys;
}

/// Marks the entries of spec.edges used by s.
std::vector<char> path_mask(const QFormSpec& spec, const Path& s)
{
    std::vector<char> in(spec.edges.size(), 0);
    for (const Edge& e : s.edges()) {
        const auto it = std::lower_bound(spec.edges.begin(), spec.edges.end(), e);
        if (it != spec.edges.end() && *it == e) {
            in[static_cast<std::size_t>(it - spec.edges.begin())] = 1;
        }
    }
    return in;
}

bool in_block(const Edge& e, const BlockCoord& b)
{
    const BlockCoord eb = block_of_edge(e, b.n0);
    return eb.bx == b.bx && eb.by == b.by;
}

} // namespace

// ------------------------------------------------------------ small-m tilt

double tilt_lambda(double p, std::int64_t n0)
{
    require_open_probability(p, "tilt_lambda");
    const double root = std::sqrt(1.0 - p) * static_cast<double>(n0);
    if (!(root > 1.0)) {
        throw ParameterError("tilt_lambda: need sqrt(1 - p) * n0 > 1, got " + std::to_string(root));
    }
    return 1.0 - 1.0 / root;
}

TiltSpec TiltSpec::make(double p, std::int64_t n0, std::int64_t m)
{
    if (m < 1) {
        throw ParameterError("TiltSpec: m must be >= 1");
    }
    return {p, n0, tilt_lambda(p, n0), m};
}

double small_tilt_log_density(const TiltSpec& spec, const EdgeEnvironment& env, const Animal& animal)
{
    if (animal.n0() != spec.n0) {
        throw ParameterError("small_tilt_density: animal block side differs from the spec's n0");
    }
    std::int64_t open = 0;
    for (const Edge& e : animal_edges(animal)) {
        if (!env.covers(e)) {
            throw RegionError("small_tilt_density: environment does not cover I_A");
        }
        open += env.is_open(e);
    }
    return static_cast<double>(open) * std::log(spec.lambda) -
           static_cast<double>(spec.edge_budget()) * std::log1p(-spec.p * (1.0 - spec.lambda));
}

double small_tilt_density(const TiltSpec& spec, const EdgeEnvironment& env, const Animal& animal)
{
    return std::exp(small_tilt_log_density(spec, env, animal));
}

BoundCheck inverse_moment_small(const TiltSpec& spec)
{
    const double l = spec.lambda;
    const double p = spec.p;
    const double base = (1.0 + (p / l) * (1.0 - l)) * (1.0 - p * (1.0 - l));
    return {std::pow(base, static_cast<double>(spec.edge_budget())),
            std::exp(2.0 * p * static_cast<double>(spec.m) / l)};
}

double small_m_threshold(int n, std::int64_t n0)
{
    if (n < 1) {
        throw ParameterError("small_m_threshold: n must be >= 1");
    }
    require_log_block(n0, "small_m_threshold");
    return static_cast<double>(n) / (static_cast<double>(n0) * std::pow(std::log(static_cast<double>(n0)), 0.25));
}

bool uses_small_tilt(std::int64_t m, int n, std::int64_t n0)
{
    return static_cast<double>(m) <= small_m_threshold(n, n0);
}

// ---------------------------------------------------------- quadratic form

double n0_from_c2(double c2, double p)
{
    require_open_probability(p, "n0_from_c2");
    return std::exp(c2 / ((1.0 - p) * (1.0 - p)));
}

QFormSpec QFormSpec::make(const BlockCoord& block, double p, double K)
{
    require_log_block(block.n0, "QFormSpec");
    require_open_probability(p, "QFormSpec");
    if (!std::isfinite(K)) {
        throw ParameterError("QFormSpec: K must be finite");
    }
    return {block, p, K, enlarged_block_edges(block)};
}

double QFormSpec::normalization() const noexcept
{
    return site_scale(block.n0) / (1.0 - p);
}

double edge_quadratic_form(std::span<const Edge> edges, std::span<const double> omega, double p, std::int64_t n0)
{
    require_log_block(n0, "edge_quadratic_form");
    if (omega.size() != edges.size()) {
        throw ParameterError("edge_quadratic_form: one occupancy per edge required");
    }
    const double c = site_scale(n0) / (1.0 - p);
    double total = 0.0;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const double yi = omega[i] - p;
        if (yi == 0.0) continue;
        double row = 0.0;
        for (std::size_t j = 0; j < edges.size(); ++j) {
            if (j != i) row += (omega[j] - p) / edge_distance(edges[i], edges[j]);
        }
        total += yi * row;
    }
    return c * total;
}

double site_quadratic_form(std::span<const Site> sites, std::span<const double> omega, std::int64_t n0)
{
    require_log_block(n0, "site_quadratic_form");
    if (omega.size() != sites.size()) {
        throw ParameterError("site_quadratic_form: one value per site required");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < sites.size(); ++i) {
        if (omega[i] == 0.0) continue;
        double row = 0.0;
        for (std::size_t j = 0; j < sites.size(); ++j) {
            if (j != i) row += omega[j] / site_distance(sites[i], sites[j]);
        }
        total += omega[i] * row;
    }
    return site_scale(n0) * total;
}

double quadratic_form(const QFormSpec& spec, const EdgeEnvironment& env)
{
    std::vector<double> omega;
    omega.reserve(spec.edges.size());
    for (const Edge& e : spec.edges) {
        if (!env.covers(e)) {
            throw RegionError("quadratic_form: environment does not cover the enlarged block");
        }
        omega.push_back(env.is_open(e) ? 1.0 : 0.0);
    }
    return edge_quadratic_form(spec.edges, omega, spec.p, spec.n0());
}

double qform_variance_analytic(const QFormSpec& spec)
{
    const double c = spec.normalization();
    const double pq = spec.p * (1.0 - spec.p);
    return 2.0 * c * c * pq * pq * edge_kernel(spec.edges, 1.0).sum_inverse_square();
}

double qform_c1_statistic(std::int64_t n0)
{
    require_log_block(n0, "qform_c1_statistic");
    const double n = static_cast<double>(n0);
    const auto edges = enlarged_block_edges({0, 0, n0});
    return 2.0 * edge_kernel(edges, 1.0).sum_inverse_square() / (n * n * std::log(n));
}

double empirical_c1(std::span<const std::int64_t> n0s)
{
    double best = 0.0;
    for (std::int64_t n0 : n0s) {
        best = std::max(best, qform_c1_statistic(n0));
    }
    return best;
}

double fx_value(const QFormSpec& spec, const EdgeEnvironment& env)
{
    return quadratic_form(spec, env) >= std::exp(spec.K * spec.K) ? std::exp(-spec.K) : 1.0;
}

double fa_value(const SeparatedSet& cells, double p, double K, const EdgeEnvironment& env)
{
    double f = 1.0;
    for (const Site& c : cells.cells) {
        f *= fx_value(QFormSpec::make({c.x, c.y, cells.n0}, p, K), env);
    }
    return f;
}

std::vector<double> qform_samples(const QFormSpec& spec, std::size_t samples, std::uint64_t seed)
{
    const PointQuadraticForm form = edge_kernel(spec.edges, spec.normalization());
    const auto keys = edge_keys(spec.edges);
    const double p = spec.p;
    return batched_samples(form, samples, [&](std::size_t i, double* col) {
        const CounterRng rng(derive_seed(seed, StreamTag::Environment, i));
        for (std::size_t k = 0; k < keys.size(); ++k) {
            col[k] = (rng.uniform(keys[k]) <= p ? 1.0 : 0.0) - p;
        }
    });
}

// ---------------------------------------------------------------- P_S

ConditionalEnv ConditionalEnv::of_path(double p, const Path& s)
{
    require_open_probability(p, "ConditionalEnv");
    return {p, s.edges()};
}

EdgeEnvironment sample_conditional(const ConditionalEnv& cond, const Region& region, std::uint64_t seed)
{
    for (const Edge& e : cond.forced) {
        if (!region.contains(e)) {
            throw RegionError("sample_conditional: a forced edge lies outside the region");
        }
    }
    EdgeEnvironment env = sample_environment(region, cond.p, seed);
    for (const Edge& e : cond.forced) {
        env.set_open(e, true);
    }
    return env;
}

std::vector<double> qform_samples_conditional(const QFormSpec& spec, const Path& s, std::size_t samples,
                                              std::uint64_t seed)
{
    const PointQuadraticForm form = edge_kernel(spec.edges, spec.normalization());
    const auto keys = edge_keys(spec.edges);
    const auto forced = path_mask(spec, s);
    const double p = spec.p;
    return batched_samples(form, samples, [&](std::size_t i, double* col) {
        const CounterRng rng(derive_seed(seed, StreamTag::Conditional, i));
        for (std::size_t k = 0; k < keys.size(); ++k) {
            col[k] = (forced[k] || rng.uniform(keys[k]) <= p ? 1.0 : 0.0) - p;
        }
    });
}

Path entry_segment(const Path& s, const BlockCoord& block)
{
    const auto n0 = static_cast<std::size_t>(block.n0);
    if (block.bx == 0 && block.by == 0) {
        if (s.length() < n0) {
            throw PreconditionError("entry_segment: path shorter than n0");
        }
        return s.segment(0, n0);
    }
    const auto edges = s.edges();
    const auto hit = std::find_if(edges.begin(), edges.end(), [&](const Edge& e) { return in_block(e, block); });
    if (hit == edges.end()) {
        throw PreconditionError("entry_segment: path never uses an edge of the block");
    }
    const auto tau = static_cast<std::size_t>(hit - edges.begin());
    if (tau < n0) {
        throw PreconditionError("entry_segment: first hitting time " + std::to_string(tau) + " < n0 = " +
                                std::to_string(n0));
    }
    return s.segment(tau - n0, n0);
}

double qform_mean_under_ps(const QFormSpec& spec, const Path& s)
{
    return qform_moments_under_ps(spec, s).mean;
}

ConditionalQFormMoments qform_moments_under_ps(const QFormSpec& spec, const Path& s)
{
    const auto in = path_mask(spec, s);
    const std::size_t m = spec.edges.size();
    const double p = spec.p;
    const double q = 1.0 - p;
    const double c = spec.normalization();

    CompensatedSum pair_f;      // sum over ordered F pairs of w
    CompensatedSum square_u;    // sum over ordered U pairs of w^2
    CompensatedSum square_all;  // sum over all ordered pairs of w^2
    CompensatedSum r_squared;   // sum over U of (sum over F of w)^2
    CompensatedSum cross;       // sum over U x F of w^2
    std::size_t f_count = 0;
    for (std::size_t i = 0; i < m; ++i) {
        f_count += in[i] != 0;
        double r = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            const double w = 1.0 / edge_distance(spec.edges[i], spec.edges[j]);
            square_all.add(w * w);
            if (in[i] && in[j]) {
                pair_f.add(w);
            } else if (!in[i] && !in[j]) {
                square_u.add(w * w);
            } else if (!in[i]) {
                r += w;
                cross.add(w * w);
            }
        }
        if (!in[i]) r_squared.add(r * r);
    }

    ConditionalQFormMoments out;
    out.mean = c * q * q * pair_f.value();
    out.variance = c * c * (2.0 * p * p * q * q * square_u.value() + 4.0 * p * q * q * q * r_squared.value());
    out.unconditioned_variance = 2.0 * c * c * p * p * q * q * square_all.value();
    out.cross_term_bound = 4.0 * c * c * p * q * q * q * static_cast<double>(f_count) * cross.value();
    return out;
}

std::vector<double> harmonic_edge_sums(std::span<const Edge> edges)
{
    std::vector<double> out(edges.size(), 0.0);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        for (std::size_t j = 0; j < edges.size(); ++j) {
            if (j != i) out[i] += 1.0 / edge_distance(edges[i], edges[j]);
        }
    }
    return out;
}

// ------------------------------------------------ restricted-walk chain

void FredoSpec::validate() const
{
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("FredoSpec: p must lie in (0, 1)");
    if (n < 2) throw ParameterError("FredoSpec: n must be >= 2");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ParameterError("FredoSpec: alpha must be > 0");
    if (d < 1) throw ParameterError("FredoSpec: d must be >= 1");
    if (!(d * alpha < 2.0)) throw ParameterError("FredoSpec: d * alpha must be < 2");
}

FredoBundle fredo_bundle(const FredoSpec& spec)
{
    spec.validate();
    const double p = spec.p;
    const double n = static_cast<double>(spec.n);
    const double d = static_cast<double>(spec.d);
    const double da = d * spec.alpha;
    const double load = p + p * p / (1.0 - p);

    FredoBundle b;
    b.p_prime = p * (1.0 - std::pow(n, -da / 2.0));
    b.tilt_factor = std::exp(-std::pow(n, 1.0 - da / 2.0));
    b.density_cost_bound = std::exp(d * std::pow(2.0, d + 2.0) * load);

    b.box_radius = restriction_radius(spec.n, spec.alpha);
    const double side = 2.0 * static_cast<double>(b.box_radius);
    b.box_edges = d * std::pow(side + 1.0, d - 1.0) * side;
    b.box_edges_bound = d * std::pow(2.0, d + 1.0) * std::pow(n, da);

    const double pp = b.p_prime;
    const double per_edge = (p * p * (1.0 - pp) + pp * (1.0 - p) * (1.0 - p)) / (pp * (1.0 - pp));
    b.exact_density_cost = std::pow(per_edge, b.box_edges);
    b.intermediate_density_cost = std::pow(1.0 + 2.0 * load * std::pow(n, -da), b.box_edges);

    if (spec.d == 2 && spec.n <= kMaxSawLength) {
        b.has_counts = true;
        b.restricted_count = count_restricted_saws(spec.n, spec.alpha);
        const double s_n = count_saws(spec.n).convert_to<double>();
        const double s_alpha = b.restricted_count.convert_to<double>();
        b.annealed_mean = std::pow(p, n) * s_n;
        b.tilted_mean = std::pow(pp, n) * s_alpha;
        b.tilted_mean_bound = b.tilt_factor * b.annealed_mean;
    }
    return b;
}

FredoMc fredo_mc(const FredoSpec& spec, std::size_t z_samples, std::size_t density_samples, std::uint64_t seed)
{
    if (spec.d != 2) {
        throw ParameterError("fredo_mc: only d = 2 is simulated");
    }
    const FredoBundle b = fredo_bundle(spec);
    if (z_samples < 2 || density_samples < 2) {
        throw ParameterError("fredo_mc: need at least 2 samples per estimate");
    }
    const Region box = Region::centered(kOrigin, b.box_radius);
    const double p = spec.p;
    const int n = spec.n;

    FredoMc out;
    out.sqrt_z = mc_moments(z_samples, [&](std::size_t i) {
        const auto env = sample_environment(box, p, derive_seed(seed, StreamTag::Environment, i));
        return std::sqrt(static_cast<double>(open_saw_counts_in_region(env, kOrigin, n)[static_cast<std::size_t>(n)]));
    }).estimate();

    const auto keys = edge_keys(box.edges());
    const double log_open = std::log(p / b.p_prime);
    const double log_closed = std::log((1.0 - p) / (1.0 - b.p_prime));
    out.density_ratio = mc_moments(density_samples, [&](std::size_t i) {
        const CounterRng rng(derive_seed(seed, StreamTag::Environment, i));
        std::size_t open = 0;
        for (std::uint64_t k : keys) {
            open += rng.uniform(k) <= p;
        }
        const double closed = static_cast<double>(keys.size() - open);
        return std::exp(static_cast<double>(open) * log_open + closed * log_closed);
    }).estimate();

    out.cs_bound = std::sqrt(b.tilted_mean) * std::sqrt(b.exact_density_cost);
    out.cs_bound_analytic = std::sqrt(b.tilted_mean) * std::sqrt(b.density_cost_bound);
    return out;
}

// ----------------------------------------------------------- potential

double potential_delta(std::int64_t n0)
{
    if (n0 < 1) {
        throw ParameterError("potential_delta: n0 must be >= 1");
    }
    return 1.0 / static_cast<double>(n0);
}

double potential_tilt_density(const SitePotential& pot, const Animal& animal, double delta)
{
    const auto sites = animal_sites(animal);
    CompensatedSum sum;
    for (const Site& z : sites) {
        if (!pot.region().contains(z)) {
            throw RegionError("potential_tilt_density: potential does not cover I_A");
        }
        sum.add(pot.value(z));
    }
    return std::exp(-delta * sum.value() - static_cast<double>(sites.size()) * log_mgf(pot.law(), -delta));
}

double potential_tilt_inverse_moment(const DistributionSpec& law, std::int64_t m, std::int64_t n0, double delta)
{
    const double volume = static_cast<double>(m * n0 * n0);
    return std::exp(volume * (log_mgf(law, delta) + log_mgf(law, -delta)));
}

double potential_qform(const BlockCoord& block, const SitePotential& pot)
{
    require_log_block(block.n0, "potential_qform");
    const auto sites = enlarged_block_sites(block);
    std::vector<double> omega;
    omega.reserve(sites.size());
    for (const Site& z : sites) {
        if (!pot.region().contains(z)) {
            throw RegionError("potential_qform: potential does not cover the enlarged block");
        }
        omega.push_back(pot.value(z));
    }
    return site_quadratic_form(sites, omega, block.n0);
}

double potential_qform_variance(std::int64_t n0)
{
    require_log_block(n0, "potential_qform_variance");
    const double c = site_scale(n0);
    return 2.0 * c * c * site_kernel(enlarged_block_sites({0, 0, n0}), 1.0).sum_inverse_square();
}

double potential_qform_variance_bound(std::int64_t n0)
{
    require_log_block(n0, "potential_qform_variance_bound");
    const std::int64_t r = 5 * n0;
    CompensatedSum ring;
    for (std::int64_t dx = -r; dx <= r; ++dx) {
        for (std::int64_t dy = -r; dy <= r; ++dy) {
            const std::int64_t d2 = dx * dx + dy * dy;
            if (d2 > 0 && d2 <= r * r) ring.add(1.0 / static_cast<double>(d2));
        }
    }
    const double n = static_cast<double>(n0);
    return 18.0 * ring.value() / std::log(n);
}

std::vector<double> potential_qform_samples(const BlockCoord& block, const DistributionSpec& law,
                                            std::size_t samples, std::uint64_t seed)
{
    require_log_block(block.n0, "potential_qform_samples");
    law.validate();
    const auto sites = enlarged_block_sites(block);
    const PointQuadraticForm form = site_kernel(sites, site_scale(block.n0));
    std::vector<std::uint64_t> keys;
    keys.reserve(sites.size());
    for (const Site& z : sites) {
        keys.push_back(site_key(z));
    }
    return batched_samples(form, samples, [&](std::size_t i, double* col) {
        const std::uint64_t s = derive_seed(seed, StreamTag::Potential, i);
        for (std::size_t k = 0; k < keys.size(); ++k) {
            col[k] = law.sample(s, keys[k]);
        }
    });
}

} // namespace sawperc
