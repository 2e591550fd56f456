#pragma once

// Change-of-measure machinery: the small-m exponential tilt, the quadratic
// form Q_x with its indicator tilt f_x, the path-conditioned law P_S, the
// restricted-walk bound chain, and the random-potential analogues.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "sawperc/coarsegrain.hpp"
#include "sawperc/environment.hpp"
#include "sawperc/lattice.hpp"
#include "sawperc/stats.hpp"
#include "sawperc/walks.hpp"

namespace sawperc {

// --- small-m tilt ---------------------------------------------------------

/// Solves (1 - lambda) sqrt(1 - p) n0 = 1. Requires sqrt(1 - p) n0 > 1.
double tilt_lambda(double p, std::int64_t n0);

struct TiltSpec {
    double p = 0.0;
    std::int64_t n0 = 0;
    double lambda = 0.0;
    std::int64_t m = 0;

    /// Validates (p, n0, m) and solves for lambda.
    static TiltSpec make(double p, std::int64_t n0, std::int64_t m);

    /// p' = lambda p / (1 - p (1 - lambda)): edge law inside I_A under the tilt.
    double tilted_p() const noexcept { return lambda * p / (1.0 - p * (1.0 - lambda)); }
    /// 2 m n0^2, the edge count of I_A.
    std::int64_t edge_budget() const noexcept { return 2 * m * n0 * n0; }
};

/// log f_A = k log(lambda) - 2 m n0^2 log(1 - p (1 - lambda)), k = open edges
/// of I_A. The animal must have the spec's n0.
double small_tilt_log_density(const TiltSpec& spec, const EdgeEnvironment& env, const Animal& animal);
double small_tilt_density(const TiltSpec& spec, const EdgeEnvironment& env, const Animal& animal);

/// A measured or exact quantity next to the analytic bound it must respect.
struct BoundCheck {
    double value = 0.0;
    double bound = 0.0;
    bool holds() const noexcept { return value <= bound; }
};

/// value: E[f_A^{-1}] = [(1 + (p/lambda)(1 - lambda))(1 - p(1 - lambda))]^{2 m n0^2};
/// bound: exp(2 p m / lambda).
BoundCheck inverse_moment_small(const TiltSpec& spec);

/// n / (n0 (log n0)^{1/4}): animals up to this size take the small-m tilt.
double small_m_threshold(int n, std::int64_t n0);
/// m <= small_m_threshold(n, n0). The boundary itself goes to the small-m branch.
bool uses_small_tilt(std::int64_t m, int n, std::int64_t n0);

// --- quadratic form ---------------------------------------------------------

inline constexpr double kDefaultK = 3.0;
/// Sup over n0 in [2, 16] of qform_c1_statistic (attained at n0 = 2; the
/// statistic decreases in n0). Bounds E[Q_x^2] for every p on that range.
inline constexpr double kDefaultC1 = 1000.25;

/// exp(C2 / (1 - p)^2): the block side the asymptotic argument prescribes.
double n0_from_c2(double c2, double p);

struct QFormSpec {
    BlockCoord block;
    double p = 0.0;
    double K = kDefaultK;
    /// I_x-bar: edges anchored in the 3x3 block neighbourhood, sorted.
    std::vector<Edge> edges;

    /// Requires n0 >= 2 and 0 < p < 1.
    static QFormSpec make(const BlockCoord& block, double p, double K = kDefaultK);

    std::int64_t n0() const noexcept { return block.n0; }
    /// 1 / ((1 - p) n0 sqrt(log n0)).
    double normalization() const noexcept;
};

/// c * sum over ordered pairs e != e' of (omega(e) - p)(omega(e') - p) / d(e, e'),
/// d the distance between edge midpoints, c = 1 / ((1 - p) n0 sqrt(log n0)).
double edge_quadratic_form(std::span<const Edge> edges, std::span<const double> omega, double p, std::int64_t n0);
/// c * sum over ordered pairs z != z' of omega(z) omega(z') / d(z, z'),
/// c = 1 / (n0 sqrt(log n0)).
double site_quadratic_form(std::span<const Site> sites, std::span<const double> omega, std::int64_t n0);

/// Q_x(omega). Throws RegionError if env does not cover I_x-bar.
double quadratic_form(const QFormSpec& spec, const EdgeEnvironment& env);

/// E[Q_x^2] = 2 c^2 p^2 (1 - p)^2 sum_{ordered e != e'} d^{-2}; E[Q_x] = 0.
double qform_variance_analytic(const QFormSpec& spec);
/// 2 / (n0^2 log n0) * sum_{ordered e != e' in I_0bar} d^{-2}, the p = 1
/// envelope of qform_variance_analytic.
double qform_c1_statistic(std::int64_t n0);
/// Max of qform_c1_statistic over the given block sides.
double empirical_c1(std::span<const std::int64_t> n0s);

/// exp(-K) when Q_x >= exp(K^2), else 1.
double fx_value(const QFormSpec& spec, const EdgeEnvironment& env);
/// f_A = product of f_x over the cells of a separated set.
double fa_value(const SeparatedSet& cells, double p, double K, const EdgeEnvironment& env);

/// Q_x on `samples` environments; sample i is read from
/// sample_environment(enlarged_block_region(block), p, derive_seed(seed, Environment, i)).
std::vector<double> qform_samples(const QFormSpec& spec, std::size_t samples, std::uint64_t seed);

// --- the path-conditioned law P_S --------------------------------------------

struct ConditionalEnv {
    double p = 0.0;
    /// Edges forced open (the edges of S).
    std::vector<Edge> forced;

    static ConditionalEnv of_path(double p, const Path& s);
};

/// sample_environment(region, p, seed) with the forced edges set open.
/// Throws RegionError when a forced edge lies outside the region.
EdgeEnvironment sample_conditional(const ConditionalEnv& cond, const Region& region, std::uint64_t seed);

/// Q_x under P_S; sample i is read from sample_conditional(cond,
/// enlarged_block_region(block), derive_seed(seed, Conditional, i)) where cond
/// forces the edges of s inside I_x-bar.
std::vector<double> qform_samples_conditional(const QFormSpec& spec, const Path& s, std::size_t samples,
                                              std::uint64_t seed);

/// S^(x): for the origin block the first n0 steps of s; otherwise the n0
/// steps ending at S_tau, where tau is the first step whose edge lies in I_x.
/// Throws PreconditionError if the path never uses an I_x edge or tau < n0.
Path entry_segment(const Path& s, const BlockCoord& block);

/// E_S[Q_x] = c (1 - p)^2 sum over ordered pairs of S-edges in I_x-bar of 1/d.
double qform_mean_under_ps(const QFormSpec& spec, const Path& s);

struct ConditionalQFormMoments {
    double mean = 0.0;
    /// Exact Var_{P_S}[Q_x].
    double variance = 0.0;
    /// E[Q_x^2] under the unconditioned law.
    double unconditioned_variance = 0.0;
    /// 4 c^2 p (1 - p)^3 |F| sum_{e not in F} sum_{e' in F} d^{-2}, F = S-edges in
    /// I_x-bar: the Cauchy-Schwarz bound on the linear term.
    double cross_term_bound = 0.0;

    bool variance_bounded() const noexcept { return variance <= unconditioned_variance + cross_term_bound; }
};
ConditionalQFormMoments qform_moments_under_ps(const QFormSpec& spec, const Path& s);

/// For each edge, the sum of 1/d to the other edges of the list.
std::vector<double> harmonic_edge_sums(std::span<const Edge> edges);

// --- restricted-walk bound chain ------------------------------------------------

struct FredoSpec {
    double p = 0.0;
    int n = 0;
    double alpha = 0.0;
    int d = 2;

    /// Names the violated constraint: 0 < p < 1, n >= 2, alpha > 0, d >= 1, d alpha < 2.
    void validate() const;
};

struct FredoBundle {
    /// p (1 - n^{-d alpha / 2}).
    double p_prime = 0.0;
    /// exp(-n^{1 - d alpha / 2}).
    double tilt_factor = 0.0;
    /// exp(d 2^{d+2} (p + p^2 / (1 - p))).
    double density_cost_bound = 0.0;

    std::int64_t box_radius = 0;
    /// Edges with both endpoints in [-R, R]^d.
    double box_edges = 0.0;
    /// d 2^{d+1} n^{d alpha}.
    double box_edges_bound = 0.0;
    /// E[dP/dP~] = [(p^2 (1 - p') + p' (1 - p)^2) / (p' (1 - p'))]^{box_edges}.
    double exact_density_cost = 0.0;
    /// [1 + 2 (p + p^2 / (1 - p)) n^{-d alpha}]^{box_edges}.
    double intermediate_density_cost = 0.0;

    /// Available for d = 2 only.
    bool has_counts = false;
    Count restricted_count;      ///< s_n(alpha)
    double annealed_mean = 0.0;  ///< p^n s_n
    double tilted_mean = 0.0;    ///< p'^n s_n(alpha) = E~[Z_n^(1)]
    /// tilt_factor * annealed_mean, which dominates tilted_mean.
    double tilted_mean_bound = 0.0;
};
FredoBundle fredo_bundle(const FredoSpec& spec);

struct FredoMc {
    /// E[sqrt(Z_n^(1))], walks confined to the box.
    EstimateWithCI sqrt_z;
    /// E[dP/dP~] under P.
    EstimateWithCI density_ratio;
    /// sqrt(tilted_mean) sqrt(exact_density_cost).
    double cs_bound = 0.0;
    /// sqrt(tilted_mean) sqrt(density_cost_bound).
    double cs_bound_analytic = 0.0;
};
/// Requires d = 2. Box environment i is sample_environment(box, p, derive_seed(seed, Environment, i)).
FredoMc fredo_mc(const FredoSpec& spec, std::size_t z_samples, std::size_t density_samples, std::uint64_t seed);

// --- random potential ----------------------------------------------------------

/// delta = 1 / n0.
double potential_delta(std::int64_t n0);
/// f_A = exp(-delta sum_{z in I_A} omega(z) - m n0^2 lambda(-delta)), sites of the blocks of A.
double potential_tilt_density(const SitePotential& pot, const Animal& animal, double delta);
/// E[f_A^{-1}] = exp(m n0^2 (lambda(delta) + lambda(-delta))).
double potential_tilt_inverse_moment(const DistributionSpec& law, std::int64_t m, std::int64_t n0, double delta);

/// Site quadratic form over the 3x3 block neighbourhood (9 n0^2 sites).
double potential_qform(const BlockCoord& block, const SitePotential& pot);
/// E[Q_x^2] = 2 c^2 sum_{ordered z != z'} d^{-2} for a zero-mean unit-variance law.
double potential_qform_variance(std::int64_t n0);
/// (2 / (n0^2 log n0)) sum_{z in I_x-bar} sum_{0 < |z' - z| <= 5 n0} d^{-2}.
/// Without the factor 2 the exact variance exceeds it for n0 >= 3.
double potential_qform_variance_bound(std::int64_t n0);
/// Site Q_x on `samples` potentials; sample i is read from
/// sample_potential(block_site_region of the neighbourhood, law, derive_seed(seed, Potential, i)).
std::vector<double> potential_qform_samples(const BlockCoord& block, const DistributionSpec& law,
                                            std::size_t samples, std::uint64_t seed);

} // namespace sawperc
