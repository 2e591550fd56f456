#pragma once

// Monte Carlo front-end: annealed and quenched growth series, fractional
// moments, the monotone coupling experiment, and beta-monotonicity in the
// random-potential model. Every estimate carries a standard error and is
// bit-identical for any thread count.

#include <cstdint>
#include <utility>
#include <span>
#include <vector>

#include "sawperc/environment.hpp"
#include "sawperc/stats.hpp"

namespace sawperc {

struct GrowthRow {
    int n = 0;
    /// log p + (1/n) log s_n.
    double annealed = 0.0;
    /// (1/n) log Z_n averaged over retained environments.
    EstimateWithCI quenched;
    /// annealed - quenched.mean; its standard error is quenched.std_error.
    double gap = 0.0;
    /// (1/n) log of the sample mean of Z_n over retained environments. Never
    /// below quenched.mean (concavity of log), sample by sample.
    double sample_annealed = 0.0;
};

struct GrowthSeries {
    double p = 0.0;
    Conditioning conditioning = Conditioning::None;
    std::int64_t region_radius = 0;
    std::size_t draws = 0;
    std::size_t retained = 0;
    std::vector<GrowthRow> rows;

    double retention() const noexcept
    {
        return draws == 0 ? 1.0 : static_cast<double>(retained) / static_cast<double>(draws);
    }
};

/// Rows n = 1 .. n_max with only the annealed column filled.
GrowthSeries annealed_growth(double p, int n_max);

struct QuenchedOptions {
    Conditioning conditioning = Conditioning::PositiveZ;
    /// 0 selects n_max for PositiveZ and 2 n_max for OriginInGiant.
    std::int64_t region_radius = 0;
    /// Environments drawn at most; 0 selects 50 * samples.
    std::size_t max_draws = 0;
};

/// Draws environments in index order until `samples` are retained by the
/// conditioning rule (or max_draws is hit) and averages (1/n) log Z_n over
/// the first `samples` retained ones. Throws PreconditionError on
/// conditioning starvation (nothing retained).
GrowthSeries quenched_growth(double p, int n_max, std::size_t samples, std::uint64_t seed,
                             const QuenchedOptions& options = {});

struct FractionalMoment {
    double p = 0.0;
    double theta = 0.0;
    int n = 0;
    /// E[Z_n^theta].
    EstimateWithCI moment;
    /// (p^n s_n)^theta, the Jensen upper bound.
    double annealed_power = 0.0;
    /// (E[Z_n^theta])^{1/(n theta)} / (p s_n^{1/n}).
    double empirical_b = 0.0;
};
FractionalMoment fractional_moment(double p, double theta, int n, std::size_t samples, std::uint64_t seed);

struct CouplingOptions {
    /// Outer environments for the nested check; 0 skips it.
    std::size_t outer = 20;
    std::size_t inner = 2000;
    /// Exhaustive integration on the 12-edge window [-1, 1]^2.
    bool exhaustive = true;
};

struct NestedCheck {
    double z_p2 = 0.0;
    /// (p / p2)^n Z_n(omega_p2).
    double target = 0.0;
    EstimateWithCI conditional_mean;
};

struct CouplingReport {
    double p = 0.0;
    double p2 = 0.0;
    int n = 0;
    std::size_t samples = 0;
    std::size_t monotonicity_violations = 0;

    std::vector<NestedCheck> nested;
    /// Mean over outer and inner draws of Z_n(omega_p) - (p/p2)^n Z_n(omega_p2); zero in expectation.
    EstimateWithCI pooled_residual;

    bool exhaustive_run = false;
    std::size_t exhaustive_configurations = 0;
    /// max over omega_p2 of |E[Z_n(omega_p) | omega_p2] - (p/p2)^n Z_n(omega_p2)| / max(1, target).
    double exhaustive_max_error = 0.0;

    bool identity_holds(double k = 3.0) const { return pooled_residual.within(0.0, k); }
};
CouplingReport coupling_experiment(double p, double p2, int n, std::size_t samples, std::uint64_t seed,
                                   const CouplingOptions& options = {});

/// Exact E[Z_n(omega_p) | omega_p2] for every configuration of the 3x3 window
/// [-1, 1]^2 (12 edges), compared with (p/p2)^n Z_n(omega_p2); walks are
/// confined to the window. Returns (configurations visited, max relative error).
std::pair<std::size_t, double> exhaustive_coupling_check(double p, double p2, int n);

struct BetaRow {
    double beta = 0.0;
    double lambda = 0.0;
    /// E[(Z_n e^{-(n+1) lambda})^{1/2}]: Pi sums over the n + 1 sites of S.
    EstimateWithCI sites_normalized;
    /// E[(Z_n e^{-n lambda})^{1/2}].
    EstimateWithCI steps_normalized;
    /// Paired differences against the previous row (zero for the first row).
    EstimateWithCI sites_step;
    EstimateWithCI steps_step;
};

struct BetaReport {
    DistributionSpec law;
    int n = 0;
    std::size_t samples = 0;
    std::vector<BetaRow> rows;

    /// Every paired step is <= k standard errors above zero.
    bool sites_non_increasing(double k = 3.0) const;
    bool steps_non_increasing(double k = 3.0) const;
};
/// Betas sorted ascending and >= 0. Shares one potential per sample across
/// all betas.
BetaReport beta_monotonicity(const DistributionSpec& law, std::span<const double> betas, int n,
                             std::size_t samples, std::uint64_t seed);

} // namespace sawperc
