#pragma once

// Exact enumeration on Z^2 and on dilute environments: self-avoiding walks,
// restricted walks, lattice trees, and random-potential partition functions.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "sawperc/environment.hpp"
#include "sawperc/lattice.hpp"

namespace sawperc {

/// Arbitrary-precision count.
using Count = boost::multiprecision::cpp_int;

inline constexpr int kMaxSawLength = 24;
inline constexpr int kMaxTreeSize = 13;

/// Self-avoiding lattice path with N steps and N + 1 sites.
class Path {
public:
    Path() = default;
    /// Throws AdjacencyError / PreconditionError when the sites do not form
    /// a self-avoiding nearest-neighbour path.
    explicit Path(std::vector<Site> sites);

    /// Straight path of n steps from `from` in direction (dx, dy).
    static Path straight(Site from, int dx, int dy, int n);

    std::size_t length() const noexcept { return sites_.empty() ? 0 : sites_.size() - 1; }
    std::span<const Site> sites() const noexcept { return sites_; }
    const Site& operator[](std::size_t i) const { return sites_[i]; }
    std::vector<Edge> edges() const;
    /// Sub-path of steps [first, first + steps].
    Path segment(std::size_t first, std::size_t steps) const;

    bool operator==(const Path&) const = default;

private:
    std::vector<Site> sites_;
};

/// Step order used by every enumeration: E, N, W, S.
inline constexpr int kStepDx[4] = {1, 0, -1, 0};
inline constexpr int kStepDy[4] = {0, 1, 0, -1};

/// s_n: number of n-step self-avoiding walks from the origin (s_0 = 1).
Count count_saws(int n);
/// s_0 .. s_n from one enumeration.
std::vector<Count> saw_counts_up_to(int n);

/// Calls visitor once per n-step self-avoiding walk from the origin, in
/// lexicographic E,N,W,S step order. The span is valid only during the call.
void enumerate_saws(int n, const std::function<void(std::span<const Site>)>& visitor);

/// Z_n(x): open n-step self-avoiding walks from x. The square ball
/// [x - n, x + n]^2 must lie inside the environment's region.
Count count_open_saws(const EdgeEnvironment& env, Site x, int n);
/// Z_0(x) .. Z_n(x) (same precondition).
std::vector<std::uint64_t> open_saw_counts(const EdgeEnvironment& env, Site x, int n);
/// Z_0(x) .. Z_n(x) for walks confined to the region (the region is treated
/// as the whole graph; no ball requirement).
std::vector<std::uint64_t> open_saw_counts_in_region(const EdgeEnvironment& env, Site x, int n);

/// floor(n^alpha) with a relative tolerance guarding against pow() rounding.
std::int64_t restriction_radius(int n, double alpha);
/// s_n(alpha): walks with max_k |S_k|_inf <= n^alpha.
Count count_restricted_saws(int n, double alpha);

/// Both sides of Z_N(x) <= sum_{k=1}^N Z_k(x') Z_{N-k}(x') + Z_{N+1}(x').
/// The inequality is guaranteed only when the edge {x, x'} is open; across a
/// closed edge it can fail.
struct HammersleyTerms {
    Count lhs;
    Count rhs;
    bool edge_open = false;
    bool holds() const { return lhs <= rhs; }
};
HammersleyTerms hammersley_terms(const EdgeEnvironment& env, Site x, Site x2, int n);
bool hammersley_check(const EdgeEnvironment& env, Site x, Site x2, int n);

struct EndToEndStats {
    int n = 0;
    Count paths;
    Count sum_square_end;        ///< sum over paths of |S_n|_2^2
    double mean_square = 0.0;    ///< sum_square_end / paths
    std::int64_t max_square_end = 0;
    /// histogram[r] = number of paths with max_k |S_k|_inf == r.
    std::vector<Count> max_displacement_histogram;

    /// Paths whose max l_inf displacement is <= radius.
    Count within_radius(std::int64_t radius) const;
};
EndToEndStats end_to_end_stats(int n);

/// t_n: lattice trees (vertex set + edge set) with n vertices containing the origin.
Count count_lattice_trees(int n);
/// Open trees with n vertices containing x; the ball [x - n, x + n]^2
/// must lie inside the region.
Count count_open_trees(const EdgeEnvironment& env, Site x, int n);

/// Z_n(beta, omega) = sum_S exp(beta * sum_{k=0}^n omega(S_k)) over walks from
/// the origin. beta = 0 returns s_n exactly.
double partition_function(const SitePotential& pot, double beta, int n);
/// log Z_n for each beta, from a single enumeration (shared randomness).
std::vector<double> log_partition_functions(const SitePotential& pot, std::span<const double> betas, int n);

} // namespace sawperc
