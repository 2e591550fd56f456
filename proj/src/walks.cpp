#include "sawperc/walks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "move_grid.hpp"
#include "sawperc/error.hpp"
#include "sawperc/parallel.hpp"
#include "sawperc/stats.hpp"

namespace sawperc {

using detail::MoveGrid;

// ---------------------------------------------------------------- Path

Path::Path(std::vector<Site> sites) : sites_(std::move(sites))
{
    if (sites_.empty()) {
        throw PreconditionError("a path needs at least one site");
    }
    for (std::size_t i = 1; i < sites_.size(); ++i) {
        if (l1_distance(sites_[i - 1], sites_[i]) != 1) {
            throw AdjacencyError("path sites " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                 " are not nearest neighbours");
        }
    }
    std::vector<Site> sorted = sites_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw PreconditionError("path revisits a site");
    }
}

Path Path::straight(Site from, int dx, int dy, int n)
{
    if (std::abs(dx) + std::abs(dy) != 1 || n < 0) {
        throw ParameterError("straight path needs a unit direction and n >= 0");
    }
    std::vector<Site> s;
    s.reserve(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        s.push_back({from.x + k * dx, from.y + k * dy});
    }
    return Path(std::move(s));
}

std::vector<Edge> Path::edges() const
{
    std::vector<Edge> out;
    if (sites_.size() < 2) {
        return out;
    }
    out.reserve(sites_.size() - 1);
    for (std::size_t i = 1; i < sites_.size(); ++i) {
        out.push_back(canonical_edge(sites_[i - 1], sites_[i]));
    }
    return out;
}

Path Path::segment(std::size_t first, std::size_t steps) const
{
    if (sites_.empty() || first + steps > length()) {
        throw PreconditionError("segment [" + std::to_string(first) + ", " + std::to_string(first + steps) +
                                "] exceeds path length " + std::to_string(length()));
    }
    return Path(std::vector<Site>(sites_.begin() + static_cast<std::ptrdiff_t>(first),
                                  sites_.begin() + static_cast<std::ptrdiff_t>(first + steps + 1)));
}

// ------------------------------------------------------- walk counting

namespace {

void require_length(int n, int bound, const char* what)
{
    if (n < 0) {
        throw ParameterError(std::string(what) + ": n must be >= 0");
    }
    if (n > bound) {
        throw ResourceError(std::string(what) + ": n = " + std::to_string(n) + " exceeds the enumeration bound " +
                            std::to_string(bound) + "; exact counts grow like 2.64^n");
    }
}

Count to_count(std::uint64_t v)
{
    return Count(v);
}

// counts[k] += number of k-step walks extending the current prefix.
class WalkCounter {
public:
    WalkCounter(const MoveGrid& g, int n) : g_(g), n_(n), visited_(g.mask.size(), 0), counts_(static_cast<std::size_t>(n) + 1, 0) {}

    void mark(std::size_t v) { visited_[v] = 1; }

    void rec(std::size_t v, int depth)
    {
        ++counts_[static_cast<std::size_t>(depth)];
        if (depth == n_) {
            return;
        }
        const std::uint8_t m = g_.mask[v];
        if (depth + 1 == n_) {
            std::uint64_t free = 0;
            for (int d = 0; d < 4; ++d) {
                free += ((m >> d) & 1u) && !visited_[g_.step(v, d)];
            }
            counts_[static_cast<std::size_t>(n_)] += free;
            return;
        }
        visited_[v] = 1;
        for (int d = 0; d < 4; ++d) {
            if ((m >> d) & 1u) {
                const std::size_t w = g_.step(v, d);
                if (!visited_[w]) {
                    rec(w, depth + 1);
                }
            }
        }
        visited_[v] = 0;
    }

    const std::vector<std::uint64_t>& counts() const { return counts_; }

private:
    const MoveGrid& g_;
    int n_;
    std::vector<std::uint8_t> visited_;
    std::vector<std::uint64_t> counts_;
};

// Walk counts by length from `start`, split over depth-2 prefixes.
std::vector<std::uint64_t> walk_counts(const MoveGrid& g, std::size_t start, int n)
{
    if (n < 3) {
        WalkCounter c(g, n);
        c.rec(start, 0);
        return c.counts();
    }
    struct Prefix {
        std::size_t v1;
        std::size_t v2;
    };
    std::vector<Prefix> prefixes;
    std::uint64_t first_steps = 0;
    for (int d1 = 0; d1 < 4; ++d1) {
        if (!((g.mask[start] >> d1) & 1u)) continue;
        ++first_steps;
        const std::size_t v1 = g.step(start, d1);
        for (int d2 = 0; d2 < 4; ++d2) {
            if (!((g.mask[v1] >> d2) & 1u)) continue;
            const std::size_t v2 = g.step(v1, d2);
            if (v2 != start) {
                prefixes.push_back({v1, v2});
            }
        }
    }
    std::vector<std::vector<std::uint64_t>> partial(prefixes.size());
    parallel_for(prefixes.size(), [&](std::size_t i) {
        WalkCounter c(g, n);
        c.mark(start);
        c.mark(prefixes[i].v1);
        c.rec(prefixes[i].v2, 2);
        partial[i] = c.counts();
    });
    std::vector<std::uint64_t> total(static_cast<std::size_t>(n) + 1, 0);
    total[0] = 1;
    total[1] = first_steps;
    for (const auto& p : partial) {
        for (std::size_t k = 2; k < total.size(); ++k) {
            total[k] += p[k];
        }
    }
    return total;
}

void require_ball(const Region& region, Site x, std::int64_t radius, const char* what)
{
    if (!region.contains(Region::centered(x, radius))) {
        throw RegionError(std::string(what) + ": the ball of radius " + std::to_string(radius) + " around (" +
                          std::to_string(x.x) + "," + std::to_string(x.y) + ") is not inside the region");
    }
}

} // namespace

std::vector<Count> saw_counts_up_to(int n)
{
    require_length(n, kMaxSawLength, "count_saws");
    const Region ball = Region::centered(kOrigin, n);
    const MoveGrid g = MoveGrid::full(ball);
    const auto raw = walk_counts(g, g.index(kOrigin), n);
    std::vector<Count> out;
    out.reserve(raw.size());
    for (auto v : raw) {
        out.push_back(to_count(v));
    }
    return out;
}

Count count_saws(int n)
{
    return saw_counts_up_to(n).back();
}

void enumerate_saws(int n, const std::function<void(std::span<const Site>)>& visitor)
{
    require_length(n, kMaxSawLength, "enumerate_saws");
    const Region ball = Region::centered(kOrigin, n);
    const MoveGrid g = MoveGrid::full(ball);
    std::vector<std::uint8_t> visited(g.mask.size(), 0);
    std::vector<Site> path(static_cast<std::size_t>(n) + 1);
    std::vector<std::size_t> idx(static_cast<std::size_t>(n) + 1);
    path[0] = kOrigin;
    idx[0] = g.index(kOrigin);

    auto rec = [&](auto&& self, int depth) -> void {
        if (depth == n) {
            visitor(std::span<const Site>(path));
            return;
        }
        const std::size_t v = idx[static_cast<std::size_t>(depth)];
        visited[v] = 1;
        for (int d = 0; d < 4; ++d) {
            if (!((g.mask[v] >> d) & 1u)) continue;
            const std::size_t w = g.step(v, d);
            if (visited[w]) continue;
            const Site& s = path[static_cast<std::size_t>(depth)];
            path[static_cast<std::size_t>(depth) + 1] = {s.x + kStepDx[d], s.y + kStepDy[d]};
            idx[static_cast<std::size_t>(depth) + 1] = w;
            self(self, depth + 1);
        }
        visited[v] = 0;
    };
    rec(rec, 0);
}

std::vector<std::uint64_t> open_saw_counts(const EdgeEnvironment& env, Site x, int n)
{
    if (n < 0) {
        throw ParameterError("open_saw_counts: n must be >= 0");
    }
    require_ball(env.region(), x, n, "count_open_saws");
    return open_saw_counts_in_region(env, x, n);
}

std::vector<std::uint64_t> open_saw_counts_in_region(const EdgeEnvironment& env, Site x, int n)
{
    if (n < 0) {
        throw ParameterError("open_saw_counts_in_region: n must be >= 0");
    }
    if (!env.region().contains(x)) {
        throw RegionError("open_saw_counts_in_region: start site outside the region");
    }
    const MoveGrid g = MoveGrid::open(env);
    return walk_counts(g, g.index(x), n);
}

Count count_open_saws(const EdgeEnvironment& env, Site x, int n)
{
    return to_count(open_saw_counts(env, x, n).back());
}

std::int64_t restriction_radius(int n, double alpha)
{
    if (n < 0) {
        throw ParameterError("restriction_radius: n must be >= 0");
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ParameterError("restriction_radius: alpha must be a positive finite number");
    }
    if (n == 0) {
        return 0;
    }
    const double v = std::pow(static_cast<double>(n), alpha);
    if (v >= static_cast<double>(n)) {
        return n;
    }
    // pow() may land just below an exact integer power (16^0.75 = 8).
    return static_cast<std::int64_t>(std::floor(v * (1.0 + 1e-12)));
}

Count count_restricted_saws(int n, double alpha)
{
    require_length(n, kMaxSawLength, "count_restricted_saws");
    const std::int64_t r = restriction_radius(n, alpha);
    const MoveGrid g = MoveGrid::full(Region::centered(kOrigin, r));
    return to_count(walk_counts(g, g.index(kOrigin), n).back());
}

HammersleyTerms hammersley_terms(const EdgeEnvironment& env, Site x, Site x2, int n)
{
    if (l1_distance(x, x2) != 1) {
        throw AdjacencyError("hammersley_check: x and x' must be nearest neighbours");
    }
    if (n < 1) {
        throw ParameterError("hammersley_check: n must be >= 1");
    }
    const auto zx = open_saw_counts(env, x, n);
    const auto zy = open_saw_counts(env, x2, n + 1);
    HammersleyTerms t;
    t.edge_open = env.is_open(canonical_edge(x, x2));
    t.lhs = to_count(zx[static_cast<std::size_t>(n)]);
    t.rhs = to_count(zy[static_cast<std::size_t>(n) + 1]);
    for (int k = 1; k <= n; ++k) {
        t.rhs += to_count(zy[static_cast<std::size_t>(k)]) * to_count(zy[static_cast<std::size_t>(n - k)]);
    }
    return t;
}

bool hammersley_check(const EdgeEnvironment& env, Site x, Site x2, int n)
{
    return hammersley_terms(env, x, x2, n).holds();
}

// ------------------------------------------------- end-to-end statistics

Count EndToEndStats::within_radius(std::int64_t radius) const
{
    Count total = 0;
    for (std::size_t r = 0; r < max_displacement_histogram.size(); ++r) {
        if (static_cast<std::int64_t>(r) <= radius) {
            total += max_displacement_histogram[r];
        }
    }
    return total;
}

EndToEndStats end_to_end_stats(int n)
{
    require_length(n, kMaxSawLength, "end_to_end_stats");
    const Region ball = Region::centered(kOrigin, n);
    const MoveGrid g = MoveGrid::full(ball);
    std::vector<std::int64_t> linf(g.mask.size());
    std::vector<std::int64_t> sq(g.mask.size());
    for (std::size_t v = 0; v < g.mask.size(); ++v) {
        const Site s = ball.site_at(v);
        linf[v] = std::max(std::abs(s.x), std::abs(s.y));
        sq[v] = s.x * s.x + s.y * s.y;
    }
    std::vector<std::uint8_t> visited(g.mask.size(), 0);
    std::vector<std::uint64_t> hist(static_cast<std::size_t>(n) + 1, 0);
    std::uint64_t paths = 0;
    std::uint64_t sum_sq = 0;
    std::int64_t max_sq = 0;

    auto finish = [&](std::size_t w, std::int64_t running_max) {
        ++paths;
        sum_sq += static_cast<std::uint64_t>(sq[w]);
        max_sq = std::max(max_sq, sq[w]);
        ++hist[static_cast<std::size_t>(std::max(running_max, linf[w]))];
    };
    auto rec = [&](auto&& self, std::size_t v, int depth, std::int64_t running_max) -> void {
        running_max = std::max(running_max, linf[v]);
        if (depth == n) {
            finish(v, running_max);
            return;
        }
        visited[v] = 1;
        for (int d = 0; d < 4; ++d) {
            if (!((g.mask[v] >> d) & 1u)) continue;
            const std::size_t w = g.step(v, d);
            if (visited[w]) continue;
            if (depth + 1 == n) {
                finish(w, running_max);
            } else {
                self(self, w, depth + 1, running_max);
            }
        }
        visited[v] = 0;
    };
    rec(rec, g.index(kOrigin), 0, 0);

    EndToEndStats out;
    out.n = n;
    out.paths = to_count(paths);
    out.sum_square_end = to_count(sum_sq);
    out.mean_square = static_cast<double>(sum_sq) / static_cast<double>(paths);
    out.max_square_end = max_sq;
    for (auto h : hist) {
        out.max_displacement_histogram.push_back(to_count(h));
    }
    return out;
}

// -------------------------------------------------------- lattice trees

namespace {

// Redelmeier growth over edges: every connected acyclic edge set touching
// the root is produced exactly once. An untried edge whose endpoints are
// both in the tree would close a cycle; it is skipped but stays marked.
class TreeCounter {
public:
    TreeCounter(const MoveGrid& g, int target)
        : g_(g), target_(target), in_tree_(g.mask.size(), 0), marked_(2 * g.mask.size(), 0),
          buffers_(static_cast<std::size_t>(target) + 1)
    {
    }

    std::uint64_t run(std::size_t root)
    {
        if (target_ == 1) {
            return 1;
        }
        in_tree_[root] = 1;
        auto& first = buffers_[1];
        first.clear();
        add_incident(root, first);
        rec(1);
        return count_;
    }

private:
    void add_incident(std::size_t u, std::vector<std::size_t>& list)
    {
        for (int d = 0; d < 4; ++d) {
            if (!((g_.mask[u] >> d) & 1u)) continue;
            const std::size_t slot = g_.edge_slot(u, d);
            if (!marked_[slot]) {
                marked_[slot] = 1;
                list.push_back(slot);
            }
        }
    }

    void rec(int vertices)
    {
        const auto& untried = buffers_[static_cast<std::size_t>(vertices)];
        auto& next = buffers_[static_cast<std::size_t>(vertices) + 1];
        for (std::size_t i = 0; i < untried.size(); ++i) {
            const std::size_t slot = untried[i];
            const std::size_t a = slot / 2;
            const std::size_t b = (slot & 1u) ? a + static_cast<std::size_t>(g_.region.width()) : a + 1;
            if (in_tree_[a] && in_tree_[b]) {
                continue;
            }
            if (vertices + 1 == target_) {
                ++count_;
                continue;
            }
            const std::size_t u = in_tree_[a] ? b : a;
            in_tree_[u] = 1;
            next.assign(untried.begin() + static_cast<std::ptrdiff_t>(i) + 1, untried.end());
            const std::size_t added_from = next.size();
            add_incident(u, next);
            rec(vertices + 1);
            for (std::size_t k = added_from; k < next.size(); ++k) {
                marked_[next[k]] = 0;
            }
            in_tree_[u] = 0;
        }
    }

    const MoveGrid& g_;
    int target_;
    std::vector<std::uint8_t> in_tree_;
    std::vector<std::uint8_t> marked_;
    std::vector<std::vector<std::size_t>> buffers_;
    std::uint64_t count_ = 0;
};

void require_tree_size(int n)
{
    if (n < 1) {
        throw ParameterError("tree size n must be >= 1");
    }
    require_length(n, kMaxTreeSize, "count_lattice_trees");
}

} // namespace

Count count_lattice_trees(int n)
{
    require_tree_size(n);
    const MoveGrid g = MoveGrid::full(Region::centered(kOrigin, n));
    return to_count(TreeCounter(g, n).run(g.index(kOrigin)));
}

Count count_open_trees(const EdgeEnvironment& env, Site x, int n)
{
    require_tree_size(n);
    require_ball(env.region(), x, n, "count_open_trees");
    const MoveGrid g = MoveGrid::open(env);
    return to_count(TreeCounter(g, n).run(g.index(x)));
}

// -------------------------------------------------- partition functions

std::vector<double> log_partition_functions(const SitePotential& pot, std::span<const double> betas, int n)
{
    require_length(n, kMaxSawLength, "partition_function");
    for (double b : betas) {
        if (!std::isfinite(b)) {
            throw ParameterError("partition_function: beta must be finite");
        }
    }
    const Region ball = Region::centered(kOrigin, n);
    require_ball(pot.region(), kOrigin, n, "partition_function");
    const MoveGrid g = MoveGrid::full(ball);
    std::vector<double> omega(g.mask.size());
    for (std::size_t v = 0; v < omega.size(); ++v) {
        omega[v] = pot.value(ball.site_at(v));
    }

    std::vector<std::uint8_t> visited(g.mask.size(), 0);
    auto walk = [&](auto&& leaf) {
        auto rec = [&](auto&& self, std::size_t v, int depth, double sigma) -> void {
            sigma += omega[v];
            if (depth == n) {
                leaf(sigma);
                return;
            }
            visited[v] = 1;
            for (int d = 0; d < 4; ++d) {
                if (!((g.mask[v] >> d) & 1u)) continue;
                const std::size_t w = g.step(v, d);
                if (!visited[w]) {
                    self(self, w, depth + 1, sigma);
                }
            }
            visited[v] = 0;
        };
        rec(rec, g.index(kOrigin), 0, 0.0);
    };

    // First pass: extreme path sums, so that every weight
    // exp(beta*sigma - shift) lies in (0, 1] and the largest equals 1.
    double sigma_min = std::numeric_limits<double>::infinity();
    double sigma_max = -std::numeric_limits<double>::infinity();
    walk([&](double sigma) {
        sigma_min = std::min(sigma_min, sigma);
        sigma_max = std::max(sigma_max, sigma);
    });
    const std::size_t nb = betas.size();
    std::vector<double> shift(nb);
    for (std::size_t j = 0; j < nb; ++j) {
        shift[j] = betas[j] >= 0.0 ? betas[j] * sigma_max : betas[j] * sigma_min;
    }
    std::vector<CompensatedSum> sums(nb);
    walk([&](double sigma) {
        for (std::size_t j = 0; j < nb; ++j) {
            sums[j].add(std::exp(betas[j] * sigma - shift[j]));
        }
    });

    std::vector<double> out(nb);
    double log_s = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t j = 0; j < nb; ++j) {
        if (betas[j] == 0.0) {
            if (std::isnan(log_s)) {
                log_s = std::log(count_saws(n).convert_to<double>());
            }
            out[j] = log_s;
        } else {
            out[j] = shift[j] + std::log(sums[j].value());
        }
    }
    return out;
}

double partition_function(const SitePotential& pot, double beta, int n)
{
    if (beta == 0.0) {
        require_length(n, kMaxSawLength, "partition_function");
        require_ball(pot.region(), kOrigin, n, "partition_function");
        return count_saws(n).convert_to<double>();
    }
    const double b[1] = {beta};
    return std::exp(log_partition_functions(pot, b, n)[0]);
}

} // namespace sawperc
