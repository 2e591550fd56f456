// Acceptance runner: one PASS/FAIL line per criterion, clause detail indented
// beneath it. Usage: acceptance <id>... | all. Exit 0 iff every requested
// criterion passed. Tolerances and sample sizes are pinned here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/naive.hpp"
#include "sawperc/coarsegrain.hpp"
#include "sawperc/environment.hpp"
#include "sawperc/estimators.hpp"
#include "sawperc/measures.hpp"
#include "sawperc/parallel.hpp"
#include "sawperc/report.hpp"
#include "sawperc/rng.hpp"
#include "sawperc/walks.hpp"

using namespace sawperc;

namespace {

constexpr double kSigmas = 3.0;

struct Outcome {
    std::vector<std::pair<bool, std::string>> clauses;
    /// Numeric results; compared byte-for-byte by the determinism criterion.
    Json data = Json::object();

    void clause(bool ok, const std::string& text) { clauses.emplace_back(ok, text); }
    bool pass() const
    {
        for (const auto& [ok, text] : clauses) {
            if (!ok) return false;
        }
        return !clauses.empty();
    }
};

struct Criterion {
    std::string id;
    std::string title;
    double budget_seconds;
    bool monte_carlo;
    std::function<void(Outcome&)> run;
};

std::string fmt(double x)
{
    std::ostringstream ss;
    ss.precision(6);
    ss << x;
    return ss.str();
}

std::string ci(const EstimateWithCI& e)
{
    return fmt(e.mean) + " +- " + fmt(e.std_error);
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------------ c01

void exact_counts(Outcome& o)
{
    const std::uint64_t saw_head[] = {4, 12, 36, 100};
    const std::uint64_t animal_head[] = {1, 4, 18, 76};
    const std::uint64_t tree_head[] = {1, 4, 18};

    auto t0 = std::chrono::steady_clock::now();
    bool saw_ok = true;
    for (int n = 0; n <= 12; ++n) {
        saw_ok = saw_ok && count_saws(n) == oracle::saw_count(n);
    }
    for (int n = 1; n <= 4; ++n) saw_ok = saw_ok && count_saws(n) == saw_head[n - 1];
    const double saw_time = seconds_since(t0);
    o.clause(saw_ok && saw_time < 60, "s_N = naive DFS for N <= 12, s_1..s_4 = 4,12,36,100 (" + fmt(saw_time) + " s)");

    t0 = std::chrono::steady_clock::now();
    bool animal_ok = true;
    for (int m = 1; m <= 8; ++m) {
        const auto expect = oracle::rooted_animals(m);
        std::set<std::set<oracle::Cell>> got;
        for (const Animal& a : enumerate_animals(m)) {
            std::set<oracle::Cell> cells;
            for (const Site& c : a.cells()) cells.insert({c.x, c.y});
            got.insert(cells);
        }
        animal_ok = animal_ok && got == expect && count_animals(m) == expect.size();
    }
    for (int m = 1; m <= 4; ++m) animal_ok = animal_ok && count_animals(m) == animal_head[m - 1];
    const double animal_time = seconds_since(t0);
    o.clause(animal_ok && animal_time < 60,
             "a_m = translated fixed polyominoes for m <= 8 (as sets), a_1..a_4 = 1,4,18,76 (" + fmt(animal_time) +
                 " s)");

    t0 = std::chrono::steady_clock::now();
    bool tree_ok = true;
    for (int n = 1; n <= 6; ++n) {
        tree_ok = tree_ok && count_lattice_trees(n) == oracle::rooted_trees(n).size();
    }
    for (int n = 1; n <= 3; ++n) tree_ok = tree_ok && count_lattice_trees(n) == tree_head[n - 1];
    const double tree_time = seconds_since(t0);
    o.clause(tree_ok && tree_time < 60,
             "t_N = brute subtree oracle for N <= 6, t_1..t_3 = 1,4,18 (" + fmt(tree_time) + " s)");
}

// ------------------------------------------------------------------ c02

void annealed_identity(Outcome& o)
{
    const double p = 0.7;
    const int n = 8;
    const Region r = Region::centered(kOrigin, n);
    const auto m = mc_moments(100000, [&](std::size_t i) {
        const auto env = sample_environment(r, p, derive_seed(202, StreamTag::Environment, i));
        return static_cast<double>(open_saw_counts(env, kOrigin, n)[n]);
    }).estimate();
    const double target = std::pow(p, n) * count_saws(n).convert_to<double>();
    o.data["mean"] = to_json(m);
    o.clause(m.within(target, kSigmas), "E[Z_8] at p = 0.7: " + ci(m) + " vs p^8 s_8 = " + fmt(target));
}

// ------------------------------------------------------------------ c03

struct PartitionScan {
    std::size_t environments = 0;
    std::size_t identity_failures = 0;
    std::size_t paths = 0;
    std::size_t below_stated = 0;
    std::size_t below_corrected = 0;
    std::size_t above_upper = 0;
    std::string stated_example;
};

PartitionScan scan_partition()
{
    PartitionScan s;
    for (std::uint64_t i = 0; i < 100; ++i) {
        const int n = 1 + static_cast<int>(i % 10);
        const auto env = sample_environment(Region::centered(kOrigin, n + 1), 0.65,
                                            derive_seed(303, StreamTag::Environment, i));
        const Count z = count_open_saws(env, kOrigin, n);
        for (std::int64_t n0 : {2, 3, 4}) {
            Count sum = 0;
            for (const auto& [a, c] : decompose(env, kOrigin, n, n0)) sum += c;
            s.identity_failures += sum != z;
        }
        ++s.environments;
    }
    for (int n = 1; n <= 10; ++n) {
        for (std::int64_t n0 : {2, 3, 4}) {
            const auto b = animal_size_bounds(n, n0);
            enumerate_saws(n, [&](std::span<const Site> path) {
                const auto m = static_cast<std::int64_t>(animal_of_path(path, n0).size());
                ++s.paths;
                if (m < b.stated_lower) {
                    if (s.below_stated++ == 0) {
                        s.stated_example = "N=" + std::to_string(n) + " N0=" + std::to_string(n0) + " |A|=" +
                                           std::to_string(m) + " < " + std::to_string(b.stated_lower);
                    }
                }
                s.below_corrected += m < b.corrected_lower;
                s.above_upper += m > b.upper;
            });
        }
    }
    return s;
}

void partition_identity(Outcome& o)
{
    const auto s = scan_partition();
    o.clause(s.identity_failures == 0, "sum_A Z_N(A) = Z_N on " + std::to_string(s.environments) +
                                           " environments x N0 in {2,3,4}, N <= 10 (" +
                                           std::to_string(s.identity_failures) + " mismatches)");
    o.clause(s.below_corrected == 0, "|A| >= ceil(N / (2 N0^2)) on " + std::to_string(s.paths) + " paths");
    o.clause(s.above_upper == 0, "|A| <= 9 ceil(N / N0) on " + std::to_string(s.paths) + " paths");
}

void partition_stated_lower(Outcome& o)
{
    const auto s = scan_partition();
    o.clause(s.below_stated == 0, "|A| >= ceil(N / N0^2) as stated: " + std::to_string(s.below_stated) + " of " +
                                      std::to_string(s.paths) + " paths violate it" +
                                      (s.stated_example.empty() ? "" : ", e.g. " + s.stated_example));
}

// ------------------------------------------------------------------ c04

void coupling(Outcome& o)
{
    const auto mono = coupling_experiment(0.5, 0.8, 6, 10000, 404, {0, 0, true});
    o.data["monotone"] = to_json(mono);
    o.clause(mono.monotonicity_violations == 0,
             "monotonicity violations over 10^4 coupled samples at N=6: " +
                 std::to_string(mono.monotonicity_violations));
    o.clause(mono.exhaustive_run && mono.exhaustive_max_error < 1e-12,
             "exhaustive 12-edge identity at N=6 over " + std::to_string(mono.exhaustive_configurations) +
                 " configurations, max relative error " + fmt(mono.exhaustive_max_error));
    const auto nested = coupling_experiment(0.5, 0.8, 4, 2, 405, {20, 2000, false});
    o.data["nested"] = to_json(nested);
    o.clause(nested.identity_holds(kSigmas),
             "nested MC identity at N=4, pooled residual " + ci(nested.pooled_residual));
}

// ------------------------------------------------------------------ c05

void separated_sets(Outcome& o)
{
    std::size_t exhaustive = 0;
    std::size_t bad = 0;
    auto check = [&](const Animal& a) {
        const auto s = extract_separated(a);
        bool ok = static_cast<std::int64_t>(s.size()) >= (static_cast<std::int64_t>(a.size()) + 12) / 13;
        for (std::size_t i = 0; i < s.size(); ++i) {
            ok = ok && a.contains(s.cells[i]);
            for (std::size_t j = i + 1; j < s.size(); ++j) ok = ok && linf_distance(s.cells[i], s.cells[j]) >= 3;
        }
        bad += !ok;
    };
    for (int m = 1; m <= 10; ++m) {
        for_each_animal(m, [&](std::span<const Site> cells) {
            check(Animal(std::vector<Site>(cells.begin(), cells.end()), 1));
            ++exhaustive;
        });
    }
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const int m = 1 + static_cast<int>(i % 40);
        check(grow_random_animal(m, derive_seed(505, StreamTag::Animal, i)));
    }
    o.clause(bad == 0, std::to_string(exhaustive) + " animals with m <= 10 plus 1000 random with m <= 40: " +
                           std::to_string(bad) + " violate spacing or size");
}

// ------------------------------------------------------------------ c06

void qform_statistics(Outcome& o)
{
    std::uint64_t seed = 600;
    for (double p : {0.5, 0.6, 0.75}) {
        for (std::int64_t n0 : {2, 4, 8}) {
            const auto spec = QFormSpec::make({0, 0, n0}, p, kDefaultK);
            const auto values = qform_samples(spec, 100000, ++seed);
            const auto mean = mean_estimate(values);
            const auto var = variance_estimate(values);
            const double analytic = qform_variance_analytic(spec);
            const std::string tag = "p=" + fmt(p) + " N0=" + std::to_string(n0);
            o.data[tag] = Json{{"mean", to_json(mean)}, {"variance", to_json(var)}};
            o.clause(mean.within(0.0, kSigmas), tag + ": mean " + ci(mean) + " vs 0");
            o.clause(var.within(analytic, kSigmas), tag + ": variance " + ci(var) + " vs " + fmt(analytic));
        }
    }

    const auto spec = QFormSpec::make({0, 0, 4}, 0.6, kDefaultK);
    const Path s = Path::straight(kOrigin, 1, 0, 12);
    const auto cond = mean_estimate(qform_samples_conditional(spec, s, 100000, 650));
    const double closed = qform_mean_under_ps(spec, s);
    o.data["conditional"] = to_json(cond);
    o.clause(cond.within(closed, kSigmas), "mean under P_S (straight 12-step path, N0=4, p=0.6): " + ci(cond) +
                                               " vs " + fmt(closed));

    for (std::int64_t n0 : {2, 4, 8, 16}) {
        const Path seg = Path::straight(kOrigin, 1, 0, static_cast<int>(n0));
        const auto sums = harmonic_edge_sums(seg.edges());
        const double least = *std::min_element(sums.begin(), sums.end());
        o.clause(least >= std::log(static_cast<double>(n0)),
                 "straight segment N0=" + std::to_string(n0) + ": min per-edge harmonic sum " + fmt(least) +
                     " >= log N0 = " + fmt(std::log(static_cast<double>(n0))));
    }
}

// ------------------------------------------------------------------ c07

Animal block_row(std::int64_t m, std::int64_t n0)
{
    std::vector<Site> cells;
    for (std::int64_t i = 0; i < m; ++i) cells.push_back({i, 0});
    return Animal(cells, n0);
}

void small_tilt(Outcome& o)
{
    const int path_len = 6;
    for (std::int64_t m : {1, 2}) {
        const auto spec = TiltSpec::make(0.75, 8, m);
        const Animal a = block_row(m, spec.n0);
        const Region r({0, 0}, {m * spec.n0, spec.n0});
        // Straight path of path_len edges along the bottom row of the first block.
        std::vector<Edge> path;
        for (int k = 0; k < path_len; ++k) path.push_back({{k, 0}, Direction::East});
        const auto mom = mc_moments(100000, 3, [&](std::size_t i, std::span<double> out) {
            const auto env = sample_environment(r, spec.p, derive_seed(700 + m, StreamTag::Environment, i));
            const double f = small_tilt_density(spec, env, a);
            bool open = true;
            for (const Edge& e : path) open = open && env.is_open(e);
            out[0] = f;
            out[1] = 1.0 / f;
            out[2] = open ? f : 0.0;
        });
        const auto inv = inverse_moment_small(spec);
        const double tilted = std::pow(spec.tilted_p(), path_len);
        const std::string tag = "m=" + std::to_string(m);
        o.data[tag] = Json{{"density", to_json(mom[0].estimate())},
                           {"inverse", to_json(mom[1].estimate())},
                           {"path", to_json(mom[2].estimate())}};
        o.clause(mom[0].estimate().within(1.0, kSigmas), tag + ": E[f_A] " + ci(mom[0].estimate()) + " vs 1");
        o.clause(mom[1].estimate().within(inv.value, kSigmas),
                 tag + ": E[1/f_A] " + ci(mom[1].estimate()) + " vs closed form " + fmt(inv.value));
        o.clause(inv.holds(), tag + ": closed form " + fmt(inv.value) + " <= exp(2pm/lambda) = " + fmt(inv.bound));
        o.clause(mom[2].estimate().within(tilted, kSigmas), tag + ": tilted P(6-edge path open) " +
                                                                ci(mom[2].estimate()) + " vs p'^6 = " + fmt(tilted));
    }
}

// ------------------------------------------------------------------ c08

void fredo(Outcome& o)
{
    const FredoSpec spec{0.6, 16, 0.75, 2};
    const auto b = fredo_bundle(spec);
    const auto mc = fredo_mc(spec, 10000, 10000000, 808);
    o.data["mc"] = to_json(mc);
    const double upper = mc.sqrt_z.mean + kSigmas * mc.sqrt_z.std_error;
    o.clause(upper <= mc.cs_bound, "E[sqrt Z] CI upper edge " + fmt(upper) + " <= sqrt(tilted mean " +
                                       fmt(b.tilted_mean) + ") sqrt(density cost " + fmt(b.exact_density_cost) +
                                       ") = " + fmt(mc.cs_bound));
    o.clause(mc.cs_bound <= mc.cs_bound_analytic,
             "exact product " + fmt(mc.cs_bound) + " <= exponential bound " + fmt(mc.cs_bound_analytic));
    o.clause(mc.density_ratio.within(b.exact_density_cost, kSigmas),
             "E[dP/dP~] " + ci(mc.density_ratio) + " vs closed-form product " + fmt(b.exact_density_cost));
}

// ------------------------------------------------------------------ c09

void quenched_trend(Outcome& o)
{
    const auto low = quenched_growth(0.6, 10, 10000, 909);
    const auto high = quenched_growth(0.9, 10, 10000, 910);
    o.data["p0.6"] = to_json(low);
    o.data["p0.9"] = to_json(high);
    const GrowthRow* prev = nullptr;
    for (int n : {4, 6, 8, 10}) {
        const GrowthRow& r = low.rows[static_cast<std::size_t>(n - 1)];
        const double se = r.quenched.std_error;
        o.clause(r.gap > kSigmas * se, "p=0.6 N=" + std::to_string(n) + ": gap " + fmt(r.gap) + " > 3 SE (" + fmt(se) + ")");
        if (prev != nullptr) {
            const double joint = std::hypot(se, prev->quenched.std_error);
            o.clause(r.gap >= prev->gap - kSigmas * joint, "p=0.6 gap non-decreasing " + std::to_string(prev->n) +
                                                               " -> " + std::to_string(n) + ": " + fmt(prev->gap) +
                                                               " -> " + fmt(r.gap) + " (joint SE " + fmt(joint) + ")");
        }
        prev = &r;
        const GrowthRow& h = high.rows[static_cast<std::size_t>(n - 1)];
        o.clause(h.gap < r.gap, "N=" + std::to_string(n) + ": gap at p=0.9 " + fmt(h.gap) + " < gap at p=0.6 " + fmt(r.gap));
    }
    o.clause(low.retained == 10000 && high.retained == 10000,
             "retained 10^4 each (retention " + fmt(low.retention()) + ", " + fmt(high.retention()) + ")");
}

// ------------------------------------------------------------------ c10

void hammersley(Outcome& o)
{
    std::size_t pairs = 0;
    std::size_t violations = 0;
    std::size_t short_envs = 0;
    for (std::uint64_t i = 0; i < 100; ++i) {
        const int n = 1 + static_cast<int>(i % 8);
        const double p = 0.45 + 0.1 * static_cast<double>(i % 4);
        const auto env = sample_environment(Region::centered(kOrigin, n + 3), p,
                                            derive_seed(1010, StreamTag::Environment, i));
        std::size_t taken = 0;
        for (const Edge& e : env.open_edges()) {
            if (taken == 5) break;
            if (linf_distance(e.anchor, kOrigin) > 2 || linf_distance(e.head(), kOrigin) > 2) continue;
            ++taken;
            ++pairs;
            violations += !hammersley_terms(env, e.anchor, e.head(), n).holds();
        }
        short_envs += taken < 5;
    }
    o.clause(violations == 0 && short_envs == 0,
             std::to_string(pairs) + " open adjacent pairs over 100 environments, N <= 8: " +
                 std::to_string(violations) + " violations, " + std::to_string(short_envs) +
                 " environments with fewer than 5 pairs");
}

// ------------------------------------------------------------------ c11

void potential_model(Outcome& o)
{
    bool beta0 = true;
    for (const auto& law : {DistributionSpec::gaussian(), DistributionSpec::rademacher(),
                            DistributionSpec::centered_bernoulli(0.3)}) {
        const auto pot = sample_potential(Region::centered(kOrigin, 11), law, 1111);
        for (int n = 0; n <= 10; ++n) {
            beta0 = beta0 && partition_function(pot, 0.0, n) == count_saws(n).convert_to<double>();
        }
    }
    o.clause(beta0, "partition_function(beta = 0) = s_N for N <= 10, three laws");

    double worst = 0.0;
    for (int k = 0; k <= 40; ++k) {
        const double beta = -2.0 + 0.1 * k;
        const double half = beta * beta / 2;
        worst = std::max(worst, std::fabs(log_mgf(DistributionSpec::gaussian(), beta) - half) /
                                    std::max(half, std::numeric_limits<double>::min()));
    }
    o.clause(worst <= 4 * std::numeric_limits<double>::epsilon(),
             "Gaussian lambda(beta) = beta^2/2 on [-2, 2], max relative error " + fmt(worst));

    const std::vector<double> betas{0.0, 0.5, 1.0};
    const auto rep = beta_monotonicity(DistributionSpec::gaussian(), betas, 6, 10000, 1112);
    o.data["beta"] = to_json(rep);
    std::string steps;
    for (const auto& r : rep.rows) steps += (steps.empty() ? "" : ", ") + ci(r.steps_normalized);
    o.clause(rep.steps_non_increasing(kSigmas),
             "E[(Z_6 e^{-N lambda})^{1/2}] non-increasing over beta in {0, 0.5, 1}: " + steps);
    std::string sites;
    for (const auto& r : rep.rows) sites += (sites.empty() ? "" : ", ") + ci(r.sites_normalized);
    o.clause(rep.sites_non_increasing(kSigmas),
             "E[(Z_6 e^{-(N+1) lambda})^{1/2}] non-increasing over beta in {0, 0.5, 1}: " + sites);

    for (const auto& law : {DistributionSpec::gaussian(), DistributionSpec::rademacher()}) {
        const std::int64_t n0 = 4;
        const Animal a = block_row(2, n0);
        const Region r({0, 0}, {2 * n0 - 1, n0 - 1});
        const double delta = potential_delta(n0);
        const auto f = mc_moments(100000, [&](std::size_t i) {
            return potential_tilt_density(sample_potential(r, law, derive_seed(1113, StreamTag::Potential, i)), a,
                                          delta);
        }).estimate();
        o.data["tilt_" + law.name()] = to_json(f);
        o.clause(f.within(1.0, kSigmas), law.name() + " potential tilt normalization E[f_A] " + ci(f) + " vs 1");
    }
}

// ------------------------------------------------------------------ registry

std::vector<Criterion> registry()
{
    return {
        {"c01", "oracle equivalence of exact counts", 180, false, exact_counts},
        {"c02", "annealed identity E[Z_N] = p^N s_N", 300, true, annealed_identity},
        {"c03", "partition identity and animal size bounds (corrected lower, upper)", 300, false, partition_identity},
        {"c03-stated", "animal size lower bound ceil(N / N0^2) as stated", 300, false, partition_stated_lower},
        {"c04", "monotone coupling and conditional-expectation identity", 300, true, coupling},
        {"c05", "separated-set guarantees", 120, false, separated_sets},
        {"c06", "quadratic form statistics", 600, true, qform_statistics},
        {"c07", "small-m tilt", 300, true, small_tilt},
        {"c08", "restricted-walk change-of-measure chain", 600, true, fredo},
        {"c09", "quenched below annealed trend", 1200, true, quenched_trend},
        {"c10", "Hammersley inequality on open pairs", 120, false, hammersley},
        {"c11", "potential model", 600, true, potential_model},
    };
}

bool run_one(const Criterion& c)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        c.run(o);
    } catch (const std::exception& e) {
        o.clause(false, std::string("threw: ") + e.what());
    }
    const double secs = seconds_since(t0);
    o.clause(secs < c.budget_seconds, "run time " + fmt(secs) + " s < " + fmt(c.budget_seconds) + " s");
    std::cout << (o.pass() ? "PASS " : "FAIL ") << c.id << " " << c.title << '\n';
    for (const auto& [ok, text] : o.clauses) std::cout << "    " << (ok ? "ok   " : "MISS ") << text << '\n';
    std::cout.flush();
    return o.pass();
}

/// Every Monte Carlo criterion under two thread caps; reports must match byte for byte.
bool determinism(const std::vector<Criterion>& all)
{
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::pair<bool, std::string>> lines;
    bool pass = true;
    for (const Criterion& c : all) {
        if (!c.monte_carlo) continue;
        std::string dumps[2];
        const unsigned caps[2] = {1, 3};
        for (int k = 0; k < 2; ++k) {
            set_thread_limit(caps[k]);
            Outcome o;
            c.run(o);
            dumps[k] = o.data.dump();
        }
        set_thread_limit(0);
        const bool same = dumps[0] == dumps[1] && dumps[0] != "{}";
        pass = pass && same;
        lines.emplace_back(same, c.id + " report identical under --threads 1 and 3 (" +
                                     std::to_string(dumps[0].size()) + " bytes)");
    }
    std::cout << (pass ? "PASS " : "FAIL ") << "c12 determinism across thread counts (" << fmt(seconds_since(t0))
              << " s)\n";
    for (const auto& [ok, text] : lines) std::cout << "    " << (ok ? "ok   " : "MISS ") << text << '\n';
    return pass;
}

} // namespace

int main(int argc, char** argv)
{
    const auto all = registry();
    std::vector<std::string> ids(argv + 1, argv + argc);
    if (ids.empty() || ids == std::vector<std::string>{"all"}) {
        ids.clear();
        for (const auto& c : all) ids.push_back(c.id);
        ids.push_back("c12");
    }
    bool ok = true;
    for (const std::string& id : ids) {
        if (id == "c12") {
            ok = determinism(all) && ok;
            continue;
        }
        const auto it = std::find_if(all.begin(), all.end(), [&](const Criterion& c) { return c.id == id; });
        if (it == all.end()) {
            std::cout << "FAIL " << id << " unknown criterion\n";
            ok = false;
            continue;
        }
        ok = run_one(*it) && ok;
    }
    return ok ? 0 : 1;
}
