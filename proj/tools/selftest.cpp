#include "cli.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <string>

#include "sawperc/coarsegrain.hpp"
#include "sawperc/environment.hpp"
#include "sawperc/estimators.hpp"
#include "sawperc/measures.hpp"
#include "sawperc/rng.hpp"
#include "sawperc/walks.hpp"

namespace sawperc::cli {

namespace {

// Frozen reference sequences.
constexpr std::uint64_t kSaw[] = {1, 4, 12, 36, 100, 284, 780, 2172, 5916, 16268, 44100, 120292, 324932};
constexpr std::uint64_t kAnimals[] = {1, 4, 18, 76, 315, 1296, 5320, 21800};
constexpr std::uint64_t kTrees[] = {1, 4, 18, 88, 435, 2184};

struct Outcome {
    bool pass;
    std::string detail;
};

struct Check {
    std::string name;
    // `corrupt` perturbs the computed side so the comparison must fail.
    std::function<Outcome(bool corrupt)> run;
};

template <std::size_t N, class F>
Outcome compare_sequence(const std::uint64_t (&expect)[N], std::size_t first, bool corrupt, F&& compute)
{
    for (std::size_t i = 0; i < N; ++i) {
        Count got = compute(static_cast<int>(first + i));
        if (corrupt && i + 1 == N) got += 1;
        if (got != expect[i]) {
            return {false, "index " + std::to_string(first + i) + ": got " + got.str() + ", want " +
                               std::to_string(expect[i])};
        }
    }
    return {true, std::to_string(N) + " values"};
}

Region window(int n)
{
    return Region::centered(kOrigin, n + 1);
}

std::vector<Check> checks()
{
    std::vector<Check> list;
    list.push_back({"saw_counts", [](bool corrupt) {
                        return compare_sequence(kSaw, 0, corrupt, [](int n) { return count_saws(n); });
                    }});
    list.push_back({"animal_counts", [](bool corrupt) {
                        return compare_sequence(kAnimals, 1, corrupt, [](int m) { return Count(count_animals(m)); });
                    }});
    list.push_back({"tree_counts", [](bool corrupt) {
                        return compare_sequence(kTrees, 1, corrupt, [](int n) { return count_lattice_trees(n); });
                    }});
    list.push_back({"open_trees_full_lattice", [](bool corrupt) {
                        for (int n = 1; n <= 6; ++n) {
                            Count got = count_open_trees(EdgeEnvironment::fully_open(window(n)), kOrigin, n);
                            if (corrupt && n == 6) got += 1;
                            if (got != kTrees[n - 1]) return Outcome{false, "n=" + std::to_string(n)};
                        }
                        return Outcome{true, "n=1..6"};
                    }});
    list.push_back({"partition_identity", [](bool corrupt) {
                        for (std::uint64_t i = 0; i < 40; ++i) {
                            const int n = 2 + static_cast<int>(i % 7);
                            const std::int64_t n0 = 2 + static_cast<std::int64_t>(i % 3);
                            const auto env = sample_environment(window(n), 0.6,
                                                                derive_seed(11, StreamTag::Environment, i));
                            Count sum = 0;
                            for (const auto& [a, z] : decompose(env, kOrigin, n, n0)) sum += z;
                            if (corrupt && i == 39) sum += 1;
                            if (sum != count_open_saws(env, kOrigin, n)) {
                                return Outcome{false, "environment " + std::to_string(i)};
                            }
                        }
                        return Outcome{true, "40 environments"};
                    }});
    list.push_back({"animal_size_bounds", [](bool corrupt) {
                        std::size_t paths = 0;
                        for (std::int64_t n0 : {2, 3}) {
                            for (int n = 1; n <= 8; ++n) {
                                const auto b = animal_size_bounds(n, n0);
                                bool ok = true;
                                enumerate_saws(n, [&](std::span<const Site> path) {
                                    auto m = static_cast<std::int64_t>(animal_of_path(path, n0).size());
                                    if (corrupt) m = b.upper + 1;
                                    ok = ok && m >= b.corrected_lower && m <= b.upper;
                                    ++paths;
                                });
                                if (!ok) return Outcome{false, "n=" + std::to_string(n) + " n0=" + std::to_string(n0)};
                            }
                        }
                        return Outcome{true, std::to_string(paths) + " paths"};
                    }});
    list.push_back({"separated_subsets", [](bool corrupt) {
                        std::size_t animals = 0;
                        for (int m = 1; m <= 7; ++m) {
                            for (const Animal& a : enumerate_animals(m)) {
                                auto s = extract_separated(a).cells;
                                if (corrupt && m == 7) s.clear();
                                bool ok = static_cast<int>(s.size()) >= (m + 12) / 13;
                                for (std::size_t i = 0; i < s.size(); ++i) {
                                    ok = ok && a.contains(s[i]);
                                    for (std::size_t j = i + 1; j < s.size(); ++j) {
                                        ok = ok && linf_distance(s[i], s[j]) >= 3;
                                    }
                                }
                                if (!ok) return Outcome{false, animal_to_line(a)};
                                ++animals;
                            }
                        }
                        return Outcome{true, std::to_string(animals) + " animals"};
                    }});
    list.push_back({"coupling_exhaustive", [](bool corrupt) {
                        double worst = 0.0;
                        for (int n = 1; n <= 4; ++n) {
                            worst = std::max(worst, exhaustive_coupling_check(0.3, 0.6, n).second);
                        }
                        if (corrupt) worst += 1.0;
                        return Outcome{worst < 1e-12, "max relative error " + std::to_string(worst) + " over n=1..4"};
                    }});
    list.push_back({"hammersley_open_pairs", [](bool corrupt) {
                        std::size_t pairs = 0;
                        for (std::uint64_t i = 0; i < 30; ++i) {
                            const int n = 2 + static_cast<int>(i % 6);
                            const auto env = sample_environment(Region::centered(kOrigin, n + 2), 0.7,
                                                                derive_seed(12, StreamTag::Environment, i));
                            for (int d = 0; d < 4; ++d) {
                                auto t = hammersley_terms(env, kOrigin, {kStepDx[d], kStepDy[d]}, n);
                                if (!t.edge_open) continue;
                                if (corrupt) t.lhs = t.rhs + 1;
                                ++pairs;
                                if (!t.holds()) return Outcome{false, "environment " + std::to_string(i)};
                            }
                        }
                        return Outcome{true, std::to_string(pairs) + " open pairs"};
                    }});
    list.push_back({"potential_beta_zero", [](bool corrupt) {
                        const auto pot = sample_potential(Region::centered(kOrigin, 9), DistributionSpec::gaussian(), 5);
                        for (int n = 0; n <= 8; ++n) {
                            double z = partition_function(pot, 0.0, n);
                            if (corrupt && n == 8) z += 1.0;
                            if (z != static_cast<double>(kSaw[n])) return Outcome{false, "n=" + std::to_string(n)};
                        }
                        return Outcome{true, "n=0..8"};
                    }});
    list.push_back({"small_tilt_inverse_moment", [](bool corrupt) {
                        // At p = 0.75, n0 = 8, m = 1 the moment is (1 + 1/64)^128 and the bound e^2.
                        const auto b = inverse_moment_small(TiltSpec::make(0.75, 8, 1));
                        double v = b.value;
                        if (corrupt) v *= 2;
                        const bool ok = std::fabs(v - std::pow(1.015625, 128.0)) < 1e-10 * v && v <= b.bound;
                        return Outcome{ok, "value " + std::to_string(v) + " <= " + std::to_string(b.bound)};
                    }});
    return list;
}

} // namespace

int selftest(std::ostream& out, const std::string& fault)
{
    const auto list = checks();
    bool known = fault.empty();
    int failures = 0;
    for (const Check& c : list) {
        const bool corrupt = c.name == fault;
        known = known || corrupt;
        const Outcome o = c.run(corrupt);
        failures += !o.pass;
        out << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << '\n';
    }
    if (!known) {
        out << "FAIL inject_fault: unknown check '" << fault << "'\n";
        ++failures;
    }
    out << "selftest: " << list.size() << " checks, " << failures << " failed\n";
    return failures == 0 ? kExitOk : kExitInvariant;
}

} // namespace sawperc::cli
