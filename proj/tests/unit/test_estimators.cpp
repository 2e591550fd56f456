#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles/naive.hpp"
#include "sawperc/error.hpp"
#include "sawperc/estimators.hpp"
#include "sawperc/parallel.hpp"
#include "sawperc/report.hpp"
#include "sawperc/walks.hpp"

using namespace sawperc;

namespace {

template <class F>
std::string dump_with_threads(unsigned threads, F&& run)
{
    set_thread_limit(threads);
    const std::string s = to_json(run()).dump();
    set_thread_limit(0);
    return s;
}

} // namespace

TEST_CASE("annealed growth")
{
    const auto one = annealed_growth(1.0, 4);
    REQUIRE(one.rows.size() == 4);
    CHECK(one.rows[0].annealed == doctest::Approx(std::log(4.0)).epsilon(1e-15));
    CHECK(annealed_growth(0.5, 1).rows[0].annealed == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(annealed_growth(0.7, 4).rows[3].annealed == doctest::Approx(std::log(0.7) + std::log(100.0) / 4).epsilon(1e-15));
    CHECK_THROWS_AS(annealed_growth(0.0, 4), ParameterError);
    CHECK_THROWS_AS(annealed_growth(0.5, kMaxSawLength + 1), ResourceError);
}

TEST_CASE("quenched growth")
{
    const auto full = quenched_growth(1.0, 6, 100, 1);
    CHECK(full.retained == 100);
    CHECK(full.retention() == 1.0);
    for (const auto& r : full.rows) {
        CHECK(r.quenched.mean == doctest::Approx(r.annealed).epsilon(1e-14));
        CHECK(r.quenched.std_error == 0.0);
    }

    const auto g = quenched_growth(0.6, 6, 600, 2);
    CHECK(g.retained == 600);
    CHECK(g.retention() > 0.0);
    CHECK(g.retention() < 1.0);
    for (const auto& r : g.rows) {
        CHECK(r.sample_annealed >= r.quenched.mean);
        CHECK(std::isfinite(r.quenched.mean));
    }
    CHECK(g.rows.back().gap > 3 * g.rows.back().quenched.std_error);

    const auto giant = quenched_growth(0.7, 3, 200, 2, {Conditioning::OriginInGiant, 0, 0});
    CHECK(giant.region_radius == 6);
    CHECK(giant.rows[0].quenched.conditioning == Conditioning::OriginInGiant);

    CHECK_THROWS_AS(quenched_growth(0.01, 8, 100, 3, {Conditioning::PositiveZ, 0, 100}), PreconditionError);
    CHECK_THROWS_AS(quenched_growth(0.6, 4, 100, 3, {Conditioning::None, 0, 0}), ParameterError);
    CHECK_THROWS_AS(quenched_growth(0.6, 4, 99, 3), ParameterError);
    CHECK_THROWS_AS(quenched_growth(0.6, 4, 100, 3, {Conditioning::OriginInGiant, 5, 0}), ParameterError);

    CHECK(dump_with_threads(1, [] { return quenched_growth(0.6, 5, 300, 9); }) ==
          dump_with_threads(3, [] { return quenched_growth(0.6, 5, 300, 9); }));
}

TEST_CASE("fractional moments")
{
    const auto exact = fractional_moment(1.0, 0.5, 6, 50, 1);
    CHECK(exact.moment.mean == doctest::Approx(std::sqrt(780.0)).epsilon(1e-14));
    CHECK(exact.moment.std_error == 0.0);
    CHECK(exact.empirical_b == doctest::Approx(1.0).epsilon(1e-12));

    const auto first = fractional_moment(0.7, 1.0, 6, 8000, 2);
    CHECK(first.moment.within(std::pow(0.7, 6) * 780.0));

    const auto half = fractional_moment(0.6, 0.5, 8, 4000, 3);
    CHECK(half.moment.mean + 3 * half.moment.std_error < half.annealed_power);
    CHECK(half.empirical_b < 1.0);

    CHECK_THROWS_AS(fractional_moment(0.6, 0.0, 4, 10, 1), ParameterError);
    CHECK_THROWS_AS(fractional_moment(0.6, 1.5, 4, 10, 1), ParameterError);
}

TEST_CASE("exhaustive coupling identity")
{
    const auto [configs, err] = exhaustive_coupling_check(0.3, 0.6, 1);
    CHECK(configs == 531441);
    CHECK(err < 1e-12);
    for (int n : {2, 3, 5, 8}) {
        CHECK(exhaustive_coupling_check(0.5, 0.8, n).second < 1e-12);
    }
    CHECK_THROWS_AS(exhaustive_coupling_check(0.6, 0.3, 1), ParameterError);
}

TEST_CASE("coupling identity against subset enumeration")
{
    // Conditional expectation by explicit subset sums with the oracle walk counter.
    const Region window = Region::centered(kOrigin, 1);
    const auto edges = window.edges();
    const double r = 0.5 / 0.8;
    for (std::size_t mask : {0xfffu, 0x5a5u, 0x3c3u, 0x0f1u}) {
        std::vector<std::size_t> open;
        for (std::size_t k = 0; k < edges.size(); ++k) {
            if (mask >> k & 1u) open.push_back(k);
        }
        auto z_of = [&](std::size_t sub) {
            std::set<oracle::EdgeKey> keep;
            for (std::size_t k = 0; k < edges.size(); ++k) {
                if (sub >> k & 1u) {
                    const Site a = edges[k].anchor;
                    const Site b = edges[k].head();
                    keep.insert(oracle::edge_key({a.x, a.y}, {b.x, b.y}));
                }
            }
            return static_cast<double>(oracle::saw_count(4, {0, 0}, [&](oracle::Cell a, oracle::Cell b) {
                return keep.count(oracle::edge_key(a, b)) > 0;
            }));
        };
        double expect = 0.0;
        for (std::size_t bits = 0; bits < (std::size_t{1} << open.size()); ++bits) {
            std::size_t sub = 0;
            int kept = 0;
            for (std::size_t i = 0; i < open.size(); ++i) {
                if (bits >> i & 1u) {
                    sub |= std::size_t{1} << open[i];
                    ++kept;
                }
            }
            expect += std::pow(r, kept) * std::pow(1 - r, static_cast<int>(open.size()) - kept) * z_of(sub);
        }
        CHECK(expect == doctest::Approx(std::pow(r, 4) * z_of(mask)).epsilon(1e-12));
    }
}

TEST_CASE("coupling experiment")
{
    const auto rep = coupling_experiment(0.5, 0.8, 4, 2000, 5, {6, 400, false});
    CHECK(rep.monotonicity_violations == 0);
    CHECK(rep.nested.size() == 6);
    CHECK(rep.identity_holds());
    CHECK_FALSE(rep.exhaustive_run);
    CHECK_THROWS_AS(coupling_experiment(0.8, 0.5, 4, 10, 1), ParameterError);
    CHECK(dump_with_threads(1, [] { return coupling_experiment(0.5, 0.8, 3, 300, 4, {3, 100, true}); }) ==
          dump_with_threads(2, [] { return coupling_experiment(0.5, 0.8, 3, 300, 4, {3, 100, true}); }));
}

TEST_CASE("beta monotonicity")
{
    const std::vector<double> betas{0.0, 0.5, 1.0};
    const auto rep = beta_monotonicity(DistributionSpec::gaussian(), betas, 4, 3000, 7);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].sites_normalized.mean == std::sqrt(100.0));
    CHECK(rep.rows[0].sites_normalized.std_error == 0.0);
    CHECK(rep.rows[0].steps_normalized.mean == std::sqrt(100.0));
    CHECK(rep.sites_non_increasing());
    CHECK(rep.rows[2].sites_normalized.mean < rep.rows[0].sites_normalized.mean);

    const std::vector<double> unsorted{0.5, 0.0};
    const std::vector<double> negative{-0.5, 0.0};
    CHECK_THROWS_AS(beta_monotonicity(DistributionSpec::gaussian(), unsorted, 4, 10, 1), ParameterError);
    CHECK_THROWS_AS(beta_monotonicity(DistributionSpec::gaussian(), negative, 4, 10, 1), ParameterError);
    CHECK_THROWS_AS(beta_monotonicity(DistributionSpec::centered_bernoulli(1.0), betas, 4, 10, 1), ParameterError);
}

TEST_CASE("csv quoting and real formatting")
{
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("two\nlines") == "\"two\nlines\"");
    CHECK(format_real(0.1) == "0.1");
    CHECK(std::stod(format_real(1.0 / 3.0)) == 1.0 / 3.0);
    std::ostringstream out;
    write_growth_csv(out, annealed_growth(1.0, 1));
    CHECK(out.str().rfind("n,annealed,quenched_mean,quenched_se,gap,retention\r\n", 0) == 0);
}
