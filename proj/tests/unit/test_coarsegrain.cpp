#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "oracles/naive.hpp"
#include "sawperc/coarsegrain.hpp"
#include "sawperc/error.hpp"
#include "support/generators.hpp"

using namespace sawperc;

namespace {

Animal cells(std::initializer_list<Site> c, std::int64_t n0 = 1)
{
    return Animal(std::vector<Site>(c), n0);
}

} // namespace

TEST_CASE("animal of a path")
{
    CHECK(animal_of_path(Path::straight(kOrigin, 1, 0, 8), 4) == cells({{0, 0}, {1, 0}}, 4));
    CHECK(animal_of_path(Path::straight({1, 1}, 0, 1, 2), 4) == cells({{0, 0}}, 4));
    CHECK(animal_of_path(Path::straight(kOrigin, -1, 0, 1), 4) == cells({{-1, 0}}, 4));
    CHECK_THROWS_AS(animal_of_path(Path(std::vector<Site>{kOrigin}), 4), PreconditionError);
    CHECK_THROWS_AS(animal_of_path(Path::straight(kOrigin, 1, 0, 1), 0), ParameterError);
}

TEST_CASE("size bounds of path animals")
{
    // The upper bound and the ceil(N / (2 N0^2)) lower bound hold for every path.
    for (std::int64_t n0 : {1, 2, 3, 4}) {
        for (int n = 1; n <= 9; ++n) {
            const auto b = animal_size_bounds(n, n0);
            enumerate_saws(n, [&](std::span<const Site> p) {
                const auto a = animal_of_path(p, n0);
                const auto m = static_cast<std::int64_t>(a.size());
                CHECK(m >= b.corrected_lower);
                CHECK(m <= b.upper);
            });
        }
    }
}

TEST_CASE("the ceil(N / N0^2) lower bound has counterexamples")
{
    // Five edges packed into one 2x2 block: I_x has 2 N0^2 = 8 edges.
    const Path p({{0, 0}, {-1, 0}, {-2, 0}, {-2, 1}, {-1, 1}, {-1, 2}});
    const Animal a = animal_of_path(p, 2);
    CHECK(a == cells({{-1, 0}}, 2));
    CHECK(static_cast<std::int64_t>(a.size()) < animal_size_bounds(5, 2).stated_lower);

    int failures = 0;
    enumerate_saws(5, [&](std::span<const Site> s) {
        failures += static_cast<std::int64_t>(animal_of_path(s, 2).size()) < animal_size_bounds(5, 2).stated_lower;
    });
    CHECK(failures == 4);
}

TEST_CASE("decompose partitions Z_N")
{
    const Region r = Region::centered(kOrigin, 6);
    const auto open = EdgeEnvironment::fully_open(r);
    const auto parts = decompose(open, kOrigin, 2, 4);
    Count total = 0;
    for (const auto& [a, c] : parts) total += c;
    CHECK(total == 12);
    CHECK(parts.size() > 1);
    CHECK(parts.count(cells({{0, 0}}, 4)) == 1);

    CHECK(decompose(EdgeEnvironment(r), kOrigin, 3, 2).empty());

    // n0 >= n + 1 with x centred in its block: one key.
    const Region big = Region::centered({3, 3}, 3);
    const auto one = decompose(EdgeEnvironment::fully_open(big), {3, 3}, 3, 7);
    CHECK(one.size() == 1);
    CHECK(one.begin()->first == cells({{0, 0}}, 7));
    CHECK(one.begin()->second == 36);

    CHECK_THROWS_AS(decompose(open, kOrigin, 7, 2), RegionError);
    CHECK_THROWS_AS(decompose(open, kOrigin, 0, 2), PreconditionError);
}

TEST_CASE("decompose agrees with path-by-path animals")
{
    gen::for_all(30, 61, [](gen::Gen& g, int) {
        const int n = static_cast<int>(g.integer(1, 7));
        const std::int64_t n0 = g.integer(1, 4);
        const Region r = Region::centered(kOrigin, n);
        const auto env = sample_environment(r, g.real(0.5, 1.0), g.seed());
        std::map<Animal, Count> expect;
        enumerate_saws(n, [&](std::span<const Site> p) {
            for (std::size_t i = 1; i < p.size(); ++i) {
                if (!env.is_open(canonical_edge(p[i - 1], p[i]))) return;
            }
            expect[animal_of_path(p, n0)] += 1;
        });
        const auto got = decompose(env, kOrigin, n, n0);
        CHECK(got == expect);
        Count total = 0;
        for (const auto& [a, c] : got) total += c;
        CHECK(total == count_open_saws(env, kOrigin, n));
    });
}

TEST_CASE("animal enumeration")
{
    CHECK(count_animals(1) == 1);
    CHECK(count_animals(2) == 4);
    CHECK(count_animals(3) == 18);
    CHECK(count_animals(4) == 76);
    for (int m = 1; m <= 7; ++m) {
        const auto got = enumerate_animals(m);
        const auto expect = oracle::rooted_animals(m);
        CHECK(got.size() == expect.size());
        std::set<std::set<oracle::Cell>> as_sets;
        for (const auto& a : got) {
            std::set<oracle::Cell> s;
            for (const Site& c : a.cells()) s.insert({c.x, c.y});
            as_sets.insert(s);
            CHECK(a.contains(kOrigin));
            CHECK(a.connected());
            CHECK(static_cast<int>(a.size()) == m);
        }
        CHECK(as_sets == expect);
        CHECK(static_cast<double>(got.size()) <= std::pow(49.0, m));
    }
    CHECK_THROWS_AS(enumerate_animals(0), ParameterError);
    CHECK_THROWS_AS(enumerate_animals(kMaxAnimalListSize + 1), ResourceError);
}

TEST_CASE("separated subsets")
{
    CHECK(extract_separated(cells({{0, 0}})).cells == std::vector<Site>{{0, 0}});
    std::vector<Site> line;
    for (int k = 0; k <= 12; ++k) line.push_back({k, 0});
    CHECK(extract_separated(Animal(line, 1)).cells == std::vector<Site>{{0, 0}, {3, 0}, {6, 0}, {9, 0}, {12, 0}});
    std::vector<Site> square;
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y) square.push_back({x, y});
    CHECK(extract_separated(Animal(square, 1)).cells == std::vector<Site>{{0, 0}});

    gen::for_all(300, 62, [](gen::Gen& g, int) {
        const int m = static_cast<int>(g.integer(1, 40));
        const auto a = grow_random_animal(m, g.seed());
        CHECK(static_cast<int>(a.size()) == m);
        CHECK(a.connected());
        CHECK(a.contains(kOrigin));
        const auto s = extract_separated(a);
        CHECK(s.cells == extract_separated(a).cells);
        CHECK(static_cast<int>(s.size()) >= (m + 12) / 13);
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(a.contains(s.cells[i]));
            for (std::size_t j = i + 1; j < s.size(); ++j) {
                CHECK(linf_distance(s.cells[i], s.cells[j]) >= 3);
            }
        }
    });
}

TEST_CASE("random animals are reproducible")
{
    CHECK(grow_random_animal(25, 9) == grow_random_animal(25, 9));
    CHECK_FALSE(grow_random_animal(25, 9) == grow_random_animal(25, 10));
}

TEST_CASE("animal line format round-trips")
{
    const auto list = enumerate_animals(4, 3);
    std::stringstream ss;
    write_animals(ss, list);
    CHECK(read_animals(ss, 3) == list);
    CHECK(animal_to_line(cells({{1, 0}, {0, 0}, {-1, 2}})) == "(-1,2) (0,0) (1,0)");
    CHECK_THROWS_AS(animal_from_line("(1,2", 1), FormatError);
    CHECK_THROWS_AS(animal_from_line("", 1), FormatError);
}

TEST_CASE("animal edge and site sets")
{
    const auto a = cells({{0, 0}, {1, 0}}, 2);
    CHECK(animal_edges(a).size() == 16);
    CHECK(animal_sites(a).size() == 8);
}
