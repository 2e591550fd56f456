#pragma once

// Coarse-graining of paths into lattice animals of N0 x N0 blocks, animal
// enumeration, and the well-separated subset used by the large-m tilt.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sawperc/environment.hpp"
#include "sawperc/lattice.hpp"
#include "sawperc/walks.hpp"

namespace sawperc {

inline constexpr int kMaxAnimalListSize = 10;
inline constexpr int kMaxAnimalCountSize = 13;

/// Finite set of rescaled-lattice cells, stored sorted (x, then y). Paths
/// produce 8-connected sets that need not contain cell (0,0); the
/// enumerators produce 4-connected sets that do.
class Animal {
public:
    Animal() = default;
    Animal(std::vector<Site> cells, std::int64_t n0);

    std::span<const Site> cells() const noexcept { return cells_; }
    std::size_t size() const noexcept { return cells_.size(); }
    std::int64_t n0() const noexcept { return n0_; }
    bool contains(Site cell) const;
    BlockCoord block(std::size_t i) const { return {cells_[i].x, cells_[i].y, n0_}; }

    /// 4-connected on the rescaled lattice.
    bool connected() const;

    auto operator<=>(const Animal&) const = default;

private:
    std::vector<Site> cells_;
    std::int64_t n0_ = 1;
};

/// Cells at pairwise l_inf distance >= 3, in pick order (lexicographic).
struct SeparatedSet {
    std::vector<Site> cells;
    std::int64_t n0 = 1;

    std::size_t size() const noexcept { return cells.size(); }
};

/// A(S): blocks containing at least one edge of S. Throws PreconditionError
/// for zero-length paths.
Animal animal_of_path(std::span<const Site> path, std::int64_t n0);
Animal animal_of_path(const Path& path, std::int64_t n0);

struct AnimalSizeBounds {
    std::int64_t stated_lower = 0;     ///< ceil(N / N0^2)
    std::int64_t corrected_lower = 0;  ///< ceil(N / (2 N0^2)); I_x holds 2 N0^2 edges
    std::int64_t upper = 0;            ///< 9 ceil(N / N0)
};
AnimalSizeBounds animal_size_bounds(std::int64_t n, std::int64_t n0);

/// Z_N(A) for every animal A of an open path: keys sum to Z_N(x).
std::map<Animal, Count> decompose(const EdgeEnvironment& env, Site x, int n, std::int64_t n0);

/// Calls visitor once per 4-connected m-cell set containing (0,0); the cell
/// span is unsorted and valid only during the call.
void for_each_animal(int m, const std::function<void(std::span<const Site>)>& visitor);
/// a_m.
std::uint64_t count_animals(int m);
/// All animals of size m in sorted order.
std::vector<Animal> enumerate_animals(int m, std::int64_t n0 = 1);

/// Greedy: take the smallest available cell, block every cell within l_inf
/// distance 2 of it, repeat.
SeparatedSet extract_separated(const Animal& a);

/// Random 4-connected m-cell animal containing (0,0) by uniform perimeter
/// growth. Deterministic in (m, seed).
Animal grow_random_animal(int m, std::uint64_t seed, std::int64_t n0 = 1);

/// "(bx,by) (bx,by) ..." in sorted order.
std::string animal_to_line(const Animal& a);
Animal animal_from_line(const std::string& line, std::int64_t n0);
void write_animals(std::ostream& out, std::span<const Animal> animals);
std::vector<Animal> read_animals(std::istream& in, std::int64_t n0);

/// Edges of I_A (union of the blocks' edge sets), sorted.
std::vector<Edge> animal_edges(const Animal& a);
/// Sites of the blocks of A (site version of I_A), sorted.
std::vector<Site> animal_sites(const Animal& a);

} // namespace sawperc
