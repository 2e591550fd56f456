#pragma once

// Geometry of the square lattice Z^2: sites, canonical edges, finite
// windows, and the N0 x N0 coarse-graining blocks.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace sawperc {

struct Site {
    std::int64_t x = 0;
    std::int64_t y = 0;

    // Lexicographic: x first, then y.
    auto operator<=>(const Site&) const = default;
};

inline constexpr Site kOrigin{0, 0};

enum class Direction : std::uint8_t { East = 0, North = 1 };

/// An undirected nearest-neighbour edge, stored by its smaller endpoint.
struct Edge {
    Site anchor;
    Direction dir = Direction::East;

    auto operator<=>(const Edge&) const = default;

    Site head() const noexcept
    {
        return dir == Direction::East ? Site{anchor.x + 1, anchor.y}
                                      : Site{anchor.x, anchor.y + 1};
    }
    double mid_x() const noexcept { return static_cast<double>(anchor.x) + (dir == Direction::East ? 0.5 : 0.0); }
    double mid_y() const noexcept { return static_cast<double>(anchor.y) + (dir == Direction::North ? 0.5 : 0.0); }
};

/// Cell of the rescaled lattice plus the block side it refers to.
struct BlockCoord {
    std::int64_t bx = 0;
    std::int64_t by = 0;
    std::int64_t n0 = 1;

    auto operator<=>(const BlockCoord&) const = default;
    Site cell() const noexcept { return {bx, by}; }
};

/// Floor division (rounds toward negative infinity). b must be positive.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) noexcept
{
    const std::int64_t q = a / b;
    return (a % b != 0 && a < 0) ? q - 1 : q;
}

constexpr std::int64_t l1_distance(Site a, Site b) noexcept
{
    const std::int64_t dx = a.x > b.x ? a.x - b.x : b.x - a.x;
    const std::int64_t dy = a.y > b.y ? a.y - b.y : b.y - a.y;
    return dx + dy;
}

constexpr std::int64_t linf_distance(Site a, Site b) noexcept
{
    const std::int64_t dx = a.x > b.x ? a.x - b.x : b.x - a.x;
    const std::int64_t dy = a.y > b.y ? a.y - b.y : b.y - a.y;
    return dx > dy ? dx : dy;
}

/// Throws AdjacencyError unless a and b are nearest neighbours.
Edge canonical_edge(Site a, Site b);

BlockCoord block_of_site(Site s, std::int64_t n0);
BlockCoord block_of_edge(const Edge& e, std::int64_t n0);

/// Euclidean distance between midpoints. Throws on e == f.
double edge_distance(const Edge& e, const Edge& f);
/// Euclidean distance between sites. Throws on a == b.
double site_distance(Site a, Site b);

/// Closed axis-aligned rectangle of sites [lo, hi]. Its edge set is every
/// edge with both endpoints inside.
class Region {
public:
    Region(Site lo, Site hi);

    /// [c - r, c + r]^2
    static Region centered(Site c, std::int64_t radius);

    Site lo() const noexcept { return lo_; }
    Site hi() const noexcept { return hi_; }
    std::int64_t width() const noexcept { return width_; }
    std::int64_t height() const noexcept { return height_; }
    std::size_t site_count() const noexcept { return static_cast<std::size_t>(width_ * height_); }
    /// Number of edges whose anchor and head both lie inside.
    std::size_t edge_count() const noexcept;
    /// Size of the dense edge index space (2 per site, some unused).
    std::size_t edge_slot_count() const noexcept { return 2 * site_count(); }

    bool contains(Site s) const noexcept
    {
        return s.x >= lo_.x && s.x <= hi_.x && s.y >= lo_.y && s.y <= hi_.y;
    }
    bool contains(const Edge& e) const noexcept { return contains(e.anchor) && contains(e.head()); }
    bool contains(const Region& r) const noexcept { return contains(r.lo()) && contains(r.hi()); }
    bool on_boundary(Site s) const noexcept
    {
        return contains(s) && (s.x == lo_.x || s.x == hi_.x || s.y == lo_.y || s.y == hi_.y);
    }

    std::size_t site_index(Site s) const noexcept
    {
        return static_cast<std::size_t>((s.y - lo_.y) * width_ + (s.x - lo_.x));
    }
    Site site_at(std::size_t index) const noexcept
    {
        const auto i = static_cast<std::int64_t>(index);
        return {lo_.x + i % width_, lo_.y + i / width_};
    }
    std::size_t edge_index(const Edge& e) const noexcept
    {
        return 2 * site_index(e.anchor) + static_cast<std::size_t>(e.dir);
    }
    Edge edge_at(std::size_t slot) const noexcept
    {
        return {site_at(slot / 2), static_cast<Direction>(slot % 2)};
    }

    /// Visits every in-region edge in increasing slot order.
    void for_each_edge(const std::function<void(const Edge&)>& fn) const;
    std::vector<Edge> edges() const;

    bool operator==(const Region&) const = default;

private:
    Site lo_;
    Site hi_;
    std::int64_t width_;
    std::int64_t height_;
};

/// Sites whose coordinates lie in N0*x + [0, N0)^2.
Region block_site_region(const BlockCoord& b);

/// I_x: edges anchored in the block (2 N0^2 edges).
std::vector<Edge> block_edges(const BlockCoord& b);

/// Smallest region containing every edge anchored in the 3x3 block
/// neighbourhood of b.
Region enlarged_block_region(const BlockCoord& b);

/// Union of I_y over |y - b|_inf <= 1, sorted.
std::vector<Edge> enlarged_block_edges(const BlockCoord& b);
/// Same set clipped to the edges of `region`.
std::vector<Edge> enlarged_block_edges(const BlockCoord& b, const Region& region);

/// Sites of the 3x3 block neighbourhood (site version of the enlarged block).
std::vector<Site> enlarged_block_sites(const BlockCoord& b);

/// Stable 64-bit keys used to derive per-site / per-edge random values
/// independently of any window.
std::uint64_t site_key(Site s) noexcept;
std::uint64_t edge_key(const Edge& e) noexcept;

} // namespace sawperc
