#include "sawperc/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sawperc/error.hpp"
#include "sawperc/rng.hpp"

namespace sawperc {

namespace {

std::string to_string(Site s)
{
    return "(" + std::to_string(s.x) + "," + std::to_string(s.y) + ")";
}

void require_positive_block(std::int64_t n0)
{
    if (n0 < 1) {
        throw ParameterError("block side n0 must be >= 1, got " + std::to_string(n0));
    }
}

} // namespace

Edge canonical_edge(Site a, Site b)
{
    if (l1_distance(a, b) != 1) {
        throw AdjacencyError("sites " + to_string(a) + " and " + to_string(b) + " are not nearest neighbours");
    }
    const Site lo = std::min(a, b);
    const Site hi = std::max(a, b);
    return {lo, hi.x != lo.x ? Direction::East : Direction::North};
}

BlockCoord block_of_site(Site s, std::int64_t n0)
{
    require_positive_block(n0);
    return {floor_div(s.x, n0), floor_div(s.y, n0), n0};
}

BlockCoord block_of_edge(const Edge& e, std::int64_t n0)
{
    return block_of_site(e.anchor, n0);
}

double edge_distance(const Edge& e, const Edge& f)
{
    if (e == f) {
        throw ParameterError("edge_distance of an edge with itself is undefined");
    }
    return std::hypot(e.mid_x() - f.mid_x(), e.mid_y() - f.mid_y());
}

double site_distance(Site a, Site b)
{
    if (a == b) {
        throw ParameterError("site_distance of a site with itself is undefined");
    }
    return std::hypot(static_cast<double>(a.x - b.x), static_cast<double>(a.y - b.y));
}

Region::Region(Site lo, Site hi) : lo_(lo), hi_(hi)
{
    if (lo.x > hi.x || lo.y > hi.y) {
        throw RegionError("region corners out of order: " + to_string(lo) + " > " + to_string(hi));
    }
    std::int64_t w = 0;
    std::int64_t h = 0;
    if (__builtin_sub_overflow(hi.x, lo.x, &w) || __builtin_add_overflow(w, 1, &w) ||
        __builtin_sub_overflow(hi.y, lo.y, &h) || __builtin_add_overflow(h, 1, &h)) {
        throw RegionError("region extent overflows 64-bit coordinates");
    }
    // Every head coordinate (anchor + 1) must be representable too.
    if (hi.x == std::numeric_limits<std::int64_t>::max() || hi.y == std::numeric_limits<std::int64_t>::max()) {
        throw RegionError("region touches the 64-bit coordinate limit");
    }
    std::int64_t sites = 0;
    if (__builtin_mul_overflow(w, h, &sites) || sites > (std::int64_t{1} << 36)) {
        throw ResourceError("region has too many sites to store (" + std::to_string(w) + " x " +
                            std::to_string(h) + ")");
    }
    width_ = w;
    height_ = h;
}

Region Region::centered(Site c, std::int64_t radius)
{
    if (radius < 0) {
        throw RegionError("negative region radius");
    }
    Site lo{};
    Site hi{};
    if (__builtin_sub_overflow(c.x, radius, &lo.x) || __builtin_sub_overflow(c.y, radius, &lo.y) ||
        __builtin_add_overflow(c.x, radius, &hi.x) || __builtin_add_overflow(c.y, radius, &hi.y)) {
        throw RegionError("region radius overflows 64-bit coordinates");
    }
    return Region(lo, hi);
}

std::size_t Region::edge_count() const noexcept
{
    return static_cast<std::size_t>((width_ - 1) * height_ + width_ * (height_ - 1));
}

void Region::for_each_edge(const std::function<void(const Edge&)>& fn) const
{
    for (std::int64_t y = lo_.y; y <= hi_.y; ++y) {
        for (std::int64_t x = lo_.x; x <= hi_.x; ++x) {
            if (x < hi_.x) {
                fn(Edge{{x, y}, Direction::East});
            }
            if (y < hi_.y) {
                fn(Edge{{x, y}, Direction::North});
            }
        }
    }
}

std::vector<Edge> Region::edges() const
{
    std::vector<Edge> out;
    out.reserve(edge_count());
    for_each_edge([&](const Edge& e) { out.push_back(e); });
    return out;
}

Region block_site_region(const BlockCoord& b)
{
    require_positive_block(b.n0);
    const Site lo{b.bx * b.n0, b.by * b.n0};
    return Region(lo, {lo.x + b.n0 - 1, lo.y + b.n0 - 1});
}

std::vector<Edge> block_edges(const BlockCoord& b)
{
    const Region cell = block_site_region(b);
    std::vector<Edge> out;
    out.reserve(static_cast<std::size_t>(2 * b.n0 * b.n0));
    for (std::int64_t y = cell.lo().y; y <= cell.hi().y; ++y) {
        for (std::int64_t x = cell.lo().x; x <= cell.hi().x; ++x) {
            out.push_back({{x, y}, Direction::East});
            out.push_back({{x, y}, Direction::North});
        }
    }
    return out;
}

Region enlarged_block_region(const BlockCoord& b)
{
    require_positive_block(b.n0);
    const Site lo{(b.bx - 1) * b.n0, (b.by - 1) * b.n0};
    // Anchors reach (b + 2) * n0 - 1; heads one further.
    return Region(lo, {(b.bx + 2) * b.n0, (b.by + 2) * b.n0});
}

std::vector<Edge> enlarged_block_edges(const BlockCoord& b)
{
    std::vector<Edge> out;
    out.reserve(static_cast<std::size_t>(18 * b.n0 * b.n0));
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
            auto part = block_edges({b.bx + dx, b.by + dy, b.n0});
            out.insert(out.end(), part.begin(), part.end());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Edge> enlarged_block_edges(const BlockCoord& b, const Region& region)
{
    auto all = enlarged_block_edges(b);
    std::erase_if(all, [&](const Edge& e) { return !region.contains(e); });
    return all;
}

std::vector<Site> enlarged_block_sites(const BlockCoord& b)
{
    require_positive_block(b.n0);
    std::vector<Site> out;
    out.reserve(static_cast<std::size_t>(9 * b.n0 * b.n0));
    for (std::int64_t x = (b.bx - 1) * b.n0; x < (b.bx + 2) * b.n0; ++x) {
        for (std::int64_t y = (b.by - 1) * b.n0; y < (b.by + 2) * b.n0; ++y) {
            out.push_back({x, y});
        }
    }
    return out;
}

std::uint64_t site_key(Site s) noexcept
{
    const auto ux = static_cast<std::uint64_t>(s.x);
    const auto uy = static_cast<std::uint64_t>(s.y);
    return mix64(ux * 0xd1b54a32d192ed03ULL ^ mix64(uy + 0x8cb92ba72f3d8dd7ULL));
}

std::uint64_t edge_key(const Edge& e) noexcept
{
    return mix64(site_key(e.anchor) + (e.dir == Direction::East ? 0x2545f4914f6cdd1dULL : 0x9fb21c651e98df25ULL));
}

} // namespace sawperc
