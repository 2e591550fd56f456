#pragma once

// Dense site grid with a per-site mask of admissible unit steps. Walk and
// tree kernels run on site indices only; bit d of mask[v] allows the step
// (kStepDx[d], kStepDy[d]) out of site v.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "sawperc/environment.hpp"
#include "sawperc/lattice.hpp"

namespace sawperc::detail {

struct MoveGrid {
    Region region;
    std::vector<std::uint8_t> mask;
    std::array<std::ptrdiff_t, 4> offset{};

    explicit MoveGrid(const Region& r)
        : region(r), mask(r.site_count(), 0)
    {
        const auto w = static_cast<std::ptrdiff_t>(r.width());
        offset = {1, w, -1, -w};
    }

    /// Every in-region step allowed.
    static MoveGrid full(const Region& r)
    {
        MoveGrid g(r);
        const std::int64_t w = r.width();
        const std::int64_t h = r.height();
        for (std::int64_t j = 0; j < h; ++j) {
            for (std::int64_t i = 0; i < w; ++i) {
                std::uint8_t m = 0;
                if (i + 1 < w) m |= 1;
                if (j + 1 < h) m |= 2;
                if (i > 0) m |= 4;
                if (j > 0) m |= 8;
                g.mask[static_cast<std::size_t>(j * w + i)] = m;
            }
        }
        return g;
    }

    /// Steps along open edges of env.
    static MoveGrid open(const EdgeEnvironment& env)
    {
        const Region& r = env.region();
        MoveGrid g(r);
        const std::int64_t w = r.width();
        const std::int64_t h = r.height();
        for (std::int64_t j = 0; j < h; ++j) {
            for (std::int64_t i = 0; i < w; ++i) {
                const auto v = static_cast<std::size_t>(j * w + i);
                std::uint8_t m = 0;
                if (i + 1 < w && env.slot_open(2 * v)) m |= 1;
                if (j + 1 < h && env.slot_open(2 * v + 1)) m |= 2;
                if (i > 0 && env.slot_open(2 * (v - 1))) m |= 4;
                if (j > 0 && env.slot_open(2 * (v - static_cast<std::size_t>(w)) + 1)) m |= 8;
                g.mask[v] = m;
            }
        }
        return g;
    }

    std::size_t index(Site s) const noexcept { return region.site_index(s); }

    std::size_t step(std::size_t v, int d) const noexcept
    {
        return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(v) + offset[static_cast<std::size_t>(d)]);
    }

    /// Edge slot (2 * anchor index + direction) of the step d out of v.
    std::size_t edge_slot(std::size_t v, int d) const noexcept
    {
        switch (d) {
        case 0: return 2 * v;
        case 1: return 2 * v + 1;
        case 2: return 2 * (v - 1);
        default: return 2 * (v - static_cast<std::size_t>(region.width())) + 1;
        }
    }
};

} // namespace sawperc::detail
