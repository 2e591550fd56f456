#include "sawperc/coarsegrain.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "move_grid.hpp"
#include "sawperc/error.hpp"
#include "sawperc/parallel.hpp"
#include "sawperc/rng.hpp"

namespace sawperc {

using detail::MoveGrid;

namespace {

void require_block_side(std::int64_t n0)
{
    if (n0 < 1) {
        throw ParameterError("block side n0 must be >= 1, got " + std::to_string(n0));
    }
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b)
{
    return a / b + (a % b != 0 ? 1 : 0);
}

} // namespace

Animal::Animal(std::vector<Site> cells, std::int64_t n0) : cells_(std::move(cells)), n0_(n0)
{
    require_block_side(n0);
    std::sort(cells_.begin(), cells_.end());
    cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
}

bool Animal::contains(Site cell) const
{
    return std::binary_search(cells_.begin(), cells_.end(), cell);
}

bool Animal::connected() const
{
    if (cells_.empty()) {
        return false;
    }
    std::vector<char> seen(cells_.size(), 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
        const Site c = cells_[stack.back()];
        stack.pop_back();
        for (int d = 0; d < 4; ++d) {
            const Site nb{c.x + kStepDx[d], c.y + kStepDy[d]};
            const auto it = std::lower_bound(cells_.begin(), cells_.end(), nb);
            if (it != cells_.end() && *it == nb) {
                const auto k = static_cast<std::size_t>(it - cells_.begin());
                if (!seen[k]) {
                    seen[k] = 1;
                    ++reached;
                    stack.push_back(k);
                }
            }
        }
    }
    return reached == cells_.size();
}

Animal animal_of_path(std::span<const Site> path, std::int64_t n0)
{
    require_block_side(n0);
    if (path.size() < 2) {
        throw PreconditionError("the animal of a zero-length path is undefined");
    }
    std::vector<Site> cells;
    cells.reserve(path.size() - 1);
    for (std::size_t i = 1; i < path.size(); ++i) {
        cells.push_back(block_of_edge(canonical_edge(path[i - 1], path[i]), n0).cell());
    }
    return Animal(std::move(cells), n0);
}

Animal animal_of_path(const Path& path, std::int64_t n0)
{
    return animal_of_path(path.sites(), n0);
}

AnimalSizeBounds animal_size_bounds(std::int64_t n, std::int64_t n0)
{
    require_block_side(n0);
    if (n < 1) {
        throw PreconditionError("animal size bounds need a path of length >= 1");
    }
    return {ceil_div(n, n0 * n0), ceil_div(n, 2 * n0 * n0), 9 * ceil_div(n, n0)};
}

// ------------------------------------------------------------ decompose

namespace {

struct BlockIndex {
    std::int64_t bx0 = 0;
    std::int64_t by0 = 0;
    std::int64_t nbx = 0;
    std::vector<std::uint32_t> of_site;

    BlockIndex(const Region& r, std::int64_t n0)
        : bx0(floor_div(r.lo().x, n0)), by0(floor_div(r.lo().y, n0)),
          nbx(floor_div(r.hi().x, n0) - floor_div(r.lo().x, n0) + 1), of_site(r.site_count())
    {
        for (std::size_t v = 0; v < of_site.size(); ++v) {
            const Site s = r.site_at(v);
            of_site[v] = static_cast<std::uint32_t>((floor_div(s.x, n0) - bx0) + nbx * (floor_div(s.y, n0) - by0));
        }
    }
    Site cell(std::uint32_t id) const
    {
        return {bx0 + static_cast<std::int64_t>(id) % nbx, by0 + static_cast<std::int64_t>(id) / nbx};
    }
};

using BlockKeyMap = std::map<std::vector<std::uint32_t>, std::uint64_t>;

class Decomposer {
public:
    Decomposer(const MoveGrid& g, const BlockIndex& blocks, int n, std::size_t block_count)
        : g_(g), blocks_(blocks), n_(n), visited_(g.mask.size(), 0), hits_(block_count, 0)
    {
    }

    void mark(std::size_t v) { visited_[v] = 1; }

    void take_step(std::size_t v, int d)
    {
        const std::uint32_t b = blocks_.of_site[g_.edge_slot(v, d) / 2];
        if (hits_[b]++ == 0) {
            active_.push_back(b);
        }
    }
    void undo_step(std::size_t v, int d)
    {
        const std::uint32_t b = blocks_.of_site[g_.edge_slot(v, d) / 2];
        if (--hits_[b] == 0) {
            active_.pop_back();
        }
    }

    void rec(std::size_t v, int depth)
    {
        if (depth == n_) {
            key_.assign(active_.begin(), active_.end());
            std::sort(key_.begin(), key_.end());
            ++out[key_];
            return;
        }
        visited_[v] = 1;
        for (int d = 0; d < 4; ++d) {
            if (!((g_.mask[v] >> d) & 1u)) continue;
            const std::size_t w = g_.step(v, d);
            if (visited_[w]) continue;
            take_step(v, d);
            rec(w, depth + 1);
            undo_step(v, d);
        }
        visited_[v] = 0;
    }

    BlockKeyMap out;

private:
    const MoveGrid& g_;
    const BlockIndex& blocks_;
    int n_;
    std::vector<std::uint8_t> visited_;
    std::vector<std::uint32_t> hits_;
    std::vector<std::uint32_t> active_;
    std::vector<std::uint32_t> key_;
};

} // namespace

std::map<Animal, Count> decompose(const EdgeEnvironment& env, Site x, int n, std::int64_t n0)
{
    require_block_side(n0);
    if (n < 1) {
        throw PreconditionError("decompose needs n >= 1 (the animal of a zero-length path is undefined)");
    }
    if (n > kMaxSawLength) {
        throw ResourceError("decompose: n = " + std::to_string(n) + " exceeds the enumeration bound " +
                            std::to_string(kMaxSawLength));
    }
    const Region& region = env.region();
    if (!region.contains(Region::centered(x, n))) {
        throw RegionError("decompose: the n-ball around the start site is not inside the region");
    }
    const MoveGrid g = MoveGrid::open(env);
    const BlockIndex blocks(region, n0);
    const std::size_t block_count =
        static_cast<std::size_t>(blocks.nbx * (floor_div(region.hi().y, n0) - blocks.by0 + 1));
    const std::size_t start = g.index(x);

    // One task per first step; partial maps merge in step order.
    std::vector<BlockKeyMap> partial(4);
    parallel_for(4, [&](std::size_t d) {
        if (!((g.mask[start] >> d) & 1u)) return;
        Decomposer dec(g, blocks, n, block_count);
        dec.mark(start);
        dec.take_step(start, static_cast<int>(d));
        dec.rec(g.step(start, static_cast<int>(d)), 1);
        partial[d] = std::move(dec.out);
    });

    std::map<Animal, Count> out;
    for (const auto& part : partial) {
        for (const auto& [ids, count] : part) {
            std::vector<Site> cells;
            cells.reserve(ids.size());
            for (auto id : ids) {
                cells.push_back(blocks.cell(id));
            }
            out[Animal(std::move(cells), n0)] += Count(count);
        }
    }
    return out;
}

// ---------------------------------------------------------- enumeration

namespace {

// Redelmeier growth from the origin cell: each 4-connected set containing
// the root is produced exactly once.
template <class Leaf>
class AnimalGrower {
public:
    AnimalGrower(int m, Leaf leaf)
        : m_(m), region_(Region::centered(kOrigin, m)), grid_(MoveGrid::full(region_)),
          marked_(grid_.mask.size(), 0), cells_(static_cast<std::size_t>(m)),
          buffers_(static_cast<std::size_t>(m) + 1), leaf_(std::move(leaf))
    {
        sites_.resize(grid_.mask.size());
        for (std::size_t v = 0; v < sites_.size(); ++v) {
            sites_[v] = region_.site_at(v);
        }
    }

    void run()
    {
        const std::size_t root = grid_.index(kOrigin);
        marked_[root] = 1;
        cells_[0] = kOrigin;
        if (m_ == 1) {
            leaf_(std::span<const Site>(cells_.data(), 1));
            return;
        }
        buffers_[1].clear();
        add_neighbours(root, buffers_[1]);
        rec(1);
    }

private:
    void add_neighbours(std::size_t v, std::vector<std::size_t>& list)
    {
        for (int d = 0; d < 4; ++d) {
            const std::size_t w = grid_.step(v, d);
            if (!marked_[w]) {
                marked_[w] = 1;
                list.push_back(w);
            }
        }
    }

    void rec(int size)
    {
        const auto& untried = buffers_[static_cast<std::size_t>(size)];
        auto& next = buffers_[static_cast<std::size_t>(size) + 1];
        for (std::size_t i = 0; i < untried.size(); ++i) {
            const std::size_t v = untried[i];
            cells_[static_cast<std::size_t>(size)] = sites_[v];
            if (size + 1 == m_) {
                leaf_(std::span<const Site>(cells_.data(), cells_.size()));
                continue;
            }
            next.assign(untried.begin() + static_cast<std::ptrdiff_t>(i) + 1, untried.end());
            const std::size_t added_from = next.size();
            add_neighbours(v, next);
            rec(size + 1);
            for (std::size_t k = added_from; k < next.size(); ++k) {
                marked_[next[k]] = 0;
            }
        }
    }

    int m_;
    Region region_;
    MoveGrid grid_;
    std::vector<std::uint8_t> marked_;
    std::vector<Site> sites_;
    std::vector<Site> cells_;
    std::vector<std::vector<std::size_t>> buffers_;
    Leaf leaf_;
};

void require_animal_size(int m, int bound, const char* what)
{
    if (m < 1) {
        throw ParameterError(std::string(what) + ": m must be >= 1");
    }
    if (m > bound) {
        throw ResourceError(std::string(what) + ": m = " + std::to_string(m) + " exceeds the bound " +
                            std::to_string(bound) + "; a_m grows like 4.06^m");
    }
}

} // namespace

void for_each_animal(int m, const std::function<void(std::span<const Site>)>& visitor)
{
    require_animal_size(m, kMaxAnimalCountSize, "for_each_animal");
    AnimalGrower grower(m, [&](std::span<const Site> cells) { visitor(cells); });
    grower.run();
}

std::uint64_t count_animals(int m)
{
    require_animal_size(m, kMaxAnimalCountSize, "count_animals");
    std::uint64_t count = 0;
    AnimalGrower grower(m, [&](std::span<const Site>) { ++count; });
    grower.run();
    return count;
}

std::vector<Animal> enumerate_animals(int m, std::int64_t n0)
{
    require_animal_size(m, kMaxAnimalListSize, "enumerate_animals");
    require_block_side(n0);
    std::vector<Animal> out;
    AnimalGrower grower(m, [&](std::span<const Site> cells) {
        out.emplace_back(std::vector<Site>(cells.begin(), cells.end()), n0);
    });
    grower.run();
    std::sort(out.begin(), out.end());
    return out;
}

SeparatedSet extract_separated(const Animal& a)
{
    SeparatedSet out;
    out.n0 = a.n0();
    // Cells arrive in lexicographic order; a cell is available iff it is
    // at l_inf distance >= 3 from every earlier pick.
    for (const Site& c : a.cells()) {
        bool available = true;
        for (const Site& picked : out.cells) {
            if (linf_distance(c, picked) <= 2) {
                available = false;
                break;
            }
        }
        if (available) {
            out.cells.push_back(c);
        }
    }
    return out;
}

Animal grow_random_animal(int m, std::uint64_t seed, std::int64_t n0)
{
    if (m < 1) {
        throw ParameterError("grow_random_animal: m must be >= 1");
    }
    const CounterRng rng(derive_seed(seed, StreamTag::Animal, static_cast<std::uint64_t>(m)));
    std::set<Site> cells{kOrigin};
    std::set<Site> frontier_set;
    std::vector<Site> frontier;
    auto push_neighbours = [&](Site c) {
        for (int d = 0; d < 4; ++d) {
            const Site nb{c.x + kStepDx[d], c.y + kStepDy[d]};
            if (!cells.count(nb) && frontier_set.insert(nb).second) {
                frontier.push_back(nb);
            }
        }
    };
    push_neighbours(kOrigin);
    for (std::uint64_t step = 0; cells.size() < static_cast<std::size_t>(m); ++step) {
        const std::size_t k = static_cast<std::size_t>(rng.bits(step) % frontier.size());
        const Site c = frontier[k];
        frontier[k] = frontier.back();
        frontier.pop_back();
        frontier_set.erase(c);
        cells.insert(c);
        push_neighbours(c);
    }
    return Animal(std::vector<Site>(cells.begin(), cells.end()), n0);
}

// ----------------------------------------------------------------- I/O

std::string animal_to_line(const Animal& a)
{
    std::ostringstream os;
    bool first = true;
    for (const Site& c : a.cells()) {
        os << (first ? "" : " ") << '(' << c.x << ',' << c.y << ')';
        first = false;
    }
    return os.str();
}

Animal animal_from_line(const std::string& line, std::int64_t n0)
{
    std::vector<Site> cells;
    std::istringstream is(line);
    char open = 0;
    while (is >> open) {
        Site c;
        char comma = 0;
        char close = 0;
        if (open != '(' || !(is >> c.x >> comma >> c.y >> close) || comma != ',' || close != ')') {
            throw FormatError("malformed animal line '" + line + "'");
        }
        cells.push_back(c);
    }
    if (cells.empty()) {
        throw FormatError("empty animal line");
    }
    return Animal(std::move(cells), n0);
}

void write_animals(std::ostream& out, std::span<const Animal> animals)
{
    for (const Animal& a : animals) {
        out << animal_to_line(a) << '\n';
    }
}

std::vector<Animal> read_animals(std::istream& in, std::int64_t n0)
{
    std::vector<Animal> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        out.push_back(animal_from_line(line, n0));
    }
    return out;
}

std::vector<Edge> animal_edges(const Animal& a)
{
    std::vector<Edge> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto e = block_edges(a.block(i));
        out.insert(out.end(), e.begin(), e.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Site> animal_sites(const Animal& a)
{
    std::vector<Site> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Region r = block_site_region(a.block(i));
        for (std::size_t v = 0; v < r.site_count(); ++v) {
            out.push_back(r.site_at(v));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace sawperc
