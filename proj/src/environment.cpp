#include "sawperc/environment.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "sawperc/error.hpp"
#include "sawperc/rng.hpp"

namespace sawperc {

namespace {

constexpr double kAbsentSlot = 2.0;

std::string hexfloat(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_real(const std::string& token)
{
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') {
        throw FormatError("malformed real '" + token + "'");
    }
    return v;
}

void expect_token(std::istream& in, const std::string& expected)
{
    std::string tok;
    if (!(in >> tok) || tok != expected) {
        throw FormatError("expected '" + expected + "', found '" + tok + "'");
    }
}

Region read_region(std::istream& in)
{
    expect_token(in, "region");
    std::int64_t a, b, c, d;
    if (!(in >> a >> b >> c >> d)) {
        throw FormatError("malformed region line");
    }
    return Region({a, b}, {c, d});
}

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }

    std::uint32_t find(std::uint32_t a)
    {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }
    void unite(std::uint32_t a, std::uint32_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b) {
            // Smaller index becomes the root: labels stay deterministic.
            if (b < a) std::swap(a, b);
            parent_[b] = a;
        }
    }

private:
    std::vector<std::uint32_t> parent_;
};

} // namespace

void require_probability(double p, const char* name)
{
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ParameterError(std::string(name) + " must lie in [0,1], got " + std::to_string(p));
    }
}

// --- CouplingField -------------------------------------------------------

CouplingField::CouplingField(Region region, std::uint64_t seed)
    : region_(region), seed_(seed), values_(region.edge_slot_count(), kAbsentSlot)
{
    const CounterRng rng(seed);
    region_.for_each_edge([&](const Edge& e) { values_[region_.edge_index(e)] = rng.uniform(edge_key(e)); });
}

double CouplingField::value(const Edge& e) const
{
    if (!region_.contains(e)) {
        throw RegionError("edge outside the coupling field's region");
    }
    return values_[region_.edge_index(e)];
}

CouplingField sample_coupling_field(const Region& region, std::uint64_t seed)
{
    return CouplingField(region, seed);
}

// --- EdgeEnvironment -----------------------------------------------------

EdgeEnvironment::EdgeEnvironment(Region region, double p, std::uint64_t seed)
    : region_(region), p_(p), seed_(seed), words_((region.edge_slot_count() + 63) / 64, 0)
{
}

EdgeEnvironment EdgeEnvironment::fully_open(Region region)
{
    EdgeEnvironment env(region, 1.0, 0);
    region.for_each_edge([&](const Edge& e) { env.set_slot(region.edge_index(e), true); });
    return env;
}

void EdgeEnvironment::set_open(const Edge& e, bool open)
{
    if (!region_.contains(e)) {
        throw RegionError("cannot set an edge outside the environment's region");
    }
    set_slot(region_.edge_index(e), open);
}

std::size_t EdgeEnvironment::open_count() const noexcept
{
    std::size_t n = 0;
    for (auto w : words_) {
        n += static_cast<std::size_t>(std::popcount(w));
    }
    return n;
}

std::vector<Edge> EdgeEnvironment::open_edges() const
{
    std::vector<Edge> out;
    region_.for_each_edge([&](const Edge& e) {
        if (slot_open(region_.edge_index(e))) out.push_back(e);
    });
    return out;
}

bool EdgeEnvironment::subset_of(const EdgeEnvironment& other) const
{
    if (!(region_ == other.region_)) {
        throw RegionError("subset_of requires environments on the same region");
    }
    for (std::size_t i = 0; i < words_.size(); ++i) {
        if ((words_[i] & ~other.words_[i]) != 0) return false;
    }
    return true;
}

EdgeEnvironment threshold(const CouplingField& field, double p)
{
    require_probability(p, "p");
    EdgeEnvironment env(field.region(), p, field.seed());
    const auto values = field.slots();
    for (std::size_t slot = 0; slot < values.size(); ++slot) {
        if (values[slot] <= p) {
            env.set_slot(slot, true);
        }
    }
    return env;
}

EdgeEnvironment sample_environment(const Region& region, double p, std::uint64_t seed)
{
    require_probability(p, "p");
    return threshold(sample_coupling_field(region, seed), p);
}

// --- clusters ------------------------------------------------------------

ClusterLabeling clusters(const EdgeEnvironment& env)
{
    const Region& region = env.region();
    DisjointSets sets(region.site_count());
    region.for_each_edge([&](const Edge& e) {
        if (env.slot_open(region.edge_index(e))) {
            sets.unite(static_cast<std::uint32_t>(region.site_index(e.anchor)),
                       static_cast<std::uint32_t>(region.site_index(e.head())));
        }
    });

    ClusterLabeling out{region, std::vector<std::uint32_t>(region.site_count()), {}, {}};
    std::vector<std::uint32_t> root_to_label(region.site_count(), UINT32_MAX);
    for (std::size_t i = 0; i < region.site_count(); ++i) {
        const std::uint32_t root = sets.find(static_cast<std::uint32_t>(i));
        if (root_to_label[root] == UINT32_MAX) {
            root_to_label[root] = static_cast<std::uint32_t>(out.size.size());
            out.size.push_back(0);
            out.touches_boundary.push_back(false);
        }
        const std::uint32_t label = root_to_label[root];
        out.label[i] = label;
        ++out.size[label];
        if (region.on_boundary(region.site_at(i))) {
            out.touches_boundary[label] = true;
        }
    }
    return out;
}

bool origin_in_giant(const EdgeEnvironment& env)
{
    if (!env.region().contains(kOrigin)) {
        throw RegionError("origin lies outside the environment's region");
    }
    const ClusterLabeling lab = clusters(env);
    return lab.touches_boundary[lab.cluster_of(kOrigin)];
}

// --- laws ----------------------------------------------------------------

DistributionSpec DistributionSpec::parse(const std::string& text)
{
    if (text == "gaussian" || text == "normal") return gaussian();
    if (text == "rademacher") return rademacher();
    const std::string prefix = "bernoulli:";
    if (text.rfind(prefix, 0) == 0) {
        auto law = centered_bernoulli(parse_real(text.substr(prefix.size())));
        law.validate();
        return law;
    }
    throw ParameterError("unsupported law '" + text + "' (gaussian|rademacher|bernoulli:<q>)");
}

std::string DistributionSpec::name() const
{
    switch (kind) {
    case Kind::Gaussian: return "gaussian";
    case Kind::Rademacher: return "rademacher";
    case Kind::CenteredBernoulli: {
        std::ostringstream os;
        os.precision(17);
        os << "bernoulli:" << q;
        return os.str();
    }
    }
    return "gaussian";
}

void DistributionSpec::validate() const
{
    if (kind == Kind::CenteredBernoulli && !(q > 0.0 && q < 1.0)) {
        throw ParameterError("centered Bernoulli law needs 0 < q < 1 (q = " + std::to_string(q) +
                             " is degenerate and cannot have unit variance)");
    }
}

double DistributionSpec::sample(std::uint64_t rng_seed, std::uint64_t c) const
{
    const CounterRng rng(rng_seed);
    switch (kind) {
    case Kind::Gaussian: return rng.normal(c);
    case Kind::Rademacher: return rng.uniform(c) < 0.5 ? -1.0 : 1.0;
    case Kind::CenteredBernoulli: {
        const double sigma = std::sqrt(q * (1.0 - q));
        return rng.uniform(c) < q ? (1.0 - q) / sigma : -q / sigma;
    }
    }
    return 0.0;
}

namespace {

// Tilted weight of the upper atom of a centered Bernoulli law.
struct BernoulliTilt {
    double hi, lo, weight_hi, lambda;
};

BernoulliTilt bernoulli_tilt(double q, double beta)
{
    const double sigma = std::sqrt(q * (1.0 - q));
    const double hi = (1.0 - q) / sigma;
    const double lo = -q / sigma;
    const double a = std::log(q) + beta * hi;
    const double b = std::log1p(-q) + beta * lo;
    const double m = std::max(a, b);
    const double lambda = m + std::log(std::exp(a - m) + std::exp(b - m));
    return {hi, lo, std::exp(a - lambda), lambda};
}

} // namespace

double log_mgf(const DistributionSpec& law, double beta)
{
    law.validate();
    switch (law.kind) {
    case DistributionSpec::Kind::Gaussian: return 0.5 * beta * beta;
    case DistributionSpec::Kind::Rademacher: {
        const double a = std::fabs(beta);
        // log cosh, overflow-safe
        return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
    }
    case DistributionSpec::Kind::CenteredBernoulli: return bernoulli_tilt(law.q, beta).lambda;
    }
    return 0.0;
}

double log_mgf_derivative(const DistributionSpec& law, double beta)
{
    law.validate();
    switch (law.kind) {
    case DistributionSpec::Kind::Gaussian: return beta;
    case DistributionSpec::Kind::Rademacher: return std::tanh(beta);
    case DistributionSpec::Kind::CenteredBernoulli: {
        const auto t = bernoulli_tilt(law.q, beta);
        return t.weight_hi * t.hi + (1.0 - t.weight_hi) * t.lo;
    }
    }
    return 0.0;
}

double log_mgf_second_derivative(const DistributionSpec& law, double beta)
{
    law.validate();
    switch (law.kind) {
    case DistributionSpec::Kind::Gaussian: return 1.0;
    case DistributionSpec::Kind::Rademacher: {
        const double t = std::tanh(beta);
        return 1.0 - t * t;
    }
    case DistributionSpec::Kind::CenteredBernoulli: {
        const auto t = bernoulli_tilt(law.q, beta);
        const double gap = t.hi - t.lo;
        return t.weight_hi * (1.0 - t.weight_hi) * gap * gap;
    }
    }
    return 0.0;
}

// --- SitePotential -------------------------------------------------------

SitePotential::SitePotential(Region region, DistributionSpec law, std::uint64_t seed, std::vector<double> values)
    : region_(region), law_(law), seed_(seed), values_(std::move(values))
{
    law_.validate();
    if (values_.size() != region_.site_count()) {
        throw FormatError("potential has " + std::to_string(values_.size()) + " values for " +
                          std::to_string(region_.site_count()) + " sites");
    }
}

double SitePotential::value(Site s) const
{
    if (!region_.contains(s)) {
        throw RegionError("site outside the potential's region");
    }
    return values_[region_.site_index(s)];
}

void SitePotential::set_value(Site s, double v)
{
    if (!region_.contains(s)) {
        throw RegionError("site outside the potential's region");
    }
    values_[region_.site_index(s)] = v;
}

SitePotential sample_potential(const Region& region, const DistributionSpec& law, std::uint64_t seed)
{
    law.validate();
    std::vector<double> values(region.site_count());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = law.sample(seed, site_key(region.site_at(i)));
    }
    return SitePotential(region, law, seed, std::move(values));
}

// --- dump / load ---------------------------------------------------------

void write_environment(std::ostream& out, const EdgeEnvironment& env)
{
    const Region& r = env.region();
    out << "sawperc-environment 1\n";
    out << "region " << r.lo().x << ' ' << r.lo().y << ' ' << r.hi().x << ' ' << r.hi().y << '\n';
    out << "p " << hexfloat(env.p()) << '\n';
    out << "seed " << env.seed() << '\n';
    const auto words = env.words();
    out << "words " << words.size() << '\n';
    char buf[24];
    for (std::size_t i = 0; i < words.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(words[i]));
        out << buf << ((i % 4 == 3 || i + 1 == words.size()) ? '\n' : ' ');
    }
    out << "end\n";
}

EdgeEnvironment read_environment(std::istream& in)
{
    expect_token(in, "sawperc-environment");
    expect_token(in, "1");
    const Region region = read_region(in);
    expect_token(in, "p");
    std::string tok;
    in >> tok;
    const double p = parse_real(tok);
    expect_token(in, "seed");
    std::uint64_t seed = 0;
    if (!(in >> seed)) throw FormatError("malformed seed");
    expect_token(in, "words");
    std::size_t count = 0;
    if (!(in >> count)) throw FormatError("malformed word count");
    EdgeEnvironment env(region, p, seed);
    if (count != env.words_.size()) {
        throw FormatError("word count does not match the region");
    }
    for (std::size_t i = 0; i < count; ++i) {
        if (!(in >> tok) || tok.size() != 16) throw FormatError("malformed occupancy word");
        env.words_[i] = std::strtoull(tok.c_str(), nullptr, 16);
    }
    expect_token(in, "end");
    // Bits outside the region's edge set must be clear.
    for (std::size_t slot = 0; slot < region.edge_slot_count(); ++slot) {
        if (env.slot_open(slot) && !region.contains(region.edge_at(slot))) {
            throw FormatError("occupancy bit set for an edge outside the region");
        }
    }
    if (env.words_.size() * 64 > region.edge_slot_count()) {
        const std::size_t tail = region.edge_slot_count() % 64;
        if (tail != 0 && (env.words_.back() >> tail) != 0) {
            throw FormatError("padding bits set in the last occupancy word");
        }
    }
    return env;
}

void write_potential(std::ostream& out, const SitePotential& pot)
{
    const Region& r = pot.region();
    out << "sawperc-potential 1\n";
    out << "region " << r.lo().x << ' ' << r.lo().y << ' ' << r.hi().x << ' ' << r.hi().y << '\n';
    out << "law " << pot.law().name() << '\n';
    out << "q " << hexfloat(pot.law().q) << '\n';
    out << "seed " << pot.seed() << '\n';
    out << "values " << pot.values().size() << '\n';
    for (double v : pot.values()) {
        out << hexfloat(v) << '\n';
    }
    out << "end\n";
}

SitePotential read_potential(std::istream& in)
{
    expect_token(in, "sawperc-potential");
    expect_token(in, "1");
    const Region region = read_region(in);
    expect_token(in, "law");
    std::string tok;
    in >> tok;
    DistributionSpec law;
    if (tok.rfind("bernoulli:", 0) == 0) {
        law.kind = DistributionSpec::Kind::CenteredBernoulli;
    } else {
        law = DistributionSpec::parse(tok);
    }
    expect_token(in, "q");
    in >> tok;
    law.q = parse_real(tok);
    expect_token(in, "seed");
    std::uint64_t seed = 0;
    if (!(in >> seed)) throw FormatError("malformed seed");
    expect_token(in, "values");
    std::size_t count = 0;
    if (!(in >> count)) throw FormatError("malformed value count");
    std::vector<double> values(count);
    for (auto& v : values) {
        if (!(in >> tok)) throw FormatError("truncated potential values");
        v = parse_real(tok);
    }
    expect_token(in, "end");
    return SitePotential(region, law, seed, std::move(values));
}

} // namespace sawperc
