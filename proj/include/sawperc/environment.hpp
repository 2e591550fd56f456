#pragma once

// Random environments on a finite window of Z^2: the uniform coupling
// field, Bernoulli bond percolation, IID site potentials, and cluster
// labelling.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sawperc/lattice.hpp"

namespace sawperc {

/// Per-edge uniforms X(e) in (0,1). Thresholding at p yields bond
/// percolation with parameter p, monotonically coupled across p.
class CouplingField {
public:
    CouplingField(Region region, std::uint64_t seed);

    const Region& region() const noexcept { return region_; }
    std::uint64_t seed() const noexcept { return seed_; }
    /// Throws RegionError for edges outside the region.
    double value(const Edge& e) const;
    /// Slot-indexed values; slots of absent edges hold 2.0.
    std::span<const double> slots() const noexcept { return values_; }

private:
    Region region_;
    std::uint64_t seed_;
    std::vector<double> values_;
};

/// Bit-packed edge occupancy over a region. Edges outside the region are
/// closed.
class EdgeEnvironment {
public:
    explicit EdgeEnvironment(Region region, double p = 0.0, std::uint64_t seed = 0);

    static EdgeEnvironment fully_open(Region region);

    const Region& region() const noexcept { return region_; }
    double p() const noexcept { return p_; }
    std::uint64_t seed() const noexcept { return seed_; }

    bool is_open(const Edge& e) const noexcept
    {
        if (!region_.contains(e)) {
            return false;
        }
        const std::size_t slot = region_.edge_index(e);
        return (words_[slot >> 6] >> (slot & 63)) & 1u;
    }
    bool slot_open(std::size_t slot) const noexcept { return (words_[slot >> 6] >> (slot & 63)) & 1u; }

    /// Throws RegionError for edges outside the region.
    void set_open(const Edge& e, bool open);

    bool covers(const Edge& e) const noexcept { return region_.contains(e); }
    std::size_t open_count() const noexcept;
    std::vector<Edge> open_edges() const;
    /// Open set of *this is a subset of the open set of other (same region).
    bool subset_of(const EdgeEnvironment& other) const;

    std::span<const std::uint64_t> words() const noexcept { return words_; }
    void set_metadata(double p, std::uint64_t seed) noexcept
    {
        p_ = p;
        seed_ = seed;
    }

    friend bool operator==(const EdgeEnvironment& a, const EdgeEnvironment& b)
    {
        return a.region_ == b.region_ && a.p_ == b.p_ && a.seed_ == b.seed_ && a.words_ == b.words_;
    }

private:
    friend EdgeEnvironment read_environment(std::istream& in);
    void set_slot(std::size_t slot, bool open) noexcept
    {
        const std::uint64_t bit = std::uint64_t{1} << (slot & 63);
        words_[slot >> 6] = open ? (words_[slot >> 6] | bit) : (words_[slot >> 6] & ~bit);
    }
    friend EdgeEnvironment threshold(const CouplingField& field, double p);

    Region region_;
    double p_;
    std::uint64_t seed_;
    std::vector<std::uint64_t> words_;
};

/// Standardized site laws (zero mean, unit variance).
struct DistributionSpec {
    enum class Kind { Gaussian, Rademacher, CenteredBernoulli };

    Kind kind = Kind::Gaussian;
    /// Success probability of the underlying Bernoulli (CenteredBernoulli only).
    double q = 0.5;

    static DistributionSpec gaussian() { return {Kind::Gaussian, 0.5}; }
    static DistributionSpec rademacher() { return {Kind::Rademacher, 0.5}; }
    static DistributionSpec centered_bernoulli(double q) { return {Kind::CenteredBernoulli, q}; }

    /// "gaussian", "rademacher", or "bernoulli:<q>".
    static DistributionSpec parse(const std::string& text);
    std::string name() const;

    /// Throws ParameterError when the law is degenerate or malformed.
    void validate() const;

    /// Draws one value from counter `c` of the stream `rng_seed`.
    double sample(std::uint64_t rng_seed, std::uint64_t c) const;

    bool operator==(const DistributionSpec&) const = default;
};

/// lambda(beta) = log E[exp(beta * omega)], closed form per law.
double log_mgf(const DistributionSpec& law, double beta);
/// First and second derivatives of lambda.
double log_mgf_derivative(const DistributionSpec& law, double beta);
double log_mgf_second_derivative(const DistributionSpec& law, double beta);

class SitePotential {
public:
    SitePotential(Region region, DistributionSpec law, std::uint64_t seed, std::vector<double> values);

    const Region& region() const noexcept { return region_; }
    const DistributionSpec& law() const noexcept { return law_; }
    std::uint64_t seed() const noexcept { return seed_; }
    /// Throws RegionError outside the region.
    double value(Site s) const;
    std::span<const double> values() const noexcept { return values_; }
    void set_value(Site s, double v);

    bool operator==(const SitePotential&) const = default;

private:
    Region region_;
    DistributionSpec law_;
    std::uint64_t seed_;
    std::vector<double> values_;
};

struct ClusterLabeling {
    Region region;
    /// Cluster id per site (site_index order); ids are 0.. in order of first appearance.
    std::vector<std::uint32_t> label;
    std::vector<std::size_t> size;
    std::vector<bool> touches_boundary;

    std::uint32_t cluster_of(Site s) const { return label.at(region.site_index(s)); }
    std::size_t cluster_count() const noexcept { return size.size(); }
};

CouplingField sample_coupling_field(const Region& region, std::uint64_t seed);
/// open(e) iff X(e) <= p.
EdgeEnvironment threshold(const CouplingField& field, double p);
/// Equal to threshold(sample_coupling_field(region, seed), p).
EdgeEnvironment sample_environment(const Region& region, double p, std::uint64_t seed);

ClusterLabeling clusters(const EdgeEnvironment& env);
/// Finite-window proxy for "origin in the infinite cluster": the origin's
/// open cluster reaches the region boundary.
bool origin_in_giant(const EdgeEnvironment& env);

SitePotential sample_potential(const Region& region, const DistributionSpec& law, std::uint64_t seed);

/// Text dump with exact (hexfloat) reals and hex-packed occupancy words.
void write_environment(std::ostream& out, const EdgeEnvironment& env);
EdgeEnvironment read_environment(std::istream& in);
void write_potential(std::ostream& out, const SitePotential& pot);
SitePotential read_potential(std::istream& in);

void require_probability(double p, const char* name);

} // namespace sawperc
