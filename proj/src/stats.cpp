#include "sawperc/stats.hpp"

#include <algorithm>

#include "sawperc/error.hpp"
#include "sawperc/parallel.hpp"

namespace sawperc {

std::string to_string(Conditioning c)
{
    switch (c) {
    case Conditioning::None: return "none";
    case Conditioning::PositiveZ: return "positive_Z";
    case Conditioning::OriginInGiant: return "origin_in_giant";
    }
    return "none";
}

Conditioning conditioning_from_string(const std::string& s)
{
    if (s == "none") return Conditioning::None;
    if (s == "positive_Z" || s == "positive_z") return Conditioning::PositiveZ;
    if (s == "origin_in_giant") return Conditioning::OriginInGiant;
    throw ParameterError("unknown conditioning rule '" + s + "' (none|positive_Z|origin_in_giant)");
}

void Moments::merge(const Moments& o) noexcept
{
    if (o.n_ == 0) {
        return;
    }
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(o.n_);
    const double n = na + nb;
    const double delta = o.mean_ - mean_;
    mean_ += delta * nb / n;
    m2_ += o.m2_ + delta * delta * na * nb / n;
    n_ += o.n_;
}

std::vector<Moments> mc_moments(std::size_t n, std::size_t dim,
                                const std::function<void(std::size_t, std::span<double>)>& fn)
{
    const std::size_t chunks = (n + kReductionChunk - 1) / kReductionChunk;
    std::vector<std::vector<Moments>> partial(chunks, std::vector<Moments>(dim));
    parallel_for(chunks, [&](std::size_t c) {
        std::vector<double> out(dim);
        const std::size_t begin = c * kReductionChunk;
        const std::size_t end = std::min(n, begin + kReductionChunk);
        for (std::size_t i = begin; i < end; ++i) {
            std::fill(out.begin(), out.end(), 0.0);
            fn(i, out);
            for (std::size_t d = 0; d < dim; ++d) {
                partial[c][d].add(out[d]);
            }
        }
    });
    std::vector<Moments> total(dim);
    for (const auto& chunk : partial) {
        for (std::size_t d = 0; d < dim; ++d) {
            total[d].merge(chunk[d]);
        }
    }
    return total;
}

Moments mc_moments(std::size_t n, const std::function<double(std::size_t)>& fn)
{
    return mc_moments(n, 1, [&](std::size_t i, std::span<double> out) { out[0] = fn(i); })[0];
}

std::vector<double> mc_collect(std::size_t n, const std::function<double(std::size_t)>& fn)
{
    std::vector<double> out(n);
    const std::size_t chunks = (n + kReductionChunk - 1) / kReductionChunk;
    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t begin = c * kReductionChunk;
        const std::size_t end = std::min(n, begin + kReductionChunk);
        for (std::size_t i = begin; i < end; ++i) {
            out[i] = fn(i);
        }
    });
    return out;
}

EstimateWithCI mean_estimate(std::span<const double> values)
{
    Moments m;
    for (double v : values) {
        m.add(v);
    }
    return m.estimate();
}

EstimateWithCI variance_estimate(std::span<const double> values)
{
    const std::size_t n = values.size();
    if (n < 4) {
        throw ParameterError("variance_estimate needs at least 4 samples");
    }
    CompensatedSum s1;
    for (double v : values) {
        s1.add(v);
    }
    const double mean = s1.value() / static_cast<double>(n);
    CompensatedSum s2;
    CompensatedSum s4;
    for (double v : values) {
        const double d = v - mean;
        s2.add(d * d);
        s4.add(d * d * d * d);
    }
    const double nn = static_cast<double>(n);
    const double m2 = s2.value() / nn;
    const double m4 = s4.value() / nn;
    EstimateWithCI out;
    out.mean = s2.value() / (nn - 1.0);
    out.std_error = std::sqrt(std::max(0.0, m4 - m2 * m2) / nn);
    out.n_samples = n;
    return out;
}

} // namespace sawperc
