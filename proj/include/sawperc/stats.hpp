#pragma once

// Monte Carlo reductions with results that are bit-identical for any
// thread count: samples are grouped in fixed-size chunks, each chunk is
// accumulated sequentially, and chunks are merged in index order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sawperc {

enum class Conditioning { None, PositiveZ, OriginInGiant };

std::string to_string(Conditioning c);
Conditioning conditioning_from_string(const std::string& s);

struct EstimateWithCI {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
    Conditioning conditioning = Conditioning::None;

    /// |mean - target| <= k * std_error (with a zero-variance fallback).
    bool within(double target, double k = 3.0) const noexcept
    {
        const double tol = k * std_error + 1e-12 * std::max(1.0, std::fabs(target));
        return std::fabs(mean - target) <= tol;
    }
};

/// Welford accumulator with Chan's pairwise merge.
class Moments {
public:
    void add(double x) noexcept
    {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }
    void merge(const Moments& o) noexcept;

    std::size_t count() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    /// Unbiased sample variance.
    double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double std_error() const noexcept
    {
        return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }
    EstimateWithCI estimate(Conditioning c = Conditioning::None) const noexcept
    {
        return {mean(), std_error(), n_, c};
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

inline constexpr std::size_t kReductionChunk = 4096;

/// Runs fn(i, out) for i in [0, n); out has `dim` slots. Returns one
/// Moments per slot.
std::vector<Moments> mc_moments(std::size_t n, std::size_t dim,
                                const std::function<void(std::size_t, std::span<double>)>& fn);

/// Scalar convenience form.
Moments mc_moments(std::size_t n, const std::function<double(std::size_t)>& fn);

/// Materializes fn(i) for i in [0, n), in index order.
std::vector<double> mc_collect(std::size_t n, const std::function<double(std::size_t)>& fn);

/// Sample variance of `values` with its standard error
/// (sqrt((m4 - m2^2) / n), central moments).
EstimateWithCI variance_estimate(std::span<const double> values);

/// Sample mean of `values`.
EstimateWithCI mean_estimate(std::span<const double> values);

/// Neumaier-compensated sum.
class CompensatedSum {
public:
    void add(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x)) {
            c_ += (sum_ - t) + x;
        } else {
            c_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const noexcept { return sum_ + c_; }

private:
    double sum_ = 0.0;
    double c_ = 0.0;
};

} // namespace sawperc
