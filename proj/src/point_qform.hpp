#pragma once

// Quadratic form scale * sum_{i != j} v_i v_j / |x_i - x_j| over a fixed
// point set, with a dense kernel matrix so batches reduce to one GEMM.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sawperc::detail {

class PointQuadraticForm {
public:
    PointQuadraticForm(std::span<const double> xs, std::span<const double> ys, double scale);

    std::size_t size() const noexcept { return static_cast<std::size_t>(w_.rows()); }
    double scale() const noexcept { return scale_; }

    double evaluate(std::span<const double> v) const;

    /// Columns of `values` are samples; writes one form value per column.
    void evaluate_batch(const Eigen::MatrixXd& values, std::span<double> out) const;

    /// sum_{i != j} |x_i - x_j|^{-2}.
    double sum_inverse_square() const;
    /// W v: per point, sum_{j != i} v_j / |x_i - x_j|.
    Eigen::VectorXd apply(std::span<const double> v) const;
    const Eigen::MatrixXd& kernel() const noexcept { return w_; }

private:
    Eigen::MatrixXd w_;
    double scale_;
};

/// Samples are evaluated in fixed batches of this size, so every value is
/// independent of the thread count.
inline constexpr std::size_t kQFormBatch = 256;

} // namespace sawperc::detail
