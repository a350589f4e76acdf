#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

namespace tribo::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

/// Dense row-major n-d array used at the model boundary.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<double> d);
    explicit Tensor(std::vector<std::size_t> s);

    std::size_t numel() const noexcept;
    /// Throws ShapeError unless product(shape) == data.size() and all values are finite.
    void validate() const;
};

/// A batch of sequences flattened to (batch * steps) x channels, sample-major:
/// row b * steps + t holds timestep t of sample b.
struct Activation {
    Matrix values;
    std::size_t batch = 0;
    std::size_t steps = 0;

    std::size_t channels() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

}  // namespace tribo::nn
