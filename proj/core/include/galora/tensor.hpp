// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace galora::num {

/// Raised when operand shapes are incompatible. The message names the op and both shapes.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a NaN or Inf reaches an op boundary.
class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/**
 * Dense row-major tensor of doubles.
 *
 * Every op in this library works on rank-2 tensors (vectors are 1 x n rows);
 * higher ranks exist only so the on-disk format can describe them.
 */
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);
    static Tensor row(std::span<const double> values);
    static Tensor scalar(double value);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    /// Leading extent for rank 2, 1 for rank 1.
    std::size_t rows() const noexcept;
    /// Trailing extent.
    std::size_t cols() const noexcept;

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }

    std::span<double> row_span(std::size_t r) noexcept { return {data_.data() + r * cols(), cols()}; }
    std::span<const double> row_span(std::size_t r) const noexcept {
        return {data_.data() + r * cols(), cols()};
    }

    void fill(double value) noexcept;
    bool all_finite() const noexcept;
    bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }

    /// Bitwise equality of shape and data.
    friend bool operator==(const Tensor& a, const Tensor& b) noexcept;

private:
    Shape shape_;
    std::vector<double> data_;
};

Tensor transpose(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);

/// Throws ShapeError unless `t` is rank 2 with the given extents.
void expect_shape(const Tensor& t, std::size_t rows, std::size_t cols, std::string_view what);

// GTSR: "GTSR" magic, u32 rank, u64 extents, float32 payload, all little-endian.
void write_gtsr(std::ostream& out, const Tensor& t);
Tensor read_gtsr(std::istream& in);
void save_gtsr(const std::filesystem::path& path, const Tensor& t);
Tensor load_gtsr(const std::filesystem::path& path);

}  // namespace galora::num
