// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "galora/tensor.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

namespace galora::num {

namespace {

std::size_t product(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

template <typename T>
void put_le(std::ostream& out, T value) {
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
    std::array<char, sizeof(T)> bytes;
    if (!in.read(bytes.data(), bytes.size())) {
        throw std::runtime_error("gtsr: truncated stream");
    }
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

constexpr std::array<char, 4> kMagic = {'G', 'T', 'S', 'R'};

}  // namespace

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(product(shape_), fill) {
    for (auto e : shape_) {
        if (e == 0) throw ShapeError("tensor: zero extent in shape " + shape_string(shape_));
    }
}

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill) : Tensor(Shape{rows, cols}, fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    for (auto e : shape_) {
        if (e == 0) throw ShapeError("tensor: zero extent in shape " + shape_string(shape_));
    }
    if (data_.size() != product(shape_)) {
        throw ShapeError("tensor: data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string(shape_));
    }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
    return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::row(std::span<const double> values) {
    return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::scalar(double value) { return Tensor({1, 1}, std::vector<double>{value}); }

std::size_t Tensor::rows() const noexcept {
    if (shape_.size() < 2) return shape_.empty() ? 0 : 1;
    return shape_[0];
}

std::size_t Tensor::cols() const noexcept { return shape_.empty() ? 0 : shape_.back(); }

void Tensor::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
    // x - x is 0 for finite x and NaN otherwise; the sum stays 0 only if every entry is finite.
    double acc = 0.0;
    for (double v : data_) acc += v - v;
    return acc == 0.0;
}

bool operator==(const Tensor& a, const Tensor& b) noexcept {
    if (a.shape_ != b.shape_) return false;
    return std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(double)) == 0;
}

Tensor transpose(const Tensor& a) {
    const std::size_t r = a.rows();
    const std::size_t c = a.cols();
    Tensor out(c, r);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) out(j, i) = a(i, j);
    }
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("max_abs_diff: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void expect_shape(const Tensor& t, std::size_t rows, std::size_t cols, std::string_view what) {
    if (t.rank() != 2 || t.rows() != rows || t.cols() != cols) {
        throw ShapeError(std::string(what) + ": expected " + shape_string({rows, cols}) + ", got " +
                         shape_string(t.shape()));
    }
}

void write_gtsr(std::ostream& out, const Tensor& t) {
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) put_le<std::uint64_t>(out, static_cast<std::uint64_t>(e));
    for (double v : t.values()) put_le<float>(out, static_cast<float>(v));
    if (!out) throw std::runtime_error("gtsr: write failed");
}

Tensor read_gtsr(std::istream& in) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
        throw std::runtime_error("gtsr: bad magic");
    }
    const auto rank = get_le<std::uint32_t>(in);
    if (rank == 0 || rank > 8) throw std::runtime_error("gtsr: unsupported rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& e : shape) e = static_cast<std::size_t>(get_le<std::uint64_t>(in));
    std::vector<double> data(product(shape));
    for (auto& v : data) v = static_cast<double>(get_le<float>(in));
    return Tensor(std::move(shape), std::move(data));
}

void save_gtsr(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("gtsr: cannot open " + path.string() + " for writing");
    write_gtsr(out, t);
}

Tensor load_gtsr(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("gtsr: cannot open " + path.string());
    return read_gtsr(in);
}

}  // namespace galora::num
