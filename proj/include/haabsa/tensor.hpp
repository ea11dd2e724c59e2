#ifndef HAABSA_TENSOR_HPP
#define HAABSA_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "haabsa/errors.hpp"

namespace haabsa {

using Rng = std::mt19937_64;

/// Dense rank-1 or rank-2 array of doubles, stored row-major.
///
/// A rank-1 tensor of length n reports rows() == n and cols() == 1, so
/// matrix-vector code can treat vectors as column matrices.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::size_t n) : rows_(n), cols_(1), rank_(1), data_(n, 0.0) {
        check_dims();
    }

    Tensor(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), rank_(2), data_(rows * cols, 0.0) {
        check_dims();
    }

    static Tensor vector(std::initializer_list<double> values) {
        Tensor t(values.size());
        std::copy(values.begin(), values.end(), t.data_.begin());
        return t;
    }

    static Tensor vector(std::vector<double> values) {
        Tensor t;
        t.rows_ = values.size();
        t.cols_ = 1;
        t.rank_ = 1;
        t.data_ = std::move(values);
        t.check_dims();
        return t;
    }

    static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
        Tensor t(rows, cols);
        if (values.size() != t.size())
            throw DimensionError("matrix literal has " + std::to_string(values.size()) +
                                 " values, shape " + t.shape_string() + " needs " +
                                 std::to_string(t.size()));
        std::copy(values.begin(), values.end(), t.data_.begin());
        return t;
    }

    static Tensor zeros_like(const Tensor& other) {
        Tensor t = other;
        std::fill(t.data_.begin(), t.data_.end(), 0.0);
        return t;
    }

    static Tensor uniform(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
        Tensor t(rows, cols);
        t.fill_uniform(bound, rng);
        return t;
    }

    void fill_uniform(double bound, Rng& rng) {
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& x : data_)
            x = dist(rng);
    }

    std::size_t rank() const noexcept { return rank_; }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    bool is_vector() const noexcept { return rank_ == 1; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    bool same_shape(const Tensor& other) const noexcept {
        return rank_ == other.rank_ && rows_ == other.rows_ && cols_ == other.cols_;
    }

    std::string shape_string() const {
        if (rank_ == 1)
            return "[" + std::to_string(rows_) + "]";
        return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
    }

    Tensor& operator+=(const Tensor& other) {
        require_same_shape(*this, other, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i)
            data_[i] += other.data_[i];
        return *this;
    }

    Tensor& operator*=(double s) {
        for (double& x : data_)
            x *= s;
        return *this;
    }

    void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

    friend bool operator==(const Tensor&, const Tensor&) = default;

    static void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
        if (!a.same_shape(b))
            throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                                 b.shape_string());
    }

private:
    void check_dims() const {
        if (rank_ == 2 && (rows_ == 0 || cols_ == 0))
            throw DimensionError("matrix dimensions must be positive, got " + shape_string());
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 1;
    std::size_t rank_ = 1;
    std::vector<double> data_;
};

// Plain forward kernels. The taped versions in autodiff.hpp delegate here.

inline Tensor matvec(const Tensor& m, const Tensor& v) {
    if (m.rank() != 2 || !v.is_vector() || m.cols() != v.size())
        throw DimensionError("matvec: cannot multiply " + m.shape_string() + " by " + v.shape_string());
    Tensor out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c)
            acc += m(r, c) * v[c];
        out[r] = acc;
    }
    return out;
}

inline Tensor tanh_map(const Tensor& v) {
    Tensor out = v;
    for (double& x : out.values())
        x = std::tanh(x);
    return out;
}

inline double sigmoid(double x) {
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline Tensor sigmoid_map(const Tensor& v) {
    Tensor out = v;
    for (double& x : out.values())
        x = sigmoid(x);
    return out;
}

inline Tensor softmax(const Tensor& v) {
    if (v.size() == 0)
        throw DimensionError("softmax: empty input");
    const double peak = *std::max_element(v.values().begin(), v.values().end());
    Tensor out(v.size());
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - peak);
        total += out[i];
    }
    for (double& x : out.values())
        x /= total;
    return out;
}

inline Tensor mean_pool(std::span<const Tensor> rows) {
    if (rows.empty())
        throw EmptyTargetError("mean_pool: empty sequence");
    Tensor out = Tensor::zeros_like(rows.front());
    for (const Tensor& row : rows)
        out += row;
    out *= 1.0 / static_cast<double>(rows.size());
    return out;
}

inline Tensor concat(std::span<const Tensor> parts) {
    if (parts.empty())
        throw DimensionError("concat: no parts");
    std::vector<double> joined;
    for (const Tensor& p : parts)
        joined.insert(joined.end(), p.values().begin(), p.values().end());
    return Tensor::vector(std::move(joined));
}

inline double dot(const Tensor& a, const Tensor& b) {
    if (a.size() != b.size())
        throw DimensionError("dot: size mismatch " + a.shape_string() + " vs " + b.shape_string());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += a[i] * b[i];
    return acc;
}

inline double squared_norm(const Tensor& t) { return dot(t, t); }

/// Index of the largest entry; ties resolve to the lowest index.
inline std::size_t argmax(const Tensor& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best])
            best = i;
    return best;
}

} // namespace haabsa

#endif
