#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "cobrnn/errors.hpp"

namespace cobrnn {

/// Dense row-major matrix. Value-semantic, no views, no surprises.
template <class T>
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Mat(std::size_t rows, std::size_t cols, std::initializer_list<T> values)
        : rows_(rows), cols_(cols), data_(values) {
        if (data_.size() != rows * cols)
            throw UsageError("Mat initializer size does not match rows*cols");
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    const T* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }
    T* row_ptr(std::size_t r) { return data_.data() + r * cols_; }

    bool operator==(const Mat& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using Matd = Mat<double>;
using Matf = Mat<float>;

template <class T>
bool all_finite(const Mat<T>& m) {
    for (const T& v : m.data())
        if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
}

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace cobrnn
