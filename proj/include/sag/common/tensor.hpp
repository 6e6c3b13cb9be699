#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sag {

/// Dense row-major matrix. Parameters are stored as float, gradients and
/// optimizer state as double; both share this layout.
template <class T>
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

    T* row(std::size_t i) { return data.data() + i * cols; }
    const T* row(std::size_t i) const { return data.data() + i * cols; }
    T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    std::size_t size() const { return data.size(); }
    std::span<T> span() { return data; }
    std::span<const T> span() const { return data; }

    friend bool operator==(const Mat&, const Mat&) = default;
};

using MatF = Mat<float>;
using MatD = Mat<double>;

/// y[t, :] = W x[t, :] for t < n_rows, W stored (out x in).
template <class W>
void linear_forward(const double* x, std::size_t n_rows, const Mat<W>& w, double* y) {
    const std::size_t in = w.cols, out = w.rows;
    for (std::size_t t = 0; t < n_rows; ++t) {
        const double* xr = x + t * in;
        double* yr = y + t * out;
        for (std::size_t o = 0; o < out; ++o) {
            const W* wr = w.row(o);
            double acc = 0.0;
            for (std::size_t i = 0; i < in; ++i) acc += static_cast<double>(wr[i]) * xr[i];
            yr[o] = acc;
        }
    }
}

/// Accumulates dW += dy^T x and dx += dy W. Pass dx = nullptr to skip it.
template <class W>
void linear_backward(const double* x, const double* dy, std::size_t n_rows, const Mat<W>& w,
                     MatD& dw, double* dx) {
    const std::size_t in = w.cols, out = w.rows;
    for (std::size_t t = 0; t < n_rows; ++t) {
        const double* xr = x + t * in;
        const double* dyr = dy + t * out;
        double* dxr = dx ? dx + t * in : nullptr;
        for (std::size_t o = 0; o < out; ++o) {
            const double g = dyr[o];
            if (g == 0.0) continue;
            double* dwr = dw.row(o);
            const W* wr = w.row(o);
            for (std::size_t i = 0; i < in; ++i) dwr[i] += g * xr[i];
            if (dxr) {
                for (std::size_t i = 0; i < in; ++i) dxr[i] += g * static_cast<double>(wr[i]);
            }
        }
    }
}

}  // namespace sag
