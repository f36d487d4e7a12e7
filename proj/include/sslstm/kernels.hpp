#pragma once

#include <cstddef>
#include <span>

// Dense row-major kernels behind the autodiff primitives. The default entry
// points are OpenMP-parallel over output rows; `reference` holds plain serial
// loops kept for testing. Both accumulate every output element over the
// reduction index in the same ascending order, so they agree bit-for-bit and
// a column's result never depends on how many other columns are computed.
namespace sslstm::kernels {

enum class Trans { No, Yes };

/// C (m x n) = op(A) * op(B), or C += ... when `accumulate`.
/// op(A) is m x k, op(B) is k x n; A/B are stored row-major in their
/// untransposed shapes.
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate = false);

/// Same-padding 1-D convolution. input: c_in x T, filters: c_out x c_in x w,
/// output: c_out x T, out[o][t] = sum_{c,j} f[o][c][j] * in[c][t + j - (w-1)/2].
void conv1d_forward(std::span<const double> input, std::span<const double> filters, std::span<double> output,
                    std::size_t c_in, std::size_t c_out, std::size_t width, std::size_t length);

/// Accumulates d(input) and d(filters) given d(output). Either target may be empty to skip it.
void conv1d_backward(std::span<const double> input, std::span<const double> filters,
                     std::span<const double> d_output, std::span<double> d_input, std::span<double> d_filters,
                     std::size_t c_in, std::size_t c_out, std::size_t width, std::size_t length);

/// Column-unfolding used by the parallel convolution: cols is (c_in*w) x T.
void im2col(std::span<const double> input, std::span<double> cols, std::size_t c_in, std::size_t width,
            std::size_t length);
void col2im_add(std::span<const double> cols, std::span<double> input, std::size_t c_in, std::size_t width,
                std::size_t length);

namespace reference {

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate = false);

void conv1d_forward(std::span<const double> input, std::span<const double> filters, std::span<double> output,
                    std::size_t c_in, std::size_t c_out, std::size_t width, std::size_t length);

void conv1d_backward(std::span<const double> input, std::span<const double> filters,
                     std::span<const double> d_output, std::span<double> d_input, std::span<double> d_filters,
                     std::size_t c_in, std::size_t c_out, std::size_t width, std::size_t length);

} // namespace reference

/// Work threshold (multiply-adds) below which the parallel kernels stay serial.
inline constexpr std::size_t kParallelThreshold = 1u << 15;

} // namespace sslstm::kernels
