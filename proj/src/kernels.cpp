#include "sslstm/kernels.hpp"

#include <cassert>
#include <stdexcept>
#include <vector>

namespace sslstm::kernels {

namespace {

void check_sizes(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
                 std::span<double> c)
{
    if (a.size() != m * k || b.size() != k * n || c.size() != m * n) {
        throw std::invalid_argument("gemm: buffer sizes do not match m, n, k");
    }
}

// One output row: c_row[j] (+)= sum_p opA(i,p) * opB(p,j), p ascending.
inline void gemm_row(Trans ta, Trans tb, std::size_t i, std::size_t m, std::size_t n, std::size_t k,
                     const double* a, const double* b, double* c_row, bool accumulate)
{
    if (!accumulate) {
        for (std::size_t j = 0; j < n; ++j) c_row[j] = 0.0;
    }
    if (tb == Trans::No) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = (ta == Trans::No) ? a[i * k + p] : a[p * m + i];
            const double* b_row = b + p * n;
            for (std::size_t j = 0; j < n; ++j) c_row[j] += aip * b_row[j];
        }
    } else {
        // op(B)(p, j) = B(j, p); B stored n x k.
        for (std::size_t j = 0; j < n; ++j) {
            const double* b_row = b + j * k;
            double acc = c_row[j];
            for (std::size_t p = 0; p < k; ++p) {
                const double aip = (ta == Trans::No) ? a[i * k + p] : a[p * m + i];
                acc += aip * b_row[p];
            }
            c_row[j] = acc;
        }
    }
}

} // namespace

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate)
{
    check_sizes(m, n, k, a, b, c);
    const auto rows = static_cast<std::ptrdiff_t>(m);
    const bool parallel = m * n * k >= kParallelThreshold && m > 1;
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        const auto r = static_cast<std::size_t>(i);
        gemm_row(ta, tb, r, m, n, k, a.data(), b.data(), c.data() + r * n, accumulate);
    }
}

void im2col(std::span<const double> input, std::span<double> cols, std::size_t c_in, std::size_t width,
            std::size_t length)
{
    const std::size_t left = (width - 1) / 2;
    for (std::size_t c = 0; c < c_in; ++c) {
        for (std::size_t j = 0; j < width; ++j) {
            double* row = cols.data() + (c * width + j) * length;
            for (std::size_t t = 0; t < length; ++t) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + j) - static_cast<std::ptrdiff_t>(left);
                row[t] = (src >= 0 && src < static_cast<std::ptrdiff_t>(length))
                    ? input[c * length + static_cast<std::size_t>(src)]
                    : 0.0;
            }
        }
    }
}

void col2im_add(std::span<const double> cols, std::span<double> input, std::size_t c_in, std::size_t width,
                std::size_t length)
{
    const std::size_t left = (width - 1) / 2;
    for (std::size_t c = 0; c < c_in; ++c) {
        for (std::size_t j = 0; j < width; ++j) {
            const double* row = cols.data() + (c * width + j) * length;
            for (std::size_t t = 0; t < length; ++t) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + j) - static_cast<std::ptrdiff_t>(left);
                if (src >= 0 && src < static_cast<std::ptrdiff_t>(length)) {
                    input[c * length + static_cast<std::size_t>(src)] += row[t];
                }
            }
        }
    }
}

void conv1d_forward(std::span<const double> input, std::span<const double> filters, std::span<double> output,
                    std::size_t c_in, std::size_t c_out, std::size_t width, std::size_t length)
{
    std::vector<double> cols(c_in * width * length);
    im2col(input, cols, c_in, width, length);
    // filters viewed as c_out x (c_in*w); row index c*w + j matches im2col.
    gemm(Trans::No, Trans::No, c_out, length, c_in * width, filters, cols, output);
}

void conv1d_backward(std::span<const double> input, std::span<const double> filters,
                     std::span<const double> d_output, std::span<double> d_input, std::span<double> d_filters,
                     std::size_t c_in, std::size_t c_out, std::size_t width, std::size_t length)
{
    const std::size_t rows = c_in * width;
    if (!d_filters.empty()) {
        std::vector<double> cols(rows * length);
        im2col(input, cols, c_in, width, length);
        gemm(Trans::No, Trans::Yes, c_out, rows, length, d_output, cols, d_filters, true);
    }
    if (!d_input.empty()) {
        std::vector<double> d_cols(rows * length);
        gemm(Trans::Yes, Trans::No, rows, length, c_out, filters, d_output, d_cols);
        col2im_add(d_cols, d_input, c_in, width, length);
    }
}

namespace reference {

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
          std::span<const double> b, std::span<double> c, bool accumulate)
{
    check_sizes(m, n, k, a, b, c);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = accumulate ? c[i * n + j] : 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                const double aip = (ta == Trans::No) ? a[i * k + p] : a[p * m + i];
                const double bpj = (tb == Trans::No) ? b[p * n + j] : b[j * k + p];
                acc += aip * bpj;
            }
            c[i * n + j] = acc;
        }
    }
}

void conv1d_forward(std::span<const double> input, std::span<const double> filters, std::span<double> output,
                    std::size_t c_in, std::size_t c_out, std::size_t width, std::size_t length)
{
    const auto left = static_cast<std::ptrdiff_t>((width - 1) / 2);
    for (std::size_t o = 0; o < c_out; ++o) {
        for (std::size_t t = 0; t < length; ++t) {
            double acc = 0.0;
            for (std::size_t c = 0; c < c_in; ++c) {
                for (std::size_t j = 0; j < width; ++j) {
                    const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + j) - left;
                    const double x = (src >= 0 && src < static_cast<std::ptrdiff_t>(length))
                        ? input[c * length + static_cast<std::size_t>(src)]
                        : 0.0;
                    acc += filters[(o * c_in + c) * width + j] * x;
                }
            }
            output[o * length + t] = acc;
        }
    }
}

void conv1d_backward(std::span<const double> input, std::span<const double> filters,
                     std::span<const double> d_output, std::span<double> d_input, std::span<double> d_filters,
                     std::size_t c_in, std::size_t c_out, std::size_t width, std::size_t length)
{
    const auto left = static_cast<std::ptrdiff_t>((width - 1) / 2);
    for (std::size_t o = 0; o < c_out; ++o) {
        for (std::size_t t = 0; t < length; ++t) {
            const double g = d_output[o * length + t];
            for (std::size_t c = 0; c < c_in; ++c) {
                for (std::size_t j = 0; j < width; ++j) {
                    const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + j) - left;
                    if (src < 0 || src >= static_cast<std::ptrdiff_t>(length)) continue;
                    const auto s = static_cast<std::size_t>(src);
                    if (!d_filters.empty()) d_filters[(o * c_in + c) * width + j] += g * input[c * length + s];
                    if (!d_input.empty()) d_input[c * length + s] += g * filters[(o * c_in + c) * width + j];
                }
            }
        }
    }
}

} // namespace reference

} // namespace sslstm::kernels
