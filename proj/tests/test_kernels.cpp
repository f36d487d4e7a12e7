#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "sslstm/kernels.hpp"

#include <vector>

using namespace sslstm;
using namespace sslstm::kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n)
{
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

// Naive triple loop over the logical (possibly transposed) operands.
std::vector<double> naive_gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
                               const std::vector<double>& a, const std::vector<double>& b)
{
    std::vector<double> c(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                const double av = ta == Trans::No ? a[i * k + p] : a[p * m + i];
                const double bv = tb == Trans::No ? b[p * n + j] : b[j * k + p];
                s += av * bv;
            }
            c[i * n + j] = s;
        }
    }
    return c;
}

} // namespace

TEST_CASE("parallel gemm is bit-identical to the serial reference")
{
    Rng rng(1);
    const std::size_t sizes[][3] = {{1, 1, 1}, {3, 7, 5}, {70, 90, 60}, {128, 33, 200}, {5, 300, 40}};
    for (const auto& s : sizes) {
        const std::size_t m = s[0], n = s[1], k = s[2];
        for (Trans ta : {Trans::No, Trans::Yes}) {
            for (Trans tb : {Trans::No, Trans::Yes}) {
                const auto a = random_vec(rng, m * k);
                const auto b = random_vec(rng, k * n);
                const auto init = random_vec(rng, m * n);
                for (bool acc : {false, true}) {
                    std::vector<double> c1 = init, c2 = init;
                    gemm(ta, tb, m, n, k, a, b, c1, acc);
                    reference::gemm(ta, tb, m, n, k, a, b, c2, acc);
                    CHECK(c1 == c2);
                }
                std::vector<double> c(m * n);
                gemm(ta, tb, m, n, k, a, b, c);
                CHECK(oracle::max_abs_diff(c, naive_gemm(ta, tb, m, n, k, a, b)) < 1e-12);
            }
        }
    }
}

TEST_CASE("gemm column results do not depend on the other columns")
{
    Rng rng(2);
    const std::size_t m = 40, k = 50, n = 64;
    const auto a = random_vec(rng, m * k);
    const auto b = random_vec(rng, k * n);
    std::vector<double> full(m * n);
    gemm(Trans::No, Trans::No, m, n, k, a, b, full);
    for (std::size_t j : {0u, 17u, 63u}) {
        std::vector<double> col(k);
        for (std::size_t p = 0; p < k; ++p) col[p] = b[p * n + j];
        std::vector<double> one(m);
        gemm(Trans::No, Trans::No, m, 1, k, a, col, one);
        for (std::size_t i = 0; i < m; ++i) CHECK(one[i] == full[i * n + j]);
    }
}

TEST_CASE("convolution matches the naive oracle and the reference")
{
    Rng rng(3);
    const std::size_t configs[][4] = {{1, 1, 1, 1}, {2, 3, 3, 5}, {4, 2, 4, 9}, {15, 85, 5, 400}, {3, 2, 7, 3}};
    for (const auto& cfg : configs) {
        const std::size_t c_in = cfg[0], c_out = cfg[1], w = cfg[2], T = cfg[3];
        const auto in = random_vec(rng, c_in * T);
        const auto f = random_vec(rng, c_out * c_in * w);
        std::vector<double> out(c_out * T), ref(c_out * T);
        conv1d_forward(in, f, out, c_in, c_out, w, T);
        reference::conv1d_forward(in, f, ref, c_in, c_out, w, T);
        CHECK(out == ref);
        CHECK(oracle::max_abs_diff(out, oracle::conv1d(in, f, c_in, c_out, w, T)) < 1e-12);

        const auto d_out = random_vec(rng, c_out * T);
        std::vector<double> di1(c_in * T, 0.0), df1(f.size(), 0.0), di2 = di1, df2 = df1;
        conv1d_backward(in, f, d_out, di1, df1, c_in, c_out, w, T);
        reference::conv1d_backward(in, f, d_out, di2, df2, c_in, c_out, w, T);
        CHECK(oracle::max_abs_diff(di1, di2) < 1e-12);
        CHECK(oracle::max_abs_diff(df1, df2) < 1e-12);

        // Adjoint identity: <conv(x), d> == <x, conv^T(d)> and the same for filters.
        double lhs = 0.0, rhs_in = 0.0, rhs_f = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) lhs += out[i] * d_out[i];
        for (std::size_t i = 0; i < in.size(); ++i) rhs_in += in[i] * di1[i];
        for (std::size_t i = 0; i < f.size(); ++i) rhs_f += f[i] * df1[i];
        CHECK(rhs_in == doctest::Approx(lhs).epsilon(1e-10));
        CHECK(rhs_f == doctest::Approx(lhs).epsilon(1e-10));
    }
}

TEST_CASE("im2col and col2im are adjoint")
{
    Rng rng(4);
    const std::size_t c_in = 3, w = 4, T = 11;
    const auto x = random_vec(rng, c_in * T);
    const auto y = random_vec(rng, c_in * w * T);
    std::vector<double> cols(c_in * w * T);
    im2col(x, cols, c_in, w, T);
    std::vector<double> back(c_in * T, 0.0);
    col2im_add(y, back, c_in, w, T);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < cols.size(); ++i) lhs += cols[i] * y[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * back[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("size mismatches are rejected")
{
    std::vector<double> a(6), b(6), c(3);
    CHECK_THROWS(gemm(Trans::No, Trans::No, 2, 2, 3, a, b, c));
    std::vector<double> in(4), f(5), out(4);
    CHECK_THROWS(conv1d_forward(in, f, out, 1, 1, 3, 4));
}
