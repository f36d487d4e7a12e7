#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "sslstm/autodiff.hpp"
#include "sslstm/optim.hpp"

#include <cmath>

using namespace sslstm;
using namespace sslstm::ad;

namespace {

constexpr double kGradTolerance = 1e-6;
constexpr int kInstances = 20;

using Build = std::function<Var(Tape&, std::vector<Var>&)>;

// Loss = sum(op(inputs) * R) for a fixed random R, so every output entry
// contributes with a distinct weight.
struct GradCheck {
    ParameterSet params;
    Build build;
    Tensor weights;

    double loss()
    {
        Tape tape;
        std::vector<Var> in;
        for (auto& p : params) in.push_back(tape.param(p));
        return run(tape, in).value().item();
    }

    Var run(Tape& tape, std::vector<Var>& in)
    {
        Var out = build(tape, in);
        return sum(mul(out, tape.constant(weights)));
    }

    void check(Rng& rng)
    {
        {
            Tape probe(false);
            std::vector<Var> in;
            for (const auto& p : std::as_const(params)) in.push_back(probe.param(p));
            weights = oracle::random_tensor(build(probe, in).shape(), rng);
        }
        params.zero_grad();
        {
            Tape tape;
            std::vector<Var> in;
            for (auto& p : params) in.push_back(tape.param(p));
            tape.backward(run(tape, in));
        }
        for (auto& p : params) {
            const auto numeric = oracle::numeric_gradient([&] { return loss(); }, p.value.data());
            const double err = oracle::relative_error(p.grad.data(), numeric);
            CHECK_MESSAGE(err < kGradTolerance, p.name << " relative error " << err);
        }
    }
};

void check_op(const char* name, const std::function<std::vector<Tensor>(Rng&)>& inputs, Build build)
{
    INFO(name);
    Rng rng(std::hash<std::string>{}(name));
    for (int i = 0; i < kInstances; ++i) {
        GradCheck g;
        auto ts = inputs(rng);
        for (std::size_t k = 0; k < ts.size(); ++k) g.params.add("in" + std::to_string(k), std::move(ts[k]));
        g.build = build;
        g.check(rng);
    }
}

std::size_t dim(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

} // namespace

TEST_CASE("finite-difference gradients of elementwise primitives")
{
    auto two = [](Rng& rng) {
        const Shape s{dim(rng, 1, 4), dim(rng, 1, 5)};
        return std::vector<Tensor>{oracle::random_tensor(s, rng), oracle::random_tensor(s, rng)};
    };
    auto one = [](Rng& rng) { return std::vector<Tensor>{oracle::random_tensor({dim(rng, 1, 4), dim(rng, 1, 5)}, rng, -3, 3)}; };
    check_op("add", two, [](Tape&, std::vector<Var>& v) { return add(v[0], v[1]); });
    check_op("sub", two, [](Tape&, std::vector<Var>& v) { return sub(v[0], v[1]); });
    check_op("mul", two, [](Tape&, std::vector<Var>& v) { return mul(v[0], v[1]); });
    check_op("mul-self", one, [](Tape&, std::vector<Var>& v) { return mul(v[0], v[0]); });
    check_op("scale", one, [](Tape&, std::vector<Var>& v) { return scale(v[0], -1.7); });
    check_op("sigmoid", one, [](Tape&, std::vector<Var>& v) { return sigmoid(v[0]); });
    check_op("tanh", one, [](Tape&, std::vector<Var>& v) { return tanh(v[0]); });
    check_op("relu", one, [](Tape&, std::vector<Var>& v) { return relu(v[0]); });
}

TEST_CASE("finite-difference gradients of linear-algebra primitives")
{
    check_op("add_bias",
             [](Rng& rng) {
                 const std::size_t m = dim(rng, 1, 4);
                 return std::vector<Tensor>{oracle::random_tensor({m, dim(rng, 1, 5)}, rng),
                                            oracle::random_tensor({m}, rng)};
             },
             [](Tape&, std::vector<Var>& v) { return add_bias(v[0], v[1]); });
    check_op("matmul",
             [](Rng& rng) {
                 const std::size_t m = dim(rng, 1, 4), k = dim(rng, 1, 5), n = dim(rng, 1, 4);
                 return std::vector<Tensor>{oracle::random_tensor({m, k}, rng), oracle::random_tensor({k, n}, rng)};
             },
             [](Tape&, std::vector<Var>& v) { return matmul(v[0], v[1]); });
    check_op("matmul-vector",
             [](Rng& rng) {
                 const std::size_t m = dim(rng, 1, 4), k = dim(rng, 1, 5);
                 return std::vector<Tensor>{oracle::random_tensor({m, k}, rng), oracle::random_tensor({k}, rng)};
             },
             [](Tape&, std::vector<Var>& v) { return matmul(v[0], v[1]); });
    check_op("concat_rows",
             [](Rng& rng) {
                 const std::size_t n = dim(rng, 1, 4);
                 return std::vector<Tensor>{oracle::random_tensor({dim(rng, 1, 3), n}, rng),
                                            oracle::random_tensor({dim(rng, 1, 3), n}, rng)};
             },
             [](Tape&, std::vector<Var>& v) { return concat_rows(v[0], v[1]); });
    check_op("slice_rows", [](Rng& rng) { return std::vector<Tensor>{oracle::random_tensor({6, dim(rng, 1, 4)}, rng)}; },
             [](Tape&, std::vector<Var>& v) { return slice_rows(v[0], 2, 3); });
    check_op("sum", [](Rng& rng) { return std::vector<Tensor>{oracle::random_tensor({dim(rng, 1, 4), 3}, rng)}; },
             [](Tape&, std::vector<Var>& v) { return sum(v[0]); });
}

TEST_CASE("finite-difference gradients of softmax and cross-entropy")
{
    check_op("softmax", [](Rng& rng) { return std::vector<Tensor>{oracle::random_tensor({3, dim(rng, 1, 5)}, rng, -4, 4)}; },
             [](Tape&, std::vector<Var>& v) { return softmax(v[0]); });
    check_op("softmax+cross_entropy",
             [](Rng& rng) { return std::vector<Tensor>{oracle::random_tensor({3, 4}, rng, -4, 4)}; },
             [](Tape&, std::vector<Var>& v) {
                 static const std::vector<std::size_t> gold{0, 2, 1, 2};
                 return cross_entropy(softmax(v[0]), gold);
             });
    check_op("weighted cross_entropy",
             [](Rng& rng) { return std::vector<Tensor>{oracle::random_tensor({3, 3}, rng, -4, 4)}; },
             [](Tape&, std::vector<Var>& v) {
                 static const std::vector<std::size_t> gold{1, 1, 0};
                 static const std::vector<double> w{0.5, 2.0, 1.0};
                 return cross_entropy(softmax(v[0]), gold, w);
             });
}

TEST_CASE("finite-difference gradients of sequence primitives")
{
    check_op("conv1d",
             [](Rng& rng) {
                 const std::size_t c_in = dim(rng, 1, 3), c_out = dim(rng, 1, 3), w = dim(rng, 1, 5), T = dim(rng, 1, 7);
                 return std::vector<Tensor>{oracle::random_tensor({c_in, T}, rng), oracle::random_tensor({c_out, c_in, w}, rng)};
             },
             [](Tape&, std::vector<Var>& v) { return conv1d(v[0], v[1]); });
    check_op("maxpool_time", [](Rng& rng) { return std::vector<Tensor>{oracle::random_tensor({3, dim(rng, 1, 6)}, rng)}; },
             [](Tape&, std::vector<Var>& v) { return maxpool_time(v[0]); });
    check_op("maxpool_segments", [](Rng& rng) { return std::vector<Tensor>{oracle::random_tensor({2, 9}, rng)}; },
             [](Tape&, std::vector<Var>& v) { return maxpool_segments(v[0], {{0, 3}, {3, 1}, {5, 4}}); });
    check_op("embedding_lookup", [](Rng& rng) { return std::vector<Tensor>{oracle::random_tensor({4, 3}, rng)}; },
             [](Tape&, std::vector<Var>& v) { return embedding_lookup(v[0], {2, -1, 0, 2, 3}); });
    check_op("gather_cols", [](Rng& rng) { return std::vector<Tensor>{oracle::random_tensor({3, 4}, rng)}; },
             [](Tape&, std::vector<Var>& v) { return gather_cols(v[0], {3, 3, -1, 0}); });
    check_op("where_cols",
             [](Rng& rng) {
                 return std::vector<Tensor>{oracle::random_tensor({2, 4}, rng), oracle::random_tensor({2, 4}, rng)};
             },
             [](Tape&, std::vector<Var>& v) { return where_cols({1, 0, 0, 1}, v[0], v[1]); });
}

TEST_CASE("finite-difference gradient of a composite graph")
{
    check_op("lstm-like cell",
             [](Rng& rng) {
                 return std::vector<Tensor>{oracle::random_tensor({8, 3}, rng), oracle::random_tensor({3, 2}, rng),
                                            oracle::random_tensor({8}, rng)};
             },
             [](Tape&, std::vector<Var>& v) {
                 Var z = add_bias(matmul(v[0], v[1]), v[2]);
                 Var i = sigmoid(slice_rows(z, 0, 2));
                 Var g = tanh(slice_rows(z, 2, 2));
                 Var o = sigmoid(slice_rows(z, 4, 2));
                 Var c = mul(i, g);
                 return concat_rows(mul(o, tanh(c)), relu(slice_rows(z, 6, 2)));
             });
}

TEST_CASE("softmax stays finite and normalized for large logits")
{
    Tape tape;
    Var p = softmax(tape.constant(Tensor::matrix(3, 2, {1e4, -1e4, -1e4, 1e4, 0.0, 0.0})));
    for (std::size_t c = 0; c < 2; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < 3; ++r) {
            CHECK(std::isfinite(p.value().at(r, c)));
            s += p.value().at(r, c);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK(p.value().at(0, 0) == 1.0);
    Var ce = cross_entropy(p, std::vector<std::size_t>{1, 1});
    CHECK(ce.value().item() == doctest::Approx((-std::log(kProbabilityFloor) + 0.0) / 2.0));
}

TEST_CASE("hand-computed gradients and optimizer steps")
{
    ParameterSet ps;
    ps.add("x", Tensor::vector({3.0}));
    {
        Tape tape;
        Var x = tape.param(ps[0]);
        tape.backward(sum(mul(x, x)));
    }
    CHECK(ps[0].grad[0] == 6.0);
    sgd_step(ps, 0.1);
    CHECK(ps[0].value[0] == doctest::Approx(2.4).epsilon(1e-15));

    // Two Adam steps with constant gradient 0.5 move by lr each: bias correction
    // makes m_hat = 0.5 and v_hat = 0.25 exactly.
    Parameter p{"p", Tensor::vector({1.0}), Tensor::vector({0.5})};
    std::vector<double> m(1, 0.0), v(1, 0.0);
    const AdamConfig cfg{0.1, 0.9, 0.999, 1e-8};
    adam_step(p, m, v, cfg, 1);
    CHECK(m[0] == doctest::Approx(0.05));
    CHECK(v[0] == doctest::Approx(0.00025));
    CHECK(p.value[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
    adam_step(p, m, v, cfg, 2);
    CHECK(p.value[0] == doctest::Approx(0.8).epsilon(1e-7));
}

TEST_CASE("Adam matches a direct transcription over many steps")
{
    Rng rng(77);
    ParameterSet ps;
    ps.add("a", oracle::random_tensor({3, 2}, rng));
    ps.add("frozen", oracle::random_tensor({2}, rng), false);
    const Tensor frozen = ps[1].value;
    std::vector<double> theta(ps[0].value.data().begin(), ps[0].value.data().end());
    std::vector<double> m(6, 0.0), v(6, 0.0);
    Adam adam(AdamConfig{0.01, 0.8, 0.99, 1e-6});
    for (std::size_t t = 1; t <= 25; ++t) {
        for (auto& p : ps) p.grad = oracle::random_tensor(p.value.shape(), rng);
        for (std::size_t i = 0; i < 6; ++i) {
            const double g = ps[0].grad[i];
            m[i] = 0.8 * m[i] + 0.2 * g;
            v[i] = 0.99 * v[i] + 0.01 * g * g;
            const double mh = m[i] / (1.0 - std::pow(0.8, static_cast<double>(t)));
            const double vh = v[i] / (1.0 - std::pow(0.99, static_cast<double>(t)));
            theta[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-6);
        }
        adam.step(ps);
    }
    CHECK(adam.steps() == 25);
    for (std::size_t i = 0; i < 6; ++i) CHECK(ps[0].value[i] == doctest::Approx(theta[i]).epsilon(1e-12));
    CHECK(ps[1].value == frozen);
}

TEST_CASE("gradient clipping")
{
    ParameterSet ps;
    ps.add("a", Tensor::vector({0.0, 0.0}));
    ps.add("b", Tensor::vector({0.0}));
    ps[0].grad = Tensor::vector({3.0, 0.0});
    ps[1].grad = Tensor::vector({4.0});
    CHECK(grad_norm(ps) == 5.0);
    CHECK(clip_grad_norm(ps, 10.0) == 5.0);
    CHECK(ps[1].grad[0] == 4.0);
    CHECK(clip_grad_norm(ps, 1.0) == 5.0);
    CHECK(grad_norm(ps) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ps[0].grad[0] == doctest::Approx(0.6));
}

TEST_CASE("gradients accumulate across backward passes and are reproducible")
{
    Rng rng(5);
    ParameterSet ps;
    ps.add("w", oracle::random_tensor({4, 3}, rng));
    const Tensor x = oracle::random_tensor({3, 5}, rng);
    auto pass = [&] {
        Tape tape;
        Var w = tape.param(ps[0]);
        tape.backward(sum(tanh(matmul(w, tape.constant(x)))));
    };
    ps.zero_grad();
    pass();
    const Tensor once = ps[0].grad;
    pass();
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(ps[0].grad[i] == 2.0 * once[i]);
    ps.zero_grad();
    pass();
    CHECK(ps[0].grad == once);

    const Parameter& read_only = ps[0];
    Tape tape;
    Var w = tape.param(read_only);
    CHECK_FALSE(tape.requires_grad(w.id));
}

TEST_CASE("parameter sets and shape errors")
{
    ParameterSet ps;
    ps.add("a", Tensor::vector({1.0, 2.0}));
    CHECK_THROWS(ps.add("a", Tensor::vector({1.0})));
    CHECK(ps.index_of("a") == 0u);
    CHECK(ps.scalar_count() == 2);
    Tape tape;
    Var a = tape.constant(Tensor::zeros({2, 3}));
    Var b = tape.constant(Tensor::zeros({3, 2}));
    CHECK_THROWS(add(a, b));
    CHECK_THROWS(matmul(a, a));
    CHECK_THROWS(tape.backward(a));
    CHECK(glorot_limit(3, 5) == doctest::Approx(std::sqrt(6.0 / 8.0)));
}
