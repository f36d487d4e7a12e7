#include "sslstm/classical.hpp"

#include "sslstm/optim.hpp"
#include "sslstm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sslstm {

std::string_view to_string(ClassicalKind k)
{
    switch (k) {
    case ClassicalKind::LogisticOvR: return "logistic";
    case ClassicalKind::HingeSvm: return "svm";
    case ClassicalKind::Mlp: return "mlp";
    }
    return "logistic";
}

std::optional<ClassicalKind> classical_kind_from_string(std::string_view s)
{
    if (s == "logistic" || s == "ovr_lr") return ClassicalKind::LogisticOvR;
    if (s == "svm") return ClassicalKind::HingeSvm;
    if (s == "mlp") return ClassicalKind::Mlp;
    return std::nullopt;
}

void TrainConfig::validate() const
{
    if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (l2_penalty < 0.0) throw std::invalid_argument("l2_penalty must be >= 0");
    if (mlp_hidden < 1) throw std::invalid_argument("mlp_hidden must be >= 1");
}

// --- binary ---------------------------------------------------------------------

double BinaryLinear::score(std::span<const double> x) const
{
    double s = b;
    for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * x[k];
    return s;
}

namespace {

// log(1 + exp(-z)) without overflow.
double softplus_neg(double z) { return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z)); }

double stable_sigmoid(double x)
{
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double squared_norm(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

std::vector<std::size_t> iota_indices(std::size_t n)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

} // namespace

BinaryLossGrad binary_loss_gradient(LinearLoss loss, const BinaryLinear& model, const BinaryProblem& problem,
                                    std::span<const std::size_t> batch, double l2)
{
    const std::size_t d = model.w.size();
    BinaryLossGrad out;
    out.dw.assign(d, 0.0);
    double total_w = 0.0;
    for (std::size_t i : batch) {
        const auto x = problem.x[i];
        const double y = problem.y[i];
        const double w = problem.weight[i];
        const double z = y * model.score(x);
        double coeff = 0.0; // d loss_i / d score
        if (loss == LinearLoss::Logistic) {
            out.loss += w * softplus_neg(z);
            coeff = -y * stable_sigmoid(-z);
        } else {
            if (z < 1.0) {
                out.loss += w * (1.0 - z);
                coeff = -y;
            }
        }
        total_w += w;
        if (coeff != 0.0) {
            for (std::size_t k = 0; k < d; ++k) out.dw[k] += w * coeff * x[k];
            out.db += w * coeff;
        }
    }
    if (total_w <= 0.0) throw std::invalid_argument("binary loss over zero total weight");
    out.loss /= total_w;
    out.db /= total_w;
    for (std::size_t k = 0; k < d; ++k) out.dw[k] = out.dw[k] / total_w + l2 * model.w[k];
    out.loss += 0.5 * l2 * squared_norm(model.w);
    return out;
}

BinaryLossGrad binary_loss_gradient(LinearLoss loss, const BinaryLinear& model, const BinaryProblem& problem, double l2)
{
    const auto all = iota_indices(problem.x.size());
    return binary_loss_gradient(loss, model, problem, all, l2);
}

BinaryTrainResult train_binary(LinearLoss loss, const BinaryProblem& problem, const TrainConfig& cfg)
{
    cfg.validate();
    const std::size_t n = problem.x.size();
    if (n == 0) throw std::invalid_argument("train_binary: no examples");
    if (problem.y.size() != n || problem.weight.size() != n) {
        throw std::invalid_argument("train_binary: inconsistent problem sizes");
    }
    const std::size_t d = problem.x[0].size();
    bool has_pos = false;
    bool has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (problem.x[i].size() != d) throw std::invalid_argument("train_binary: feature dimension mismatch");
        if (problem.y[i] > 0) has_pos = true;
        else has_neg = true;
    }
    if (!has_pos || !has_neg) throw ClassAbsentError("train_binary: both target classes must be present");

    Rng rng(cfg.seed);
    BinaryTrainResult result;
    result.model.w.resize(d);
    const double limit = ad::glorot_limit(d, 1);
    for (auto& w : result.model.w) w = rng.uniform(-limit, limit);

    auto order = iota_indices(n);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            const std::span<const std::size_t> batch(order.data() + start, stop - start);
            const auto g = binary_loss_gradient(loss, result.model, problem, batch, cfg.l2_penalty);
            for (std::size_t k = 0; k < d; ++k) result.model.w[k] -= cfg.lr * g.dw[k];
            result.model.b -= cfg.lr * g.db;
        }
        result.loss_history.push_back(binary_loss_gradient(loss, result.model, problem, cfg.l2_penalty).loss);
        result.weight_norm_history.push_back(std::sqrt(squared_norm(result.model.w)));
    }
    return result;
}

// --- three-class model ------------------------------------------------------------------

ClassicalModel::ClassicalModel(ClassicalKind kind, std::size_t input_dim, std::size_t hidden)
    : kind_(kind), input_dim_(input_dim), hidden_(hidden)
{
    if (input_dim == 0) throw std::invalid_argument("classical model needs a positive input dimension");
    if (kind == ClassicalKind::Mlp) {
        if (hidden == 0) throw std::invalid_argument("MLP hidden size must be positive");
        params_.add("mlp.W1", ad::Tensor({hidden, input_dim}));
        params_.add("mlp.b1", ad::Tensor({hidden}));
        params_.add("mlp.W2", ad::Tensor({kNumClasses, hidden}));
        params_.add("mlp.b2", ad::Tensor({kNumClasses}));
    } else {
        hidden_ = 0;
        params_.add("linear.W", ad::Tensor({kNumClasses, input_dim}));
        params_.add("linear.b", ad::Tensor({kNumClasses}));
    }
}

ClassicalModel ClassicalModel::zeros(ClassicalKind kind, std::size_t input_dim, std::size_t hidden)
{
    return ClassicalModel(kind, input_dim, hidden);
}

void ClassicalModel::check_dim(std::size_t n) const
{
    if (n != input_dim_) {
        throw std::invalid_argument("feature vector has length " + std::to_string(n) + ", model expects "
                                    + std::to_string(input_dim_));
    }
}

std::array<double, kNumClasses> ClassicalModel::scores(std::span<const double> f) const
{
    check_dim(f.size());
    std::array<double, kNumClasses> s{};
    if (kind_ == ClassicalKind::Mlp) {
        const auto& w1 = params_[0].value;
        const auto& b1 = params_[1].value;
        const auto& w2 = params_[2].value;
        const auto& b2 = params_[3].value;
        std::vector<double> h(hidden_);
        for (std::size_t i = 0; i < hidden_; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k < input_dim_; ++k) acc += w1[i * input_dim_ + k] * f[k];
            acc += b1[i];
            h[i] = acc > 0.0 ? acc : 0.0;
        }
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            double acc = 0.0;
            for (std::size_t i = 0; i < hidden_; ++i) acc += w2[c * hidden_ + i] * h[i];
            s[c] = acc + b2[c];
        }
    } else {
        const auto& w = params_[0].value;
        const auto& b = params_[1].value;
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            double acc = b[c];
            for (std::size_t k = 0; k < input_dim_; ++k) acc += w[c * input_dim_ + k] * f[k];
            s[c] = acc;
        }
    }
    return s;
}

Sentiment ClassicalModel::predict(std::span<const double> f) const
{
    const auto s = scores(f);
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumClasses; ++c) {
        if (s[c] > s[best]) best = c;
    }
    return sentiment_at(best);
}

std::array<double, kNumClasses> ClassicalModel::predict_proba(std::span<const double> f) const
{
    if (kind_ == ClassicalKind::HingeSvm) {
        throw std::logic_error("predict_proba is not defined for the hinge-loss SVM");
    }
    const auto s = scores(f);
    const double mx = *std::max_element(s.begin(), s.end());
    std::array<double, kNumClasses> p{};
    double z = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        p[c] = std::exp(s[c] - mx);
        z += p[c];
    }
    for (auto& v : p) v /= z;
    return p;
}

void ClassicalModel::save(Checkpoint& ck) const
{
    ck.set("model_kind", std::string(to_string(kind_)));
    ck.set("feature_dim", std::to_string(input_dim_));
    ck.set("mlp_hidden", std::to_string(hidden_));
    ck.add_parameters(params_);
}

ClassicalModel ClassicalModel::load(const Checkpoint& ck)
{
    const auto kind = classical_kind_from_string(ck.require("model_kind"));
    if (!kind) throw std::runtime_error("checkpoint names unknown classical kind '" + ck.require("model_kind") + "'");
    ClassicalModel m(*kind, std::stoul(ck.require("feature_dim")), std::stoul(ck.require("mlp_hidden")));
    ck.load_parameters(m.params_);
    return m;
}

namespace {

void check_inputs(std::span<const LabeledFeature> data)
{
    if (data.empty()) throw std::invalid_argument("train_classical: no examples");
    const std::size_t d = data[0].features.size();
    if (d == 0) throw std::invalid_argument("train_classical: empty feature vectors");
    for (const auto& ex : data) {
        if (ex.features.size() != d) {
            throw std::invalid_argument("train_classical: feature dimension mismatch (" + std::to_string(ex.features.size())
                                        + " vs " + std::to_string(d) + ")");
        }
        if (!(ex.weight > 0.0)) throw std::invalid_argument("train_classical: example weights must be positive");
    }
}

ClassicalTrainResult train_one_vs_rest(ClassicalKind kind, std::span<const LabeledFeature> data, const TrainConfig& cfg)
{
    const std::size_t d = data[0].features.size();
    ClassicalTrainResult result{ClassicalModel::zeros(kind, d), {}, {}};
    auto& w = result.model.params()[0].value;
    auto& b = result.model.params()[1].value;
    std::vector<std::vector<double>> norms(kNumClasses);
    result.loss_history.assign(cfg.epochs, 0.0);
    const LinearLoss loss = kind == ClassicalKind::LogisticOvR ? LinearLoss::Logistic : LinearLoss::Hinge;

    for (std::size_t c = 0; c < kNumClasses; ++c) {
        BinaryProblem problem;
        for (const auto& ex : data) {
            problem.x.push_back(ex.features.values);
            problem.y.push_back(class_index(ex.label) == c ? 1 : -1);
            problem.weight.push_back(ex.weight);
        }
        TrainConfig sub = cfg;
        sub.seed = derive_seed(cfg.seed, c);
        BinaryTrainResult r;
        try {
            r = train_binary(loss, problem, sub);
        } catch (const ClassAbsentError&) {
            throw ClassAbsentError("one-vs-rest training needs every class; '"
                                   + std::string(to_string(sentiment_at(c))) + "' is absent or is the only class");
        }
        std::copy(r.model.w.begin(), r.model.w.end(), w.data().begin() + static_cast<std::ptrdiff_t>(c * d));
        b[c] = r.model.b;
        for (std::size_t e = 0; e < cfg.epochs; ++e) result.loss_history[e] += r.loss_history[e];
        norms[c] = std::move(r.weight_norm_history);
    }
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        double sq = 0.0;
        for (std::size_t c = 0; c < kNumClasses; ++c) sq += norms[c][e] * norms[c][e];
        result.weight_norm_history.push_back(std::sqrt(sq));
    }
    return result;
}

struct MlpBatch {
    ad::Tensor x; // d x B
    std::vector<std::size_t> gold;
    std::vector<double> weight;
};

MlpBatch make_batch(std::span<const LabeledFeature> data, std::span<const std::size_t> idx, std::size_t d)
{
    MlpBatch b{ad::Tensor({d, idx.size()}), {}, {}};
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const auto& ex = data[idx[j]];
        for (std::size_t k = 0; k < d; ++k) b.x[k * idx.size() + j] = ex.features.values[k];
        b.gold.push_back(class_index(ex.label));
        b.weight.push_back(ex.weight);
    }
    return b;
}

double mlp_objective(ad::ParameterSet& params, const MlpBatch& batch, double l2, bool with_grad)
{
    ad::Tape tape(with_grad);
    auto x = tape.constant(batch.x);
    auto h = ad::relu(ad::add_bias(ad::matmul(tape.param(params[0]), x), tape.param(params[1])));
    auto logits = ad::add_bias(ad::matmul(tape.param(params[2]), h), tape.param(params[3]));
    auto loss = ad::cross_entropy(ad::softmax(logits), batch.gold, batch.weight);
    double value = loss.value().item();
    for (std::size_t i : {std::size_t{0}, std::size_t{2}}) {
        value += 0.5 * l2 * squared_norm(params[i].value.data());
    }
    if (with_grad) {
        tape.backward(loss);
        for (std::size_t i : {std::size_t{0}, std::size_t{2}}) {
            auto& p = params[i];
            for (std::size_t k = 0; k < p.value.size(); ++k) p.grad[k] += l2 * p.value[k];
        }
    }
    return value;
}

ClassicalTrainResult train_mlp(std::span<const LabeledFeature> data, const TrainConfig& cfg)
{
    const std::size_t d = data[0].features.size();
    const std::size_t n = data.size();
    ClassicalTrainResult result{ClassicalModel::zeros(ClassicalKind::Mlp, d, cfg.mlp_hidden), {}, {}};
    auto& params = result.model.params();
    Rng rng(cfg.seed);
    for (std::size_t i : {std::size_t{0}, std::size_t{2}}) {
        auto& p = params[i];
        const double limit = ad::glorot_limit(p.value.shape()[1], p.value.shape()[0]);
        for (auto& v : p.value.data()) v = rng.uniform(-limit, limit);
    }
    auto order = iota_indices(n);
    const auto all = iota_indices(n);
    // Full-data objective, evaluated in chunks to bound memory.
    auto objective = [&] {
        constexpr std::size_t kChunk = 1024;
        double weighted = 0.0;
        double total_w = 0.0;
        for (std::size_t start = 0; start < n; start += kChunk) {
            const std::size_t stop = std::min(n, start + kChunk);
            const auto chunk = make_batch(data, std::span<const std::size_t>(all.data() + start, stop - start), d);
            double w = 0.0;
            for (double x : chunk.weight) w += x;
            weighted += w * mlp_objective(params, chunk, 0.0, false);
            total_w += w;
        }
        return weighted / total_w + 0.5 * cfg.l2_penalty
            * (squared_norm(params[0].value.data()) + squared_norm(params[2].value.data()));
    };
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            const auto batch = make_batch(data, std::span<const std::size_t>(order.data() + start, stop - start), d);
            params.zero_grad();
            mlp_objective(params, batch, cfg.l2_penalty, true);
            ad::sgd_step(params, cfg.lr);
        }
        result.loss_history.push_back(objective());
        result.weight_norm_history.push_back(
            std::sqrt(squared_norm(params[0].value.data()) + squared_norm(params[2].value.data())));
    }
    return result;
}

} // namespace

ClassicalTrainResult train_classical(ClassicalKind kind, std::span<const LabeledFeature> data, const TrainConfig& cfg)
{
    cfg.validate();
    check_inputs(data);
    if (kind == ClassicalKind::Mlp) return train_mlp(data, cfg);
    return train_one_vs_rest(kind, data, cfg);
}

std::vector<Sentiment> predict_all(const ClassicalModel& model, std::span<const FeatureVector> features)
{
    std::vector<Sentiment> out(features.size());
    const auto n = static_cast<std::ptrdiff_t>(features.size());
#pragma omp parallel for schedule(static) if (n > 256)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out[k] = model.predict(features[k].values);
    }
    return out;
}

} // namespace sslstm
