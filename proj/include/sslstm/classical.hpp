#pragma once

#include "sslstm/autodiff.hpp"
#include "sslstm/checkpoint.hpp"
#include "sslstm/corpus.hpp"
#include "sslstm/features.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace sslstm {

enum class ClassicalKind { LogisticOvR, HingeSvm, Mlp };

std::string_view to_string(ClassicalKind k);
std::optional<ClassicalKind> classical_kind_from_string(std::string_view s);

struct TrainConfig {
    double lr = 0.1;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double l2_penalty = 1e-4;
    std::uint64_t seed = 1;
    std::size_t mlp_hidden = 100;

    void validate() const;
};

class ClassAbsentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct LabeledFeature {
    FeatureVector features;
    Sentiment label = Sentiment::Neutral;
    double weight = 1.0;
};

// --- binary linear machinery (one-vs-rest building block) -----------------------

enum class LinearLoss { Logistic, Hinge };

struct BinaryLinear {
    std::vector<double> w;
    double b = 0.0;

    double score(std::span<const double> x) const;
};

/// Examples with targets y in {-1, +1}.
struct BinaryProblem {
    std::vector<std::span<const double>> x;
    std::vector<int> y;
    std::vector<double> weight;
};

struct BinaryLossGrad {
    double loss = 0.0;
    std::vector<double> dw;
    double db = 0.0;
};

/// Weighted-mean loss plus (l2/2)||w||^2 over the selected examples, with its
/// gradient (hinge: subgradient 0 at margin exactly 1). Bias is unregularized.
BinaryLossGrad binary_loss_gradient(LinearLoss loss, const BinaryLinear& model, const BinaryProblem& problem,
                                    std::span<const std::size_t> batch, double l2);
BinaryLossGrad binary_loss_gradient(LinearLoss loss, const BinaryLinear& model, const BinaryProblem& problem,
                                    double l2);

struct BinaryTrainResult {
    BinaryLinear model;
    std::vector<double> loss_history;
    std::vector<double> weight_norm_history;
};

/// Mini-batch (sub)gradient descent from a seeded Glorot initialization.
/// Throws ClassAbsentError when all targets share one sign.
BinaryTrainResult train_binary(LinearLoss loss, const BinaryProblem& problem, const TrainConfig& cfg);

// --- three-class models ------------------------------------------------------------

/// Linear kinds store `linear.W` (3 x d) and `linear.b` (3); the MLP stores
/// `mlp.W1` (h x d), `mlp.b1`, `mlp.W2` (3 x h), `mlp.b2`.
class ClassicalModel {
public:
    static ClassicalModel zeros(ClassicalKind kind, std::size_t input_dim, std::size_t hidden = 100);

    ClassicalKind kind() const { return kind_; }
    std::size_t input_dim() const { return input_dim_; }
    std::size_t hidden_dim() const { return hidden_; }

    ad::ParameterSet& params() { return params_; }
    const ad::ParameterSet& params() const { return params_; }

    /// One-vs-rest scores (linear kinds) or logits (MLP).
    std::array<double, kNumClasses> scores(std::span<const double> f) const;
    /// Argmax of scores; ties go to the lowest class index.
    Sentiment predict(std::span<const double> f) const;
    /// Softmax over scores. Not defined for the hinge SVM.
    std::array<double, kNumClasses> predict_proba(std::span<const double> f) const;

    void save(Checkpoint& ck) const;
    static ClassicalModel load(const Checkpoint& ck);

private:
    ClassicalModel(ClassicalKind kind, std::size_t input_dim, std::size_t hidden);
    void check_dim(std::size_t n) const;

    ClassicalKind kind_;
    std::size_t input_dim_;
    std::size_t hidden_;
    ad::ParameterSet params_;
};

struct ClassicalTrainResult {
    ClassicalModel model;
    /// Training objective after each epoch (summed over the three binary
    /// problems for one-vs-rest kinds).
    std::vector<double> loss_history;
    /// Frobenius norm of the weight matrices after each epoch.
    std::vector<double> weight_norm_history;
};

ClassicalTrainResult train_classical(ClassicalKind kind, std::span<const LabeledFeature> data, const TrainConfig& cfg);

std::vector<Sentiment> predict_all(const ClassicalModel& model, std::span<const FeatureVector> features);

} // namespace sslstm
