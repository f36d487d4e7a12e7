#pragma once

#include "sslstm/corpus.hpp"
#include "sslstm/eval.hpp"
#include "sslstm/neural.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sslstm {

enum class OptimizerKind { Adam, Sgd };

std::string_view to_string(OptimizerKind k);
std::optional<OptimizerKind> optimizer_from_string(std::string_view s);

struct NeuralTrainConfig {
    double lr = 1e-3;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    /// Non-improving epochs tolerated before stopping; 0 stops at the first.
    std::size_t patience = 5;
    /// Global gradient-norm bound; 0 disables clipping.
    double clip_norm = 5.0;
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::uint64_t seed = 1;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0; // 0-based
    double train_loss = 0.0;
    Metrics valid;
};

/// One line per epoch: "epoch <n> train_loss <x> valid_precision <p> ...".
std::string format_epoch(const EpochRecord& r);

struct NeuralTrainResult {
    SsLstmModel model; // parameters of the best validation epoch
    std::vector<EpochRecord> history;
    std::optional<std::size_t> best_epoch;
    bool stopped_early = false;

    /// Epochs of training reflected in the returned parameters.
    std::size_t epochs_retained() const { return best_epoch ? *best_epoch + 1 : 0; }
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch training with early stopping on validation macro-F1. Each batch
/// is padded to its longest tweet and masked. Deterministic given the model's
/// initial parameters and cfg.seed.
NeuralTrainResult train_model(SsLstmModel model, const Dataset& train, const Dataset& valid,
                              const NeuralTrainConfig& cfg, const EpochCallback& on_epoch = {});

struct GridSpace {
    std::vector<double> learning_rates;
    std::vector<std::size_t> n_layers;
    std::vector<std::size_t> epochs;

    std::size_t cells() const { return learning_rates.size() * n_layers.size() * epochs.size(); }
};

struct GridCell {
    std::size_t index = 0;
    double lr = 0.0;
    std::size_t n_layers = 1;
    std::size_t epochs = 0;
    std::uint64_t seed = 0;
};

/// Cells in iteration order: learning rate outermost, then layers, then epochs.
std::vector<GridCell> enumerate_grid(const GridSpace& space, std::uint64_t base_seed);

struct GridCellResult {
    GridCell cell;
    Metrics valid;
    std::size_t epochs_run = 0;
};

struct GridResult {
    std::vector<GridCellResult> cells;
    std::size_t best = 0;
    SsLstmModel best_model;
};

using ModelFactory = std::function<SsLstmModel(const NeuralModelSpec&, std::uint64_t seed)>;

/// Exhaustive sweep; cells train in parallel, each with its own derived seed.
/// Best is the highest validation weighted-F1, ties to the earlier cell.
GridResult grid_search(const GridSpace& space, const NeuralModelSpec& base_spec, const ModelFactory& factory,
                       const Dataset& train, const Dataset& valid, const NeuralTrainConfig& base_cfg);

/// Tab-separated, header plus one row per cell.
std::string grid_report(const GridResult& r);

} // namespace sslstm
