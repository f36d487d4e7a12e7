#include "sslstm/train.hpp"

#include "sslstm/optim.hpp"
#include "sslstm/rng.hpp"

#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace sslstm {

std::string_view to_string(OptimizerKind k)
{
    return k == OptimizerKind::Adam ? "adam" : "sgd";
}

std::optional<OptimizerKind> optimizer_from_string(std::string_view s)
{
    if (s == "adam") return OptimizerKind::Adam;
    if (s == "sgd") return OptimizerKind::Sgd;
    return std::nullopt;
}

void NeuralTrainConfig::validate() const
{
    if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (clip_norm < 0.0) throw std::invalid_argument("clip_norm must be non-negative");
}

std::string format_epoch(const EpochRecord& r)
{
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "epoch %zu train_loss %.6f valid_precision %.4f valid_recall %.4f valid_f1 %.4f "
                  "valid_weighted_f1 %.4f valid_accuracy %.4f",
                  r.epoch, r.train_loss, r.valid.macro_precision, r.valid.macro_recall, r.valid.macro_f1,
                  r.valid.weighted_f1, r.valid.accuracy);
    return buf;
}

namespace {

std::vector<ad::Tensor> snapshot(const ad::ParameterSet& ps)
{
    std::vector<ad::Tensor> out;
    out.reserve(ps.size());
    for (const auto& p : ps) {
        out.push_back(p.value);
    }
    return out;
}

void restore(ad::ParameterSet& ps, const std::vector<ad::Tensor>& values)
{
    for (std::size_t i = 0; i < ps.size(); ++i) {
        ps[i].value = values[i];
    }
}

Metrics validate_model(const SsLstmModel& model, const Dataset& valid)
{
    return evaluate(model.predict(valid.tweets), gold_labels(valid));
}

} // namespace

NeuralTrainResult train_model(SsLstmModel model, const Dataset& train, const Dataset& valid,
                              const NeuralTrainConfig& cfg, const EpochCallback& on_epoch)
{
    cfg.validate();
    if (train.tweets.empty()) throw std::invalid_argument("training set is empty");
    if (valid.tweets.empty()) throw std::invalid_argument("validation set is empty");
    for (const Tweet& t : train.tweets) {
        if (!t.label) throw std::invalid_argument("training tweet " + t.id + " is unlabeled");
    }

    NeuralTrainResult result{model, {}, std::nullopt, false};
    SsLstmModel& m = result.model;
    ad::Adam adam(ad::AdamConfig{.lr = cfg.lr});
    Rng rng(derive_seed(cfg.seed, 0x7261696eULL));

    std::vector<std::size_t> order(train.tweets.size());
    std::iota(order.begin(), order.end(), 0);
    double best_f1 = -std::numeric_limits<double>::infinity();
    std::vector<ad::Tensor> best_values = snapshot(m.params());
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            std::vector<const Tweet*> batch;
            batch.reserve(end - begin);
            for (std::size_t i = begin; i < end; ++i) {
                batch.push_back(&train.tweets[order[i]]);
            }
            m.params().zero_grad();
            ad::Tape tape;
            ad::Var loss = m.loss(tape, batch);
            tape.backward(loss);
            loss_sum += loss.value()[0] * static_cast<double>(batch.size());
            if (cfg.clip_norm > 0.0) {
                ad::clip_grad_norm(m.params(), cfg.clip_norm);
            }
            if (cfg.optimizer == OptimizerKind::Adam) {
                adam.step(m.params());
            } else {
                ad::sgd_step(m.params(), cfg.lr);
            }
        }

        EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()), validate_model(m, valid)};
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (rec.valid.macro_f1 > best_f1) {
            best_f1 = rec.valid.macro_f1;
            best_values = snapshot(m.params());
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best > cfg.patience) {
            result.stopped_early = epoch + 1 < cfg.epochs;
            break;
        }
    }
    restore(m.params(), best_values);
    m.params().zero_grad();
    return result;
}

std::vector<GridCell> enumerate_grid(const GridSpace& space, std::uint64_t base_seed)
{
    std::vector<GridCell> cells;
    for (double lr : space.learning_rates) {
        for (std::size_t layers : space.n_layers) {
            for (std::size_t epochs : space.epochs) {
                const std::size_t idx = cells.size();
                cells.push_back({idx, lr, layers, epochs, derive_seed(base_seed, idx)});
            }
        }
    }
    return cells;
}

GridResult grid_search(const GridSpace& space, const NeuralModelSpec& base_spec, const ModelFactory& factory,
                       const Dataset& train, const Dataset& valid, const NeuralTrainConfig& base_cfg)
{
    if (space.cells() == 0) throw std::invalid_argument("grid search space is empty");
    const std::vector<GridCell> cells = enumerate_grid(space, base_cfg.seed);

    std::vector<std::optional<SsLstmModel>> models(cells.size());
    std::vector<GridCellResult> results(cells.size());
    std::vector<std::string> errors(cells.size());

#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < cells.size(); ++i) {
        try {
            const GridCell& c = cells[i];
            NeuralModelSpec spec = base_spec;
            spec.n_layers = c.n_layers;
            NeuralTrainConfig cfg = base_cfg;
            cfg.lr = c.lr;
            cfg.epochs = c.epochs;
            cfg.seed = c.seed;
            NeuralTrainResult r = train_model(factory(spec, c.seed), train, valid, cfg);
            results[i] = {c, validate_model(r.model, valid), r.history.size()};
            models[i].emplace(std::move(r.model));
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (const std::string& e : errors) {
        if (!e.empty()) throw std::runtime_error(e);
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i) {
        if (results[i].valid.weighted_f1 > results[best].valid.weighted_f1) best = i;
    }
    return GridResult{std::move(results), best, std::move(*models[best])};
}

std::string grid_report(const GridResult& r)
{
    std::ostringstream out;
    out << "cell\tlr\tn_layers\tepochs\tseed\tepochs_run\tvalid_macro_f1\tvalid_weighted_f1\tvalid_accuracy\tbest\n";
    for (const auto& c : r.cells) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%zu\t%g\t%zu\t%zu\t%llu\t%zu\t%.4f\t%.4f\t%.4f\t%d\n", c.cell.index,
                      c.cell.lr, c.cell.n_layers, c.cell.epochs, static_cast<unsigned long long>(c.cell.seed),
                      c.epochs_run, c.valid.macro_f1, c.valid.weighted_f1, c.valid.accuracy,
                      c.cell.index == r.best ? 1 : 0);
        out << buf;
    }
    return out.str();
}

} // namespace sslstm
