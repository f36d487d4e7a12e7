#pragma once

#include "sslstm/classical.hpp"
#include "sslstm/eval.hpp"
#include "sslstm/features.hpp"
#include "sslstm/neural.hpp"
#include "sslstm/preprocess.hpp"
#include "sslstm/synthetic.hpp"
#include "sslstm/train.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sslstm::app {

namespace fs = std::filesystem;

enum class ModelFamily { Neural, Classical };

struct PathsConfig {
    fs::path train;
    fs::path valid;
    fs::path test;
    fs::path embeddings;
    /// Empty selects the built-in list.
    fs::path stopwords;
    fs::path out;
};

struct ModelConfig {
    ModelFamily family = ModelFamily::Neural;
    ClassicalKind classical_kind = ClassicalKind::LogisticOvR;
    Representation representation = Representation::TfIdf;
    /// Vocabulary cap for tf-idf features; 0 keeps every token.
    std::size_t max_features = 2000;
    std::size_t mlp_hidden = 100;
    NeuralModelSpec neural;
};

struct TrainSection {
    /// Unset values take the family default (neural: 1e-3 / 30, classical: 2.0 / 100).
    std::optional<double> lr;
    std::optional<std::size_t> epochs;
    std::size_t batch_size = 32;
    std::size_t patience = 5;
    double clip_norm = 5.0;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double l2_penalty = 1e-4;
};

struct RunConfig {
    std::uint64_t seed = 1;
    PathsConfig paths;
    bool preprocess_enabled = true;
    bool use_stopwords = true;
    PreprocessConfig preprocess;
    ModelConfig model;
    TrainSection train;
    GridSpace grid{{1e-3, 3e-3}, {1, 2}, {10, 30}};
    /// Model keys given explicitly by the file or overrides; checked against
    /// checkpoints on load.
    std::set<std::string> explicit_model_keys;

    NeuralTrainConfig neural_train() const;
    TrainConfig classical_train() const;
    /// Full resolved configuration as pretty JSON.
    std::string to_json() const;
};

/// Precedence, lowest first: built-in defaults, config file, `key.path=value`
/// overrides (value parsed as JSON, else taken as a string), then --seed and
/// --out.
struct ConfigSources {
    std::optional<fs::path> file;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> out;
};

RunConfig resolve_config(const ConfigSources& sources);

/// `paths.out` when set, else runs/<YYYYmmdd-HHMMSS>-seed<seed>. Created if missing.
fs::path run_directory(const RunConfig& cfg);

/// A trained model together with everything needed to apply it to raw text.
class LoadedModel {
public:
    static LoadedModel load(const fs::path& checkpoint, const RunConfig& cfg);

    ModelFamily family() const { return family_; }
    const PreprocessConfig& preprocess() const { return preprocess_; }
    bool preprocess_enabled() const { return preprocess_enabled_; }
    std::string display_name() const;
    std::string representation_name() const;

    Dataset prepare(const Dataset& raw) const;
    /// Input must already be prepared.
    std::vector<Sentiment> predict(const Dataset& prepared) const;
    std::vector<std::array<double, kNumClasses>> predict_proba(const Dataset& prepared) const;

private:
    LoadedModel() = default;

    ModelFamily family_ = ModelFamily::Neural;
    bool preprocess_enabled_ = true;
    PreprocessConfig preprocess_;
    std::shared_ptr<EmbeddingTable> embeddings_;
    std::optional<SsLstmModel> neural_;
    std::optional<ClassicalModel> classical_;
    std::optional<FeatureExtractor> features_;
};

struct TrainOutcome {
    fs::path run_dir;
    fs::path checkpoint;
    Metrics valid;
};

CleanSummary cmd_preprocess(const RunConfig& cfg, const fs::path& input, const fs::path& output, std::ostream& out);
TrainOutcome cmd_train(const RunConfig& cfg, std::ostream& out);
/// One table row per checkpoint, evaluated on `data` (a labeled corpus file).
std::vector<Metrics> cmd_eval(const RunConfig& cfg, const std::vector<fs::path>& checkpoints, const fs::path& data,
                              const std::optional<fs::path>& rows_file, std::ostream& out);
/// Writes `input` back with predicted labels; optionally a TSV of class probabilities.
void cmd_predict(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& input, const fs::path& output,
                 const std::optional<fs::path>& proba_file, std::ostream& out);
TrainOutcome cmd_grid(const RunConfig& cfg, std::ostream& out);
/// Writes train.txt, valid.txt, test.txt and embeddings.vec into `dir`.
void cmd_gen_synthetic(const SyntheticConfig& syn, const fs::path& dir, std::ostream& out);

} // namespace sslstm::app
