#pragma once

#include "sslstm/autodiff.hpp"
#include "sslstm/checkpoint.hpp"
#include "sslstm/corpus.hpp"
#include "sslstm/features.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sslstm {

struct CharCnnConfig {
    std::size_t char_emb_dim = 32;
    std::vector<std::size_t> filter_widths{2, 3, 4};
    /// d: rows of the per-tweet d x T character matrix.
    std::size_t output_dim = 256;

    /// output_dim split across widths; the remainder goes to the widest filters.
    std::vector<std::size_t> filters_per_width() const;
    std::size_t max_width() const;
    void validate() const;
};

/// Code-point vocabulary with index 0 reserved for unknown characters.
class CharVocabulary {
public:
    static constexpr std::size_t kUnk = 0;

    CharVocabulary() = default;
    static CharVocabulary build(std::span<const Tweet> corpus);
    static CharVocabulary from_list(const std::vector<std::string>& chars);

    std::size_t index(char32_t cp) const;
    std::size_t size() const { return chars_.size() + 1; }
    /// Known characters in index order (UNK excluded) as hex code points.
    std::vector<std::string> to_list() const;

private:
    void add(char32_t cp);

    std::vector<char32_t> chars_;
    std::unordered_map<char32_t, std::size_t> index_;
};

enum class Branches { Dual, CharOnly, WordOnly };

std::string_view to_string(Branches b);
std::optional<Branches> branches_from_string(std::string_view s);

struct NeuralModelSpec {
    Branches branches = Branches::Dual;
    CharCnnConfig char_cnn;
    std::size_t lstm_hidden = 128;
    /// Stacked LSTM depth per branch.
    std::size_t n_layers = 1;
    std::size_t fc_hidden = 64;
    /// Train the pretrained vectors of training-vocabulary words instead of
    /// keeping the table frozen.
    bool unfreeze_embeddings = false;

    bool uses_char() const { return branches != Branches::WordOnly; }
    bool uses_word() const { return branches != Branches::CharOnly; }
    /// d, shared by both branch matrices.
    std::size_t embedding_dim() const { return char_cnn.output_dim; }
    std::size_t concat_dim() const { return (uses_char() && uses_word() ? 2 : 1) * lstm_hidden; }

    void validate() const;
    std::string to_json() const;
    static NeuralModelSpec from_json(const std::string& text);
};

struct ForwardOptions {
    /// Masked steps appended after the longest tweet in the batch.
    std::size_t extra_padding = 0;
    /// Replace a branch's LSTM output with zeros.
    bool zero_char_branch = false;
    bool zero_word_branch = false;
};

/// Intermediate values of one batched forward pass. Branch matrices hold one
/// column per token of the batch, tweet-major; `offsets[b]` is the first
/// column of tweet b.
struct ForwardTrace {
    std::optional<ad::Var> char_matrix;  // d x n_tokens
    std::optional<ad::Var> word_matrix;  // d x n_tokens
    std::optional<ad::Var> char_output;  // H x B
    std::optional<ad::Var> word_output;  // H x B
    ad::Var concat;                      // concat_dim x B
    ad::Var probs;                       // 3 x B
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> lengths;
};

/// Dual-branch classifier: character CNN + LSTM and word embeddings + LSTM,
/// concatenated into a one-hidden-layer softmax head. Single-branch variants
/// are the same model with one branch disabled.
class SsLstmModel {
public:
    /// `train` provides the character vocabulary (and word vocabulary when
    /// embeddings are unfrozen). `words` is required for word-branch models
    /// and must outlive the model while frozen.
    static SsLstmModel create(const NeuralModelSpec& spec, const Dataset& train, const EmbeddingTable* words,
                              std::uint64_t seed);
    static SsLstmModel create(const NeuralModelSpec& spec, CharVocabulary chars, const EmbeddingTable* words,
                              std::vector<std::string> word_vocab, std::uint64_t seed);

    const NeuralModelSpec& spec() const { return spec_; }
    const CharVocabulary& chars() const { return chars_; }
    ad::ParameterSet& params() { return params_; }
    const ad::ParameterSet& params() const { return params_; }
    std::size_t word_input_dim() const { return word_in_dim_; }

    /// Records the forward pass on `tape` with trainable bindings.
    ForwardTrace forward(ad::Tape& tape, std::span<const Tweet* const> batch, const ForwardOptions& opts = {});
    /// Read-only forward (no gradients reach the parameters).
    ForwardTrace forward_frozen(ad::Tape& tape, std::span<const Tweet* const> batch,
                                const ForwardOptions& opts = {}) const;

    /// Mean cross-entropy of the batch; tweets must be labeled.
    ad::Var loss(ad::Tape& tape, std::span<const Tweet* const> batch);

    /// Class probabilities per tweet; batches run in parallel.
    std::vector<std::array<double, kNumClasses>> predict_proba(std::span<const Tweet> tweets,
                                                               std::size_t batch_size = 64) const;
    std::vector<Sentiment> predict(std::span<const Tweet> tweets, std::size_t batch_size = 64) const;

    void save(Checkpoint& ck) const;
    /// `words` must be the table the model was trained with when the word
    /// branch is frozen.
    static SsLstmModel load(const Checkpoint& ck, const EmbeddingTable* words);

private:
    SsLstmModel() = default;

    using Binder = std::function<ad::Var(std::size_t)>;
    ForwardTrace run(ad::Tape& tape, std::span<const Tweet* const> batch, const ForwardOptions& opts,
                     const Binder& bind) const;
    ad::Var char_branch(ad::Tape& tape, std::span<const Tweet* const> batch, const Binder& bind) const;
    ad::Var word_branch(ad::Tape& tape, std::span<const Tweet* const> batch, const Binder& bind) const;
    ad::Var lstm(ad::Tape& tape, ad::Var inputs, std::string_view branch, const std::vector<std::size_t>& offsets,
                 const std::vector<std::size_t>& lengths, std::size_t steps, const Binder& bind) const;
    void init_params(std::uint64_t seed);
    std::size_t param(std::string_view name) const;

    NeuralModelSpec spec_;
    CharVocabulary chars_;
    const EmbeddingTable* words_ = nullptr;
    std::size_t word_in_dim_ = 0;
    std::vector<std::string> word_vocab_;
    std::unordered_map<std::string, std::size_t> word_index_;
    ad::ParameterSet params_;
};

} // namespace sslstm
