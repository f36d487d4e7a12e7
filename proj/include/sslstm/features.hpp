#pragma once

#include "sslstm/corpus.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sslstm {

/// Dense token index with document frequencies.
class Vocabulary {
public:
    Vocabulary() = default;

    /// Tokens are indexed in first-occurrence order. Throws on an empty corpus.
    static Vocabulary build(std::span<const Tweet> corpus);

    std::optional<std::size_t> index_of(std::string_view token) const;
    const std::string& token(std::size_t index) const { return tokens_.at(index); }
    std::size_t document_frequency(std::size_t index) const { return df_.at(index); }
    std::size_t size() const { return tokens_.size(); }
    std::size_t n_documents() const { return n_documents_; }

    /// Keeps the `max_size` tokens with highest document frequency (ties by
    /// index); indices are reassigned densely in the original order.
    Vocabulary truncated(std::size_t max_size) const;

    /// Line format: `n_documents <n>` then `<token>\t<index>\t<df>` per entry.
    void write(std::ostream& out) const;
    static Vocabulary read(std::istream& in);

    bool operator==(const Vocabulary& other) const
    {
        return tokens_ == other.tokens_ && df_ == other.df_ && n_documents_ == other.n_documents_;
    }

private:
    void add(std::string token, std::size_t df);

    std::vector<std::string> tokens_;
    std::vector<std::size_t> df_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t n_documents_ = 0;
};

/// Smoothed idf: ln((1 + n_docs) / (1 + df)) + 1.
double smoothed_idf(std::size_t n_documents, std::size_t document_frequency);

class TfIdfModel {
public:
    TfIdfModel() = default;
    explicit TfIdfModel(Vocabulary vocab);

    static TfIdfModel fit(std::span<const Tweet> corpus);

    const Vocabulary& vocabulary() const { return vocab_; }
    double idf(std::size_t index) const { return idf_.at(index); }
    std::span<const double> idf() const { return idf_; }

    /// Raw count of `token` in `tweet` times its idf; 0 for unseen tokens.
    double weight(std::string_view token, const Tweet& tweet) const;

private:
    Vocabulary vocab_;
    std::vector<double> idf_;
};

enum class UnkPolicy { Zero, MeanOfAll, TrainableUnk };

class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dim, UnkPolicy policy = UnkPolicy::Zero);

    /// word2vec text format, optional `<count> <dim>` header. Duplicate tokens:
    /// last row wins and a warning is appended to `warnings` if given.
    static EmbeddingTable load(std::istream& in, std::vector<std::string>* warnings = nullptr);
    static EmbeddingTable load(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);
    void write(std::ostream& out) const;

    /// Inserts or replaces.
    void set(std::string token, std::span<const double> vec);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return tokens_.size(); }
    UnkPolicy unk_policy() const { return policy_; }
    void set_unk_policy(UnkPolicy p) { policy_ = p; }

    const std::vector<std::string>& tokens() const { return tokens_; }
    std::optional<std::span<const double>> find(std::string_view token) const;
    bool contains(std::string_view token) const { return index_.contains(std::string(token)); }

    /// Vector used for a token, falling back per the unk policy; TrainableUnk
    /// behaves like Zero here (trained UNK vectors live with the model).
    std::span<const double> lookup(std::string_view token) const;

    /// Order-sensitive hash of tokens and values; identifies a table in checkpoints.
    std::uint64_t fingerprint() const;

private:
    std::size_t dim_ = 0;
    UnkPolicy policy_ = UnkPolicy::Zero;
    std::vector<std::string> tokens_;
    std::vector<double> data_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<double> zero_;
    std::vector<double> sum_;
};

enum class FeatureKind { TfIdfSparse, EmbeddingMean, TfIdfWeightedEmbedding };

struct FeatureVector {
    std::vector<double> values;
    FeatureKind provenance = FeatureKind::EmbeddingMean;

    std::size_t size() const { return values.size(); }
};

FeatureVector tweet_vector_mean(const Tweet& t, const EmbeddingTable& e);

/// (sum_i tfidf(token_i) * e(token_i)) / N over all N token positions.
FeatureVector tweet_vector_tfidf_weighted(const Tweet& t, const EmbeddingTable& e, const TfIdfModel& m);

/// Same weighted average with an arbitrary per-position weight.
FeatureVector tweet_vector_weighted(const Tweet& t, const EmbeddingTable& e,
                                    const std::function<double(const Token&)>& weight);

/// Length-V tf-idf bag, L2-normalized (zero stays zero).
FeatureVector tfidf_sparse_vector(const Tweet& t, const TfIdfModel& m);

enum class Representation { TfIdf, EmbeddingMean, TfIdfWeighted };

std::string_view to_string(Representation r);
std::optional<Representation> representation_from_string(std::string_view s);

/// Fitted featurizer for the classical models.
class FeatureExtractor {
public:
    FeatureExtractor(Representation rep, TfIdfModel tfidf, const EmbeddingTable* embeddings);

    Representation representation() const { return rep_; }
    const TfIdfModel& tfidf() const { return tfidf_; }
    std::size_t dim() const;

    FeatureVector operator()(const Tweet& t) const;
    std::vector<FeatureVector> transform(const Dataset& d) const;

private:
    Representation rep_;
    TfIdfModel tfidf_;
    const EmbeddingTable* embeddings_;
};

} // namespace sslstm
