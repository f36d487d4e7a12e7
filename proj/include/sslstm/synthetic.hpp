#pragma once

#include "sslstm/corpus.hpp"
#include "sslstm/features.hpp"

#include <cstddef>
#include <cstdint>

namespace sslstm {

struct SyntheticConfig {
    std::uint64_t seed = 1;
    std::size_t n_train = 600;
    std::size_t n_valid = 150;
    std::size_t n_test = 150;
    /// Share of tweets whose sentiment phrase is negated.
    double negation_rate = 0.3;
    /// Chance that a positive or negative tweet carries a second, un-negated
    /// word of its own polarity.
    double extra_cue_rate = 0.5;
    /// Chance that a lexicon word is elongated or misspelled.
    double variant_rate = 0.25;
    /// Distinct variant spellings per lexicon word, shared by all splits.
    std::size_t variants_per_word = 2;
    /// Chance of each noise token (mention, URL, hashtag, emoji).
    double noise_rate = 0.15;
    std::size_t embedding_dim = 300;
};

struct SyntheticCorpus {
    Dataset train;
    Dataset valid;
    Dataset test;
    /// Vectors for every canonical word, clustered by word group; variants are absent.
    EmbeddingTable embeddings;
};

/// Three-class code-mixed corpus whose label is decided by sentiment lexicon
/// words. Positive and negative tweets negate a word of the opposite polarity
/// ("not bad" is positive); negated neutral tweets negate a filler word.
/// Misspelled and elongated forms come from a small per-corpus set per word.
/// Classes are balanced within each split.
SyntheticCorpus make_synthetic_corpus(const SyntheticConfig& cfg = {});

} // namespace sslstm
