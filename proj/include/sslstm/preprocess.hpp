#pragma once

#include "sslstm/corpus.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace sslstm {

enum class EmojiPolicy { Keep, Drop, Placeholder };

/// Disables elongation normalization.
inline constexpr std::size_t kUnlimitedRun = std::numeric_limits<std::size_t>::max();

inline constexpr std::string_view kEmptyPlaceholder = "<empty>";
inline constexpr std::string_view kEmojiPlaceholder = "<emoji>";

std::set<std::string> default_stopwords();
std::set<std::string> load_stopwords(std::istream& in);
std::set<std::string> load_stopwords(const std::filesystem::path& path);

struct PreprocessConfig {
    bool lowercase = true;
    bool drop_urls = true;
    /// nullopt leaves mentions untouched.
    std::optional<std::string> mention_placeholder = std::string("<user>");
    bool strip_hash_prefix = true;
    bool drop_punct_tokens = true;
    bool drop_devanagari = false;
    std::size_t max_char_run = 2;
    std::set<std::string> stopwords = default_stopwords();
    EmojiPolicy emoji_policy = EmojiPolicy::Placeholder;
    /// Short-form expansions ("cmng" -> "coming"); applied after elongation
    /// normalization. Ships empty.
    std::map<std::string, std::string> contractions;

    /// Every step disabled; clean_tweet is then the identity.
    static PreprocessConfig identity();

    void validate() const;
};

bool is_url(std::string_view token_text);
bool is_mention(std::string_view token_text);
bool is_punct_only(std::string_view token_text);
bool contains_emoji(std::string_view token_text);

/// Truncates every maximal run of one repeated code point to max_char_run.
std::string normalize_elongation(std::string_view token_text, std::size_t max_char_run);

/// The individual pipeline stages, in application order. Each maps a token
/// list to a token list and may be applied on its own.
namespace steps {
std::vector<Token> lowercase(std::vector<Token> tokens, const PreprocessConfig& cfg);
std::vector<Token> remove_urls(std::vector<Token> tokens, const PreprocessConfig& cfg);
std::vector<Token> replace_mentions(std::vector<Token> tokens, const PreprocessConfig& cfg);
std::vector<Token> strip_hashes(std::vector<Token> tokens, const PreprocessConfig& cfg);
std::vector<Token> apply_emoji_policy(std::vector<Token> tokens, const PreprocessConfig& cfg);
std::vector<Token> drop_punctuation(std::vector<Token> tokens, const PreprocessConfig& cfg);
std::vector<Token> normalize_elongations(std::vector<Token> tokens, const PreprocessConfig& cfg);
std::vector<Token> remove_stopwords(std::vector<Token> tokens, const PreprocessConfig& cfg);
} // namespace steps

Tweet clean_tweet(const Tweet& t, const PreprocessConfig& cfg);

/// Applies clean_tweet to every tweet (in parallel); split, ids and labels kept.
Dataset clean_dataset(const Dataset& d, const PreprocessConfig& cfg);

struct CleanSummary {
    std::size_t tweets = 0;
    std::size_t tokens_before = 0;
    std::size_t tokens_after = 0;
    std::size_t empty_fallbacks = 0;
};

CleanSummary summarize_cleaning(const Dataset& before, const Dataset& after);

} // namespace sslstm
