#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sslstm {

enum class LangTag { Hin, Eng, Other };

/// Class order is fixed; it is the index order used by every model and metric.
enum class Sentiment { Positive = 0, Negative = 1, Neutral = 2 };
inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::array<Sentiment, kNumClasses> kAllSentiments{
    Sentiment::Positive, Sentiment::Negative, Sentiment::Neutral};

enum class Split { Train, Valid, Test, Other };

std::string_view to_string(LangTag tag);
std::string_view to_string(Sentiment label);
std::string_view to_string(Split split);

std::optional<LangTag> lang_tag_from_string(std::string_view s);
std::optional<Sentiment> sentiment_from_string(std::string_view s);

inline std::size_t class_index(Sentiment s) { return static_cast<std::size_t>(s); }
inline Sentiment sentiment_at(std::size_t i) { return kAllSentiments.at(i); }

struct Token {
    std::string text;
    LangTag lang = LangTag::Other;

    bool operator==(const Token&) const = default;
};

struct Tweet {
    std::string id;
    std::vector<Token> tokens;
    std::optional<Sentiment> label;

    std::size_t n_tokens() const { return tokens.size(); }
    bool operator==(const Tweet&) const = default;
};

struct Dataset {
    Split split = Split::Other;
    std::vector<Tweet> tweets;

    std::size_t size() const { return tweets.size(); }
    bool empty() const { return tweets.empty(); }
    bool operator==(const Dataset&) const = default;

    /// Throws std::invalid_argument on duplicate ids, empty tweets, bad
    /// tokens, or missing labels outside the test split.
    void validate() const;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what);

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Record grammar: `meta <id> [<label>]` header, then one `<token>\t<tag>`
/// line per token; records separated by one or more blank lines.
Dataset parse_dataset(std::istream& in, bool expect_labels, Split split = Split::Other);
Dataset parse_dataset(std::string_view text, bool expect_labels, Split split = Split::Other);
Dataset read_dataset_file(const std::filesystem::path& path, bool expect_labels, Split split = Split::Other);

void write_dataset(const Dataset& d, std::ostream& out);
std::string write_dataset(const Dataset& d);
void write_dataset_file(const Dataset& d, const std::filesystem::path& path);

using ClassCounts = std::array<std::size_t, kNumClasses>;

/// Counts per label; throws std::invalid_argument if any tweet is unlabeled.
ClassCounts class_distribution(const Dataset& d);

std::vector<Sentiment> gold_labels(const Dataset& d);

} // namespace sslstm
