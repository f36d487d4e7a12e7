#include "sslstm/corpus.hpp"

#include "sslstm/text.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace sslstm {

std::string_view to_string(LangTag tag)
{
    switch (tag) {
    case LangTag::Hin: return "Hin";
    case LangTag::Eng: return "Eng";
    case LangTag::Other: return "O";
    }
    return "O";
}

std::string_view to_string(Sentiment label)
{
    switch (label) {
    case Sentiment::Positive: return "positive";
    case Sentiment::Negative: return "negative";
    case Sentiment::Neutral: return "neutral";
    }
    return "neutral";
}

std::string_view to_string(Split split)
{
    switch (split) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
    case Split::Other: return "other";
    }
    return "other";
}

std::optional<LangTag> lang_tag_from_string(std::string_view s)
{
    if (s == "Hin") return LangTag::Hin;
    if (s == "Eng") return LangTag::Eng;
    if (s == "O") return LangTag::Other;
    return std::nullopt;
}

std::optional<Sentiment> sentiment_from_string(std::string_view s)
{
    if (s == "positive") return Sentiment::Positive;
    if (s == "negative") return Sentiment::Negative;
    if (s == "neutral") return Sentiment::Neutral;
    return std::nullopt;
}

void Dataset::validate() const
{
    std::unordered_set<std::string> ids;
    for (const auto& t : tweets) {
        if (t.id.empty() || text::contains_whitespace(t.id)) {
            throw std::invalid_argument("tweet id '" + t.id + "' is empty or contains whitespace");
        }
        if (!ids.insert(t.id).second) throw std::invalid_argument("duplicate tweet id '" + t.id + "'");
        if (t.tokens.empty()) throw std::invalid_argument("tweet '" + t.id + "' has no tokens");
        for (const auto& tok : t.tokens) {
            if (tok.text.empty() || text::contains_whitespace(tok.text)) {
                throw std::invalid_argument("tweet '" + t.id + "' has an empty or whitespace-bearing token");
            }
        }
        if (split != Split::Test && !t.label) {
            throw std::invalid_argument("tweet '" + t.id + "' is unlabeled outside the test split");
        }
    }
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line)
{
}

namespace {

struct PendingRecord {
    Tweet tweet;
    std::size_t header_line = 0;
};

} // namespace

Dataset parse_dataset(std::istream& in, bool expect_labels, Split split)
{
    Dataset d;
    d.split = split;
    std::unordered_set<std::string> ids;
    std::optional<PendingRecord> current;

    auto finish = [&](std::size_t line_no) {
        if (!current) return;
        if (current->tweet.tokens.empty()) {
            throw ParseError(line_no, "empty tweet body for id '" + current->tweet.id + "'");
        }
        d.tweets.push_back(std::move(current->tweet));
        current.reset();
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!text::is_valid_utf8(line)) throw ParseError(line_no, "invalid UTF-8");

        const auto fields = text::split_fields(line);
        if (fields.empty()) {
            finish(line_no);
            continue;
        }

        if (!current) {
            if (fields[0] != "meta" || fields.size() < 2 || fields.size() > 3) {
                throw ParseError(line_no, "malformed header, expected 'meta <id> [<label>]'");
            }
            PendingRecord rec;
            rec.header_line = line_no;
            rec.tweet.id = std::string(fields[1]);
            if (!ids.insert(rec.tweet.id).second) {
                throw ParseError(line_no, "duplicate id '" + rec.tweet.id + "'");
            }
            if (fields.size() == 3) {
                const auto label = sentiment_from_string(fields[2]);
                if (!label) throw ParseError(line_no, "unknown sentiment '" + std::string(fields[2]) + "'");
                rec.tweet.label = *label;
            } else if (expect_labels) {
                throw ParseError(line_no, "missing sentiment label for id '" + rec.tweet.id + "'");
            }
            current = std::move(rec);
            continue;
        }

        const auto tab = line.find('\t');
        if (tab == std::string::npos || fields.size() != 2) {
            throw ParseError(line_no, "malformed token line, expected '<token>\\t<tag>'");
        }
        const std::string_view token_text = fields[0];
        const std::string_view tag_text = fields[1];
        const auto tag = lang_tag_from_string(tag_text);
        if (!tag) throw ParseError(line_no, "unknown language tag '" + std::string(tag_text) + "'");
        current->tweet.tokens.push_back(Token{std::string(token_text), *tag});
    }
    finish(line_no + 1);
    return d;
}

Dataset parse_dataset(std::string_view text, bool expect_labels, Split split)
{
    std::istringstream in{std::string(text)};
    return parse_dataset(in, expect_labels, split);
}

Dataset read_dataset_file(const std::filesystem::path& path, bool expect_labels, Split split)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    try {
        return parse_dataset(in, expect_labels, split);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path.string() + ": " + std::string(e.what()));
    }
}

void write_dataset(const Dataset& d, std::ostream& out)
{
    bool first = true;
    for (const auto& t : d.tweets) {
        if (!first) out << '\n';
        first = false;
        out << "meta " << t.id;
        if (t.label) out << ' ' << to_string(*t.label);
        out << '\n';
        for (const auto& tok : t.tokens) out << tok.text << '\t' << to_string(tok.lang) << '\n';
    }
}

std::string write_dataset(const Dataset& d)
{
    std::ostringstream out;
    write_dataset(d, out);
    return out.str();
}

void write_dataset_file(const Dataset& d, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    write_dataset(d, out);
}

ClassCounts class_distribution(const Dataset& d)
{
    ClassCounts counts{};
    for (const auto& t : d.tweets) {
        if (!t.label) throw std::invalid_argument("tweet '" + t.id + "' is unlabeled");
        ++counts[class_index(*t.label)];
    }
    return counts;
}

std::vector<Sentiment> gold_labels(const Dataset& d)
{
    std::vector<Sentiment> out;
    out.reserve(d.size());
    for (const auto& t : d.tweets) {
        if (!t.label) throw std::invalid_argument("tweet '" + t.id + "' is unlabeled");
        out.push_back(*t.label);
    }
    return out;
}

} // namespace sslstm
