#include "sslstm/preprocess.hpp"

#include "sslstm/text.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <stdexcept>

namespace sslstm {

namespace {

// Mirrors data/stopwords.txt. Negations ("not", "nahi", "na") are deliberately
// absent: removing them would invert sentiment.
constexpr std::string_view kDefaultStopwords[] = {
    "a", "an", "the", "is", "am", "are", "was", "were", "be", "been", "to", "of", "in", "on", "at",
    "for", "and", "or", "it", "its", "this", "that", "these", "those", "i", "me", "my", "we", "our",
    "you", "your", "he", "she", "they", "them", "his", "her", "with", "as", "by", "so", "rt", "hai",
    "hain", "ho", "hi", "ka", "ki", "ke", "ko", "se", "mein", "ye", "yeh", "wo", "woh", "aur", "bhi",
    "toh", "ek", "tha", "thi", "kya"};

std::string strip_leading_hashes(std::string_view s)
{
    const auto pos = s.find_first_not_of('#');
    return pos == std::string_view::npos ? std::string() : std::string(s.substr(pos));
}

// Form the token takes once the later in-place rewrites (hash stripping,
// elongation) have run. URL and mention detection look at it too so that a
// second pass over cleaned text finds nothing new.
std::string probe_form(std::string_view s, const PreprocessConfig& cfg)
{
    std::string out(s);
    if (cfg.strip_hash_prefix) out = strip_leading_hashes(out);
    if (cfg.max_char_run != kUnlimitedRun) out = normalize_elongation(out, cfg.max_char_run);
    return out;
}

bool emoji_only(const std::u32string& cps)
{
    bool any = false;
    for (char32_t cp : cps) {
        if (text::is_emoji(cp)) {
            any = true;
        } else if (!text::is_emoji_component(cp)) {
            return false;
        }
    }
    return any;
}

std::string strip_emoji(const std::u32string& cps)
{
    std::u32string kept;
    for (char32_t cp : cps) {
        if (!text::is_emoji(cp) && !text::is_emoji_component(cp)) kept.push_back(cp);
    }
    return text::encode_utf8(kept);
}

bool has_devanagari(std::string_view s)
{
    const auto cps = text::decode_utf8(s);
    return std::any_of(cps.begin(), cps.end(), text::is_devanagari);
}

} // namespace

std::set<std::string> default_stopwords()
{
    std::set<std::string> out;
    for (auto w : kDefaultStopwords) out.emplace(w);
    return out;
}

std::set<std::string> load_stopwords(std::istream& in)
{
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto fields = text::split_fields(line);
        if (fields.empty() || fields[0].starts_with("//")) continue;
        out.emplace(fields[0]);
    }
    return out;
}

std::set<std::string> load_stopwords(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open stopword file '" + path.string() + "'");
    return load_stopwords(in);
}

PreprocessConfig PreprocessConfig::identity()
{
    PreprocessConfig cfg;
    cfg.lowercase = false;
    cfg.drop_urls = false;
    cfg.mention_placeholder.reset();
    cfg.strip_hash_prefix = false;
    cfg.drop_punct_tokens = false;
    cfg.drop_devanagari = false;
    cfg.max_char_run = kUnlimitedRun;
    cfg.stopwords.clear();
    cfg.emoji_policy = EmojiPolicy::Keep;
    cfg.contractions.clear();
    return cfg;
}

void PreprocessConfig::validate() const
{
    if (max_char_run < 1) throw std::invalid_argument("max_char_run must be >= 1");
    if (mention_placeholder
        && (mention_placeholder->empty() || text::contains_whitespace(*mention_placeholder))) {
        throw std::invalid_argument("mention placeholder must be non-empty and contain no whitespace");
    }
    for (const auto& [from, to] : contractions) {
        if (to.empty() || text::contains_whitespace(to)) {
            throw std::invalid_argument("contraction expansion for '" + from + "' must be a single token");
        }
    }
}

bool is_url(std::string_view s)
{
    return s.starts_with("http://") || s.starts_with("https://") || s.starts_with("www.");
}

bool is_mention(std::string_view s) { return s.size() > 1 && s.front() == '@'; }

bool is_punct_only(std::string_view s)
{
    if (s.empty()) return false;
    const auto cps = text::decode_utf8(s);
    return std::all_of(cps.begin(), cps.end(), text::is_punct_or_symbol);
}

bool contains_emoji(std::string_view s)
{
    const auto cps = text::decode_utf8(s);
    return std::any_of(cps.begin(), cps.end(), text::is_emoji);
}

std::string normalize_elongation(std::string_view token_text, std::size_t max_char_run)
{
    if (max_char_run < 1) throw std::invalid_argument("max_char_run must be >= 1");
    const auto cps = text::decode_utf8(token_text);
    std::u32string out;
    out.reserve(cps.size());
    std::size_t run = 0;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        run = (i > 0 && cps[i] == cps[i - 1]) ? run + 1 : 1;
        if (run <= max_char_run) out.push_back(cps[i]);
    }
    return text::encode_utf8(out);
}

namespace steps {

std::vector<Token> lowercase(std::vector<Token> tokens, const PreprocessConfig& cfg)
{
    if (!cfg.lowercase) return tokens;
    for (auto& t : tokens) t.text = text::ascii_lower(t.text);
    return tokens;
}

std::vector<Token> remove_urls(std::vector<Token> tokens, const PreprocessConfig& cfg)
{
    if (!cfg.drop_urls) return tokens;
    std::erase_if(tokens, [&](const Token& t) { return is_url(t.text) || is_url(probe_form(t.text, cfg)); });
    return tokens;
}

std::vector<Token> replace_mentions(std::vector<Token> tokens, const PreprocessConfig& cfg)
{
    if (!cfg.mention_placeholder) return tokens;
    const std::string placeholder =
        cfg.lowercase ? text::ascii_lower(*cfg.mention_placeholder) : *cfg.mention_placeholder;
    for (auto& t : tokens) {
        if (is_mention(t.text) || is_mention(probe_form(t.text, cfg))) t.text = placeholder;
    }
    return tokens;
}

std::vector<Token> strip_hashes(std::vector<Token> tokens, const PreprocessConfig& cfg)
{
    if (!cfg.strip_hash_prefix) return tokens;
    for (auto& t : tokens) t.text = strip_leading_hashes(t.text);
    std::erase_if(tokens, [](const Token& t) { return t.text.empty(); });
    return tokens;
}

std::vector<Token> apply_emoji_policy(std::vector<Token> tokens, const PreprocessConfig& cfg)
{
    if (cfg.emoji_policy == EmojiPolicy::Keep) return tokens;
    std::vector<Token> out;
    out.reserve(tokens.size());
    for (auto& t : tokens) {
        const auto cps = text::decode_utf8(t.text);
        if (!std::any_of(cps.begin(), cps.end(), text::is_emoji)) {
            out.push_back(std::move(t));
            continue;
        }
        if (emoji_only(cps)) {
            if (cfg.emoji_policy == EmojiPolicy::Placeholder) {
                out.push_back(Token{std::string(kEmojiPlaceholder), t.lang});
            }
            continue;
        }
        // Mixed text and emoji: keep the text part only.
        auto stripped = strip_emoji(cps);
        if (!stripped.empty()) out.push_back(Token{std::move(stripped), t.lang});
    }
    return out;
}

std::vector<Token> drop_punctuation(std::vector<Token> tokens, const PreprocessConfig& cfg)
{
    if (cfg.drop_punct_tokens) {
        // Emoji are symbols too, but they belong to the emoji policy.
        std::erase_if(tokens, [](const Token& t) { return is_punct_only(t.text) && !contains_emoji(t.text); });
    }
    if (cfg.drop_devanagari) {
        std::erase_if(tokens, [](const Token& t) { return has_devanagari(t.text); });
    }
    return tokens;
}

std::vector<Token> normalize_elongations(std::vector<Token> tokens, const PreprocessConfig& cfg)
{
    if (cfg.max_char_run != kUnlimitedRun) {
        for (auto& t : tokens) t.text = normalize_elongation(t.text, cfg.max_char_run);
    }
    if (!cfg.contractions.empty()) {
        for (auto& t : tokens) {
            if (auto it = cfg.contractions.find(t.text); it != cfg.contractions.end()) t.text = it->second;
        }
    }
    return tokens;
}

std::vector<Token> remove_stopwords(std::vector<Token> tokens, const PreprocessConfig& cfg)
{
    if (cfg.stopwords.empty()) return tokens;
    std::erase_if(tokens, [&](const Token& t) { return cfg.stopwords.contains(t.text); });
    return tokens;
}

} // namespace steps

Tweet clean_tweet(const Tweet& t, const PreprocessConfig& cfg)
{
    auto tokens = steps::lowercase(t.tokens, cfg);
    tokens = steps::remove_urls(std::move(tokens), cfg);
    tokens = steps::replace_mentions(std::move(tokens), cfg);
    tokens = steps::strip_hashes(std::move(tokens), cfg);
    tokens = steps::apply_emoji_policy(std::move(tokens), cfg);
    tokens = steps::drop_punctuation(std::move(tokens), cfg);
    tokens = steps::normalize_elongations(std::move(tokens), cfg);
    tokens = steps::remove_stopwords(std::move(tokens), cfg);
    if (tokens.empty()) tokens.push_back(Token{std::string(kEmptyPlaceholder), LangTag::Other});
    return Tweet{t.id, std::move(tokens), t.label};
}

Dataset clean_dataset(const Dataset& d, const PreprocessConfig& cfg)
{
    cfg.validate();
    Dataset out;
    out.split = d.split;
    out.tweets.resize(d.tweets.size());
    const auto n = static_cast<std::ptrdiff_t>(d.tweets.size());
#pragma omp parallel for schedule(static) if (n > 256)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out.tweets[static_cast<std::size_t>(i)] = clean_tweet(d.tweets[static_cast<std::size_t>(i)], cfg);
    }
    return out;
}

CleanSummary summarize_cleaning(const Dataset& before, const Dataset& after)
{
    CleanSummary s;
    s.tweets = after.size();
    for (const auto& t : before.tweets) s.tokens_before += t.n_tokens();
    for (const auto& t : after.tweets) {
        s.tokens_after += t.n_tokens();
        if (t.n_tokens() == 1 && t.tokens[0].text == kEmptyPlaceholder) ++s.empty_fallbacks;
    }
    return s;
}

} // namespace sslstm
