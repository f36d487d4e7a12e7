#include "sslstm/synthetic.hpp"

#include "sslstm/rng.hpp"

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sslstm {

namespace {

struct Word {
    std::string_view text;
    LangTag lang;
};

constexpr std::array kPositive{
    Word{"good", LangTag::Eng},   Word{"great", LangTag::Eng},  Word{"happy", LangTag::Eng},
    Word{"love", LangTag::Eng},   Word{"awesome", LangTag::Eng}, Word{"accha", LangTag::Hin},
    Word{"badhiya", LangTag::Hin}, Word{"mast", LangTag::Hin},  Word{"khush", LangTag::Hin},
    Word{"shandaar", LangTag::Hin},
};

constexpr std::array kNegative{
    Word{"bad", LangTag::Eng},    Word{"sad", LangTag::Eng},     Word{"hate", LangTag::Eng},
    Word{"worst", LangTag::Eng},  Word{"terrible", LangTag::Eng}, Word{"bura", LangTag::Hin},
    Word{"ganda", LangTag::Hin},  Word{"bekar", LangTag::Hin},   Word{"dukhi", LangTag::Hin},
    Word{"bakwas", LangTag::Hin},
};

constexpr std::array kNegation{
    Word{"not", LangTag::Eng},
    Word{"never", LangTag::Eng},
    Word{"nahi", LangTag::Hin},
    Word{"mat", LangTag::Hin},
};

constexpr std::array kFiller{
    Word{"match", LangTag::Eng},  Word{"today", LangTag::Eng},   Word{"movie", LangTag::Eng},
    Word{"went", LangTag::Eng},   Word{"friends", LangTag::Eng}, Word{"phone", LangTag::Eng},
    Word{"weather", LangTag::Eng}, Word{"office", LangTag::Eng}, Word{"train", LangTag::Eng},
    Word{"video", LangTag::Eng},  Word{"song", LangTag::Eng},    Word{"team", LangTag::Eng},
    Word{"aaj", LangTag::Hin},    Word{"kal", LangTag::Hin},     Word{"yaar", LangTag::Hin},
    Word{"bhai", LangTag::Hin},   Word{"ghar", LangTag::Hin},    Word{"kya", LangTag::Hin},
    Word{"hai", LangTag::Hin},    Word{"tha", LangTag::Hin},     Word{"woh", LangTag::Hin},
    Word{"mera", LangTag::Hin},   Word{"log", LangTag::Hin},     Word{"khana", LangTag::Hin},
    Word{"film", LangTag::Hin},   Word{"gaana", LangTag::Hin},   Word{"sabko", LangTag::Hin},
};

constexpr std::array kEmoji{"\xF0\x9F\x98\x80", "\xF0\x9F\x98\x82", "\xF0\x9F\x99\x8F", "\xF0\x9F\x94\xA5"};

template <std::size_t N>
const Word& pick(Rng& rng, const std::array<Word, N>& words)
{
    return words[rng.below(N)];
}

bool is_vowel(char c)
{
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// Elongates the last vowel run or drops/swaps one interior letter.
std::string variant(Rng& rng, std::string_view w)
{
    std::string s(w);
    if (rng.bernoulli(0.5)) {
        std::size_t pos = s.size();
        for (std::size_t i = s.size(); i-- > 0;) {
            if (is_vowel(s[i])) {
                pos = i;
                break;
            }
        }
        if (pos == s.size()) pos = s.size() - 1;
        s.insert(pos, 2 + rng.below(4), s[pos]);
        return s;
    }
    if (s.size() < 4) {
        return s + s.back() + s.back() + s.back();
    }
    const std::size_t i = 1 + rng.below(s.size() - 2);
    if (rng.bernoulli(0.5)) {
        s.erase(i, 1);
    } else {
        std::swap(s[i], s[i + 1 < s.size() ? i + 1 : i - 1]);
    }
    return s;
}

// A few recurring spellings per lexicon word, fixed for the whole corpus.
class Variants {
public:
    Variants(Rng& rng, std::size_t per_word)
    {
        for (const auto* group : {&kPositive, &kNegative}) {
            for (const Word& w : *group) {
                auto& forms = forms_[std::string(w.text)];
                for (std::size_t i = 0; i < per_word; ++i) forms.push_back(variant(rng, w.text));
            }
        }
    }

    Token token(Rng& rng, const Word& w, double rate) const
    {
        if (rng.bernoulli(rate)) {
            const auto& forms = forms_.at(std::string(w.text));
            return {forms[rng.below(forms.size())], w.lang};
        }
        return {std::string(w.text), w.lang};
    }

private:
    std::map<std::string, std::vector<std::string>> forms_;
};

Tweet make_tweet(Rng& rng, Sentiment label, const SyntheticConfig& cfg, const Variants& variants, std::string id)
{
    // Core phrase: one lexicon word, possibly negated so that the label still holds.
    std::vector<Token> core;
    const bool negated = rng.bernoulli(cfg.negation_rate);
    if (negated) {
        const Word& neg = pick(rng, kNegation);
        core.push_back({std::string(neg.text), neg.lang});
    }
    switch (label) {
    case Sentiment::Positive:
        core.push_back(variants.token(rng, negated ? pick(rng, kNegative) : pick(rng, kPositive), cfg.variant_rate));
        break;
    case Sentiment::Negative:
        core.push_back(variants.token(rng, negated ? pick(rng, kPositive) : pick(rng, kNegative), cfg.variant_rate));
        break;
    case Sentiment::Neutral: {
        const Word& f = pick(rng, kFiller);
        core.push_back({std::string(f.text), f.lang});
        break;
    }
    }

    std::vector<Token> tokens;
    const std::size_t n_filler = 2 + rng.below(8);
    for (std::size_t i = 0; i < n_filler; ++i) {
        const Word& f = pick(rng, kFiller);
        tokens.push_back({std::string(f.text), f.lang});
    }
    if (label != Sentiment::Neutral && rng.bernoulli(cfg.extra_cue_rate)) {
        const Word& w = label == Sentiment::Positive ? pick(rng, kPositive) : pick(rng, kNegative);
        tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(rng.below(tokens.size() + 1)),
                      variants.token(rng, w, cfg.variant_rate));
    }
    const std::size_t at = rng.below(tokens.size() + 1);
    tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(at), core.begin(), core.end());

    if (rng.bernoulli(cfg.noise_rate)) {
        tokens.insert(tokens.begin(), Token{"@user" + std::to_string(rng.below(50)), LangTag::Other});
    }
    if (rng.bernoulli(cfg.noise_rate)) {
        tokens.push_back({"https://t.co/x" + std::to_string(rng.below(1000)), LangTag::Other});
    }
    if (rng.bernoulli(cfg.noise_rate)) {
        tokens.push_back({"#" + std::string(pick(rng, kFiller).text), LangTag::Other});
    }
    if (rng.bernoulli(cfg.noise_rate)) {
        tokens.push_back({kEmoji[rng.below(kEmoji.size())], LangTag::Other});
    }
    return {std::move(id), std::move(tokens), label};
}

Dataset make_split(Rng& rng, Split split, std::size_t n, const SyntheticConfig& cfg, const Variants& variants)
{
    std::vector<Sentiment> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = sentiment_at(i % kNumClasses);
    }
    rng.shuffle(std::span<Sentiment>(labels));
    Dataset d;
    d.split = split;
    const std::string prefix = "syn-" + std::string(to_string(split)) + "-";
    for (std::size_t i = 0; i < n; ++i) {
        d.tweets.push_back(make_tweet(rng, labels[i], cfg, variants, prefix + std::to_string(i)));
    }
    return d;
}

std::vector<double> unit_direction(Rng& rng, std::size_t dim)
{
    std::vector<double> v(dim);
    double norm = 0.0;
    for (double& x : v) {
        x = rng.uniform(-1.0, 1.0);
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

// Each group shares a unit-length direction; words add independent noise of
// norm about `noise`, so same-group words are close as in pretrained tables.
template <std::size_t N>
void add_group(EmbeddingTable& table, Rng& rng, const std::array<Word, N>& words, double noise)
{
    const std::size_t dim = table.dim();
    const std::vector<double> centre = unit_direction(rng, dim);
    const double spread = noise * std::sqrt(3.0 / static_cast<double>(dim));
    std::vector<double> v(dim);
    for (const Word& w : words) {
        for (std::size_t i = 0; i < dim; ++i) {
            v[i] = centre[i] + rng.uniform(-spread, spread);
        }
        table.set(std::string(w.text), v);
    }
}

} // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticConfig& cfg)
{
    Rng rng(derive_seed(cfg.seed, 0));
    const Variants variants(rng, cfg.variants_per_word);
    SyntheticCorpus c;
    c.train = make_split(rng, Split::Train, cfg.n_train, cfg, variants);
    c.valid = make_split(rng, Split::Valid, cfg.n_valid, cfg, variants);
    c.test = make_split(rng, Split::Test, cfg.n_test, cfg, variants);

    Rng emb_rng(derive_seed(cfg.seed, 1));
    c.embeddings = EmbeddingTable(cfg.embedding_dim);
    add_group(c.embeddings, emb_rng, kPositive, 0.6);
    add_group(c.embeddings, emb_rng, kNegative, 0.6);
    add_group(c.embeddings, emb_rng, kNegation, 0.6);
    add_group(c.embeddings, emb_rng, kFiller, 1.0);
    return c;
}

} // namespace sslstm
