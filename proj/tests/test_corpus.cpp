#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "sslstm/corpus.hpp"
#include "sslstm/synthetic.hpp"

#include <map>
#include <set>

using namespace sslstm;

namespace {

std::size_t error_line(const std::string& text, bool expect_labels = false)
{
    try {
        parse_dataset(text, expect_labels);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

} // namespace

TEST_CASE("minimal record")
{
    const auto d = parse_dataset("meta 1 positive\nAll\tEng\nthe\tEng\n", true);
    REQUIRE(d.tweets.size() == 1);
    CHECK(d.tweets[0].id == "1");
    CHECK(d.tweets[0].n_tokens() == 2);
    CHECK(d.tweets[0].label == Sentiment::Positive);
}

TEST_CASE("ten-token example tweet keeps its tag sequence")
{
    const std::string text = "meta 7 positive\nCongratulations\tEng\nSir\tEng\nJi\tHin\nAbhi\tHin\nfield\tEng\n"
                             "mein\tHin\nbahut\tHin\nkaam\tHin\nhai\tHin\n.\tO\n";
    const auto d = parse_dataset(text, true);
    REQUIRE(d.tweets.size() == 1);
    const std::vector<LangTag> want{LangTag::Eng, LangTag::Eng, LangTag::Hin, LangTag::Hin, LangTag::Eng,
                                    LangTag::Hin, LangTag::Hin, LangTag::Hin, LangTag::Hin, LangTag::Other};
    std::vector<LangTag> got;
    for (const auto& t : d.tweets[0].tokens) got.push_back(t.lang);
    CHECK(got == want);
}

TEST_CASE("unlabeled headers, CRLF and trailing blank lines")
{
    const auto d = parse_dataset("meta a\r\nx\tO\r\n\r\n\n\nmeta b\ny\tHin\n\n\n", false, Split::Test);
    REQUIRE(d.tweets.size() == 2);
    CHECK_FALSE(d.tweets[0].label.has_value());
    CHECK(d.tweets[1].tokens[0].text == "y");
    CHECK(d.split == Split::Test);
}

TEST_CASE("each documented malformation is rejected with its line number")
{
    CHECK(error_line("meta 1 positive\nhello\tFra\n") == 2);
    CHECK(error_line("meta 1 happy\nhello\tEng\n") == 1);
    CHECK(error_line("metadata 1\nhello\tEng\n") == 1);
    CHECK(error_line("meta\nhello\tEng\n") == 1);
    CHECK(error_line("meta 1 positive extra\nhello\tEng\n") == 1);
    CHECK(error_line("meta 1 positive\nhello Eng\n") == 2);
    CHECK(error_line("meta 1 positive\nhello\tEng\textra\n") == 2);
    CHECK(error_line("meta 1 positive\n\nmeta 2 neutral\nx\tO\n") == 2);
    CHECK(error_line("meta 1 positive\nx\tO\n\nmeta 1 neutral\ny\tO\n") == 4);
    CHECK(error_line("meta 1\nx\tO\n", true) == 1);
    CHECK(error_line("meta 1 positive\nx\xff\tO\n") == 2);
    CHECK(error_line("meta 1 positive\nx\teng\n") == 2);

    try {
        parse_dataset("meta 1 positive\nhello\tFra\n", false);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("Fra") != std::string::npos);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("write of an empty dataset is empty")
{
    CHECK(write_dataset(Dataset{}).empty());
    CHECK(parse_dataset("", true).tweets.empty());
}

TEST_CASE("round trip on fuzzed datasets")
{
    Rng rng(2024);
    for (int i = 0; i < 200; ++i) {
        const Dataset d = oracle::fuzz_dataset(rng, rng.below(20), false);
        const std::string text = write_dataset(d);
        const Dataset back = parse_dataset(text, false);
        CHECK(back == d);
        CHECK(write_dataset(back) == text);
    }
}

TEST_CASE("class distribution agrees with a recount")
{
    Rng rng(5);
    Dataset three;
    for (int i = 0; i < 3; ++i) three.tweets.push_back({"p" + std::to_string(i), {{"x", LangTag::Eng}}, Sentiment::Positive});
    CHECK(class_distribution(three) == ClassCounts{3, 0, 0});

    const Dataset d = oracle::fuzz_dataset(rng, 100, true);
    std::map<std::string, std::size_t> naive;
    for (const auto& t : d.tweets) naive[std::string(to_string(*t.label))]++;
    const auto counts = class_distribution(d);
    CHECK(counts[0] == naive["positive"]);
    CHECK(counts[1] == naive["negative"]);
    CHECK(counts[2] == naive["neutral"]);
    CHECK(counts[0] + counts[1] + counts[2] == 100);

    Dataset unlabeled = d;
    unlabeled.tweets[4].label.reset();
    CHECK_THROWS(class_distribution(unlabeled));
}

TEST_CASE("surface strings round trip")
{
    for (Sentiment s : kAllSentiments) CHECK(sentiment_from_string(to_string(s)) == s);
    CHECK(lang_tag_from_string("O") == LangTag::Other);
    CHECK_FALSE(lang_tag_from_string("Other").has_value());
    CHECK_FALSE(sentiment_from_string("Positive").has_value());
}

TEST_CASE("dataset validation")
{
    Dataset d;
    d.split = Split::Train;
    d.tweets.push_back({"a", {{"x", LangTag::Eng}}, std::nullopt});
    CHECK_THROWS(d.validate());
    d.split = Split::Test;
    CHECK_NOTHROW(d.validate());
    d.tweets.push_back({"a", {{"y", LangTag::Eng}}, std::nullopt});
    CHECK_THROWS(d.validate());
}

TEST_CASE("synthetic corpus: sizes, balance and seeding")
{
    SyntheticConfig cfg;
    cfg.seed = 4;
    cfg.embedding_dim = 8;
    const auto c = make_synthetic_corpus(cfg);
    CHECK(c.train.size() == 600);
    CHECK(c.valid.size() == 150);
    CHECK(c.test.size() == 150);
    for (const auto* d : {&c.train, &c.valid, &c.test}) {
        const auto dist = class_distribution(*d);
        CHECK(dist[0] == dist[1]);
        CHECK(dist[1] == dist[2]);
    }
    CHECK(write_dataset(make_synthetic_corpus(cfg).train) == write_dataset(c.train));
    cfg.seed = 5;
    CHECK(write_dataset(make_synthetic_corpus(cfg).train) != write_dataset(c.train));
}

TEST_CASE("synthetic labels follow the lexicon with negation flipping polarity")
{
    // Independent copy of the generator's word lists.
    const std::set<std::string> positive{"good", "great", "happy", "love", "awesome",
                                         "accha", "badhiya", "mast", "khush", "shandaar"};
    const std::set<std::string> negative{"bad", "sad", "hate", "worst", "terrible",
                                         "bura", "ganda", "bekar", "dukhi", "bakwas"};
    const std::set<std::string> negation{"not", "never", "nahi", "mat"};
    for (std::uint64_t seed : {1, 2, 3}) {
        SyntheticConfig cfg;
        cfg.seed = seed;
        cfg.variant_rate = 0.0;
        cfg.embedding_dim = 8;
        std::size_t negated = 0, polar = 0;
        for (const auto& t : make_synthetic_corpus(cfg).train.tweets) {
            std::set<Sentiment> implied;
            bool has_negated_cue = false;
            for (std::size_t i = 0; i < t.tokens.size(); ++i) {
                const auto& w = t.tokens[i].text;
                if (!positive.count(w) && !negative.count(w)) continue;
                bool pos = positive.count(w) > 0;
                if (i > 0 && negation.count(t.tokens[i - 1].text)) {
                    pos = !pos;
                    has_negated_cue = true;
                }
                implied.insert(pos ? Sentiment::Positive : Sentiment::Negative);
            }
            if (*t.label == Sentiment::Neutral) {
                CHECK(implied.empty());
            } else {
                ++polar;
                negated += has_negated_cue;
                REQUIRE(implied.size() == 1);
                CHECK(*implied.begin() == *t.label);
            }
        }
        const double rate = static_cast<double>(negated) / static_cast<double>(polar);
        CHECK(rate > 0.22);
        CHECK(rate < 0.38);
    }
}

TEST_CASE("synthetic variant spellings recur across splits")
{
    SyntheticConfig cfg;
    cfg.seed = 2;
    cfg.embedding_dim = 8;
    const auto c = make_synthetic_corpus(cfg);
    std::set<std::string> train_forms, test_forms;
    for (const auto& t : c.train.tweets) {
        for (const auto& tok : t.tokens) {
            if (tok.lang != LangTag::Other && !c.embeddings.contains(tok.text)) train_forms.insert(tok.text);
        }
    }
    std::size_t test_variants = 0, seen = 0;
    for (const auto& t : c.test.tweets) {
        for (const auto& tok : t.tokens) {
            if (tok.lang == LangTag::Other || c.embeddings.contains(tok.text)) continue;
            test_forms.insert(tok.text);
            ++test_variants;
            seen += train_forms.count(tok.text);
        }
    }
    // Twenty lexicon words with at most two variant spellings each.
    CHECK(train_forms.size() <= 40);
    CHECK(test_variants > 0);
    CHECK(static_cast<double>(seen) / static_cast<double>(test_variants) > 0.8);
}
