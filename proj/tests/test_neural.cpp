#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "sslstm/checkpoint.hpp"
#include "sslstm/neural.hpp"
#include "sslstm/synthetic.hpp"
#include "sslstm/train.hpp"

#include <cmath>
#include <sstream>

using namespace sslstm;
using ad::Tensor;

namespace {

NeuralModelSpec tiny_spec(Branches b, std::size_t layers = 1)
{
    NeuralModelSpec s;
    s.branches = b;
    s.char_cnn.char_emb_dim = 3;
    s.char_cnn.filter_widths = {2, 3};
    s.char_cnn.output_dim = 5;
    s.lstm_hidden = 4;
    s.n_layers = layers;
    s.fc_hidden = 5;
    return s;
}

EmbeddingTable tiny_table(std::size_t dim, Rng& rng)
{
    EmbeddingTable t(dim);
    for (const char* w : {"abc", "bad", "cafe", "dig", "e", "fij"}) {
        std::vector<double> v(dim);
        for (double& x : v) x = rng.uniform(-1, 1);
        t.set(w, v);
    }
    return t;
}

Dataset random_dataset(Rng& rng, std::size_t n, std::size_t max_len)
{
    Dataset d;
    for (std::size_t i = 0; i < n; ++i) {
        d.tweets.push_back(oracle::random_tweet(rng, 1 + rng.below(max_len), "t" + std::to_string(i)));
    }
    return d;
}

void randomize(SsLstmModel& m, Rng& rng, double scale = 0.5)
{
    for (auto& p : m.params()) {
        for (double& x : p.value.data()) x = rng.uniform(-scale, scale);
    }
}

std::vector<const Tweet*> pointers(const Dataset& d)
{
    std::vector<const Tweet*> out;
    for (const auto& t : d.tweets) out.push_back(&t);
    return out;
}

double loss_value(SsLstmModel& m, std::span<const Tweet* const> batch)
{
    ad::Tape tape(false);
    return m.loss(tape, batch).value()[0];
}

// Worst relative error over all parameters of analytic vs central-difference
// gradients of the batch loss.
double full_gradient_error(SsLstmModel& m, std::span<const Tweet* const> batch)
{
    m.params().zero_grad();
    ad::Tape tape;
    tape.backward(m.loss(tape, batch));
    double worst = 0.0;
    for (auto& p : m.params()) {
        const auto numeric = oracle::numeric_gradient([&] { return loss_value(m, batch); }, p.value.data());
        worst = std::max(worst, oracle::relative_error(p.grad.data(), numeric));
    }
    return worst;
}

} // namespace

TEST_CASE("char cnn config splits output across widths")
{
    CharCnnConfig c;
    CHECK(c.filters_per_width() == std::vector<std::size_t>{85, 85, 86});
    c.filter_widths = {2, 3};
    c.output_dim = 5;
    CHECK(c.filters_per_width() == std::vector<std::size_t>{2, 3});
    c.filter_widths = {0, 3};
    CHECK_THROWS(c.validate());
}

TEST_CASE("char vocabulary reserves index 0 for unknown characters")
{
    Dataset d;
    d.tweets.push_back({"a", {{"ab", LangTag::Eng}, {"\xE0\xA4\x95", LangTag::Hin}}, Sentiment::Positive});
    const auto v = CharVocabulary::build(d.tweets);
    CHECK(v.size() == 4);
    CHECK(v.index(U'a') == 1);
    CHECK(v.index(U'b') == 2);
    CHECK(v.index(U'क') == 3);
    CHECK(v.index(U'z') == CharVocabulary::kUnk);
    const auto back = CharVocabulary::from_list(v.to_list());
    CHECK(back.to_list() == v.to_list());
    CHECK_THROWS(CharVocabulary::from_list({"61", "61"}));
}

TEST_CASE("spec json round trip")
{
    auto s = tiny_spec(Branches::WordOnly, 2);
    s.unfreeze_embeddings = true;
    const auto back = NeuralModelSpec::from_json(s.to_json());
    CHECK(back.to_json() == s.to_json());
    CHECK(back.n_layers == 2);
    CHECK(back.branches == Branches::WordOnly);
}

TEST_CASE("default dimensions: 10-token tweet gives 256x10 matrices and 3 probabilities")
{
    Rng rng(3);
    Dataset d = random_dataset(rng, 4, 6);
    EmbeddingTable table(300);
    std::vector<double> v(300, 0.1);
    table.set(d.tweets[0].tokens[0].text, v);
    auto m = SsLstmModel::create(NeuralModelSpec{}, d, &table, 1);
    const Tweet t = oracle::random_tweet(rng, 10, "x");
    const Tweet* batch[] = {&t};
    ad::Tape tape(false);
    const auto tr = m.forward(tape, batch);
    CHECK(tr.char_matrix->shape() == ad::Shape{256, 10});
    CHECK(tr.word_matrix->shape() == ad::Shape{256, 10});
    CHECK(tr.char_output->shape() == ad::Shape{128, 1});
    CHECK(tr.word_output->shape() == ad::Shape{128, 1});
    CHECK(tr.concat.shape() == ad::Shape{256, 1});
    CHECK(tr.probs.shape() == ad::Shape{3, 1});
}

TEST_CASE("char branch is total: short, unseen and Devanagari tokens give finite columns")
{
    Rng rng(4);
    Dataset d = random_dataset(rng, 3, 4);
    auto m = SsLstmModel::create(tiny_spec(Branches::CharOnly), d, nullptr, 2);
    Tweet t{"u", {{"a", LangTag::Eng}, {"\xE0\xA4\xA8\xE0\xA4\xB9\xE0\xA5\x80\xE0\xA4\x82", LangTag::Hin},
                  {"\xF0\x9F\x98\x80", LangTag::Other}, {"zzzzqqq", LangTag::Eng}}, std::nullopt};
    const Tweet* batch[] = {&t};
    ad::Tape tape(false);
    const auto tr = m.forward(tape, batch);
    REQUIRE(tr.char_matrix->shape() == ad::Shape{5, 4});
    for (double x : tr.char_matrix->value().data()) CHECK(std::isfinite(x));
    for (double x : tr.probs.value().data()) CHECK(std::isfinite(x));
}

TEST_CASE("word branch: identity projection, OOV columns are the UNK vector")
{
    Rng rng(5);
    EmbeddingTable table = tiny_table(5, rng);
    Dataset d = random_dataset(rng, 3, 4);
    auto m = SsLstmModel::create(tiny_spec(Branches::WordOnly), d, &table, 3);
    CHECK_FALSE(m.params().index_of("word.proj").has_value());

    Tweet t{"w", {{"bad", LangTag::Eng}, {"zzz", LangTag::Eng}, {"qq", LangTag::Eng}}, std::nullopt};
    const Tweet* batch[] = {&t};
    ad::Tape tape(false);
    const auto tr = m.forward(tape, batch);
    const Tensor& x = tr.word_matrix->value();
    const auto stored = *table.find("bad");
    const Tensor& unk = m.params()[*m.params().index_of("word.unk")].value;
    for (std::size_t r = 0; r < 5; ++r) {
        CHECK(x.at(r, 0) == stored[r]);
        CHECK(x.at(r, 1) == unk[r]);
        CHECK(x.at(r, 2) == unk[r]);
    }
}

TEST_CASE("word branch projects tables of another dimension to d")
{
    Rng rng(6);
    EmbeddingTable table = tiny_table(7, rng);
    Dataset d = random_dataset(rng, 3, 4);
    auto m = SsLstmModel::create(tiny_spec(Branches::WordOnly), d, &table, 3);
    CHECK(m.params()[*m.params().index_of("word.proj")].value.shape() == ad::Shape{5, 7});
    const Tweet* batch[] = {&d.tweets[0]};
    ad::Tape tape(false);
    CHECK(m.forward(tape, batch).word_matrix->shape()[0] == 5);
}

TEST_CASE("lstm with all-zero weights outputs zeros")
{
    Rng rng(7);
    Dataset d = random_dataset(rng, 4, 5);
    auto m = SsLstmModel::create(tiny_spec(Branches::CharOnly, 2), d, nullptr, 4);
    for (auto& p : m.params()) {
        if (p.name.rfind("lstm.", 0) == 0) p.value.fill(0.0);
    }
    const auto batch = pointers(d);
    ad::Tape tape(false);
    const auto tr = m.forward(tape, batch);
    for (double x : tr.char_output->value().data()) CHECK(x == 0.0);
}

TEST_CASE("single-step lstm equals the gate equations evaluated by hand")
{
    Rng rng(8);
    Dataset d = random_dataset(rng, 2, 3);
    auto m = SsLstmModel::create(tiny_spec(Branches::CharOnly), d, nullptr, 5);
    randomize(m, rng);
    Tweet t{"one", {{"abc", LangTag::Eng}}, std::nullopt};
    const Tweet* batch[] = {&t};
    ad::Tape tape(false);
    const auto tr = m.forward(tape, batch);
    const Tensor& x = tr.char_matrix->value();
    const Tensor& W = m.params()[*m.params().index_of("lstm.char.0.W")].value;
    const Tensor& b = m.params()[*m.params().index_of("lstm.char.0.b")].value;
    const std::size_t H = 4, D = 5;
    auto pre = [&](std::size_t row) {
        double acc = b[row];
        for (std::size_t k = 0; k < D; ++k) acc += W.at(row, k) * x.at(k, 0);
        return acc;
    };
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    for (std::size_t j = 0; j < H; ++j) {
        const double i = sig(pre(j)), o = sig(pre(2 * H + j)), g = std::tanh(pre(3 * H + j));
        const double h = o * std::tanh(i * g);
        CHECK(tr.char_output->value()[j] == doctest::Approx(h).epsilon(1e-12));
    }
}

TEST_CASE("lstm output gradient matches finite differences")
{
    Rng rng(9);
    Dataset d = random_dataset(rng, 3, 5);
    for (std::size_t layers : {1, 2}) {
        auto m = SsLstmModel::create(tiny_spec(Branches::CharOnly, layers), d, nullptr, 6);
        randomize(m, rng);
        const auto batch = pointers(d);
        auto objective = [&](ad::Tape& tape) { return ad::sum(*m.forward(tape, batch).char_output); };
        m.params().zero_grad();
        ad::Tape tape;
        tape.backward(objective(tape));
        for (auto& p : m.params()) {
            if (p.name.rfind("head.", 0) == 0) continue;
            const auto numeric = oracle::numeric_gradient(
                [&] {
                    ad::Tape t(false);
                    return objective(t).value()[0];
                },
                p.value.data());
            CHECK_MESSAGE(oracle::relative_error(p.grad.data(), numeric) < 1e-4, p.name);
        }
    }
}

TEST_CASE("full model gradients match finite differences for every branch configuration")
{
    Rng rng(10);
    EmbeddingTable table = tiny_table(6, rng);
    for (Branches b : {Branches::CharOnly, Branches::WordOnly, Branches::Dual}) {
        for (bool unfreeze : {false, true}) {
            if (b == Branches::CharOnly && unfreeze) continue;
            Dataset d = random_dataset(rng, 3, 4);
            d.tweets[0].tokens[0].text = "abc";
            d.tweets[1].tokens[0].text = "bad";
            auto spec = tiny_spec(b);
            spec.unfreeze_embeddings = unfreeze;
            auto m = SsLstmModel::create(spec, d, &table, 7);
            randomize(m, rng);
            const auto batch = pointers(d);
            CHECK_MESSAGE(full_gradient_error(m, batch) < 1e-4, to_string(b), " unfreeze=", unfreeze);
        }
    }
}

TEST_CASE("zeroed model predicts the uniform distribution")
{
    Rng rng(11);
    EmbeddingTable table = tiny_table(6, rng);
    Dataset d = random_dataset(rng, 5, 6);
    auto m = SsLstmModel::create(tiny_spec(Branches::Dual), d, &table, 8);
    for (auto& p : m.params()) p.value.fill(0.0);
    for (const auto& p : m.predict_proba(d.tweets)) {
        for (double x : p) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    }
}

TEST_CASE("padding and batch composition leave outputs unchanged")
{
    Rng rng(12);
    EmbeddingTable table = tiny_table(6, rng);
    Dataset d = random_dataset(rng, 6, 9);
    auto m = SsLstmModel::create(tiny_spec(Branches::Dual, 2), d, &table, 9);
    randomize(m, rng);
    const auto batch = pointers(d);
    ad::Tape t0(false), t1(false);
    const Tensor plain = m.forward(t0, batch).probs.value();
    const Tensor padded = m.forward(t1, batch, {.extra_padding = 7}).probs.value();
    CHECK(oracle::max_abs_diff(plain.data(), padded.data()) < 1e-12);
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const Tweet* one[] = {batch[j]};
        ad::Tape t(false);
        const Tensor alone = m.forward(t, one).probs.value();
        for (std::size_t c = 0; c < 3; ++c) CHECK(alone[c] == plain.at(c, j));
    }
}

TEST_CASE("dual model with one branch zeroed equals the single-branch model")
{
    Rng rng(13);
    EmbeddingTable table = tiny_table(6, rng);
    Dataset d = random_dataset(rng, 4, 5);
    auto dual = SsLstmModel::create(tiny_spec(Branches::Dual), d, &table, 10);
    randomize(dual, rng);
    const auto batch = pointers(d);
    for (Branches single : {Branches::CharOnly, Branches::WordOnly}) {
        auto m = SsLstmModel::create(tiny_spec(single), d, &table, 11);
        for (auto& p : m.params()) {
            const Tensor& src = dual.params()[*dual.params().index_of(p.name)].value;
            if (p.name == "head.W1") {
                const std::size_t off = single == Branches::CharOnly ? 0 : 4;
                for (std::size_t r = 0; r < 5; ++r) {
                    for (std::size_t c = 0; c < 4; ++c) p.value.at(r, c) = src.at(r, c + off);
                }
            } else {
                p.value = src;
            }
        }
        ad::Tape t0(false), t1(false);
        const ForwardOptions opts{.zero_char_branch = single == Branches::WordOnly,
                                  .zero_word_branch = single == Branches::CharOnly};
        const Tensor a = dual.forward(t0, batch, opts).probs.value();
        const Tensor b = m.forward(t1, batch).probs.value();
        CHECK(oracle::max_abs_diff(a.data(), b.data()) < 1e-12);
    }
}

TEST_CASE("checkpoint round trip reproduces predictions and guards the embedding table")
{
    Rng rng(14);
    EmbeddingTable table = tiny_table(6, rng);
    Dataset d = random_dataset(rng, 5, 6);
    auto m = SsLstmModel::create(tiny_spec(Branches::Dual, 2), d, &table, 12);
    randomize(m, rng);
    Checkpoint ck;
    m.save(ck);
    std::stringstream ss;
    ck.write(ss);
    const Checkpoint back = Checkpoint::read(ss);
    const auto loaded = SsLstmModel::load(back, &table);
    CHECK(loaded.predict_proba(d.tweets) == m.predict_proba(d.tweets));

    EmbeddingTable other = table;
    std::vector<double> v(6, 0.0);
    other.set("abc", v);
    CHECK_THROWS_WITH(SsLstmModel::load(back, &other), doctest::Contains("mismatch"));
    CHECK_THROWS(SsLstmModel::load(back, nullptr));
}

TEST_CASE("unfrozen embeddings are trainable and survive a checkpoint without the table")
{
    Rng rng(15);
    EmbeddingTable table = tiny_table(6, rng);
    Dataset d = random_dataset(rng, 4, 4);
    d.tweets[0].tokens[0].text = "cafe";
    auto spec = tiny_spec(Branches::WordOnly);
    spec.unfreeze_embeddings = true;
    auto m = SsLstmModel::create(spec, d, &table, 13);
    const auto& row = m.params()[*m.params().index_of("word.table")];
    CHECK(row.value.shape() == ad::Shape{1, 6});
    CHECK(row.value[0] == (*table.find("cafe"))[0]);
    Checkpoint ck;
    m.save(ck);
    const auto loaded = SsLstmModel::load(ck, nullptr);
    CHECK(loaded.predict_proba(d.tweets) == m.predict_proba(d.tweets));
}

TEST_CASE("word-branch model without a table is rejected")
{
    Rng rng(16);
    Dataset d = random_dataset(rng, 2, 3);
    CHECK_THROWS(SsLstmModel::create(tiny_spec(Branches::Dual), d, nullptr, 1));
}

TEST_CASE("training contract: epochs=0, determinism, patience=0, empty data")
{
    Rng rng(17);
    EmbeddingTable table = tiny_table(6, rng);
    Dataset train = random_dataset(rng, 24, 5);
    Dataset valid = random_dataset(rng, 9, 5);
    auto make = [&] { return SsLstmModel::create(tiny_spec(Branches::Dual), train, &table, 21); };

    NeuralTrainConfig cfg;
    cfg.batch_size = 8;
    cfg.lr = 0.01;

    cfg.epochs = 0;
    const auto untrained = train_model(make(), train, valid, cfg);
    CHECK(untrained.history.empty());
    CHECK_FALSE(untrained.best_epoch.has_value());
    CHECK(untrained.epochs_retained() == 0);

    cfg.epochs = 4;
    cfg.patience = 10;
    const auto a = train_model(make(), train, valid, cfg);
    const auto b = train_model(make(), train, valid, cfg);
    REQUIRE(a.model.params().size() == b.model.params().size());
    for (std::size_t i = 0; i < a.model.params().size(); ++i) {
        CHECK(a.model.params()[i].value == b.model.params()[i].value);
    }
    CHECK(a.history.size() == 4);

    cfg.epochs = 12;
    cfg.patience = 0;
    const auto p0 = train_model(make(), train, valid, cfg);
    REQUIRE(p0.best_epoch.has_value());
    CHECK(p0.epochs_retained() == *p0.best_epoch + 1);
    // Every recorded epoch up to the best improved; the one after it (if any) did not.
    for (std::size_t e = 1; e <= *p0.best_epoch; ++e) {
        CHECK(p0.history[e].valid.macro_f1 > p0.history[e - 1].valid.macro_f1);
    }
    if (p0.history.size() > *p0.best_epoch + 1) {
        CHECK(p0.history.size() == *p0.best_epoch + 2);
        CHECK(p0.stopped_early == (p0.history.size() < 12));
    }

    CHECK_THROWS(train_model(make(), Dataset{}, valid, cfg));
    CHECK_THROWS(train_model(make(), train, Dataset{}, cfg));
}

TEST_CASE("grid search: cardinality, single cell, trained beats untrained")
{
    SyntheticConfig sc;
    sc.n_train = 90;
    sc.n_valid = 45;
    sc.n_test = 0;
    sc.embedding_dim = 8;
    const auto corpus = make_synthetic_corpus(sc);
    auto spec = tiny_spec(Branches::WordOnly);
    spec.lstm_hidden = 8;
    const ModelFactory factory = [&](const NeuralModelSpec& s, std::uint64_t seed) {
        return SsLstmModel::create(s, corpus.train, &corpus.embeddings, seed);
    };
    NeuralTrainConfig cfg;
    cfg.batch_size = 16;

    const auto one = grid_search({{0.01}, {1}, {1}}, spec, factory, corpus.train, corpus.valid, cfg);
    CHECK(one.cells.size() == 1);
    CHECK(one.best == 0);

    const auto six = grid_search({{0.01, 0.02, 0.03}, {1, 2}, {1}}, spec, factory, corpus.train, corpus.valid, cfg);
    const std::string report = grid_report(six);
    CHECK(std::count(report.begin(), report.end(), '\n') == 7);
    CHECK(six.cells[1].cell.n_layers == 2);
    CHECK(six.cells[2].cell.lr == 0.02);

    const auto two = grid_search({{0.02}, {1}, {0, 15}}, spec, factory, corpus.train, corpus.valid, cfg);
    CHECK(two.cells[1].valid.weighted_f1 > two.cells[0].valid.weighted_f1);
    CHECK(two.best == 1);

    CHECK_THROWS(grid_search({{}, {1}, {1}}, spec, factory, corpus.train, corpus.valid, cfg));
}
