#include "sslstm/neural.hpp"

#include "sslstm/rng.hpp"
#include "sslstm/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace sslstm {

using ad::Tape;
using ad::Tensor;
using ad::Var;

std::vector<std::size_t> CharCnnConfig::filters_per_width() const
{
    validate();
    const std::size_t n = filter_widths.size();
    std::vector<std::size_t> out(n, output_dim / n);
    const std::size_t rem = output_dim % n;
    for (std::size_t i = 0; i < rem; ++i) {
        out[n - 1 - i] += 1;
    }
    return out;
}

std::size_t CharCnnConfig::max_width() const
{
    return filter_widths.empty() ? 0 : *std::max_element(filter_widths.begin(), filter_widths.end());
}

void CharCnnConfig::validate() const
{
    if (char_emb_dim == 0) {
        throw std::invalid_argument("char_emb_dim must be positive");
    }
    if (filter_widths.empty()) {
        throw std::invalid_argument("filter_widths must not be empty");
    }
    for (std::size_t w : filter_widths) {
        if (w == 0) {
            throw std::invalid_argument("filter widths must be >= 1");
        }
    }
    if (output_dim < filter_widths.size()) {
        throw std::invalid_argument("output_dim must allow at least one filter per width");
    }
}

CharVocabulary CharVocabulary::build(std::span<const Tweet> corpus)
{
    CharVocabulary v;
    for (const Tweet& t : corpus) {
        for (const Token& tok : t.tokens) {
            for (char32_t cp : text::decode_utf8(tok.text)) {
                v.add(cp);
            }
        }
    }
    return v;
}

CharVocabulary CharVocabulary::from_list(const std::vector<std::string>& chars)
{
    CharVocabulary v;
    for (const std::string& s : chars) {
        std::uint32_t cp = 0;
        auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), cp, 16);
        if (ec != std::errc{} || end != s.data() + s.size() || cp > 0x10FFFF) {
            throw std::runtime_error("bad code point in character vocabulary: " + s);
        }
        if (v.index_.contains(cp)) {
            throw std::runtime_error("duplicate code point in character vocabulary: " + s);
        }
        v.add(cp);
    }
    return v;
}

void CharVocabulary::add(char32_t cp)
{
    if (index_.emplace(cp, chars_.size() + 1).second) {
        chars_.push_back(cp);
    }
}

std::size_t CharVocabulary::index(char32_t cp) const
{
    auto it = index_.find(cp);
    return it == index_.end() ? kUnk : it->second;
}

std::vector<std::string> CharVocabulary::to_list() const
{
    std::vector<std::string> out;
    out.reserve(chars_.size());
    for (char32_t cp : chars_) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%x", static_cast<unsigned>(cp));
        out.emplace_back(buf);
    }
    return out;
}

std::string_view to_string(Branches b)
{
    switch (b) {
    case Branches::Dual: return "dual";
    case Branches::CharOnly: return "char";
    case Branches::WordOnly: return "word";
    }
    return "?";
}

std::optional<Branches> branches_from_string(std::string_view s)
{
    if (s == "dual") return Branches::Dual;
    if (s == "char") return Branches::CharOnly;
    if (s == "word") return Branches::WordOnly;
    return std::nullopt;
}

void NeuralModelSpec::validate() const
{
    char_cnn.validate();
    if (lstm_hidden == 0 || n_layers == 0 || fc_hidden == 0) {
        throw std::invalid_argument("lstm_hidden, n_layers and fc_hidden must be positive");
    }
}

std::string NeuralModelSpec::to_json() const
{
    nlohmann::ordered_json j;
    j["branches"] = std::string(to_string(branches));
    j["char_emb_dim"] = char_cnn.char_emb_dim;
    j["filter_widths"] = char_cnn.filter_widths;
    j["output_dim"] = char_cnn.output_dim;
    j["lstm_hidden"] = lstm_hidden;
    j["n_layers"] = n_layers;
    j["fc_hidden"] = fc_hidden;
    j["unfreeze_embeddings"] = unfreeze_embeddings;
    return j.dump();
}

NeuralModelSpec NeuralModelSpec::from_json(const std::string& text)
{
    const auto j = nlohmann::json::parse(text);
    NeuralModelSpec s;
    auto b = branches_from_string(j.at("branches").get<std::string>());
    if (!b) {
        throw std::runtime_error("unknown branches value in model spec");
    }
    s.branches = *b;
    s.char_cnn.char_emb_dim = j.at("char_emb_dim").get<std::size_t>();
    s.char_cnn.filter_widths = j.at("filter_widths").get<std::vector<std::size_t>>();
    s.char_cnn.output_dim = j.at("output_dim").get<std::size_t>();
    s.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
    s.n_layers = j.at("n_layers").get<std::size_t>();
    s.fc_hidden = j.at("fc_hidden").get<std::size_t>();
    s.unfreeze_embeddings = j.at("unfreeze_embeddings").get<bool>();
    s.validate();
    return s;
}

namespace {

std::string lstm_name(std::string_view branch, std::size_t layer, std::string_view what)
{
    return "lstm." + std::string(branch) + "." + std::to_string(layer) + "." + std::string(what);
}

Tensor uniform_tensor(ad::Shape shape, double limit, std::uint64_t seed)
{
    Tensor t(std::move(shape));
    Rng rng(seed);
    for (double& x : t.data()) {
        x = rng.uniform(-limit, limit);
    }
    return t;
}

} // namespace

SsLstmModel SsLstmModel::create(const NeuralModelSpec& spec, const Dataset& train, const EmbeddingTable* words,
                                std::uint64_t seed)
{
    std::vector<std::string> vocab;
    if (spec.uses_word() && spec.unfreeze_embeddings && words != nullptr) {
        std::unordered_map<std::string, bool> seen;
        for (const Tweet& t : train.tweets) {
            for (const Token& tok : t.tokens) {
                if (words->contains(tok.text) && seen.emplace(tok.text, true).second) {
                    vocab.push_back(tok.text);
                }
            }
        }
    }
    return create(spec, CharVocabulary::build(train.tweets), words, std::move(vocab), seed);
}

SsLstmModel SsLstmModel::create(const NeuralModelSpec& spec, CharVocabulary chars, const EmbeddingTable* words,
                                std::vector<std::string> word_vocab, std::uint64_t seed)
{
    spec.validate();
    SsLstmModel m;
    m.spec_ = spec;
    m.chars_ = std::move(chars);
    if (spec.uses_word()) {
        if (words == nullptr || words->dim() == 0) {
            throw std::runtime_error("word-branch model requires an embedding table");
        }
        m.words_ = words;
        m.word_in_dim_ = words->dim();
        if (spec.unfreeze_embeddings) {
            m.word_vocab_ = std::move(word_vocab);
            for (std::size_t i = 0; i < m.word_vocab_.size(); ++i) {
                if (!m.word_index_.emplace(m.word_vocab_[i], i).second) {
                    throw std::runtime_error("duplicate word in model vocabulary: " + m.word_vocab_[i]);
                }
            }
        }
    }
    m.init_params(seed);
    return m;
}

void SsLstmModel::init_params(std::uint64_t seed)
{
    const std::size_t d = spec_.embedding_dim();
    const std::size_t h = spec_.lstm_hidden;
    std::uint64_t counter = 0;
    auto add_uniform = [&](std::string name, ad::Shape shape, double limit) {
        params_.add(std::move(name), uniform_tensor(std::move(shape), limit, derive_seed(seed, counter++)));
    };
    auto add_zeros = [&](std::string name, ad::Shape shape) {
        ++counter;
        params_.add(std::move(name), Tensor::zeros(std::move(shape)));
    };

    if (spec_.uses_char()) {
        const auto& cc = spec_.char_cnn;
        add_uniform("char.emb", {chars_.size(), cc.char_emb_dim}, 0.1);
        const auto filters = cc.filters_per_width();
        for (std::size_t i = 0; i < cc.filter_widths.size(); ++i) {
            const std::size_t w = cc.filter_widths[i];
            add_uniform("char.conv.w" + std::to_string(w), {filters[i], cc.char_emb_dim, w},
                        ad::glorot_limit(cc.char_emb_dim * w, filters[i]));
        }
        add_zeros("char.conv.b", {d});
    }
    if (spec_.uses_word()) {
        const std::size_t e = word_in_dim_;
        add_uniform("word.unk", {e, 1}, 0.05);
        if (e != d) {
            add_uniform("word.proj", {d, e}, ad::glorot_limit(e, d));
        }
        if (spec_.unfreeze_embeddings) {
            Tensor table({std::max<std::size_t>(word_vocab_.size(), 1), e});
            for (std::size_t r = 0; r < word_vocab_.size(); ++r) {
                auto v = words_->find(word_vocab_[r]);
                std::copy(v->begin(), v->end(), table.ptr() + r * e);
            }
            ++counter;
            params_.add("word.table", std::move(table));
        }
    }
    for (std::string_view branch : {std::string_view("char"), std::string_view("word")}) {
        if ((branch == "char" && !spec_.uses_char()) || (branch == "word" && !spec_.uses_word())) {
            continue;
        }
        for (std::size_t l = 0; l < spec_.n_layers; ++l) {
            const std::size_t in = l == 0 ? d : h;
            add_uniform(lstm_name(branch, l, "W"), {4 * h, in}, ad::glorot_limit(in, 4 * h));
            add_uniform(lstm_name(branch, l, "U"), {4 * h, h}, ad::glorot_limit(h, 4 * h));
            Tensor b({4 * h});
            for (std::size_t r = h; r < 2 * h; ++r) {
                b[r] = 1.0;
            }
            ++counter;
            params_.add(lstm_name(branch, l, "b"), std::move(b));
        }
    }
    const std::size_t o = spec_.concat_dim();
    add_uniform("head.W1", {spec_.fc_hidden, o}, ad::glorot_limit(o, spec_.fc_hidden));
    add_zeros("head.b1", {spec_.fc_hidden});
    add_uniform("head.W2", {kNumClasses, spec_.fc_hidden}, ad::glorot_limit(spec_.fc_hidden, kNumClasses));
    add_zeros("head.b2", {kNumClasses});
}

std::size_t SsLstmModel::param(std::string_view name) const
{
    auto i = params_.index_of(name);
    if (!i) {
        throw std::logic_error("model has no parameter " + std::string(name));
    }
    return *i;
}

ad::Var SsLstmModel::char_branch(Tape& /*tape*/, std::span<const Tweet* const> batch, const Binder& bind) const
{
    const auto& cc = spec_.char_cnn;
    const std::size_t gap = cc.max_width() - 1;

    // All tokens of the batch form one character stream, separated by enough
    // zero columns that no filter window spans two tokens.
    std::vector<std::ptrdiff_t> stream;
    std::vector<std::pair<std::size_t, std::size_t>> segments;
    for (const Tweet* t : batch) {
        for (const Token& tok : t->tokens) {
            const std::u32string cps = text::decode_utf8(tok.text);
            const std::size_t start = stream.size();
            if (cps.empty()) {
                stream.push_back(-1);
            }
            for (char32_t cp : cps) {
                stream.push_back(static_cast<std::ptrdiff_t>(chars_.index(cp)));
            }
            segments.emplace_back(start, stream.size() - start);
            stream.insert(stream.end(), gap, -1);
        }
    }

    Var emb = ad::embedding_lookup(bind(param("char.emb")), std::move(stream));
    std::optional<Var> features;
    for (std::size_t w : cc.filter_widths) {
        Var conv = ad::conv1d(emb, bind(param("char.conv.w" + std::to_string(w))));
        Var pooled = ad::maxpool_segments(conv, segments);
        features = features ? ad::concat_rows(*features, pooled) : pooled;
    }
    return ad::relu(ad::add_bias(*features, bind(param("char.conv.b"))));
}

ad::Var SsLstmModel::word_branch(Tape& tape, std::span<const Tweet* const> batch, const Binder& bind) const
{
    const std::size_t e = word_in_dim_;
    std::size_t n = 0;
    for (const Tweet* t : batch) {
        n += t->tokens.size();
    }

    Tensor oov({1, n});
    std::optional<Var> known;
    if (spec_.unfreeze_embeddings) {
        std::vector<std::ptrdiff_t> idx;
        idx.reserve(n);
        for (const Tweet* t : batch) {
            for (const Token& tok : t->tokens) {
                auto it = word_index_.find(tok.text);
                if (it == word_index_.end()) {
                    oov[idx.size()] = 1.0;
                    idx.push_back(-1);
                } else {
                    idx.push_back(static_cast<std::ptrdiff_t>(it->second));
                }
            }
        }
        known = ad::embedding_lookup(bind(param("word.table")), std::move(idx));
    } else {
        Tensor x({e, n});
        std::size_t j = 0;
        for (const Tweet* t : batch) {
            for (const Token& tok : t->tokens) {
                if (auto v = words_->find(tok.text)) {
                    for (std::size_t r = 0; r < e; ++r) {
                        x.at(r, j) = (*v)[r];
                    }
                } else {
                    oov[j] = 1.0;
                }
                ++j;
            }
        }
        known = tape.constant(std::move(x));
    }
    Var cols = ad::add(*known, ad::matmul(bind(param("word.unk")), tape.constant(std::move(oov))));
    if (e != spec_.embedding_dim()) {
        cols = ad::matmul(bind(param("word.proj")), cols);
    }
    return cols;
}

ad::Var SsLstmModel::lstm(Tape& tape, Var inputs, std::string_view branch, const std::vector<std::size_t>& offsets,
                          const std::vector<std::size_t>& lengths, std::size_t steps, const Binder& bind) const
{
    (void)tape;
    const std::size_t h = spec_.lstm_hidden;
    const std::size_t batch = offsets.size();

    std::vector<std::vector<std::uint8_t>> masks(steps, std::vector<std::uint8_t>(batch));
    std::vector<bool> all_active(steps, true);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t b = 0; b < batch; ++b) {
            masks[t][b] = t < lengths[b];
            if (!masks[t][b]) {
                all_active[t] = false;
            }
        }
    }

    // Layer 0 input projections for every token at once; columns are then
    // gathered per step.
    Var proj0 = ad::add_bias(ad::matmul(bind(param(lstm_name(branch, 0, "W"))), inputs),
                             bind(param(lstm_name(branch, 0, "b"))));

    std::vector<Var> below;
    Var h_last{};
    for (std::size_t l = 0; l < spec_.n_layers; ++l) {
        Var U = bind(param(lstm_name(branch, l, "U")));
        std::optional<Var> W, bias;
        if (l > 0) {
            W = bind(param(lstm_name(branch, l, "W")));
            bias = bind(param(lstm_name(branch, l, "b")));
        }
        std::optional<Var> hs, cs;
        std::vector<Var> outputs;
        outputs.reserve(steps);
        for (std::size_t t = 0; t < steps; ++t) {
            Var x;
            if (l == 0) {
                std::vector<std::ptrdiff_t> idx(batch);
                for (std::size_t b = 0; b < batch; ++b) {
                    idx[b] = t < lengths[b] ? static_cast<std::ptrdiff_t>(offsets[b] + t) : -1;
                }
                x = ad::gather_cols(proj0, std::move(idx));
            } else {
                x = ad::add_bias(ad::matmul(*W, below[t]), *bias);
            }
            Var gates = hs ? ad::add(x, ad::matmul(U, *hs)) : x;
            Var i = ad::sigmoid(ad::slice_rows(gates, 0, h));
            Var f = ad::sigmoid(ad::slice_rows(gates, h, h));
            Var o = ad::sigmoid(ad::slice_rows(gates, 2 * h, h));
            Var g = ad::tanh(ad::slice_rows(gates, 3 * h, h));
            Var c_new = cs ? ad::add(ad::mul(f, *cs), ad::mul(i, g)) : ad::mul(i, g);
            Var h_new = ad::mul(o, ad::tanh(c_new));
            if (cs && !all_active[t]) {
                c_new = ad::where_cols(masks[t], c_new, *cs);
                h_new = ad::where_cols(masks[t], h_new, *hs);
            }
            cs = c_new;
            hs = h_new;
            outputs.push_back(h_new);
        }
        below = std::move(outputs);
        h_last = *hs;
    }
    return h_last;
}

ForwardTrace SsLstmModel::run(Tape& tape, std::span<const Tweet* const> batch, const ForwardOptions& opts,
                              const Binder& bind) const
{
    if (batch.empty()) {
        throw std::invalid_argument("forward on an empty batch");
    }
    ForwardTrace tr;
    std::size_t total = 0, longest = 0;
    for (const Tweet* t : batch) {
        if (t->tokens.empty()) {
            throw std::invalid_argument("tweet " + t->id + " has no tokens");
        }
        tr.offsets.push_back(total);
        tr.lengths.push_back(t->tokens.size());
        total += t->tokens.size();
        longest = std::max(longest, t->tokens.size());
    }
    const std::size_t steps = longest + opts.extra_padding;
    const std::size_t h = spec_.lstm_hidden;
    const std::size_t n = batch.size();

    std::optional<Var> o;
    if (spec_.uses_char()) {
        tr.char_matrix = char_branch(tape, batch, bind);
        tr.char_output = opts.zero_char_branch ? tape.constant(Tensor({h, n}))
                                               : lstm(tape, *tr.char_matrix, "char", tr.offsets, tr.lengths, steps, bind);
        o = tr.char_output;
    }
    if (spec_.uses_word()) {
        tr.word_matrix = word_branch(tape, batch, bind);
        tr.word_output = opts.zero_word_branch ? tape.constant(Tensor({h, n}))
                                               : lstm(tape, *tr.word_matrix, "word", tr.offsets, tr.lengths, steps, bind);
        o = o ? ad::concat_rows(*o, *tr.word_output) : *tr.word_output;
    }
    tr.concat = *o;
    Var hidden = ad::relu(ad::add_bias(ad::matmul(bind(param("head.W1")), tr.concat), bind(param("head.b1"))));
    Var logits = ad::add_bias(ad::matmul(bind(param("head.W2")), hidden), bind(param("head.b2")));
    tr.probs = ad::softmax(logits);
    return tr;
}

ForwardTrace SsLstmModel::forward(Tape& tape, std::span<const Tweet* const> batch, const ForwardOptions& opts)
{
    return run(tape, batch, opts, [&](std::size_t i) { return tape.param(params_[i]); });
}

ForwardTrace SsLstmModel::forward_frozen(Tape& tape, std::span<const Tweet* const> batch,
                                         const ForwardOptions& opts) const
{
    const ad::ParameterSet& ps = params_;
    return run(tape, batch, opts, [&](std::size_t i) { return tape.param(ps[i]); });
}

ad::Var SsLstmModel::loss(Tape& tape, std::span<const Tweet* const> batch)
{
    std::vector<std::size_t> gold;
    gold.reserve(batch.size());
    for (const Tweet* t : batch) {
        if (!t->label) {
            throw std::invalid_argument("tweet " + t->id + " is unlabeled");
        }
        gold.push_back(class_index(*t->label));
    }
    ForwardTrace tr = forward(tape, batch);
    return ad::cross_entropy(tr.probs, gold);
}

std::vector<std::array<double, kNumClasses>> SsLstmModel::predict_proba(std::span<const Tweet> tweets,
                                                                        std::size_t batch_size) const
{
    if (batch_size == 0) {
        throw std::invalid_argument("batch_size must be positive");
    }
    std::vector<std::array<double, kNumClasses>> out(tweets.size());
    const std::size_t n_batches = (tweets.size() + batch_size - 1) / batch_size;
    std::vector<std::string> errors(n_batches);

#pragma omp parallel for schedule(dynamic)
    for (std::size_t bi = 0; bi < n_batches; ++bi) {
        try {
            const std::size_t begin = bi * batch_size;
            const std::size_t end = std::min(tweets.size(), begin + batch_size);
            std::vector<const Tweet*> batch;
            for (std::size_t i = begin; i < end; ++i) {
                batch.push_back(&tweets[i]);
            }
            Tape tape(false);
            ForwardTrace tr = forward_frozen(tape, batch);
            const Tensor& p = tr.probs.value();
            for (std::size_t j = 0; j < batch.size(); ++j) {
                for (std::size_t c = 0; c < kNumClasses; ++c) {
                    out[begin + j][c] = p.at(c, j);
                }
            }
        } catch (const std::exception& e) {
            errors[bi] = e.what();
        }
    }
    for (const std::string& e : errors) {
        if (!e.empty()) {
            throw std::runtime_error(e);
        }
    }
    return out;
}

std::vector<Sentiment> SsLstmModel::predict(std::span<const Tweet> tweets, std::size_t batch_size) const
{
    std::vector<Sentiment> out;
    out.reserve(tweets.size());
    for (const auto& p : predict_proba(tweets, batch_size)) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < kNumClasses; ++c) {
            if (p[c] > p[best]) {
                best = c;
            }
        }
        out.push_back(sentiment_at(best));
    }
    return out;
}

void SsLstmModel::save(Checkpoint& ck) const
{
    ck.set("model_family", "neural");
    ck.set("model_spec", spec_.to_json());
    ck.set("word_dim", std::to_string(word_in_dim_));
    if (spec_.uses_word() && !spec_.unfreeze_embeddings) {
        ck.set("word_table_fingerprint", std::to_string(words_->fingerprint()));
    }
    ck.lists.emplace_back("chars", chars_.to_list());
    if (spec_.unfreeze_embeddings) {
        ck.lists.emplace_back("word_vocab", word_vocab_);
    }
    ck.add_parameters(params_);
}

SsLstmModel SsLstmModel::load(const Checkpoint& ck, const EmbeddingTable* words)
{
    if (ck.require("model_family") != "neural") {
        throw std::runtime_error("spec/checkpoint mismatch: checkpoint does not hold a neural model");
    }
    const NeuralModelSpec spec = NeuralModelSpec::from_json(ck.require("model_spec"));
    const std::size_t word_dim = std::stoull(ck.require("word_dim"));
    const auto* chars = ck.list("chars");
    if (chars == nullptr) {
        throw std::runtime_error("checkpoint is missing the character vocabulary");
    }

    SsLstmModel m;
    m.spec_ = spec;
    m.chars_ = CharVocabulary::from_list(*chars);
    if (spec.uses_word()) {
        if (spec.unfreeze_embeddings) {
            const auto* vocab = ck.list("word_vocab");
            if (vocab == nullptr) {
                throw std::runtime_error("checkpoint is missing the word vocabulary");
            }
            m.word_vocab_ = *vocab;
            for (std::size_t i = 0; i < m.word_vocab_.size(); ++i) {
                m.word_index_.emplace(m.word_vocab_[i], i);
            }
            m.words_ = words;
        } else {
            if (words == nullptr) {
                throw std::runtime_error("word-branch model requires an embedding table");
            }
            if (words->dim() != word_dim ||
                std::to_string(words->fingerprint()) != ck.require("word_table_fingerprint")) {
                throw std::runtime_error("spec/checkpoint mismatch: embedding table differs from the one used in training");
            }
            m.words_ = words;
        }
        m.word_in_dim_ = word_dim;
    }

    // Build the parameter layout, then overwrite every value from the checkpoint.
    if (spec.uses_word() && spec.unfreeze_embeddings) {
        const EmbeddingTable* saved = m.words_;
        EmbeddingTable placeholder(word_dim);
        m.words_ = &placeholder;
        std::vector<std::string> vocab = std::move(m.word_vocab_);
        m.word_vocab_.clear();
        m.init_params(0);
        m.word_vocab_ = std::move(vocab);
        m.words_ = saved;
        auto idx = m.params_.index_of("word.table");
        m.params_[*idx].value = Tensor({std::max<std::size_t>(m.word_vocab_.size(), 1), word_dim});
        m.params_[*idx].grad = Tensor({std::max<std::size_t>(m.word_vocab_.size(), 1), word_dim});
    } else {
        m.init_params(0);
    }
    ck.load_parameters(m.params_);
    return m;
}

} // namespace sslstm
