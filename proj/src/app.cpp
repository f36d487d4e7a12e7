#include "sslstm/app.hpp"

#include "sslstm/checkpoint.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace sslstm::app {

using nlohmann::ordered_json;

namespace {

std::string_view emoji_policy_name(EmojiPolicy p)
{
    switch (p) {
    case EmojiPolicy::Keep: return "keep";
    case EmojiPolicy::Drop: return "drop";
    case EmojiPolicy::Placeholder: return "placeholder";
    }
    return "?";
}

EmojiPolicy emoji_policy_from(const std::string& s)
{
    if (s == "keep") return EmojiPolicy::Keep;
    if (s == "drop") return EmojiPolicy::Drop;
    if (s == "placeholder") return EmojiPolicy::Placeholder;
    throw std::invalid_argument("unknown emoji policy '" + s + "'");
}

std::string_view family_name(ModelFamily f)
{
    return f == ModelFamily::Neural ? "neural" : "classical";
}

ModelFamily family_from(const std::string& s)
{
    if (s == "neural") return ModelFamily::Neural;
    if (s == "classical") return ModelFamily::Classical;
    throw std::invalid_argument("unknown model family '" + s + "'");
}

ordered_json preprocess_json(const RunConfig& c)
{
    const PreprocessConfig& p = c.preprocess;
    ordered_json j;
    j["enabled"] = c.preprocess_enabled;
    j["lowercase"] = p.lowercase;
    j["drop_urls"] = p.drop_urls;
    j["mention_placeholder"] = p.mention_placeholder ? ordered_json(*p.mention_placeholder) : ordered_json(nullptr);
    j["strip_hash_prefix"] = p.strip_hash_prefix;
    j["drop_punct_tokens"] = p.drop_punct_tokens;
    j["drop_devanagari"] = p.drop_devanagari;
    j["max_char_run"] = p.max_char_run == kUnlimitedRun ? ordered_json(nullptr) : ordered_json(p.max_char_run);
    j["use_stopwords"] = c.use_stopwords;
    j["emoji_policy"] = std::string(emoji_policy_name(p.emoji_policy));
    j["contractions"] = ordered_json::object();
    for (const auto& [k, v] : p.contractions) {
        j["contractions"][k] = v;
    }
    return j;
}

ordered_json model_json(const ModelConfig& m)
{
    ordered_json j;
    j["family"] = std::string(family_name(m.family));
    j["classical_kind"] = std::string(to_string(m.classical_kind));
    j["representation"] = std::string(to_string(m.representation));
    j["max_features"] = m.max_features;
    j["mlp_hidden"] = m.mlp_hidden;
    const auto spec = ordered_json::parse(m.neural.to_json());
    for (auto it = spec.begin(); it != spec.end(); ++it) {
        j[it.key()] = it.value();
    }
    return j;
}

ordered_json config_json(const RunConfig& c)
{
    ordered_json j;
    j["seed"] = c.seed;
    j["paths"] = {{"train", c.paths.train.string()},       {"valid", c.paths.valid.string()},
                  {"test", c.paths.test.string()},         {"embeddings", c.paths.embeddings.string()},
                  {"stopwords", c.paths.stopwords.string()}, {"out", c.paths.out.string()}};
    j["preprocess"] = preprocess_json(c);
    j["model"] = model_json(c.model);
    ordered_json t;
    t["lr"] = c.train.lr ? ordered_json(*c.train.lr) : ordered_json(nullptr);
    t["epochs"] = c.train.epochs ? ordered_json(*c.train.epochs) : ordered_json(nullptr);
    t["batch_size"] = c.train.batch_size;
    t["patience"] = c.train.patience;
    t["clip_norm"] = c.train.clip_norm;
    t["optimizer"] = std::string(to_string(c.train.optimizer));
    t["l2_penalty"] = c.train.l2_penalty;
    j["train"] = t;
    j["grid"] = {{"learning_rates", c.grid.learning_rates},
                 {"n_layers", c.grid.n_layers},
                 {"epochs", c.grid.epochs}};
    return j;
}

void apply_preprocess(RunConfig& c, const ordered_json& j)
{
    PreprocessConfig& p = c.preprocess;
    c.preprocess_enabled = j.at("enabled").get<bool>();
    p.lowercase = j.at("lowercase").get<bool>();
    p.drop_urls = j.at("drop_urls").get<bool>();
    const auto& mention = j.at("mention_placeholder");
    p.mention_placeholder = mention.is_null() ? std::nullopt : std::optional(mention.get<std::string>());
    p.strip_hash_prefix = j.at("strip_hash_prefix").get<bool>();
    p.drop_punct_tokens = j.at("drop_punct_tokens").get<bool>();
    p.drop_devanagari = j.at("drop_devanagari").get<bool>();
    const auto& run = j.at("max_char_run");
    p.max_char_run = run.is_null() ? kUnlimitedRun : run.get<std::size_t>();
    c.use_stopwords = j.at("use_stopwords").get<bool>();
    p.emoji_policy = emoji_policy_from(j.at("emoji_policy").get<std::string>());
    p.contractions.clear();
    for (auto it = j.at("contractions").begin(); it != j.at("contractions").end(); ++it) {
        p.contractions[it.key()] = it.value().get<std::string>();
    }
}

ModelConfig parse_model(const ordered_json& j)
{
    ModelConfig m;
    m.family = family_from(j.at("family").get<std::string>());
    const auto kind = classical_kind_from_string(j.at("classical_kind").get<std::string>());
    if (!kind) throw std::invalid_argument("unknown classical_kind '" + j.at("classical_kind").get<std::string>() + "'");
    m.classical_kind = *kind;
    const auto rep = representation_from_string(j.at("representation").get<std::string>());
    if (!rep) throw std::invalid_argument("unknown representation '" + j.at("representation").get<std::string>() + "'");
    m.representation = *rep;
    m.max_features = j.at("max_features").get<std::size_t>();
    m.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
    ordered_json spec;
    for (const char* k : {"branches", "char_emb_dim", "filter_widths", "output_dim", "lstm_hidden", "n_layers",
                          "fc_hidden", "unfreeze_embeddings"}) {
        spec[k] = j.at(k);
    }
    m.neural = NeuralModelSpec::from_json(spec.dump());
    return m;
}

RunConfig parse_config(const ordered_json& j)
{
    RunConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& p = j.at("paths");
    c.paths.train = p.at("train").get<std::string>();
    c.paths.valid = p.at("valid").get<std::string>();
    c.paths.test = p.at("test").get<std::string>();
    c.paths.embeddings = p.at("embeddings").get<std::string>();
    c.paths.stopwords = p.at("stopwords").get<std::string>();
    c.paths.out = p.at("out").get<std::string>();
    apply_preprocess(c, j.at("preprocess"));
    c.model = parse_model(j.at("model"));
    const auto& t = j.at("train");
    c.train.lr = t.at("lr").is_null() ? std::nullopt : std::optional(t.at("lr").get<double>());
    c.train.epochs = t.at("epochs").is_null() ? std::nullopt : std::optional(t.at("epochs").get<std::size_t>());
    c.train.batch_size = t.at("batch_size").get<std::size_t>();
    c.train.patience = t.at("patience").get<std::size_t>();
    c.train.clip_norm = t.at("clip_norm").get<double>();
    const auto opt = optimizer_from_string(t.at("optimizer").get<std::string>());
    if (!opt) throw std::invalid_argument("unknown optimizer '" + t.at("optimizer").get<std::string>() + "'");
    c.train.optimizer = *opt;
    c.train.l2_penalty = t.at("l2_penalty").get<double>();
    const auto& g = j.at("grid");
    c.grid.learning_rates = g.at("learning_rates").get<std::vector<double>>();
    c.grid.n_layers = g.at("n_layers").get<std::vector<std::size_t>>();
    c.grid.epochs = g.at("epochs").get<std::vector<std::size_t>>();
    return c;
}

// Values in `user` replace those in `base`; objects merge recursively. Keys
// unknown to `base` are rejected, except inside free-form maps.
void merge_checked(ordered_json& base, const ordered_json& user, const std::string& where)
{
    if (!user.is_object()) throw std::invalid_argument("config section '" + where + "' must be an object");
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key = where.empty() ? it.key() : where + "." + it.key();
        if (!base.contains(it.key())) throw std::invalid_argument("unknown config key '" + key + "'");
        ordered_json& slot = base[it.key()];
        if (slot.is_object() && key != "preprocess.contractions") {
            merge_checked(slot, it.value(), key);
        } else {
            slot = it.value();
        }
    }
}

void set_path(ordered_json& root, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw std::invalid_argument("override '" + assignment + "' is not of the form key.path=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    ordered_json value = ordered_json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    ordered_json* node = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw std::invalid_argument("override key '" + key + "' has an empty component");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        ordered_json& next = (*node)[part];
        if (next.is_null()) next = ordered_json::object();
        if (!next.is_object()) throw std::invalid_argument("override key '" + key + "' conflicts with a value");
        node = &next;
        start = dot + 1;
    }
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
    if (!out) throw std::runtime_error("error writing " + p.string());
}

Dataset read_corpus(const fs::path& p, bool expect_labels, Split split)
{
    if (p.empty()) throw std::invalid_argument("no " + std::string(to_string(split)) + " file configured");
    if (!fs::exists(p)) throw std::runtime_error(p.string() + ": no such file");
    return read_dataset_file(p, expect_labels, split);
}

PreprocessConfig effective_preprocess(const RunConfig& c)
{
    PreprocessConfig p = c.preprocess;
    if (!c.use_stopwords) {
        p.stopwords.clear();
    } else if (!c.paths.stopwords.empty()) {
        p.stopwords = load_stopwords(c.paths.stopwords);
    }
    p.validate();
    return p;
}

std::shared_ptr<EmbeddingTable> load_embeddings(const fs::path& p, std::ostream* log)
{
    if (p.empty()) throw std::invalid_argument("missing embedding file: set paths.embeddings");
    if (!fs::exists(p)) throw std::runtime_error("missing embedding file: " + p.string());
    std::vector<std::string> warnings;
    auto table = std::make_shared<EmbeddingTable>(EmbeddingTable::load(p, &warnings));
    if (log) {
        for (const auto& w : warnings) *log << "warning: " << w << '\n';
    }
    return table;
}

bool needs_embeddings(const ModelConfig& m)
{
    if (m.family == ModelFamily::Neural) return m.neural.uses_word();
    return m.representation != Representation::TfIdf;
}

void save_run_metadata(Checkpoint& ck, const RunConfig& c, const PreprocessConfig& effective)
{
    ck.set("preprocess", preprocess_json(c).dump());
    ck.set("model_config", model_json(c.model).dump());
    if (c.preprocess_enabled) {
        ck.lists.emplace_back("stopwords", std::vector<std::string>(effective.stopwords.begin(),
                                                                    effective.stopwords.end()));
    }
}

void check_spec(const RunConfig& cfg, const Checkpoint& ck)
{
    const auto stored = ordered_json::parse(ck.require("model_config"));
    const auto wanted = model_json(cfg.model);
    for (const std::string& key : cfg.explicit_model_keys) {
        if (!stored.contains(key) || stored.at(key) != wanted.at(key)) {
            throw std::runtime_error("spec/checkpoint mismatch: model." + key + " is " + wanted.at(key).dump()
                                     + " in the config but "
                                     + (stored.contains(key) ? stored.at(key).dump() : std::string("absent"))
                                     + " in the checkpoint");
        }
    }
}

std::string format_double(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct PreparedData {
    Dataset train;
    Dataset valid;
    PreprocessConfig pre;
};

PreparedData prepare_training(const RunConfig& cfg, bool need_valid, std::ostream& out)
{
    PreparedData d;
    d.pre = effective_preprocess(cfg);
    Dataset train = read_corpus(cfg.paths.train, true, Split::Train);
    Dataset valid;
    if (need_valid || !cfg.paths.valid.empty()) valid = read_corpus(cfg.paths.valid, true, Split::Valid);
    if (train.tweets.empty()) throw std::invalid_argument("training set is empty");
    d.train = cfg.preprocess_enabled ? clean_dataset(train, d.pre) : std::move(train);
    d.valid = cfg.preprocess_enabled ? clean_dataset(valid, d.pre) : std::move(valid);
    out << "train: " << d.train.tweets.size() << " tweets, valid: " << d.valid.tweets.size() << " tweets\n";
    return d;
}

} // namespace

NeuralTrainConfig RunConfig::neural_train() const
{
    NeuralTrainConfig t;
    t.lr = train.lr.value_or(1e-3);
    t.epochs = train.epochs.value_or(30);
    t.batch_size = train.batch_size;
    t.patience = train.patience;
    t.clip_norm = train.clip_norm;
    t.optimizer = train.optimizer;
    t.seed = seed;
    return t;
}

TrainConfig RunConfig::classical_train() const
{
    TrainConfig t;
    t.lr = train.lr.value_or(2.0);
    t.epochs = train.epochs.value_or(100);
    t.batch_size = train.batch_size;
    t.l2_penalty = train.l2_penalty;
    t.seed = seed;
    t.mlp_hidden = model.mlp_hidden;
    return t;
}

std::string RunConfig::to_json() const
{
    return config_json(*this).dump(2) + "\n";
}

RunConfig resolve_config(const ConfigSources& sources)
{
    ordered_json merged = config_json(RunConfig{});
    ordered_json user = ordered_json::object();
    if (sources.file) {
        try {
            user = ordered_json::parse(read_file(*sources.file));
        } catch (const ordered_json::parse_error& e) {
            throw std::runtime_error(sources.file->string() + ": invalid JSON: " + e.what());
        }
    }
    for (const auto& o : sources.overrides) {
        set_path(user, o);
    }
    merge_checked(merged, user, "");
    if (sources.seed) merged["seed"] = *sources.seed;
    if (sources.out) merged["paths"]["out"] = sources.out->string();

    RunConfig c;
    try {
        c = parse_config(merged);
    } catch (const ordered_json::exception& e) {
        throw std::invalid_argument(std::string("invalid config value: ") + e.what());
    }
    if (user.contains("model")) {
        for (auto it = user["model"].begin(); it != user["model"].end(); ++it) {
            c.explicit_model_keys.insert(it.key());
        }
    }
    c.preprocess.validate();
    return c;
}

fs::path run_directory(const RunConfig& cfg)
{
    fs::path dir = cfg.paths.out;
    if (dir.empty()) {
        const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        localtime_r(&now, &tm);
        char buf[64];
        std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
        dir = fs::path("runs") / (std::string(buf) + "-seed" + std::to_string(cfg.seed));
    }
    fs::create_directories(dir);
    return dir;
}

LoadedModel LoadedModel::load(const fs::path& checkpoint, const RunConfig& cfg)
{
    const Checkpoint ck = Checkpoint::load(checkpoint);
    check_spec(cfg, ck);

    LoadedModel m;
    RunConfig stored;
    apply_preprocess(stored, ordered_json::parse(ck.require("preprocess")));
    m.preprocess_enabled_ = stored.preprocess_enabled;
    m.preprocess_ = stored.preprocess;
    m.preprocess_.stopwords.clear();
    if (const auto* sw = ck.list("stopwords")) {
        m.preprocess_.stopwords.insert(sw->begin(), sw->end());
    }

    const ModelConfig mc = parse_model(ordered_json::parse(ck.require("model_config")));
    m.family_ = family_from(ck.require("model_family"));
    if (needs_embeddings(mc) && !(mc.family == ModelFamily::Neural && mc.neural.unfreeze_embeddings)) {
        m.embeddings_ = load_embeddings(cfg.paths.embeddings, nullptr);
    }
    if (m.family_ == ModelFamily::Neural) {
        m.neural_.emplace(SsLstmModel::load(ck, m.embeddings_.get()));
    } else {
        const auto rep = representation_from_string(ck.require("representation"));
        if (!rep) throw std::runtime_error("checkpoint names unknown representation");
        if (m.embeddings_ && std::to_string(m.embeddings_->fingerprint()) != ck.require("embedding_fingerprint")) {
            throw std::runtime_error("spec/checkpoint mismatch: embedding table differs from the one used in training");
        }
        const auto* vocab_lines = ck.list("tfidf_vocab");
        if (!vocab_lines) throw std::runtime_error("checkpoint is missing the tf-idf vocabulary");
        std::string text;
        for (const auto& l : *vocab_lines) text += l + "\n";
        std::istringstream in(text);
        m.features_.emplace(*rep, TfIdfModel(Vocabulary::read(in)), m.embeddings_.get());
        m.classical_.emplace(ClassicalModel::load(ck));
    }
    return m;
}

std::string LoadedModel::display_name() const
{
    if (neural_) return neural_->spec().branches == Branches::Dual ? "SS-LSTM" : "LSTM";
    switch (classical_->kind()) {
    case ClassicalKind::LogisticOvR: return "OvRLR";
    case ClassicalKind::HingeSvm: return "SVM";
    case ClassicalKind::Mlp: return "MLP";
    }
    return "?";
}

std::string LoadedModel::representation_name() const
{
    if (neural_) {
        switch (neural_->spec().branches) {
        case Branches::Dual: return "Word embeddings and 1D-CNN";
        case Branches::CharOnly: return "1D-CNN";
        case Branches::WordOnly: return "Word embeddings";
        }
    }
    switch (features_->representation()) {
    case Representation::TfIdf: return "TF-IDF";
    case Representation::EmbeddingMean: return "Embedding avg";
    case Representation::TfIdfWeighted: return "TF-IDF and embedding avg";
    }
    return "?";
}

Dataset LoadedModel::prepare(const Dataset& raw) const
{
    return preprocess_enabled_ ? clean_dataset(raw, preprocess_) : raw;
}

std::vector<Sentiment> LoadedModel::predict(const Dataset& prepared) const
{
    if (neural_) return neural_->predict(prepared.tweets);
    return predict_all(*classical_, features_->transform(prepared));
}

std::vector<std::array<double, kNumClasses>> LoadedModel::predict_proba(const Dataset& prepared) const
{
    if (neural_) return neural_->predict_proba(prepared.tweets);
    std::vector<std::array<double, kNumClasses>> out;
    for (const auto& f : features_->transform(prepared)) {
        out.push_back(classical_->predict_proba(f.values));
    }
    return out;
}

CleanSummary cmd_preprocess(const RunConfig& cfg, const fs::path& input, const fs::path& output, std::ostream& out)
{
    const PreprocessConfig pre = effective_preprocess(cfg);
    const Dataset raw = read_corpus(input, false, Split::Other);
    const Dataset cleaned = clean_dataset(raw, pre);
    if (output.has_parent_path()) fs::create_directories(output.parent_path());
    write_dataset_file(cleaned, output);
    const CleanSummary s = summarize_cleaning(raw, cleaned);
    out << "tweets " << s.tweets << "\ntokens_before " << s.tokens_before << "\ntokens_after " << s.tokens_after
        << "\nempty_fallbacks " << s.empty_fallbacks << '\n';
    return s;
}

TrainOutcome cmd_train(const RunConfig& cfg, std::ostream& out)
{
    const bool neural = cfg.model.family == ModelFamily::Neural;
    PreparedData data = prepare_training(cfg, neural, out);
    std::shared_ptr<EmbeddingTable> table;
    if (needs_embeddings(cfg.model)) table = load_embeddings(cfg.paths.embeddings, &out);

    const fs::path dir = run_directory(cfg);
    write_text(dir / "config.json", cfg.to_json());
    std::ofstream log(dir / "metrics.log");
    if (!log) throw std::runtime_error("cannot write " + (dir / "metrics.log").string());

    Checkpoint ck;
    TrainOutcome outcome{dir, dir / "model.ckpt", {}};
    if (neural) {
        SsLstmModel model = SsLstmModel::create(cfg.model.neural, data.train, table.get(), cfg.seed);
        out << "parameters: " << model.params().scalar_count() << '\n';
        NeuralTrainResult r = train_model(std::move(model), data.train, data.valid, cfg.neural_train(),
                                          [&](const EpochRecord& rec) {
                                              const std::string line = format_epoch(rec);
                                              log << line << '\n';
                                              out << line << '\n';
                                          });
        if (r.best_epoch) {
            log << "best_epoch " << *r.best_epoch << '\n';
            out << "best_epoch " << *r.best_epoch << '\n';
        }
        r.model.save(ck);
        outcome.valid = evaluate(r.model.predict(data.valid.tweets), gold_labels(data.valid));
    } else {
        Vocabulary vocab = Vocabulary::build(data.train.tweets);
        if (cfg.model.max_features > 0) vocab = vocab.truncated(cfg.model.max_features);
        FeatureExtractor fx(cfg.model.representation, TfIdfModel(vocab), table.get());
        const auto feats = fx.transform(data.train);
        std::vector<LabeledFeature> labeled;
        labeled.reserve(feats.size());
        for (std::size_t i = 0; i < feats.size(); ++i) {
            labeled.push_back({feats[i], *data.train.tweets[i].label, 1.0});
        }
        ClassicalTrainResult r = train_classical(cfg.model.classical_kind, labeled, cfg.classical_train());
        for (std::size_t e = 0; e < r.loss_history.size(); ++e) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "epoch %zu train_loss %.6f", e, r.loss_history[e]);
            log << buf << '\n';
        }
        out << "epochs " << r.loss_history.size() << " final_train_loss "
            << (r.loss_history.empty() ? 0.0 : r.loss_history.back()) << '\n';
        ck.set("model_family", "classical");
        ck.set("representation", std::string(to_string(cfg.model.representation)));
        if (table) ck.set("embedding_fingerprint", std::to_string(table->fingerprint()));
        std::ostringstream vs;
        vocab.write(vs);
        std::vector<std::string> lines;
        std::istringstream vin(vs.str());
        for (std::string l; std::getline(vin, l);) lines.push_back(l);
        ck.lists.emplace_back("tfidf_vocab", std::move(lines));
        r.model.save(ck);
        if (!data.valid.tweets.empty()) {
            outcome.valid = evaluate(predict_all(r.model, fx.transform(data.valid)), gold_labels(data.valid));
        }
    }
    save_run_metadata(ck, cfg, data.pre);
    ck.save(outcome.checkpoint);

    if (outcome.valid.total > 0) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "valid macro_f1 %.4f weighted_f1 %.4f accuracy %.4f",
                      outcome.valid.macro_f1, outcome.valid.weighted_f1, outcome.valid.accuracy);
        log << buf << '\n';
        out << buf << '\n';
    }
    out << "checkpoint " << outcome.checkpoint.string() << '\n';
    return outcome;
}

std::vector<Metrics> cmd_eval(const RunConfig& cfg, const std::vector<fs::path>& checkpoints, const fs::path& data,
                              const std::optional<fs::path>& rows_file, std::ostream& out)
{
    if (checkpoints.empty()) throw std::invalid_argument("no checkpoint given");
    const Dataset raw = read_corpus(data, true, Split::Test);
    if (raw.tweets.empty()) throw std::invalid_argument("evaluation set is empty");
    const auto gold = gold_labels(raw);

    std::vector<Metrics> all;
    std::vector<ResultRow> rows;
    std::ostringstream details;
    std::ostringstream jsonl;
    for (const auto& path : checkpoints) {
        const LoadedModel m = LoadedModel::load(path, cfg);
        const Metrics metrics = evaluate(m.predict(m.prepare(raw)), gold);
        rows.push_back(make_result_row(m.display_name(), m.representation_name(), metrics));
        details << "== " << path.string() << '\n' << metrics_report(metrics);
        write_metrics_jsonl(jsonl, m.display_name(), m.representation_name(), metrics);
        all.push_back(metrics);
    }
    out << results_table(rows) << '\n' << details.str();
    if (rows_file) write_text(*rows_file, jsonl.str());
    return all;
}

void cmd_predict(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& input, const fs::path& output,
                 const std::optional<fs::path>& proba_file, std::ostream& out)
{
    const LoadedModel m = LoadedModel::load(checkpoint, cfg);
    Dataset raw = read_corpus(input, false, Split::Test);
    const Dataset prepared = m.prepare(raw);
    const auto preds = m.predict(prepared);
    for (std::size_t i = 0; i < raw.tweets.size(); ++i) {
        raw.tweets[i].label = preds[i];
    }
    if (output.has_parent_path()) fs::create_directories(output.parent_path());
    write_dataset_file(raw, output);
    if (proba_file) {
        const auto probs = m.predict_proba(prepared);
        std::ostringstream s;
        s << "id\tpositive\tnegative\tneutral\n";
        for (std::size_t i = 0; i < probs.size(); ++i) {
            s << raw.tweets[i].id;
            for (double p : probs[i]) s << '\t' << format_double(p);
            s << '\n';
        }
        write_text(*proba_file, s.str());
    }
    out << "predicted " << preds.size() << " tweets -> " << output.string() << '\n';
}

TrainOutcome cmd_grid(const RunConfig& cfg, std::ostream& out)
{
    if (cfg.model.family != ModelFamily::Neural) throw std::invalid_argument("grid search supports neural models only");
    PreparedData data = prepare_training(cfg, true, out);
    std::shared_ptr<EmbeddingTable> table;
    if (needs_embeddings(cfg.model)) table = load_embeddings(cfg.paths.embeddings, &out);

    const fs::path dir = run_directory(cfg);
    write_text(dir / "config.json", cfg.to_json());
    const Dataset& train = data.train;
    const EmbeddingTable* words = table.get();
    GridResult r = grid_search(
        cfg.grid, cfg.model.neural,
        [&](const NeuralModelSpec& spec, std::uint64_t seed) { return SsLstmModel::create(spec, train, words, seed); },
        data.train, data.valid, cfg.neural_train());

    const std::string report = grid_report(r);
    write_text(dir / "grid.tsv", report);
    out << report;

    RunConfig best_cfg = cfg;
    best_cfg.model.neural.n_layers = r.cells[r.best].cell.n_layers;
    best_cfg.train.lr = r.cells[r.best].cell.lr;
    best_cfg.train.epochs = r.cells[r.best].cell.epochs;
    Checkpoint ck;
    r.best_model.save(ck);
    save_run_metadata(ck, best_cfg, data.pre);
    TrainOutcome outcome{dir, dir / "model.ckpt", r.cells[r.best].valid};
    ck.save(outcome.checkpoint);
    out << "best cell " << r.best << " checkpoint " << outcome.checkpoint.string() << '\n';
    return outcome;
}

void cmd_gen_synthetic(const SyntheticConfig& syn, const fs::path& dir, std::ostream& out)
{
    const SyntheticCorpus c = make_synthetic_corpus(syn);
    fs::create_directories(dir);
    write_dataset_file(c.train, dir / "train.txt");
    write_dataset_file(c.valid, dir / "valid.txt");
    write_dataset_file(c.test, dir / "test.txt");
    std::ofstream emb(dir / "embeddings.vec");
    if (!emb) throw std::runtime_error("cannot write " + (dir / "embeddings.vec").string());
    c.embeddings.write(emb);
    out << "wrote " << c.train.tweets.size() << "/" << c.valid.tweets.size() << "/" << c.test.tweets.size()
        << " tweets and " << c.embeddings.size() << " vectors to " << dir.string() << '\n';
}

} // namespace sslstm::app
