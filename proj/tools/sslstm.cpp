// Command-line entry point: preprocess, train, eval, predict, grid.

#include "sslstm/app.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

namespace {

using namespace sslstm;
namespace fs = std::filesystem;

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--set", c.overrides, "Override a config field, e.g. --set train.lr=0.01 (repeatable)");
    cmd->add_option("--seed", c.seed, "Random seed (overrides the config)");
    cmd->add_option("--out", c.out, "Run directory (overrides paths.out)");
}

app::RunConfig resolve(const CLI::App* cmd, const Common& c)
{
    app::ConfigSources s;
    if (!c.config.empty()) s.file = c.config;
    s.overrides = c.overrides;
    if (cmd->count("--seed") > 0) s.seed = c.seed;
    if (!c.out.empty()) s.out = c.out;
    return app::resolve_config(s);
}

std::string one_line(std::string s)
{
    for (char& ch : s) {
        if (ch == '\n' || ch == '\r') ch = ' ';
    }
    return s;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App cli{"Sentiment models for code-mixed tweets"};
    cli.require_subcommand(1);

    Common pre_c, train_c, eval_c, pred_c, grid_c;
    std::string pre_in, pre_out;
    auto* pre = cli.add_subcommand("preprocess", "Clean a corpus file");
    add_common(pre, pre_c);
    pre->add_option("--input", pre_in, "Corpus to clean")->required();
    pre->add_option("--output", pre_out, "Cleaned corpus destination")->required();

    auto* train = cli.add_subcommand("train", "Train a model; writes model.ckpt and metrics.log");
    add_common(train, train_c);

    std::vector<std::string> eval_ckpts;
    std::string eval_data, eval_rows, eval_split = "test";
    auto* eval = cli.add_subcommand("eval", "Evaluate checkpoints on a labeled corpus");
    add_common(eval, eval_c);
    eval->add_option("--checkpoint", eval_ckpts, "Checkpoint to evaluate (repeatable; default <out>/model.ckpt)");
    eval->add_option("--input", eval_data, "Labeled corpus (default: the configured split)");
    eval->add_option("--split", eval_split, "Configured split to use when --input is absent")
        ->check(CLI::IsMember({"train", "valid", "test"}));
    eval->add_option("--rows", eval_rows, "Also write one JSON record per model here");

    std::string pred_ckpt, pred_in, pred_out, pred_proba;
    auto* pred = cli.add_subcommand("predict", "Label a corpus file");
    add_common(pred, pred_c);
    pred->add_option("--checkpoint", pred_ckpt, "Trained checkpoint")->required();
    pred->add_option("--input", pred_in, "Corpus to label")->required();
    pred->add_option("--output", pred_out, "Labeled corpus destination")->required();
    pred->add_option("--proba", pred_proba, "Also write class probabilities (TSV)");

    auto* grid = cli.add_subcommand("grid", "Grid search over learning rate, LSTM depth and epochs");
    add_common(grid, grid_c);

    SyntheticConfig syn;
    std::string syn_out;
    auto* gen = cli.add_subcommand("gen-synthetic", "Write the synthetic evaluation corpus and embeddings");
    gen->add_option("--seed", syn.seed, "Generator seed");
    gen->add_option("--out", syn_out, "Destination directory")->required();
    gen->add_option("--embedding-dim", syn.embedding_dim, "Embedding dimension");

    CLI11_PARSE(cli, argc, argv);

    try {
        if (pre->parsed()) {
            app::cmd_preprocess(resolve(pre, pre_c), pre_in, pre_out, std::cout);
        } else if (train->parsed()) {
            app::cmd_train(resolve(train, train_c), std::cout);
        } else if (eval->parsed()) {
            const auto cfg = resolve(eval, eval_c);
            std::vector<fs::path> ckpts(eval_ckpts.begin(), eval_ckpts.end());
            if (ckpts.empty()) {
                if (cfg.paths.out.empty()) throw std::invalid_argument("eval needs --checkpoint or --out");
                ckpts.push_back(cfg.paths.out / "model.ckpt");
            }
            fs::path data = eval_data;
            if (data.empty()) {
                data = eval_split == "train" ? cfg.paths.train : eval_split == "valid" ? cfg.paths.valid : cfg.paths.test;
            }
            std::optional<fs::path> rows;
            if (!eval_rows.empty()) rows = eval_rows;
            app::cmd_eval(cfg, ckpts, data, rows, std::cout);
        } else if (pred->parsed()) {
            std::optional<fs::path> proba;
            if (!pred_proba.empty()) proba = pred_proba;
            app::cmd_predict(resolve(pred, pred_c), pred_ckpt, pred_in, pred_out, proba, std::cout);
        } else if (grid->parsed()) {
            app::cmd_grid(resolve(grid, grid_c), std::cout);
        } else if (gen->parsed()) {
            app::cmd_gen_synthetic(syn, syn_out, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << one_line(e.what()) << '\n';
        return 1;
    }
    return 0;
}
