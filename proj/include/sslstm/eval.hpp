#pragma once

#include "sslstm/corpus.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sslstm {

/// rows = gold, columns = predicted.
using ConfusionMatrix = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    std::size_t predicted = 0;
    /// Nothing was predicted as this class; precision and F1 are set to 0.
    bool no_predictions = false;
    /// Class absent from gold; excluded from the macro averages.
    bool no_support = false;
};

struct Metrics {
    ConfusionMatrix confusion{};
    std::array<ClassMetrics, kNumClasses> per_class{};
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
    double accuracy = 0.0;
    std::size_t total = 0;
};

/// Throws std::invalid_argument on length mismatch or empty input.
Metrics evaluate(std::span<const Sentiment> predicted, std::span<const Sentiment> gold);

enum class Average { Weighted, Macro };

struct ResultRow {
    std::string model;
    std::string representation;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

ResultRow make_result_row(std::string model, std::string representation, const Metrics& m,
                          Average average = Average::Weighted);

/// Aligned text table with columns Model, Representations, Precision,
/// Recall, f1-Score; values to four decimals; rows in input order.
std::string results_table(std::span<const ResultRow> rows);

/// Per-class breakdown plus confusion matrix, with flags for degenerate classes.
std::string metrics_report(const Metrics& m);

/// One JSON object per line with every metric field.
void write_metrics_jsonl(std::ostream& out, const std::string& model, const std::string& representation,
                         const Metrics& m);

} // namespace sslstm
