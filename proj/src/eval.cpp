#include "sslstm/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sslstm {

Metrics evaluate(std::span<const Sentiment> predicted, std::span<const Sentiment> gold)
{
    if (predicted.size() != gold.size()) {
        throw std::invalid_argument("evaluate: " + std::to_string(predicted.size()) + " predictions for "
                                    + std::to_string(gold.size()) + " gold labels");
    }
    if (gold.empty()) throw std::invalid_argument("evaluate: empty input");

    Metrics m;
    m.total = gold.size();
    for (std::size_t i = 0; i < gold.size(); ++i) ++m.confusion[class_index(gold[i])][class_index(predicted[i])];

    std::size_t correct = 0;
    std::size_t classes_with_support = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        ClassMetrics& cm = m.per_class[c];
        const std::size_t tp = m.confusion[c][c];
        for (std::size_t k = 0; k < kNumClasses; ++k) {
            cm.support += m.confusion[c][k];
            cm.predicted += m.confusion[k][c];
        }
        correct += tp;
        cm.no_predictions = cm.predicted == 0;
        cm.no_support = cm.support == 0;
        cm.precision = cm.predicted ? static_cast<double>(tp) / static_cast<double>(cm.predicted) : 0.0;
        cm.recall = cm.support ? static_cast<double>(tp) / static_cast<double>(cm.support) : 0.0;
        cm.f1 = (cm.precision + cm.recall) > 0.0 ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall) : 0.0;

        const double w = static_cast<double>(cm.support) / static_cast<double>(m.total);
        m.weighted_precision += w * cm.precision;
        m.weighted_recall += w * cm.recall;
        m.weighted_f1 += w * cm.f1;
        if (!cm.no_support) {
            ++classes_with_support;
            m.macro_precision += cm.precision;
            m.macro_recall += cm.recall;
            m.macro_f1 += cm.f1;
        }
    }
    const double k = static_cast<double>(classes_with_support);
    m.macro_precision /= k;
    m.macro_recall /= k;
    m.macro_f1 /= k;
    m.accuracy = static_cast<double>(correct) / static_cast<double>(m.total);
    return m;
}

ResultRow make_result_row(std::string model, std::string representation, const Metrics& m, Average average)
{
    ResultRow r{std::move(model), std::move(representation), 0, 0, 0};
    if (average == Average::Weighted) {
        r.precision = m.weighted_precision;
        r.recall = m.weighted_recall;
        r.f1 = m.weighted_f1;
    } else {
        r.precision = m.macro_precision;
        r.recall = m.macro_recall;
        r.f1 = m.macro_f1;
    }
    return r;
}

namespace {

std::string fixed4(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

} // namespace

std::string results_table(std::span<const ResultRow> rows)
{
    const std::array<std::string, 5> head{"Model", "Representations", "Precision", "Recall", "f1-Score"};
    std::vector<std::array<std::string, 5>> cells;
    cells.push_back(head);
    for (const auto& r : rows) {
        cells.push_back({r.model, r.representation, fixed4(r.precision), fixed4(r.recall), fixed4(r.f1)});
    }
    std::array<std::size_t, 5> width{};
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < 5; ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    auto rule = [&] {
        for (std::size_t c = 0; c < 5; ++c) out << (c ? "-+-" : "") << std::string(width[c], '-');
        out << '\n';
    };
    for (std::size_t r = 0; r < cells.size(); ++r) {
        for (std::size_t c = 0; c < 5; ++c) {
            if (c) out << " | ";
            const auto& s = cells[r][c];
            // Text columns left-aligned, numbers right-aligned.
            if (c < 2) {
                out << s << std::string(width[c] - s.size(), ' ');
            } else {
                out << std::string(width[c] - s.size(), ' ') << s;
            }
        }
        out << '\n';
        if (r == 0) rule();
    }
    return out.str();
}

std::string metrics_report(const Metrics& m)
{
    std::ostringstream out;
    out << "class     precision  recall     f1         support  predicted\n";
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto& cm = m.per_class[c];
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-9s %-10s %-10s %-10s %-8zu %zu%s%s\n",
                      std::string(to_string(sentiment_at(c))).c_str(), fixed4(cm.precision).c_str(),
                      fixed4(cm.recall).c_str(), fixed4(cm.f1).c_str(), cm.support, cm.predicted,
                      cm.no_predictions ? "  [no predictions: precision/F1 set to 0]" : "",
                      cm.no_support ? "  [no gold support: excluded from macro]" : "");
        out << buf;
    }
    out << "macro     P=" << fixed4(m.macro_precision) << " R=" << fixed4(m.macro_recall) << " F1=" << fixed4(m.macro_f1)
        << '\n';
    out << "weighted  P=" << fixed4(m.weighted_precision) << " R=" << fixed4(m.weighted_recall)
        << " F1=" << fixed4(m.weighted_f1) << '\n';
    out << "accuracy  " << fixed4(m.accuracy) << " (n=" << m.total << ")\n";
    out << "confusion (rows gold, cols predicted; positive negative neutral)\n";
    for (std::size_t g = 0; g < kNumClasses; ++g) {
        out << "  " << to_string(sentiment_at(g)) << ':';
        for (std::size_t p = 0; p < kNumClasses; ++p) out << ' ' << m.confusion[g][p];
        out << '\n';
    }
    return out.str();
}

void write_metrics_jsonl(std::ostream& out, const std::string& model, const std::string& representation,
                         const Metrics& m)
{
    nlohmann::ordered_json j;
    j["model"] = model;
    j["representation"] = representation;
    j["n"] = m.total;
    j["accuracy"] = m.accuracy;
    j["macro_precision"] = m.macro_precision;
    j["macro_recall"] = m.macro_recall;
    j["macro_f1"] = m.macro_f1;
    j["weighted_precision"] = m.weighted_precision;
    j["weighted_recall"] = m.weighted_recall;
    j["weighted_f1"] = m.weighted_f1;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto& cm = m.per_class[c];
        nlohmann::ordered_json pc;
        pc["precision"] = cm.precision;
        pc["recall"] = cm.recall;
        pc["f1"] = cm.f1;
        pc["support"] = cm.support;
        pc["predicted"] = cm.predicted;
        pc["no_predictions"] = cm.no_predictions;
        pc["no_support"] = cm.no_support;
        j["classes"][std::string(to_string(sentiment_at(c)))] = pc;
    }
    j["confusion"] = m.confusion;
    out << j.dump() << '\n';
}

} // namespace sslstm
