#pragma once

// Independent reference computations and random generators shared by the
// test binaries. Nothing here calls into the code under test except to read
// plain data structures.

#include "sslstm/autodiff.hpp"
#include "sslstm/corpus.hpp"
#include "sslstm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace oracle {

using sslstm::Rng;
using sslstm::ad::Tensor;

inline Tensor random_tensor(sslstm::ad::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0)
{
    Tensor t(std::move(shape));
    for (double& x : t.data()) x = rng.uniform(lo, hi);
    return t;
}

/// Central differences of f with respect to every entry of x.
inline std::vector<double> numeric_gradient(const std::function<double()>& f, std::span<double> x,
                                            double eps = 1e-6)
{
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + eps;
        const double up = f();
        x[i] = saved - eps;
        const double down = f();
        x[i] = saved;
        g[i] = (up - down) / (2.0 * eps);
    }
    return g;
}

/// ||a - n|| / (||a|| + ||n||); 0 when both are negligible.
inline double relative_error(std::span<const double> a, std::span<const double> n)
{
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - n[i]) * (a[i] - n[i]);
        na += a[i] * a[i];
        nn += n[i] * n[i];
    }
    const double denom = std::sqrt(na) + std::sqrt(nn);
    if (denom < 1e-10) return 0.0;
    return std::sqrt(diff) / denom;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// out[o][t] = sum_{c,j} f[o][c][j] * in[c][t + j - (w-1)/2], zero outside [0, T).
inline std::vector<double> conv1d(std::span<const double> in, std::span<const double> f, std::size_t c_in,
                                  std::size_t c_out, std::size_t w, std::size_t T)
{
    std::vector<double> out(c_out * T, 0.0);
    const long left = static_cast<long>((w - 1) / 2);
    for (std::size_t o = 0; o < c_out; ++o) {
        for (std::size_t t = 0; t < T; ++t) {
            double acc = 0.0;
            for (std::size_t c = 0; c < c_in; ++c) {
                for (std::size_t j = 0; j < w; ++j) {
                    const long src = static_cast<long>(t) + static_cast<long>(j) - left;
                    if (src < 0 || src >= static_cast<long>(T)) continue;
                    acc += f[(o * c_in + c) * w + j] * in[c * T + static_cast<std::size_t>(src)];
                }
            }
            out[o * T + t] = acc;
        }
    }
    return out;
}

/// Per-class counts and the macro/weighted scores recomputed from scratch.
struct Recount {
    double precision[3]{}, recall[3]{}, f1[3]{};
    std::size_t support[3]{}, predicted[3]{}, correct[3]{};
    double macro_p = 0, macro_r = 0, macro_f1 = 0, weighted_p = 0, weighted_r = 0, weighted_f1 = 0, accuracy = 0;
};

inline Recount recount(const std::vector<sslstm::Sentiment>& pred, const std::vector<sslstm::Sentiment>& gold)
{
    Recount r;
    const std::size_t n = gold.size();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto g = static_cast<std::size_t>(gold[i]);
        const auto p = static_cast<std::size_t>(pred[i]);
        r.support[g]++;
        r.predicted[p]++;
        if (g == p) {
            r.correct[g]++;
            hits++;
        }
    }
    std::size_t present = 0;
    for (int c = 0; c < 3; ++c) {
        r.precision[c] = r.predicted[c] ? double(r.correct[c]) / double(r.predicted[c]) : 0.0;
        r.recall[c] = r.support[c] ? double(r.correct[c]) / double(r.support[c]) : 0.0;
        const double s = r.precision[c] + r.recall[c];
        r.f1[c] = s > 0 ? 2 * r.precision[c] * r.recall[c] / s : 0.0;
        if (r.support[c]) {
            present++;
            r.macro_p += r.precision[c];
            r.macro_r += r.recall[c];
            r.macro_f1 += r.f1[c];
        }
        const double w = double(r.support[c]) / double(n);
        r.weighted_p += w * r.precision[c];
        r.weighted_r += w * r.recall[c];
        r.weighted_f1 += w * r.f1[c];
    }
    r.macro_p /= double(present);
    r.macro_r /= double(present);
    r.macro_f1 /= double(present);
    r.accuracy = double(hits) / double(n);
    return r;
}

/// Random lowercase ASCII word of 1..max_len letters.
inline std::string random_word(Rng& rng, std::size_t max_len = 8, std::string_view alphabet = "abcdefghij")
{
    std::string s;
    const std::size_t len = 1 + rng.below(max_len);
    for (std::size_t i = 0; i < len; ++i) s += alphabet[rng.below(alphabet.size())];
    return s;
}

inline sslstm::Tweet random_tweet(Rng& rng, std::size_t n_tokens, std::string id, bool labeled = true)
{
    static constexpr sslstm::LangTag tags[] = {sslstm::LangTag::Hin, sslstm::LangTag::Eng, sslstm::LangTag::Other};
    sslstm::Tweet t;
    t.id = std::move(id);
    for (std::size_t i = 0; i < n_tokens; ++i) t.tokens.push_back({random_word(rng), tags[rng.below(3)]});
    if (labeled) t.label = sslstm::sentiment_at(rng.below(3));
    return t;
}

/// Random dataset whose ids and token texts mix ASCII, Devanagari, emoji and
/// Latin-1 pieces; labels are always set when `labeled`, else half the time.
inline sslstm::Dataset fuzz_dataset(Rng& rng, std::size_t n, bool labeled)
{
    static const char* pieces[] = {"a", "Z", "9", "!", "\xE0\xA4\x95", "\xF0\x9F\x98\x80", "_", "#", "@", "\xC3\xA9"};
    static constexpr sslstm::LangTag tags[] = {sslstm::LangTag::Hin, sslstm::LangTag::Eng, sslstm::LangTag::Other};
    sslstm::Dataset d;
    for (std::size_t i = 0; i < n; ++i) {
        sslstm::Tweet t;
        t.id = "id" + std::to_string(i) + pieces[rng.below(4)];
        const std::size_t len = 1 + rng.below(12);
        for (std::size_t k = 0; k < len; ++k) {
            std::string text;
            const std::size_t chars = 1 + rng.below(6);
            for (std::size_t c = 0; c < chars; ++c) text += pieces[rng.below(std::size(pieces))];
            t.tokens.push_back({text, tags[rng.below(3)]});
        }
        if (labeled || rng.bernoulli(0.5)) t.label = sslstm::sentiment_at(rng.below(3));
        d.tweets.push_back(std::move(t));
    }
    return d;
}

} // namespace oracle
