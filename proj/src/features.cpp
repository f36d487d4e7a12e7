#include "sslstm/features.hpp"

#include "sslstm/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

namespace sslstm {

namespace {

bool parse_double(std::string_view s, double& out)
{
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool parse_size(std::string_view s, std::size_t& out)
{
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

void write_double(std::ostream& out, double v)
{
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, ptr - buf);
}

} // namespace

// --- Vocabulary -------------------------------------------------------------

void Vocabulary::add(std::string token, std::size_t df)
{
    index_.emplace(token, tokens_.size());
    tokens_.push_back(std::move(token));
    df_.push_back(df);
}

Vocabulary Vocabulary::build(std::span<const Tweet> corpus)
{
    if (corpus.empty()) throw std::invalid_argument("cannot build a vocabulary from an empty corpus");
    Vocabulary v;
    v.n_documents_ = corpus.size();
    std::unordered_set<std::string_view> seen;
    for (const auto& tweet : corpus) {
        seen.clear();
        for (const auto& tok : tweet.tokens) {
            if (!seen.insert(tok.text).second) continue;
            if (auto it = v.index_.find(tok.text); it != v.index_.end()) {
                ++v.df_[it->second];
            } else {
                v.add(tok.text, 1);
            }
        }
    }
    return v;
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view token) const
{
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Vocabulary Vocabulary::truncated(std::size_t max_size) const
{
    if (max_size == 0 || max_size >= size()) return *this;
    std::vector<std::size_t> order(size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return df_[a] > df_[b]; });
    order.resize(max_size);
    std::sort(order.begin(), order.end());
    Vocabulary out;
    out.n_documents_ = n_documents_;
    for (std::size_t i : order) out.add(tokens_[i], df_[i]);
    return out;
}

void Vocabulary::write(std::ostream& out) const
{
    out << "n_documents " << n_documents_ << '\n';
    for (std::size_t i = 0; i < size(); ++i) out << tokens_[i] << '\t' << i << '\t' << df_[i] << '\n';
}

Vocabulary Vocabulary::read(std::istream& in)
{
    Vocabulary v;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw std::runtime_error("vocabulary: missing header");
    ++line_no;
    auto header = text::split_fields(line);
    if (header.size() != 2 || header[0] != "n_documents" || !parse_size(header[1], v.n_documents_)) {
        throw std::runtime_error("vocabulary: malformed header");
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto f = text::split_fields(line);
        std::size_t index = 0;
        std::size_t df = 0;
        if (f.size() != 3 || !parse_size(f[1], index) || !parse_size(f[2], df) || index != v.size()
            || df > v.n_documents_) {
            throw std::runtime_error("vocabulary: malformed entry on line " + std::to_string(line_no));
        }
        v.add(std::string(f[0]), df);
    }
    return v;
}

// --- tf-idf -------------------------------------------------------------------

double smoothed_idf(std::size_t n_documents, std::size_t document_frequency)
{
    return std::log((1.0 + static_cast<double>(n_documents)) / (1.0 + static_cast<double>(document_frequency))) + 1.0;
}

TfIdfModel::TfIdfModel(Vocabulary vocab) : vocab_(std::move(vocab))
{
    idf_.resize(vocab_.size());
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
        idf_[i] = smoothed_idf(vocab_.n_documents(), vocab_.document_frequency(i));
    }
}

TfIdfModel TfIdfModel::fit(std::span<const Tweet> corpus) { return TfIdfModel(Vocabulary::build(corpus)); }

double TfIdfModel::weight(std::string_view token, const Tweet& tweet) const
{
    const auto idx = vocab_.index_of(token);
    if (!idx) return 0.0;
    const auto tf = std::count_if(tweet.tokens.begin(), tweet.tokens.end(),
                                  [&](const Token& t) { return t.text == token; });
    return static_cast<double>(tf) * idf_[*idx];
}

// --- Embedding table ------------------------------------------------------------

EmbeddingTable::EmbeddingTable(std::size_t dim, UnkPolicy policy)
    : dim_(dim), policy_(policy), zero_(dim, 0.0), sum_(dim, 0.0)
{
    if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
}

void EmbeddingTable::set(std::string token, std::span<const double> vec)
{
    if (vec.size() != dim_) {
        throw std::invalid_argument("embedding for '" + token + "' has length " + std::to_string(vec.size())
                                    + ", expected " + std::to_string(dim_));
    }
    std::size_t row;
    if (auto it = index_.find(token); it != index_.end()) {
        row = it->second;
        for (std::size_t k = 0; k < dim_; ++k) sum_[k] -= data_[row * dim_ + k];
    } else {
        row = tokens_.size();
        index_.emplace(token, row);
        tokens_.push_back(std::move(token));
        data_.resize(data_.size() + dim_);
    }
    std::copy(vec.begin(), vec.end(), data_.begin() + static_cast<std::ptrdiff_t>(row * dim_));
    for (std::size_t k = 0; k < dim_; ++k) sum_[k] += vec[k];
}

EmbeddingTable EmbeddingTable::load(std::istream& in, std::vector<std::string>* warnings)
{
    EmbeddingTable table;
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> declared_count;
    std::vector<double> row;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto f = text::split_fields(line);
        if (f.empty()) continue;
        if (line_no == 1 && f.size() == 2) {
            std::size_t count = 0;
            std::size_t dim = 0;
            if (parse_size(f[0], count) && parse_size(f[1], dim)) {
                if (dim == 0) throw ParseError(line_no, "embedding header declares dimension 0");
                table = EmbeddingTable(dim);
                declared_count = count;
                continue;
            }
        }
        if (f.size() < 2) throw ParseError(line_no, "embedding row has no values");
        if (table.dim_ == 0) table = EmbeddingTable(f.size() - 1);
        if (f.size() - 1 != table.dim_) {
            throw ParseError(line_no, "embedding row has " + std::to_string(f.size() - 1) + " values, expected "
                                          + std::to_string(table.dim_));
        }
        row.resize(table.dim_);
        for (std::size_t k = 0; k < table.dim_; ++k) {
            if (!parse_double(f[k + 1], row[k])) {
                throw ParseError(line_no, "non-numeric embedding value '" + std::string(f[k + 1]) + "'");
            }
        }
        std::string token(f[0]);
        if (warnings && table.contains(token)) {
            warnings->push_back("line " + std::to_string(line_no) + ": duplicate token '" + token
                                + "', last row wins");
        }
        table.set(std::move(token), row);
    }
    if (table.dim_ == 0) throw ParseError(line_no, "embedding file contains no vectors");
    if (warnings && declared_count && *declared_count != table.size()) {
        warnings->push_back("header declares " + std::to_string(*declared_count) + " rows, found "
                            + std::to_string(table.size()));
    }
    return table;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path, std::vector<std::string>* warnings)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open embedding file '" + path.string() + "'");
    try {
        return load(in, warnings);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path.string() + ": " + e.what());
    }
}

void EmbeddingTable::write(std::ostream& out) const
{
    out << size() << ' ' << dim_ << '\n';
    for (std::size_t r = 0; r < size(); ++r) {
        out << tokens_[r];
        for (std::size_t k = 0; k < dim_; ++k) {
            out << ' ';
            write_double(out, data_[r * dim_ + k]);
        }
        out << '\n';
    }
}

std::optional<std::span<const double>> EmbeddingTable::find(std::string_view token) const
{
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return std::span<const double>(data_.data() + it->second * dim_, dim_);
}

std::span<const double> EmbeddingTable::lookup(std::string_view token) const
{
    if (auto v = find(token)) return *v;
    if (policy_ == UnkPolicy::MeanOfAll && !tokens_.empty()) {
        thread_local std::vector<double> mean;
        mean.assign(dim_, 0.0);
        for (std::size_t k = 0; k < dim_; ++k) mean[k] = sum_[k] / static_cast<double>(tokens_.size());
        return mean;
    }
    return zero_;
}

std::uint64_t EmbeddingTable::fingerprint() const
{
    std::uint64_t h = text::fnv1a(std::to_string(dim_));
    for (std::size_t r = 0; r < size(); ++r) {
        h = text::fnv1a(tokens_[r], h);
        h = text::fnv1a(std::string_view(reinterpret_cast<const char*>(data_.data() + r * dim_),
                                         dim_ * sizeof(double)),
                        h);
    }
    return h;
}

// --- Tweet vectors ----------------------------------------------------------------

FeatureVector tweet_vector_weighted(const Tweet& t, const EmbeddingTable& e,
                                    const std::function<double(const Token&)>& weight)
{
    if (t.tokens.empty()) throw std::invalid_argument("tweet '" + t.id + "' has no tokens");
    FeatureVector out{std::vector<double>(e.dim(), 0.0), FeatureKind::TfIdfWeightedEmbedding};
    for (const auto& tok : t.tokens) {
        const double w = weight(tok);
        const auto v = e.lookup(tok.text);
        for (std::size_t k = 0; k < v.size(); ++k) out.values[k] += w * v[k];
    }
    const double n = static_cast<double>(t.tokens.size());
    for (auto& x : out.values) x /= n;
    return out;
}

FeatureVector tweet_vector_mean(const Tweet& t, const EmbeddingTable& e)
{
    if (t.tokens.empty()) throw std::invalid_argument("tweet '" + t.id + "' has no tokens");
    FeatureVector out{std::vector<double>(e.dim(), 0.0), FeatureKind::EmbeddingMean};
    for (const auto& tok : t.tokens) {
        const auto v = e.lookup(tok.text);
        for (std::size_t k = 0; k < v.size(); ++k) out.values[k] += v[k];
    }
    const double n = static_cast<double>(t.tokens.size());
    for (auto& x : out.values) x /= n;
    return out;
}

FeatureVector tweet_vector_tfidf_weighted(const Tweet& t, const EmbeddingTable& e, const TfIdfModel& m)
{
    return tweet_vector_weighted(t, e, [&](const Token& tok) { return m.weight(tok.text, t); });
}

FeatureVector tfidf_sparse_vector(const Tweet& t, const TfIdfModel& m)
{
    FeatureVector out{std::vector<double>(m.vocabulary().size(), 0.0), FeatureKind::TfIdfSparse};
    for (const auto& tok : t.tokens) {
        if (auto idx = m.vocabulary().index_of(tok.text)) out.values[*idx] += m.idf(*idx);
    }
    double sq = 0.0;
    for (double x : out.values) sq += x * x;
    if (sq > 0.0) {
        const double inv = 1.0 / std::sqrt(sq);
        for (auto& x : out.values) x *= inv;
    }
    return out;
}

std::string_view to_string(Representation r)
{
    switch (r) {
    case Representation::TfIdf: return "tfidf";
    case Representation::EmbeddingMean: return "mean";
    case Representation::TfIdfWeighted: return "tfidf_weighted";
    }
    return "tfidf";
}

std::optional<Representation> representation_from_string(std::string_view s)
{
    if (s == "tfidf") return Representation::TfIdf;
    if (s == "mean") return Representation::EmbeddingMean;
    if (s == "tfidf_weighted") return Representation::TfIdfWeighted;
    return std::nullopt;
}

FeatureExtractor::FeatureExtractor(Representation rep, TfIdfModel tfidf, const EmbeddingTable* embeddings)
    : rep_(rep), tfidf_(std::move(tfidf)), embeddings_(embeddings)
{
    if (rep_ != Representation::TfIdf && embeddings_ == nullptr) {
        throw std::invalid_argument("representation '" + std::string(to_string(rep_)) + "' needs an embedding table");
    }
}

std::size_t FeatureExtractor::dim() const
{
    return rep_ == Representation::TfIdf ? tfidf_.vocabulary().size() : embeddings_->dim();
}

FeatureVector FeatureExtractor::operator()(const Tweet& t) const
{
    switch (rep_) {
    case Representation::TfIdf: return tfidf_sparse_vector(t, tfidf_);
    case Representation::EmbeddingMean: return tweet_vector_mean(t, *embeddings_);
    case Representation::TfIdfWeighted: return tweet_vector_tfidf_weighted(t, *embeddings_, tfidf_);
    }
    return tfidf_sparse_vector(t, tfidf_);
}

std::vector<FeatureVector> FeatureExtractor::transform(const Dataset& d) const
{
    std::vector<FeatureVector> out(d.size());
    const auto n = static_cast<std::ptrdiff_t>(d.size());
#pragma omp parallel for schedule(static) if (n > 256)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = (*this)(d.tweets[static_cast<std::size_t>(i)]);
    }
    return out;
}

} // namespace sslstm
