#include "sslstm/checkpoint.hpp"

#include "sslstm/text.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sslstm {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what)
{
    throw std::runtime_error("checkpoint line " + std::to_string(line) + ": " + what);
}

std::size_t to_size(std::string_view s, std::size_t line)
{
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail(line, "expected an integer, got '" + std::string(s) + "'");
    return v;
}

} // namespace

void Checkpoint::set(std::string key, std::string value)
{
    if (key.empty() || text::contains_whitespace(key) || value.find('\n') != std::string::npos) {
        throw std::invalid_argument("checkpoint header key/value must be single-line and key whitespace-free");
    }
    for (auto& [k, v] : header) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    header.emplace_back(std::move(key), std::move(value));
}

std::optional<std::string> Checkpoint::get(std::string_view key) const
{
    for (const auto& [k, v] : header) {
        if (k == key) return v;
    }
    return std::nullopt;
}

const std::string& Checkpoint::require(std::string_view key) const
{
    for (const auto& [k, v] : header) {
        if (k == key) return v;
    }
    throw std::runtime_error("checkpoint is missing header '" + std::string(key) + "'");
}

const std::vector<std::string>* Checkpoint::list(std::string_view name) const
{
    for (const auto& [n, items] : lists) {
        if (n == name) return &items;
    }
    return nullptr;
}

const ad::Tensor* Checkpoint::tensor(std::string_view name) const
{
    for (const auto& t : tensors) {
        if (t.name == name) return &t.tensor;
    }
    return nullptr;
}

void Checkpoint::add_parameters(const ad::ParameterSet& params)
{
    for (const auto& p : params) tensors.push_back({p.name, p.value});
}

void Checkpoint::load_parameters(ad::ParameterSet& params) const
{
    for (auto& p : params) {
        const ad::Tensor* t = tensor(p.name);
        if (!t) throw std::runtime_error("checkpoint has no tensor '" + p.name + "'");
        if (t->shape() != p.value.shape()) {
            throw std::runtime_error("checkpoint tensor '" + p.name + "' has shape " + ad::shape_string(t->shape())
                                     + ", model expects " + ad::shape_string(p.value.shape()));
        }
        p.value = *t;
    }
}

void Checkpoint::write(std::ostream& out) const
{
    out << "sslstm-checkpoint " << kVersion << '\n';
    for (const auto& [k, v] : header) out << "header " << k << ' ' << v << '\n';
    for (const auto& [name, items] : lists) {
        out << "list " << name << ' ' << items.size() << '\n';
        for (const auto& item : items) out << item << '\n';
    }
    char buf[32];
    for (const auto& [name, t] : tensors) {
        out << "tensor " << name << ' ' << t.rank();
        for (auto d : t.shape()) out << ' ' << d;
        out << '\n';
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (i) out << ' ';
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, t[i]);
            out.write(buf, ptr - buf);
        }
        out << '\n';
    }
    out << "end\n";
}

Checkpoint Checkpoint::read(std::istream& in)
{
    Checkpoint ck;
    std::string line;
    std::size_t line_no = 0;
    auto next = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        return true;
    };
    if (!next()) fail(1, "empty checkpoint");
    {
        const auto f = text::split_fields(line);
        if (f.size() != 2 || f[0] != "sslstm-checkpoint") fail(line_no, "not an sslstm checkpoint");
        if (to_size(f[1], line_no) != static_cast<std::size_t>(kVersion)) {
            fail(line_no, "unsupported checkpoint version " + std::string(f[1]));
        }
    }
    bool ended = false;
    while (next()) {
        if (line == "end") {
            ended = true;
            break;
        }
        if (line.starts_with("header ")) {
            const auto rest = std::string_view(line).substr(7);
            const auto sp = rest.find(' ');
            if (sp == std::string_view::npos) fail(line_no, "header without value");
            ck.header.emplace_back(std::string(rest.substr(0, sp)), std::string(rest.substr(sp + 1)));
        } else if (line.starts_with("list ")) {
            const auto f = text::split_fields(line);
            if (f.size() != 3) fail(line_no, "malformed list section");
            const std::size_t count = to_size(f[2], line_no);
            std::string name(f[1]);
            std::vector<std::string> items;
            items.reserve(count);
            for (std::size_t i = 0; i < count; ++i) {
                if (!next()) fail(line_no, "list '" + name + "' truncated");
                items.push_back(line);
            }
            ck.lists.emplace_back(std::move(name), std::move(items));
        } else if (line.starts_with("tensor ")) {
            const auto f = text::split_fields(line);
            if (f.size() < 3) fail(line_no, "malformed tensor section");
            const std::size_t rank = to_size(f[2], line_no);
            if (f.size() != 3 + rank) fail(line_no, "tensor rank does not match dimension count");
            ad::Shape shape;
            for (std::size_t i = 0; i < rank; ++i) shape.push_back(to_size(f[3 + i], line_no));
            std::string name(f[1]);
            if (!next()) fail(line_no, "tensor '" + name + "' has no value line");
            const auto values = text::split_fields(line);
            std::vector<double> data(values.size());
            for (std::size_t i = 0; i < values.size(); ++i) {
                auto [ptr, ec] = std::from_chars(values[i].data(), values[i].data() + values[i].size(), data[i]);
                if (ec != std::errc() || ptr != values[i].data() + values[i].size()) {
                    fail(line_no, "bad value in tensor '" + name + "'");
                }
            }
            if (data.size() != ad::shape_size(shape)) fail(line_no, "tensor '" + name + "' has wrong value count");
            ck.tensors.push_back({std::move(name), ad::Tensor(std::move(shape), std::move(data))});
        } else {
            fail(line_no, "unknown section '" + line.substr(0, 20) + "'");
        }
    }
    if (!ended) fail(line_no, "missing 'end' marker");
    return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path.string() + "'");
    write(out);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + path.string() + "'");
    return read(in);
}

} // namespace sslstm
