#pragma once

#include "sslstm/autodiff.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sslstm {

/// Versioned text container for model state.
///
///     sslstm-checkpoint 1
///     header <key> <value to end of line>
///     list <name> <count>
///     <one item per line> x count
///     tensor <name> <rank> <d0> ... <dk>
///     <row-major values, space separated, shortest round-trip form>
///     end
///
/// Sections keep insertion order, so identical content serializes to
/// identical bytes.
struct Checkpoint {
    static constexpr int kVersion = 1;

    struct NamedTensor {
        std::string name;
        ad::Tensor tensor;
    };

    std::vector<std::pair<std::string, std::string>> header;
    std::vector<std::pair<std::string, std::vector<std::string>>> lists;
    std::vector<NamedTensor> tensors;

    void set(std::string key, std::string value);
    std::optional<std::string> get(std::string_view key) const;
    /// Throws std::runtime_error naming the key if absent.
    const std::string& require(std::string_view key) const;

    const std::vector<std::string>* list(std::string_view name) const;
    const ad::Tensor* tensor(std::string_view name) const;

    void add_parameters(const ad::ParameterSet& params);
    /// Copies stored values into matching parameters; names and shapes must agree.
    void load_parameters(ad::ParameterSet& params) const;

    void write(std::ostream& out) const;
    static Checkpoint read(std::istream& in);
    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);
};

} // namespace sslstm
