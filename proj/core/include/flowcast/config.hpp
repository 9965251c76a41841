#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace flowcast {

/// Flat `key = value` text configuration. Blank lines and `#` comments are
/// ignored; later assignments override earlier ones.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& in, std::string_view source = "<config>");
    static KeyValueConfig load(const std::filesystem::path& path);

    void set(std::string key, std::string value) { entries_[std::move(key)] = std::move(value); }
    bool has(std::string_view key) const { return entries_.find(std::string(key)) != entries_.end(); }
    std::optional<std::string> get(std::string_view key) const;
    const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

    /// Sorted `key = value` lines.
    void write(std::ostream& out) const;

private:
    std::map<std::string, std::string> entries_;
};

}  // namespace flowcast
