#include "flowcast/config.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "flowcast/errors.hpp"

namespace flowcast {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in, std::string_view source) {
    KeyValueConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(std::string(source) + ":" + std::to_string(line_no) +
                              ": expected key = value");
        }
        std::string key = trim(std::string_view(body).substr(0, eq));
        if (key.empty()) {
            throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": empty key");
        }
        cfg.set(std::move(key), trim(std::string_view(body).substr(eq + 1)));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse(in, path.string());
}

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
    auto it = entries_.find(std::string(key));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void KeyValueConfig::write(std::ostream& out) const {
    for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
}

}  // namespace flowcast
