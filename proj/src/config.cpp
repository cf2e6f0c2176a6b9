#include "sdnse/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

namespace sdnse {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Drops comments and surrounding quotes so the INI reader sees bare values.
std::string normalise(const std::string& text) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') {
            out << '\n';
            continue;
        }
        if (t[0] != '[') {
            const auto eq = t.find('=');
            if (eq != std::string::npos) {
                std::string key = trim(t.substr(0, eq));
                std::string val = trim(t.substr(eq + 1));
                if (!val.empty() && (val[0] == '"' || val[0] == '\'')) {
                    const auto close = val.find(val[0], 1);
                    val = close == std::string::npos ? val.substr(1) : val.substr(1, close - 1);
                } else {
                    const auto hash = val.find_first_of("#;");
                    if (hash != std::string::npos) val = trim(val.substr(0, hash));
                }
                t = key + " = " + val;
            }
        }
        out << t << '\n';
    }
    return out.str();
}

}  // namespace

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& origin) {
    KeyValueConfig c;
    c.origin_ = origin;
    c.text_ = text;
    std::istringstream in(normalise(text));
    try {
        boost::property_tree::ini_parser::read_ini(in, c.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    return c;
}

bool KeyValueConfig::has(const std::string& key) const { return static_cast<bool>(tree_.get_optional<std::string>(key)); }

std::string KeyValueConfig::get_string(const std::string& key) const {
    const auto v = tree_.get_optional<std::string>(key);
    if (!v) throw ConfigError(origin_ + ": missing key '" + key + "'");
    return *v;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

double KeyValueConfig::get_double(const std::string& key) const {
    const auto s = get_string(key);
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) throw ConfigError(origin_ + ": key '" + key + "' is not a number: " + s);
    return v;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long long KeyValueConfig::get_int(const std::string& key) const {
    const auto s = get_string(key);
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) throw ConfigError(origin_ + ": key '" + key + "' is not an integer: " + s);
    return v;
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    std::string s = get_string(key);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError(origin_ + ": key '" + key + "' is not a boolean: " + s);
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    if (!has(key)) return fallback;
    std::string s = get_string(key);
    for (char& ch : s)
        if (ch == '[' || ch == ']' || ch == ',') ch = ' ';
    std::istringstream in(s);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size()) throw ConfigError(origin_ + ": key '" + key + "' has a non-numeric entry: " + tok);
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> KeyValueConfig::sections() const {
    std::vector<std::string> out;
    for (const auto& [name, node] : tree_)
        if (!node.empty()) out.push_back(name);
    return out;
}

std::vector<std::string> KeyValueConfig::keys(const std::string& section) const {
    std::vector<std::string> out;
    const auto child = tree_.get_child_optional(section);
    if (!child) return out;
    for (const auto& [name, node] : *child) out.push_back(name);
    return out;
}

void KeyValueConfig::require_known(const std::vector<std::string>& allowed) const {
    auto known = [&](const std::string& k) { return std::find(allowed.begin(), allowed.end(), k) != allowed.end(); };
    for (const auto& [name, node] : tree_) {
        if (node.empty()) {
            if (!known(name)) throw ConfigError(origin_ + ": unknown key '" + name + "'");
            continue;
        }
        for (const auto& [key, leaf] : node)
            if (!known(name + "." + key)) throw ConfigError(origin_ + ": unknown key '" + name + "." + key + "'");
    }
}

}  // namespace sdnse
