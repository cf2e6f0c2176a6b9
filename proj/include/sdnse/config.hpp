#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

namespace sdnse {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Plain key=value file with [section] headers; '#' and ';' start comments,
/// values may be quoted. Keys are addressed as "section.key".
class KeyValueConfig {
public:
    static KeyValueConfig load(const std::string& path);
    static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

    /// Section names in file order.
    std::vector<std::string> sections() const;
    /// Keys of a section in file order.
    std::vector<std::string> keys(const std::string& section) const;
    /// Rejects keys outside the allowed list ("section.key" or top-level "key").
    void require_known(const std::vector<std::string>& allowed) const;

    const std::string& origin() const { return origin_; }
    const std::string& text() const { return text_; }

private:
    boost::property_tree::ptree tree_;
    std::string origin_;
    std::string text_;
};

}  // namespace sdnse
