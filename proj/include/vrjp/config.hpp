#pragma once

// INI run configuration. Typed getters validate each value, record its
// canonical form for the run manifest, and mark the key as known; keys present
// in the file but never requested are rejected by reject_unknown().

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vrjp/errors.hpp"

namespace vrjp {

class Config {
public:
    using Check = std::function<std::string(double)>;  // empty string = valid

    Config() = default;

    static Config parse(const std::string& text, const std::string& origin = "config") {
        Config c;
        c.origin_ = origin;
        std::istringstream is(text);
        try {
            boost::property_tree::ini_parser::read_ini(is, c.tree_);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ConfigError(origin + " line " + std::to_string(e.line()) + ": " + e.message());
        }
        c.index_lines(text);
        return c;
    }

    static Config load(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw ConfigError("cannot open config file '" + path + "'");
        std::stringstream ss;
        ss << is.rdbuf();
        return parse(ss.str(), path);
    }

    bool has(const std::string& section, const std::string& key) const {
        return find(section, key) != nullptr;
    }

    std::string text(const std::string& section, const std::string& key, const std::string& def,
                     const std::set<std::string>& allowed = {}) {
        const std::string v = raw(section, key, def);
        if (!allowed.empty() && !allowed.count(v)) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            fail(section, key, "expected one of {" + list + "}, got '" + v + "'");
        }
        record(section, key, v);
        return v;
    }

    double real(const std::string& section, const std::string& key, double def, const Check& check = {}) {
        const double x = to_real(section, key, raw(section, key, format(def)));
        validate(section, key, x, check);
        record(section, key, format(x));
        return x;
    }

    long long integer(const std::string& section, const std::string& key, long long def, const Check& check = {}) {
        const long long x = to_integer(section, key, raw(section, key, std::to_string(def)));
        validate(section, key, static_cast<double>(x), check);
        record(section, key, std::to_string(x));
        return x;
    }

    std::uint64_t u64(const std::string& section, const std::string& key, std::uint64_t def) {
        const std::string s = trim(raw(section, key, std::to_string(def)));
        std::uint64_t x = 0;
        auto r = std::from_chars(s.data(), s.data() + s.size(), x);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size()) fail(section, key, "not an unsigned integer: '" + s + "'");
        record(section, key, std::to_string(x));
        return x;
    }

    std::vector<double> reals(const std::string& section, const std::string& key, const std::vector<double>& def,
                              const Check& check = {}) {
        std::string d;
        for (double x : def) d += (d.empty() ? "" : ",") + format(x);
        std::vector<double> out;
        for (const auto& item : split(raw(section, key, d), ',')) {
            const double x = to_real(section, key, item);
            validate(section, key, x, check);
            out.push_back(x);
        }
        if (out.empty()) fail(section, key, "empty list");
        std::string canon;
        for (double x : out) canon += (canon.empty() ? "" : ",") + format(x);
        record(section, key, canon);
        return out;
    }

    std::vector<long long> integers(const std::string& section, const std::string& key, const std::vector<long long>& def,
                                    const Check& check = {}) {
        std::string d;
        for (long long x : def) d += (d.empty() ? "" : ",") + std::to_string(x);
        std::vector<long long> out;
        for (const auto& item : split(raw(section, key, d), ',')) {
            const long long x = to_integer(section, key, item);
            validate(section, key, static_cast<double>(x), check);
            out.push_back(x);
        }
        if (out.empty()) fail(section, key, "empty list");
        std::string canon;
        for (long long x : out) canon += (canon.empty() ? "" : ",") + std::to_string(x);
        record(section, key, canon);
        return out;
    }

    // Comma-separated records of whitespace-separated numbers, each of the
    // given arity.
    std::vector<std::vector<double>> records(const std::string& section, const std::string& key, const std::string& def,
                                             std::size_t arity) {
        std::vector<std::vector<double>> out;
        std::string canon;
        for (const auto& item : split(raw(section, key, def), ',')) {
            std::istringstream ss(item);
            std::vector<double> rec;
            std::string tok;
            while (ss >> tok) rec.push_back(to_real(section, key, tok));
            if (rec.size() != arity)
                fail(section, key, "record '" + item + "' needs " + std::to_string(arity) + " fields");
            out.push_back(rec);
            std::string r;
            for (double x : rec) r += (r.empty() ? "" : " ") + format(x);
            canon += (canon.empty() ? "" : ",") + r;
        }
        if (out.empty()) fail(section, key, "empty list");
        record(section, key, canon);
        return out;
    }

    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& msg) const {
        throw ConfigError(where(section, key) + msg);
    }

    // Every key in the file must have been requested by some getter.
    void reject_unknown() const {
        for (const auto& [full, line] : lines_) {
            if (!known_.count(full)) {
                std::string at = origin_;
                if (line > 0) at += " line " + std::to_string(line);
                throw ConfigError(at + ": unknown key '" + full + "'");
            }
        }
    }

    // Canonical "section.key=value" lines of every resolved value, sorted.
    std::string canonical() const {
        std::string s;
        for (const auto& [k, v] : resolved_) s += k + "=" + v + "\n";
        return s;
    }

    void set_resolved(const std::string& full_key, const std::string& value) { resolved_[full_key] = value; }
    void forget(const std::string& full_key) { resolved_.erase(full_key); }

    static std::string format(double x) {
        char buf[64];
        auto r = std::to_chars(buf, buf + sizeof buf, x);
        return std::string(buf, r.ptr);
    }

    // Common checks.
    static Check positive() {
        return [](double x) { return x > 0.0 && std::isfinite(x) ? "" : "must be positive"; };
    }
    static Check nonnegative() {
        return [](double x) { return x >= 0.0 ? "" : "must be nonnegative"; };
    }
    static Check at_least(double lo) {
        return [lo](double x) { return x >= lo && std::isfinite(x) ? std::string() : "must be >= " + format(lo); };
    }
    static Check between(double lo, double hi) {
        return [lo, hi](double x) {
            return x >= lo && x <= hi ? std::string() : "must lie in [" + format(lo) + ", " + format(hi) + "]";
        };
    }

private:
    boost::property_tree::ptree tree_;
    std::string origin_ = "defaults";
    std::map<std::string, int> lines_;  // section.key -> line in the file
    std::set<std::string> known_;
    std::map<std::string, std::string> resolved_;

    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }

    static std::vector<std::string> split(const std::string& s, char sep) {
        std::vector<std::string> out;
        std::string item;
        std::istringstream ss(s);
        while (std::getline(ss, item, sep)) {
            item = trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }

    void index_lines(const std::string& text) {
        std::istringstream is(text);
        std::string line, section;
        int n = 0;
        while (std::getline(is, line)) {
            ++n;
            const std::string t = trim(line);
            if (t.empty() || t[0] == ';' || t[0] == '#') continue;
            if (t.front() == '[' && t.back() == ']') {
                section = trim(t.substr(1, t.size() - 2));
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = trim(t.substr(0, eq));
            lines_[section.empty() ? key : section + "." + key] = n;
        }
    }

    const boost::property_tree::ptree* find(const std::string& section, const std::string& key) const {
        const auto s = tree_.get_child_optional(boost::property_tree::ptree::path_type(section, '\0'));
        if (!s) return nullptr;
        const auto k = s->get_child_optional(boost::property_tree::ptree::path_type(key, '\0'));
        return k ? &k.get() : nullptr;
    }

    std::string raw(const std::string& section, const std::string& key, const std::string& def) {
        known_.insert(section + "." + key);
        const auto* node = find(section, key);
        return node ? trim(node->data()) : def;
    }

    std::string where(const std::string& section, const std::string& key) const {
        const std::string full = section + "." + key;
        const auto it = lines_.find(full);
        if (it == lines_.end()) return "default for key '" + full + "': ";
        return origin_ + " line " + std::to_string(it->second) + ", key '" + full + "': ";
    }

    void record(const std::string& section, const std::string& key, const std::string& v) {
        resolved_[section + "." + key] = v;
    }

    double to_real(const std::string& section, const std::string& key, const std::string& s0) const {
        const std::string s = trim(s0);
        if (s == "inf") return std::numeric_limits<double>::infinity();
        double x = 0.0;
        auto r = std::from_chars(s.data(), s.data() + s.size(), x);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size()) fail(section, key, "not a number: '" + s + "'");
        return x;
    }

    long long to_integer(const std::string& section, const std::string& key, const std::string& s0) const {
        const std::string s = trim(s0);
        long long x = 0;
        auto r = std::from_chars(s.data(), s.data() + s.size(), x);
        if (r.ec == std::errc() && r.ptr == s.data() + s.size()) return x;
        // Accept integral values written in floating form, e.g. 5e7.
        double d = 0.0;
        auto rd = std::from_chars(s.data(), s.data() + s.size(), d);
        if (rd.ec == std::errc() && rd.ptr == s.data() + s.size() && d == std::floor(d) && std::abs(d) < 9e15)
            return static_cast<long long>(d);
        fail(section, key, "not an integer: '" + s + "'");
    }

    void validate(const std::string& section, const std::string& key, double x, const Check& check) const {
        if (!std::isfinite(x) && !(check && check(x).empty())) fail(section, key, "must be finite");
        if (check) {
            const std::string msg = check(x);
            if (!msg.empty()) fail(section, key, msg);
        }
    }
};

// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace vrjp
