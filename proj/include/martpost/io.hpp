#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "martpost/regression.hpp"

namespace martpost {

/// Round-trip-safe formatting for CSV output; fixed format so that output
/// bytes depend only on the values.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Csv {
    std::vector<std::string> header;
    Mat values;  // rows x header.size()
};

namespace detail {

inline std::string strip(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : line) {
        if (c == ',') {
            out.push_back(strip(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(strip(cur));
    return out;
}

inline double parse_double_strict(const std::string& tok, std::size_t row,
                                  std::size_t col) {
    const std::string t = strip(tok);
    if (t.empty())
        throw DataError("csv: empty field at row " + std::to_string(row) +
                        ", column " + std::to_string(col));
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size())
        throw DataError("csv: non-numeric value '" + t + "' at row " +
                        std::to_string(row) + ", column " + std::to_string(col));
    return v;
}

}  // namespace detail

/// Reads a comma-separated file with a mandatory header row; every data
/// field must parse fully as a number.  Errors cite 1-based row (counting
/// the header as row 1) and column.
inline Csv read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    Csv csv;
    std::vector<double> flat;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (row == 1) {
            csv.header = detail::split_fields(line);
            if (csv.header.empty() || (csv.header.size() == 1 && csv.header[0].empty()))
                throw DataError("csv: empty header in " + path);
            continue;
        }
        if (detail::strip(line).empty()) continue;  // tolerate trailing blank lines
        const auto fields = detail::split_fields(line);
        if (fields.size() != csv.header.size())
            throw DataError("csv: row " + std::to_string(row) + " has " +
                            std::to_string(fields.size()) + " fields, header has " +
                            std::to_string(csv.header.size()));
        for (std::size_t c = 0; c < fields.size(); ++c)
            flat.push_back(detail::parse_double_strict(fields[c], row, c + 1));
    }
    if (row == 0) throw DataError("csv: " + path + " is empty");
    const auto ncol = csv.header.size();
    const auto nrow = flat.size() / ncol;
    csv.values.resize(static_cast<Eigen::Index>(nrow), static_cast<Eigen::Index>(ncol));
    for (std::size_t r = 0; r < nrow; ++r)
        for (std::size_t c = 0; c < ncol; ++c)
            csv.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                flat[r * ncol + c];
    return csv;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const Mat& values) {
    std::ofstream out(path, std::ios::binary);  // '\n' line endings everywhere
    if (!out) throw DataError("cannot write " + path);
    for (std::size_t j = 0; j < header.size(); ++j)
        out << (j ? "," : "") << header[j];
    out << '\n';
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j)
            out << (j ? "," : "") << format_double(values(i, j));
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

/// Builds a regression design from a CSV: the column named "y" is the
/// response, every other column a covariate (in header order).
inline DesignMatrix design_from_csv(const Csv& csv) {
    Eigen::Index ycol = -1;
    for (std::size_t j = 0; j < csv.header.size(); ++j)
        if (csv.header[j] == "y") ycol = static_cast<Eigen::Index>(j);
    if (ycol < 0) throw DataError("csv: regression data needs a column named 'y'");
    if (csv.header.size() < 2)
        throw DataError("csv: regression data needs at least one covariate column");
    DesignMatrix d;
    d.y = csv.values.col(ycol);
    d.X.resize(csv.values.rows(), csv.values.cols() - 1);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < csv.values.cols(); ++j) {
        if (j == ycol) continue;
        d.X.col(k) = csv.values.col(j);
        d.covariate_names.push_back(csv.header[static_cast<std::size_t>(j)]);
        ++k;
    }
    d.validate();
    return d;
}

/// Extracts the observation matrix for an i.i.d. family: univariate
/// families use the "y" column (or the single column); the multivariate
/// normal uses all columns in header order.
inline Mat iid_data_from_csv(const Csv& csv, int obs_dim) {
    if (csv.values.rows() == 0) throw DataError("csv: no data rows");
    if (obs_dim == 1) {
        for (std::size_t j = 0; j < csv.header.size(); ++j)
            if (csv.header[j] == "y")
                return csv.values.col(static_cast<Eigen::Index>(j));
        if (csv.header.size() == 1) return csv.values;
        throw DataError(
            "csv: univariate family needs a 'y' column (or a single-column file)");
    }
    if (csv.values.cols() != obs_dim)
        throw DataError("csv: family expects " + std::to_string(obs_dim) +
                        " columns, file has " + std::to_string(csv.values.cols()));
    return csv.values;
}

/// Flat `key = value` configuration file: one assignment per line, `#`
/// comments, values are numbers, booleans (true/false), quoted or bare
/// strings, or numeric arrays [a, b, c].
class ConfigMap {
  public:
    using Value = std::variant<double, bool, std::string, std::vector<double>>;

    static ConfigMap parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    static ConfigMap parse(const std::string& text, const std::string& origin = "<config>") {
        ConfigMap cfg;
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string s = strip_comment(line);
            if (s.empty()) continue;
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
            const std::string key = detail::strip(s.substr(0, eq));
            const std::string raw = detail::strip(s.substr(eq + 1));
            if (key.empty() || raw.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": empty key or value");
            if (cfg.values_.count(key))
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": duplicate key '" + key + "'");
            cfg.values_.emplace(key, parse_value(raw, origin, lineno));
        }
        return cfg;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    double number(const std::string& key) const {
        return expect<double>(key, "a number");
    }
    double number_or(const std::string& key, double def) const {
        return has(key) ? number(key) : def;
    }
    bool boolean_or(const std::string& key, bool def) const {
        if (!has(key)) return def;
        return expect<bool>(key, "a boolean");
    }
    std::string text(const std::string& key) const {
        return expect<std::string>(key, "a string");
    }
    std::string text_or(const std::string& key, const std::string& def) const {
        return has(key) ? text(key) : def;
    }
    std::vector<double> array(const std::string& key) const {
        return expect<std::vector<double>>(key, "an array");
    }

    void require(const std::vector<std::string>& keys) const {
        for (const auto& k : keys)
            if (!has(k)) throw ConfigError("config: missing required key '" + k + "'");
    }

    void restrict_to(const std::vector<std::string>& allowed) const {
        for (const auto& [k, v] : values_) {
            bool found = false;
            for (const auto& a : allowed)
                if (a == k) {
                    found = true;
                    break;
                }
            if (!found) throw ConfigError("config: unknown key '" + k + "'");
        }
    }

  private:
    template <typename T>
    T expect(const std::string& key, const char* what) const {
        const auto it = values_.find(key);
        if (it == values_.end())
            throw ConfigError("config: missing required key '" + key + "'");
        if (const T* v = std::get_if<T>(&it->second)) return *v;
        throw ConfigError("config: key '" + key + "' must be " + what);
    }

    static std::string strip_comment(const std::string& line) {
        bool quoted = false;
        std::string out;
        for (const char c : line) {
            if (c == '"') quoted = !quoted;
            if (c == '#' && !quoted) break;
            out += c;
        }
        return detail::strip(out);
    }

    static Value parse_value(const std::string& raw, const std::string& origin,
                             std::size_t lineno) {
        auto fail = [&](const std::string& msg) -> ConfigError {
            return ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg);
        };
        if (raw == "true") return true;
        if (raw == "false") return false;
        if (raw.front() == '"') {
            if (raw.size() < 2 || raw.back() != '"')
                throw fail("unterminated string");
            return raw.substr(1, raw.size() - 2);
        }
        if (raw.front() == '[') {
            if (raw.back() != ']') throw fail("unterminated array");
            std::vector<double> arr;
            const std::string body = raw.substr(1, raw.size() - 2);
            if (!detail::strip(body).empty()) {
                for (const auto& tok : detail::split_fields(body)) {
                    char* end = nullptr;
                    const double v = std::strtod(tok.c_str(), &end);
                    if (tok.empty() || end != tok.c_str() + tok.size())
                        throw fail("non-numeric array element '" + tok + "'");
                    arr.push_back(v);
                }
            }
            return arr;
        }
        char* end = nullptr;
        const double v = std::strtod(raw.c_str(), &end);
        if (end == raw.c_str() + raw.size()) return v;
        return raw;  // bare-word string
    }

    std::map<std::string, Value> values_;
};

}  // namespace martpost
