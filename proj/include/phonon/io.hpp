#pragma once

// Flat key = value configuration with dotted keys, and CSV output with a
// provenance comment line.

#include "phonon/crystal.hpp"
#include "phonon/types.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace phonon {

class Config {
public:
    Config() = default;

    static Config parse(std::istream& in) {
        Config c;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(line.substr(0, eq));
            if (key.empty()) throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
            c.values_[key] = trim(line.substr(eq + 1));
        }
        return c;
    }
    static Config parse_string(const std::string& s) {
        std::istringstream in(s);
        return parse(in);
    }
    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open config file " + path);
        return parse(in);
    }

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    [[nodiscard]] const std::string& str(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ValidationError("missing config key " + key);
        used_.insert(key);
        return it->second;
    }
    [[nodiscard]] std::string str(const std::string& key, const std::string& fallback) const {
        return has(key) ? str(key) : fallback;
    }
    [[nodiscard]] double num(const std::string& key) const { return parse_number(key, str(key)); }
    [[nodiscard]] double num(const std::string& key, double fallback) const { return has(key) ? num(key) : fallback; }
    [[nodiscard]] int integer(const std::string& key) const {
        const double v = num(key);
        if (v != static_cast<int>(v)) throw ValidationError("config key " + key + " must be an integer");
        return static_cast<int>(v);
    }
    [[nodiscard]] int integer(const std::string& key, int fallback) const {
        return has(key) ? integer(key) : fallback;
    }
    [[nodiscard]] bool flag(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const std::string& v = str(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ValidationError("config key " + key + " must be true or false");
    }
    /// Comma-separated numbers.
    [[nodiscard]] std::vector<double> list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& t : split(str(key), ',')) out.push_back(parse_number(key, t));
        return out;
    }
    [[nodiscard]] std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const {
        return has(key) ? list(key) : fallback;
    }
    /// Semicolon-separated triples, e.g. "0,0,0; pi,0,0".
    [[nodiscard]] std::vector<Vec3> triples(const std::string& key) const {
        std::vector<Vec3> out;
        for (const auto& t : split(str(key), ';')) {
            const auto parts = split(t, ',');
            if (parts.size() != 3) throw ValidationError("config key " + key + ": expected triples x,y,z");
            out.emplace_back(parse_number(key, parts[0]), parse_number(key, parts[1]), parse_number(key, parts[2]));
        }
        return out;
    }
    [[nodiscard]] Vec3 triple(const std::string& key) const {
        const auto t = triples(key);
        if (t.size() != 1) throw ValidationError("config key " + key + ": expected one triple");
        return t.front();
    }

    /// Keys never read, for warnings about typos.
    [[nodiscard]] std::vector<std::string> unused() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return {};
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }
    static std::vector<std::string> split(const std::string& s, char sep) {
        std::vector<std::string> out;
        std::string cur;
        std::istringstream in(s);
        while (std::getline(in, cur, sep)) {
            cur = trim(cur);
            if (!cur.empty()) out.push_back(cur);
        }
        return out;
    }
    /// Numbers, optionally written as multiples of pi ("pi", "-pi/2", "0.5pi").
    static double parse_number(const std::string& key, std::string t) {
        t = trim(t);
        double sign = 1.0;
        if (!t.empty() && (t[0] == '-' || t[0] == '+')) {
            if (t[0] == '-') sign = -1.0;
            t = trim(t.substr(1));
        }
        const auto p = t.find("pi");
        try {
            if (p == std::string::npos) {
                std::size_t used = 0;
                const double v = std::stod(t, &used);
                if (used != t.size()) throw std::invalid_argument(t);
                return sign * v;
            }
            double coef = 1.0, div = 1.0;
            const std::string head = trim(t.substr(0, p));
            std::string tail = trim(t.substr(p + 2));
            if (!head.empty()) coef = std::stod(head.back() == '*' ? head.substr(0, head.size() - 1) : head);
            if (!tail.empty()) {
                if (tail[0] != '/') throw std::invalid_argument(t);
                div = std::stod(tail.substr(1));
            }
            return sign * coef * pi / div;
        } catch (const std::exception&) {
            throw ValidationError("config key " + key + ": cannot parse number '" + t + "'");
        }
    }

private:
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

/// Material and geometry from material.* and geometry.* keys.
inline CrystalSpec crystal_from_config(const Config& c) {
    CrystalSpec s;
    s.material.lambda1 = c.num("material.lambda1");
    s.material.mu1 = c.num("material.mu1");
    s.material.contrast_k = c.num("material.contrast_k", 1.0);
    s.material.rho1 = c.num("material.rho1");
    s.material.rho2 = c.num("material.rho2");
    const std::string shape = c.str("geometry.shape");
    if (shape == "sphere") {
        Sphere sp;
        sp.center = c.has("geometry.center") ? c.triple("geometry.center") : Vec3(0.5, 0.5, 0.5);
        sp.radius = c.num("geometry.radius");
        s.geometry.shape = sp;
    } else if (shape == "voxels") {
        VoxelSet v;
        const auto r = c.list("geometry.resolution");
        if (r.size() != 3) throw ValidationError("geometry.resolution needs three integers");
        for (int d = 0; d < 3; ++d) v.resolution[d] = static_cast<int>(r[d]);
        v.occupied.assign(static_cast<std::size_t>(v.resolution[0]) * v.resolution[1] * v.resolution[2], 0);
        // geometry.boxes = "i0,i1,j0,j1,l0,l1; ..." half-open voxel index ranges
        if (c.has("geometry.boxes"))
            for (const auto& box : Config::split(c.str("geometry.boxes"), ';')) {
                const auto b = Config::split(box, ',');
                if (b.size() != 6) throw ValidationError("geometry.boxes entries need six indices");
                int lim[6];
                for (int q = 0; q < 6; ++q) lim[q] = static_cast<int>(Config::parse_number("geometry.boxes", b[q]));
                for (int i = std::max(0, lim[0]); i < std::min(lim[1], v.resolution[0]); ++i)
                    for (int j = std::max(0, lim[2]); j < std::min(lim[3], v.resolution[1]); ++j)
                        for (int l = std::max(0, lim[4]); l < std::min(lim[5], v.resolution[2]); ++l)
                            v.occupied[(static_cast<std::size_t>(i) * v.resolution[1] + j) * v.resolution[2] + l] = 1;
            }
        s.geometry.shape = v;
    } else {
        throw ValidationError("geometry.shape must be sphere or voxels, got '" + shape + "'");
    }
    s.geometry.buffer_ratio_q = c.num("geometry.buffer_ratio_q", 0.5);
    s.geometry.theta = c.num("geometry.theta", 0.5);
    return s;
}

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

class CsvWriter {
public:
    /// The first line is "# key=value ..." with the provenance pairs, then the
    /// header row.
    CsvWriter(const std::string& path, const std::vector<std::pair<std::string, std::string>>& provenance,
              const std::vector<std::string>& header)
        : out_(path), columns_(header.size()) {
        if (!out_) throw ValidationError("cannot write " + path);
        out_ << '#';
        for (const auto& [k, v] : provenance) out_ << ' ' << k << '=' << v;
        out_ << '\n';
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << '\n';
    }

    /// One cell, formatted on construction.
    struct Cell {
        std::string text;
        Cell(double v) : text(format_number(v)) {}
        Cell(int v) : text(std::to_string(v)) {}
        Cell(long v) : text(std::to_string(v)) {}
        Cell(std::size_t v) : text(std::to_string(v)) {}
        Cell(bool v) : text(v ? "true" : "false") {}
        Cell(std::string v) : text(std::move(v)) {}
        Cell(const char* v) : text(v) {}
    };

    void row(const std::vector<Cell>& cells) {
        if (cells.size() != columns_) throw std::logic_error("CSV row width does not match the header");
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i].text;
        out_ << '\n';
    }

private:
    std::ofstream out_;
    std::size_t columns_;
};

} // namespace phonon
