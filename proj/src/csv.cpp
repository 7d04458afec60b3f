#include "greenlab/csv.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace greenlab {

std::string fmt_num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void CsvTable::add(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw std::logic_error("csv row width does not match the header");
    rows.push_back(std::move(row));
}

std::string CsvTable::render() const {
    std::string out;
    if (!meta.empty()) out += "# " + meta + "\n";
    auto line = [&](const std::vector<std::string>& f) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(f[i]);
        }
        out += '\n';
    };
    line(columns);
    for (const auto& r : rows) line(r);
    return out;
}

void CsvTable::write(const std::string& path) const { write_file_atomic(path, render()); }

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    fs::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.flush();
        if (!f) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, p, ec);
    if (ec) throw std::runtime_error("rename failed: " + ec.message());
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    bool header_seen = false;
    while (i < n) {
        if (!header_seen && text[i] == '#') {
            while (i < n && text[i] != '\n') ++i;
            ++i;
            continue;
        }
        std::vector<std::string> row;
        std::string field;
        bool quoted = false, in_quotes = false;
        for (; i < n; ++i) {
            char c = text[i];
            if (in_quotes) {
                if (c == '"') {
                    if (i + 1 < n && text[i + 1] == '"') {
                        field += '"';
                        ++i;
                    } else {
                        in_quotes = false;
                    }
                } else {
                    field += c;
                }
            } else if (c == '"' && field.empty() && !quoted) {
                in_quotes = quoted = true;
            } else if (c == ',') {
                row.push_back(std::move(field));
                field.clear();
                quoted = false;
            } else if (c == '\r') {
                continue;
            } else if (c == '\n') {
                ++i;
                break;
            } else {
                field += c;
            }
        }
        if (in_quotes) throw std::runtime_error("unterminated quoted CSV field");
        row.push_back(std::move(field));
        out.push_back(std::move(row));
        header_seen = true;
    }
    return out;
}

}  // namespace greenlab
