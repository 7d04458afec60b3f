#pragma once

#include <string>
#include <vector>

namespace greenlab {

// %.12g; "nan"/"inf"/"-inf" for non-finite values
std::string fmt_num(double x);
// RFC 4180 quoting when the field holds a comma, quote, CR or LF
std::string csv_escape(const std::string& field);

struct CsvTable {
    std::string meta;  // written as "# <meta>" on the first line when nonempty
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row);
    std::string render() const;
    // write-temp-then-rename
    void write(const std::string& path) const;
};

// Parses RFC 4180 text; lines starting with '#' before the header are skipped.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

// atomically replace path with content
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace greenlab
