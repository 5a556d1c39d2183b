// SPDX-License-Identifier: Apache-2.0

#ifndef UARIS_CSV_HPP
#define UARIS_CSV_HPP

#include <string>
#include <vector>

namespace uaris {

/// Minimal RFC-4180 writer: CRLF line endings, fields quoted when they
/// contain a comma, quote or line break.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);
    void add_row(std::vector<std::string> row);
    std::size_t rows() const { return rows_.size(); }
    std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

std::string csv_escape(const std::string& field);

/// Shortest round-trip-safe decimal form.
std::string format_double(double v);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

/// Throws IoError unless `dir` exists (or can be created) and is writable.
void ensure_writable_dir(const std::string& dir);

}  // namespace uaris

#endif
