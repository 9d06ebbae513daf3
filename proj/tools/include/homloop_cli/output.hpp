#pragma once

/// Deterministic writers: every floating-point value is printed with 17
/// significant digits (%.17g), JSON keys keep insertion order, CSV files use
/// a header row, commas, '.' decimals and LF line endings. Each file leads
/// with the provenance block (CSV: '#'-prefixed comment lines).

#include "json.hpp"

#include <string>
#include <vector>

namespace homloop::cli {

using ojson = nlohmann::ordered_json;

/// %.17g; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double x);

/// JSON text with two-space indentation, %.17g numbers and null for
/// non-finite values, terminated by a newline.
std::string dump_json(const ojson& j);

/// CSV table with optional leading provenance comments.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
    /// Flattens a JSON object into "# key.sub = value" comment lines.
    void set_provenance(const ojson& provenance) { provenance_ = provenance; }
    /// Cells are numbers (formatted with format_double) or strings (quoted
    /// when they contain commas, quotes or newlines).
    void add_row(const std::vector<ojson>& cells);
    [[nodiscard]] std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::string> rows_;
    ojson provenance_;
};

/// Writes text to path (binary mode, so LF stays LF); throws on failure.
void write_file(const std::string& path, const std::string& text);

}  // namespace homloop::cli
