#include "homloop_cli/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace homloop::cli {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

void dump(const ojson& j, std::string& out, int indent) {
    const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
    const std::string close(static_cast<std::size_t>(indent), ' ');
    switch (j.type()) {
        case ojson::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad + ojson(it.key()).dump() + ": ";
                dump(it.value(), out, indent + 2);
            }
            out += "\n" + close + "}";
            return;
        }
        case ojson::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t k = 0; k < j.size(); ++k) {
                if (k) out += ",\n";
                out += pad;
                dump(j[k], out, indent + 2);
            }
            out += "\n" + close + "]";
            return;
        }
        case ojson::value_t::number_float: {
            const double x = j.get<double>();
            out += std::isfinite(x) ? format_double(x) : "null";
            return;
        }
        default:
            out += j.dump();
    }
}

void flatten(const ojson& j, const std::string& prefix, std::vector<std::string>& lines) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), lines);
        return;
    }
    std::string v;
    if (j.is_number_float()) {
        v = format_double(j.get<double>());
    } else if (j.is_string()) {
        v = j.get<std::string>();
    } else if (j.is_array()) {
        v = "[";
        for (std::size_t k = 0; k < j.size(); ++k) {
            if (k) v += ", ";
            v += j[k].is_number_float() ? format_double(j[k].get<double>()) : j[k].dump();
        }
        v += "]";
    } else {
        v = j.dump();
    }
    lines.push_back("# " + prefix + " = " + v);
}

std::string csv_cell(const ojson& c) {
    if (c.is_number_float()) return format_double(c.get<double>());
    if (c.is_number()) return c.dump();
    if (c.is_boolean()) return c.get<bool>() ? "true" : "false";
    const std::string s = c.is_string() ? c.get<std::string>() : c.dump();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch == '\n' ? ' ' : ch;
    }
    return q + "\"";
}

}  // namespace

std::string dump_json(const ojson& j) {
    std::string out;
    dump(j, out, 0);
    return out + "\n";
}

void CsvTable::add_row(const std::vector<ojson>& cells) {
    if (cells.size() != header_.size()) throw std::logic_error("CSV row width does not match the header");
    std::string row;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) row += ",";
        row += csv_cell(cells[k]);
    }
    rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
    std::string out;
    if (!provenance_.is_null()) {
        std::vector<std::string> lines;
        flatten(provenance_, "", lines);
        for (const auto& l : lines) out += l + "\n";
    }
    for (std::size_t k = 0; k < header_.size(); ++k) out += (k ? "," : "") + header_[k];
    out += "\n";
    for (const auto& r : rows_) out += r + "\n";
    return out;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << text;
    if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace homloop::cli
