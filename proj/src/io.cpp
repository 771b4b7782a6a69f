#include "sparsedom/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace sparsedom {

void Manifest::set(const std::string& key, const std::string& value) { kv_[key] = value; }

void Manifest::set(const std::string& key, double value) { kv_[key] = Csv::format_double(value); }

void Manifest::set(const std::string& key, std::int64_t value) { kv_[key] = std::to_string(value); }

void Manifest::set_bool(const std::string& key, bool value) { kv_[key] = value ? "true" : "false"; }

std::string Manifest::to_text() const {
    std::string out;
    for (const auto& [k, v] : kv_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

void Manifest::write(const std::filesystem::path& file) const {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("cannot write manifest: " + file.string());
    os << to_text();
}

Csv::Csv(std::vector<std::string> header) : cols_(header.size()) { add_row(header); }

static std::string quote_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void Csv::add_row(const std::vector<std::string>& cells) {
    if (cells.size() != cols_) throw std::invalid_argument("csv row width mismatch");
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += quote_cell(cells[i]);
    }
    lines_.push_back(std::move(line));
}

Csv& Csv::cell(const std::string& s) {
    pending_.push_back(s);
    return *this;
}

Csv& Csv::cell(double v) {
    pending_.push_back(format_double(v));
    return *this;
}

Csv& Csv::cell(std::int64_t v) {
    pending_.push_back(std::to_string(v));
    return *this;
}

void Csv::end_row() {
    add_row(pending_);
    pending_.clear();
}

std::string Csv::to_text() const {
    std::string out;
    for (const auto& l : lines_) {
        out += l;
        out += '\n';
    }
    return out;
}

void Csv::write(const std::filesystem::path& file) const {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("cannot write csv: " + file.string());
    os << to_text();
}

std::string Csv::format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace sparsedom
