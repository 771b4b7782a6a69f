#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace sparsedom {

/// Flat key=value run manifest. Every seed and tolerance used by a run is
/// recorded here so that two manifests diff cleanly.
class Manifest {
public:
    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value);
    void set(const std::string& key, std::int64_t value);
    void set_bool(const std::string& key, bool value);

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    const std::map<std::string, std::string>& entries() const { return kv_; }

    std::string to_text() const;  // sorted "key = value" lines
    void write(const std::filesystem::path& file) const;

private:
    std::map<std::string, std::string> kv_;
};

/// Minimal CSV writer, RFC-4180-style quoting. Numeric cells are formatted
/// with %.17g so reruns with identical seeds produce byte-identical files.
class Csv {
public:
    explicit Csv(std::vector<std::string> header);

    void add_row(const std::vector<std::string>& cells);
    Csv& cell(const std::string& s);
    Csv& cell(double v);
    Csv& cell(std::int64_t v);
    void end_row();

    std::string to_text() const;
    void write(const std::filesystem::path& file) const;

    static std::string format_double(double v);

private:
    std::size_t cols_;
    std::vector<std::string> lines_;
    std::vector<std::string> pending_;
};

}  // namespace sparsedom
