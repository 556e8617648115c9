// Copyright 2026 The atomchaos Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Output files: CSV tables with a units comment line, plot column files and
// a JSON run manifest carrying SHA-256 checksums of everything written.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "atomchaos/config.hpp"

namespace atomchaos {

inline constexpr const char* kVersion = "1.0.0";

inline constexpr const char* kUnitsLine =
    "# units: p in hbar*k_f; tau in 1/Omega; D in hbar^2*k_f^2*Omega; x in 1/k_f";

// Shortest text that parses back to exactly the same double.
inline std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific, 16);
    return std::string(buf, end);
}

inline double parse_double(const std::string& s)
{
    if (s == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error("malformed number '" + s + "'");
    }
    return v;
}

inline std::string sha256_hex(const std::string& bytes)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256: digest failed");
    }
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) {
        out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    }
    return out.str();
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Writes `content` and returns its SHA-256.
inline std::string write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << content;
    out.close();
    if (!out) {
        throw Error("write failed for '" + path.string() + "'");
    }
    return sha256_hex(content);
}

// ---------------------------------------------------------------------------
// Generic CSV

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(const std::vector<double>& values)
    {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) {
            cells.push_back(format_double(v));
        }
        add_cells(std::move(cells));
    }

    void add_cells(std::vector<std::string> cells)
    {
        if (cells.size() != header_.size()) {
            throw Error("csv: row width does not match header");
        }
        rows_.push_back(std::move(cells));
    }

    [[nodiscard]] std::string str(bool units = true) const
    {
        std::ostringstream out;
        if (units) {
            out << kUnitsLine << '\n';
        }
        write_line(out, header_);
        for (const auto& r : rows_) {
            write_line(out, r);
        }
        return out.str();
    }

    [[nodiscard]] std::size_t size() const { return rows_.size(); }

private:
    static void write_line(std::ostream& out, const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out << (i ? "," : "") << cells[i];
        }
        out << '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sweep table

inline const std::vector<std::string>& sweep_header()
{
    static const std::vector<std::string> h = {"p", "Lambda", "D_measured", "D_stderr", "D_ch", "D_reg", "D_blend",
                                               "flags"};
    return h;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows)
{
    CsvTable t(sweep_header());
    for (const auto& r : rows) {
        t.add_cells({format_double(r.p), format_double(r.Lambda), format_double(r.D_measured),
                     format_double(r.D_stderr), format_double(r.D_ch), format_double(r.D_reg),
                     format_double(r.D_blend), flags_to_string(r.flags)});
    }
    return t.str();
}

// Parses a sweep table written by sweep_csv (comment lines are skipped).
inline std::vector<SweepRow> parse_sweep_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    bool header_seen = false;
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto cells = split_csv_line(line);
        if (!header_seen) {
            if (cells != sweep_header()) {
                throw Error("sweep table: unexpected header");
            }
            header_seen = true;
            continue;
        }
        if (cells.size() != sweep_header().size()) {
            throw Error("sweep table: wrong number of columns");
        }
        SweepRow r;
        r.p = parse_double(cells[0]);
        r.Lambda = parse_double(cells[1]);
        r.D_measured = parse_double(cells[2]);
        r.D_stderr = parse_double(cells[3]);
        r.D_ch = parse_double(cells[4]);
        r.D_reg = parse_double(cells[5]);
        r.D_blend = parse_double(cells[6]);
        r.flags = flags_from_string(cells[7]);
        rows.push_back(r);
    }
    if (!header_seen) {
        throw Error("sweep table: missing header");
    }
    return rows;
}

struct PlotFiles {
    std::string diffusion;  // p D_measured D_stderr D_ch D_reg D_blend
    std::string chaos;      // p Lambda
};

// Whitespace-separated column files for a log-log overlay; rows stay aligned
// across the two files and unmeasured diffusion values are written as nan.
inline PlotFiles plot_data(const std::vector<SweepRow>& rows)
{
    if (rows.empty()) {
        throw Error("plot data: empty sweep table");
    }
    std::ostringstream d;
    std::ostringstream c;
    d << kUnitsLine << "\n# p D_measured D_stderr D_ch D_reg D_blend\n";
    c << kUnitsLine << "\n# p Lambda\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : rows) {
        const bool ok = r.measured() && r.D_measured > 0.0;
        d << format_double(r.p) << ' ' << format_double(ok ? r.D_measured : nan) << ' '
          << format_double(ok ? r.D_stderr : nan) << ' ' << format_double(r.D_ch) << ' ' << format_double(r.D_reg)
          << ' ' << format_double(r.D_blend) << '\n';
        c << format_double(r.p) << ' ' << format_double(r.Lambda) << '\n';
    }
    return {d.str(), c.str()};
}

// ---------------------------------------------------------------------------
// Manifest

class RunManifest {
public:
    RunManifest(std::string command, const RunConfig& cfg) : command_(std::move(command)), config_(emit_config(cfg)),
                                                             seed_(cfg.ensemble.seed)
    {
    }

    void add_file(const std::filesystem::path& path, const std::string& sha256)
    {
        files_.push_back({{"path", path.filename().string()}, {"sha256", sha256}});
    }

    void add_diagnostic(std::string text) { diagnostics_.push_back(std::move(text)); }

    void add_bin(nlohmann::json bin) { bins_.push_back(std::move(bin)); }

    void set_timing(const std::string& key, double seconds) { timings_[key] = seconds; }

    void set(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }

    [[nodiscard]] nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["command"] = command_;
        j["version"] = kVersion;
        j["seed"] = seed_;
        j["config"] = config_;
        j["files"] = files_;
        j["bins"] = bins_;
        j["diagnostics"] = diagnostics_;
        j["timings_seconds"] = timings_;
        for (const auto& [k, v] : extra_.items()) {
            j[k] = v;
        }
        return j;
    }

    void write(const std::filesystem::path& path) const { write_file(path, to_json().dump(2) + "\n"); }

private:
    std::string command_;
    nlohmann::json config_;
    std::uint64_t seed_;
    nlohmann::json files_ = nlohmann::json::array();
    nlohmann::json bins_ = nlohmann::json::array();
    nlohmann::json diagnostics_ = nlohmann::json::array();
    nlohmann::json timings_ = nlohmann::json::object();
    nlohmann::json extra_ = nlohmann::json::object();
};

// Files listed in a manifest whose current SHA-256 differs from the record.
inline std::vector<std::string> verify_manifest(const std::filesystem::path& manifest_path)
{
    const auto j = nlohmann::json::parse(read_file(manifest_path));
    std::vector<std::string> bad;
    for (const auto& f : j.at("files")) {
        const auto path = manifest_path.parent_path() / f.at("path").get<std::string>();
        if (!std::filesystem::exists(path) || sha256_hex(read_file(path)) != f.at("sha256").get<std::string>()) {
            bad.push_back(path.string());
        }
    }
    return bad;
}

}  // namespace atomchaos
