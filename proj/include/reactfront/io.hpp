/*
   Copyright 2026 The reactfront Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>
#include <unistd.h>

#include <json.hpp>

#include "reactfront/error.hpp"
#include "reactfront/kernel.hpp"

namespace reactfront::io {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw IoError("sha256 failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    if (!out) throw IoError("write failed: " + p.string());
}

/// Comma-separated table with a one-line header; numbers printed with %.17g.
class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    void row(const std::vector<double>& values) {
        if (values.size() != header_.size()) throw IoError("table: row width does not match header");
        rows_.push_back(values);
    }

    std::string str() const {
        std::string s;
        for (std::size_t i = 0; i < header_.size(); ++i) s += (i ? "," : "") + header_[i];
        s += '\n';
        for (const auto& r : rows_) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i) s += ',';
                s += format_double(r[i]);
            }
            s += '\n';
        }
        return s;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<double>> rows_;
};

/// Parses a table written by Table. Returns the header and the rows.
inline std::pair<std::vector<std::string>, std::vector<std::vector<double>>> read_table(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    std::string line;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    if (!std::getline(in, line)) throw ValidationError(p.string() + ": empty table");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> r;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                r.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ValidationError(p.string() + ": malformed number '" + cell + "'");
            }
        }
        if (r.size() != header.size()) throw ValidationError(p.string() + ": ragged row");
        rows.push_back(std::move(r));
    }
    return {header, rows};
}

inline std::string hostname() {
    char buf[256] = {0};
    if (gethostname(buf, sizeof buf - 1) != 0) return "unknown";
    return buf;
}

/// One output directory: data files are registered as they are written and
/// the manifest records a content hash for each.
class RunDirectory {
public:
    RunDirectory(fs::path root, std::vector<std::string> command)
        : root_(std::move(root)), command_(std::move(command)), start_(std::chrono::steady_clock::now()) {
        std::error_code ec;
        fs::create_directories(root_, ec);
        if (ec) throw IoError("cannot create " + root_.string() + ": " + ec.message());
    }

    const fs::path& root() const { return root_; }

    void write(const std::string& relative, const std::string& text) {
        const fs::path p = root_ / relative;
        if (p.has_parent_path()) {
            std::error_code ec;
            fs::create_directories(p.parent_path(), ec);
            if (ec) throw IoError("cannot create " + p.parent_path().string());
        }
        write_file(p, text);
        files_[relative] = sha256_hex(text);
    }

    json& extra() { return extra_; }

    void finalize() {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        json m = extra_;
        m["tool"] = "reactfront";
        m["version"] = kToolVersion;
        m["command"] = command_;
        m["wall_clock_seconds"] = wall;
        m["host"] = hostname();
        m["files"] = files_;
        write_file(root_ / "manifest.json", m.dump(2) + "\n");
    }

private:
    fs::path root_;
    std::vector<std::string> command_;
    std::chrono::steady_clock::time_point start_;
    std::map<std::string, std::string> files_;
    json extra_ = json::object();
};

inline json load_manifest(const fs::path& dir) {
    const fs::path p = dir / "manifest.json";
    if (!fs::exists(p)) throw ValidationError("no manifest in " + dir.string());
    try {
        return json::parse(read_file(p));
    } catch (const json::parse_error&) {
        throw ValidationError("corrupt manifest in " + dir.string());
    }
}

/// Files whose content hash no longer matches the manifest.
inline std::vector<std::string> verify_manifest(const fs::path& dir) {
    const json m = load_manifest(dir);
    std::vector<std::string> bad;
    if (!m.contains("files") || !m["files"].is_object()) throw ValidationError("manifest without file index: " + dir.string());
    for (const auto& [name, hash] : m["files"].items()) {
        const fs::path p = dir / name;
        if (!fs::exists(p) || sha256_hex(read_file(p)) != hash.get<std::string>()) bad.push_back(name);
    }
    return bad;
}

} // namespace reactfront::io
