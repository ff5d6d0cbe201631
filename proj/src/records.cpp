// SPDX-License-Identifier: Apache-2.0
#include "moescale/records.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace moescale {

namespace {

// Strip surrounding whitespace and a trailing '\r' from CRLF input.
std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        fields.push_back(trim(field));
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

}  // namespace

double parse_csv_number(const std::string& field, int line_no, const char* column) {
    try {
        std::size_t consumed = 0;
        double v = std::stod(field, &consumed);
        if (consumed != field.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": column '" +
                                 column + "' is not a number: '" + field + "'");
    }
}

std::string csv_header_line(const std::string& text) {
    std::istringstream ss(text);
    std::string raw;
    while (std::getline(ss, raw)) {
        std::string line = trim(raw);
        if (!line.empty() && line[0] != '#') return line;
    }
    return "";
}

void for_each_csv_row(
    const std::string& text, const std::string& expected_header,
    const std::function<void(const std::vector<std::string>&, int)>& fn) {
    std::istringstream ss(text);
    std::string raw;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(ss, raw)) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != expected_header) {
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": expected header '" + expected_header +
                                         "', got '" + line + "'");
            }
            header_seen = true;
            continue;
        }
        fn(split_csv_line(line), line_no);
    }
    if (!header_seen) {
        throw std::runtime_error("missing header '" + expected_header + "'");
    }
}

void SweepPoint::validate() const {
    if (!(compute > 0.0)) throw std::invalid_argument("sweep point: C must be positive");
    if (!(sparsity >= 0.0) || sparsity >= 1.0) {
        throw std::invalid_argument("sweep point: S must lie in [0, 1)");
    }
    if (!(ratio > 0.0)) throw std::invalid_argument("sweep point: r must be positive");
    if (!(loss > 0.0)) throw std::invalid_argument("sweep point: loss must be positive");
}

std::string fmt_double(double v) {
    // nlohmann::json prints the shortest decimal that round-trips the double.
    return nlohmann::json(v).dump();
}

std::vector<RunRecord> parse_run_records(const std::string& text) {
    std::vector<RunRecord> records;
    for_each_csv_row(text, "label,N,N_active,D,S,r,C,loss",
                     [&](const std::vector<std::string>& f, int line_no) {
        if (f.size() != 8) {
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": expected 8 columns, got " +
                                     std::to_string(f.size()));
        }
        RunRecord rec;
        rec.label = f[0];
        rec.total_params = parse_csv_number(f[1], line_no, "N");
        rec.active_params = parse_csv_number(f[2], line_no, "N_active");
        rec.tokens = parse_csv_number(f[3], line_no, "D");
        rec.sparsity = parse_csv_number(f[4], line_no, "S");
        rec.ratio = parse_csv_number(f[5], line_no, "r");
        rec.compute = parse_csv_number(f[6], line_no, "C");
        rec.loss = parse_csv_number(f[7], line_no, "loss");
        try {
            rec.validate();
        } catch (const std::exception& e) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
        }
        records.push_back(std::move(rec));
    });
    return records;
}

std::string emit_run_records(const std::vector<RunRecord>& records) {
    std::string out = "label,N,N_active,D,S,r,C,loss\n";
    for (const RunRecord& rec : records) {
        out += rec.label + ',' + fmt_double(rec.total_params) + ',' +
               fmt_double(rec.active_params) + ',' + fmt_double(rec.tokens) + ',' +
               fmt_double(rec.sparsity) + ',' + fmt_double(rec.ratio) + ',' +
               fmt_double(rec.compute) + ',' + fmt_double(rec.loss) + '\n';
    }
    return out;
}

std::vector<SweepPoint> parse_sweep_points(const std::string& text) {
    std::vector<SweepPoint> points;
    for_each_csv_row(text, "C,S,r,loss", [&](const std::vector<std::string>& f, int line_no) {
        if (f.size() != 4) {
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": expected 4 columns, got " +
                                     std::to_string(f.size()));
        }
        SweepPoint p;
        p.compute = parse_csv_number(f[0], line_no, "C");
        p.sparsity = parse_csv_number(f[1], line_no, "S");
        p.ratio = parse_csv_number(f[2], line_no, "r");
        p.loss = parse_csv_number(f[3], line_no, "loss");
        try {
            p.validate();
        } catch (const std::exception& e) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
        }
        points.push_back(p);
    });
    return points;
}

std::string emit_sweep_points(const std::vector<SweepPoint>& points) {
    std::string out = "C,S,r,loss\n";
    for (const SweepPoint& p : points) {
        out += fmt_double(p.compute) + ',' + fmt_double(p.sparsity) + ',' +
               fmt_double(p.ratio) + ',' + fmt_double(p.loss) + '\n';
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "' for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof()) {
        throw std::runtime_error("error while reading '" + path + "'");
    }
    return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open '" + tmp + "' for writing");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out.good()) {
            throw std::runtime_error("error while writing '" + tmp + "'");
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("cannot rename '" + tmp + "' to '" + path +
                                 "': " + std::strerror(errno));
    }
}

}  // namespace moescale
