// SPDX-License-Identifier: Apache-2.0
// CSV input/output for run records and ratio sweeps, plus small file helpers.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "moescale/scaling.hpp"

namespace moescale {

// One (compute, sparsity, ratio, loss) measurement from a ratio sweep.
struct SweepPoint {
    double compute = 0.0;
    double sparsity = 0.0;
    double ratio = 0.0;
    double loss = 0.0;

    void validate() const;
};

// Shortest decimal string that round-trips the value exactly.
std::string fmt_double(double v);

// Run-record CSV: header `label,N,N_active,D,S,r,C,loss`; '#' lines and blank
// lines are skipped.  Throws std::runtime_error with a line number on bad input.
std::vector<RunRecord> parse_run_records(const std::string& text);
std::string emit_run_records(const std::vector<RunRecord>& records);

// Sweep CSV: header `C,S,r,loss`, same comment/blank-line rules.
std::vector<SweepPoint> parse_sweep_points(const std::string& text);
std::string emit_sweep_points(const std::vector<SweepPoint>& points);

// Whole-file helpers.  write_file_atomic writes to a sibling temp file and
// renames it into place so readers never observe a partial file.
std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& content);

// Shared CSV scaffolding: verifies the exact header, skips '#' comments and
// blank lines, splits data rows on commas, and invokes fn(fields, line_no).
void for_each_csv_row(
    const std::string& text, const std::string& expected_header,
    const std::function<void(const std::vector<std::string>&, int)>& fn);

// First non-comment, non-blank line (the header), or "" when absent.
std::string csv_header_line(const std::string& text);

// Strict numeric field parse with a line-numbered error message.
double parse_csv_number(const std::string& field, int line_no, const char* column);

}  // namespace moescale
