#pragma once

#include "attfdir/runner.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace attfdir {

/// Column names in output order. Filter runs:
/// t, truth (q0..q3, wx..wz), measurements, est_*, sig3_*, nis, detected,
/// isolated_mask. Simulate runs stop after the measurements; Euler runs add
/// the truth angles phi, theta, psi after the body rates.
[[nodiscard]] std::vector<std::string> csv_columns(const RunResult& result);

/// Writes the header and one row per step, numbers with 9 significant digits.
void write_csv(const RunResult& result, std::ostream& out);

/// write_csv into a file. Throws Error on I/O failure.
void export_csv(const RunResult& result, const std::filesystem::path& path);

} // namespace attfdir
