// Command implementations behind the CLI: solve a device over an energy
// grid, sweep benchmark sizes, or dump a partition.  All output is CSV/JSON
// written under the configured output directory; reruns with the same config
// and seed are byte-identical (bench wall-clock recording is off by default
// for that reason).
#pragma once

#include <string>

#include "negf/config.hpp"

namespace negf {

// 17-significant-digit locale-independent text form used for all CSV floats.
std::string format_double(double v);

// density.csv, ldos.csv, line_density.csv.
void cmd_solve(const RunConfig& cfg);

// bench.csv: one row per (solver, size), ledger counts plus wall seconds.
void cmd_bench(const RunConfig& cfg);

// tree.json and validation.txt for the configured device and solver.
void cmd_partition(const RunConfig& cfg);

}  // namespace negf
