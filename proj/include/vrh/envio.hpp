#pragma once

#include <iosfwd>
#include <string>

#include "vrh/pointproc.hpp"

namespace vrh {

// Text format: one header line "# {json}" carrying the window, provenance,
// origin flag and cell size, then one row per point "x1 .. xd E" (E omitted
// when marks are unset). Numbers are written in shortest round-trip form so
// a read after a write reproduces every double exactly.

void write_env(std::ostream& out, const MarkedPointSet& env);
MarkedPointSet read_env(std::istream& in);

void save_env(const std::string& path, const MarkedPointSet& env);
/// Throws std::runtime_error naming the file on I/O or format errors.
MarkedPointSet load_env(const std::string& path);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

}  // namespace vrh
