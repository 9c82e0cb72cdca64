#pragma once

#include <iosfwd>
#include <string>

#include "fpsteady/grid.hpp"

namespace fpsteady {

// fpgrid container: "FPGRID01", u32 LE header length, UTF-8 key=value
// header lines, then total_nodes float64 LE values in flat (row-major,
// last index fastest) order.
void write_fpgrid(std::ostream& os, const GridDensity& g);
void write_fpgrid_file(const std::string& path, const GridDensity& g);
GridDensity read_fpgrid(std::istream& is);
GridDensity read_fpgrid_file(const std::string& path);

// 16-bit binary PGM (P5, maxval 65535, big-endian samples), min-max
// scaled; a constant field maps to all zeros. Row order: top row is the
// highest y index, so the image is oriented like a plot. 2D only.
void write_pgm(std::ostream& os, const GridDensity& g);
void write_pgm_file(const std::string& path, const GridDensity& g);

// CSV dump, one "i,j,x,y,value" line per node, no header, 2D only.
void write_csv(std::ostream& os, const GridDensity& g);
void write_csv_file(const std::string& path, const GridDensity& g);

// Writes via a temp file in the destination directory, then renames.
void atomic_write_file(const std::string& path, const std::string& bytes);

std::string read_file(const std::string& path);

}  // namespace fpsteady
