#include "fpsteady/io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "fpsteady/config.hpp"
#include "fpsteady/error.hpp"

namespace fpsteady {

namespace {

constexpr char kMagic[8] = {'F', 'P', 'G', 'R', 'I', 'D', '0', '1'};

void put_u32_le(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 4);
}

void put_f64_le(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  char b[8];
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  os.write(b, 8);
}

std::uint32_t get_u32_le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) fail(ErrorClass::io, "truncated header length");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f64_le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) fail(ErrorClass::io, "truncated payload");
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | b[i];
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string join_counts(const std::vector<std::int64_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size())
      fail(ErrorClass::io, "malformed number in header: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

void write_fpgrid(std::ostream& os, const GridDensity& g) {
  g.spec.validate();
  if (g.values.size() != g.spec.total_nodes())
    fail(ErrorClass::spec_mismatch,
         "density length does not match its grid");
  std::ostringstream header;
  header << "dim=" << g.spec.dim << '\n';
  header << "counts=" << join_counts(g.spec.counts()) << '\n';
  header << "lower=" << join_doubles(g.spec.lower) << '\n';
  header << "upper=" << join_doubles(g.spec.upper) << '\n';
  header << "r=" << format_double(g.spec.r) << '\n';
  header << "mass=" << format_double(box_mass(g)) << '\n';
  header << "provenance=" << provenance_name(g.provenance) << '\n';
  header << "sample_count=" << g.sample_count << '\n';
  const std::string h = header.str();

  os.write(kMagic, 8);
  put_u32_le(os, static_cast<std::uint32_t>(h.size()));
  os.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (Eigen::Index i = 0; i < g.values.size(); ++i)
    put_f64_le(os, g.values[i]);
  if (!os) fail(ErrorClass::io, "write failed");
}

GridDensity read_fpgrid(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    fail(ErrorClass::io, "bad magic: not an fpgrid file");
  const std::uint32_t len = get_u32_le(is);
  std::string header(len, '\0');
  is.read(header.data(), len);
  if (!is) fail(ErrorClass::io, "truncated header");

  GridDensity g;
  std::vector<std::int64_t> counts;
  bool have[8] = {};
  std::istringstream hs(header);
  std::string line;
  while (std::getline(hs, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorClass::io, "malformed header line: '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "dim") {
      g.spec.dim = std::stoi(value);
      have[0] = true;
    } else if (key == "counts") {
      for (const double c : split_doubles(value))
        counts.push_back(static_cast<std::int64_t>(c));
      have[1] = true;
    } else if (key == "lower") {
      g.spec.lower = split_doubles(value);
      have[2] = true;
    } else if (key == "upper") {
      g.spec.upper = split_doubles(value);
      have[3] = true;
    } else if (key == "r") {
      g.spec.r = split_doubles(value).at(0);
      have[4] = true;
    } else if (key == "mass") {
      have[5] = true;  // derived; carried for inspection only
    } else if (key == "provenance") {
      g.provenance = provenance_from_name(value);
      have[6] = true;
    } else if (key == "sample_count") {
      g.sample_count = std::stoull(value);
      have[7] = true;
    } else {
      fail(ErrorClass::io, "unknown header key '" + key + "'");
    }
  }
  static const char* names[8] = {"dim",  "counts", "lower",      "upper",
                                 "r",    "mass",   "provenance", "sample_count"};
  for (int i = 0; i < 8; ++i)
    if (!have[i])
      fail(ErrorClass::io, std::string("missing header key '") + names[i] + "'");

  g.spec.validate();
  if (g.spec.counts() != counts)
    fail(ErrorClass::io, "header counts disagree with the grid geometry");

  const std::int64_t n = g.spec.total_nodes();
  g.values.resize(n);
  for (std::int64_t i = 0; i < n; ++i) g.values[i] = get_f64_le(is);
  is.peek();
  if (!is.eof()) fail(ErrorClass::io, "trailing bytes after payload");
  return g;
}

void write_pgm(std::ostream& os, const GridDensity& g) {
  if (g.spec.dim != 2)
    fail(ErrorClass::unsupported, "heatmap rendering needs a 2D grid");
  const auto n = g.spec.counts();
  const double lo = g.values.minCoeff();
  const double hi = g.values.maxCoeff();
  const double scale = hi > lo ? 65535.0 / (hi - lo) : 0.0;

  os << "P5\n" << n[0] << ' ' << n[1] << "\n65535\n";
  // top image row = highest y, so the file is oriented like a plot
  for (std::int64_t j = n[1] - 1; j >= 0; --j) {
    for (std::int64_t i = 0; i < n[0]; ++i) {
      const double v = g.values[i * n[1] + j];
      const auto pix =
          static_cast<std::uint16_t>(std::lround((v - lo) * scale));
      const char b[2] = {static_cast<char>((pix >> 8) & 0xFF),
                         static_cast<char>(pix & 0xFF)};
      os.write(b, 2);
    }
  }
  if (!os) fail(ErrorClass::io, "write failed");
}

void write_csv(std::ostream& os, const GridDensity& g) {
  if (g.spec.dim != 2)
    fail(ErrorClass::unsupported, "CSV export needs a 2D grid");
  const auto n = g.spec.counts();
  for (std::int64_t i = 0; i < n[0]; ++i) {
    const double x = g.spec.lower[0] + double(i) * g.spec.r;
    for (std::int64_t j = 0; j < n[1]; ++j) {
      const double y = g.spec.lower[1] + double(j) * g.spec.r;
      os << i << ',' << j << ',' << format_double(x) << ',' << format_double(y)
         << ',' << format_double(g.values[i * n[1] + j]) << '\n';
    }
  }
  if (!os) fail(ErrorClass::io, "write failed");
}

void atomic_write_file(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorClass::io, "cannot open '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorClass::io, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorClass::io, "cannot move output into place at '" + path + "'");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorClass::io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_fpgrid_file(const std::string& path, const GridDensity& g) {
  std::ostringstream os;
  write_fpgrid(os, g);
  atomic_write_file(path, os.str());
}

GridDensity read_fpgrid_file(const std::string& path) {
  std::istringstream is(read_file(path));
  return read_fpgrid(is);
}

void write_pgm_file(const std::string& path, const GridDensity& g) {
  std::ostringstream os;
  write_pgm(os, g);
  atomic_write_file(path, os.str());
}

void write_csv_file(const std::string& path, const GridDensity& g) {
  std::ostringstream os;
  write_csv(os, g);
  atomic_write_file(path, os.str());
}

}  // namespace fpsteady
