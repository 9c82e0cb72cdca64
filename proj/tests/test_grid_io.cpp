#include <doctest.h>

#include <cstdlib>
#include <sstream>
#include <string>

#include "fpsteady/error.hpp"
#include "fpsteady/grid.hpp"
#include "fpsteady/io.hpp"
#include "fpsteady/rng.hpp"

using namespace fpsteady;

namespace {

GridSpec make_1d(double lo, double hi, double r) {
  GridSpec s;
  s.dim = 1;
  s.lower = {lo};
  s.upper = {hi};
  s.r = r;
  return s;
}

GridSpec make_2d(double lo0, double hi0, double lo1, double hi1, double r) {
  GridSpec s;
  s.dim = 2;
  s.lower = {lo0, lo1};
  s.upper = {hi0, hi1};
  s.r = r;
  return s;
}

std::string fixture_dir() {
  const char* env = std::getenv("FPSTEADY_FIXTURE_DIR");
  REQUIRE(env != nullptr);
  return env;
}

}  // namespace

TEST_CASE("node counts and flat indexing") {
  const GridSpec s = make_2d(0.0, 0.3, -0.1, 0.3, 0.1);
  CHECK(s.counts() == std::vector<std::int64_t>{4, 5});
  CHECK(s.total_nodes() == 20);

  const std::int64_t idx[2] = {1, 2};
  CHECK(s.flat_index(idx) == 7);  // row-major, last axis fastest
  const auto x = s.node(7);
  CHECK(x[0] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("binning picks the cell centered on the nearest node") {
  const GridSpec s = make_1d(0.0, 2.0, 0.5);
  std::int64_t flat = -1;
  auto bin = [&](double x) {
    return s.bin(&x, flat);
  };
  CHECK(bin(0.26));
  CHECK(flat == 1);
  CHECK(bin(-0.24));
  CHECK(flat == 0);  // cells extend r/2 past the box faces
  CHECK(bin(2.24));
  CHECK(flat == 4);
  CHECK_FALSE(bin(-0.26));
  CHECK_FALSE(bin(2.26));
}

TEST_CASE("degenerate grids are rejected") {
  CHECK_THROWS_AS(make_1d(0.0, 1.0, -0.1).validate(), FpError);
  CHECK_THROWS_AS(make_1d(0.0, 1.0, 0.3).validate(), FpError);  // 1/0.3 not integral
  CHECK_THROWS_AS(make_1d(1.0, 0.0, 0.1).validate(), FpError);
  GridSpec bad = make_1d(0.0, 1.0, 0.1);
  bad.dim = 2;
  CHECK_THROWS_AS(bad.validate(), FpError);
}

TEST_CASE("box mass sums cell volumes") {
  GridDensity g;
  g.spec = make_1d(0.0, 1.0, 0.25);
  g.values.resize(5);
  g.values << 0.0, 0.25, 0.5, 0.75, 1.0;
  CHECK(box_mass(g) == doctest::Approx(0.625).epsilon(1e-14));
}

TEST_CASE("fpgrid round-trip is bit exact") {
  GridDensity g;
  g.spec = make_2d(-1.0, 1.0, 0.0, 0.5, 0.25);
  g.provenance = Provenance::hybrid;
  g.sample_count = 123456789012345ull;
  g.values.resize(g.spec.total_nodes());
  NormalStream rng(5, 0);
  for (Eigen::Index i = 0; i < g.values.size(); ++i) g.values[i] = rng.next();

  std::ostringstream os;
  write_fpgrid(os, g);
  std::istringstream is(os.str());
  const GridDensity back = read_fpgrid(is);

  CHECK(back.spec == g.spec);
  CHECK(back.provenance == g.provenance);
  CHECK(back.sample_count == g.sample_count);
  REQUIRE(back.values.size() == g.values.size());
  for (Eigen::Index i = 0; i < g.values.size(); ++i)
    CHECK(back.values[i] == g.values[i]);

  // writing the reread density reproduces the bytes
  std::ostringstream os2;
  write_fpgrid(os2, back);
  CHECK(os.str() == os2.str());
}

TEST_CASE("fpgrid size is 12 + header + 8 per node") {
  GridDensity g;
  g.spec = make_1d(0.0, 1.0, 0.5);
  g.values.resize(3);
  g.values << 1.0, 2.0, 3.0;
  std::ostringstream os;
  write_fpgrid(os, g);
  const std::string bytes = os.str();
  const std::uint32_t len = static_cast<std::uint8_t>(bytes[8]) |
                            (static_cast<std::uint8_t>(bytes[9]) << 8) |
                            (static_cast<std::uint8_t>(bytes[10]) << 16) |
                            (static_cast<std::uint8_t>(bytes[11]) << 24);
  CHECK(bytes.size() == 12 + len + 24);
}

TEST_CASE("golden ramp fixture decodes and re-encodes byte-exactly") {
  const std::string path = fixture_dir() + "/ramp.fpgrid";
  const GridDensity g = read_fpgrid_file(path);
  CHECK(g.spec.dim == 1);
  REQUIRE(g.values.size() == 5);
  for (int i = 0; i < 5; ++i)
    CHECK(g.values[i] == 0.25 * i);  // dyadic, exact in binary

  std::ostringstream os;
  write_fpgrid(os, g);
  CHECK(os.str() == read_file(path));
}

TEST_CASE("fpgrid rejects malformed input") {
  GridDensity g;
  g.spec = make_1d(0.0, 1.0, 0.5);
  g.values.resize(3);
  g.values << 1.0, 2.0, 3.0;
  std::ostringstream os;
  write_fpgrid(os, g);
  const std::string bytes = os.str();

  {
    std::string bad = bytes;
    bad[0] = 'X';
    std::istringstream is(bad);
    CHECK_THROWS_WITH_AS(read_fpgrid(is), doctest::Contains("magic"), FpError);
  }
  {
    std::istringstream is(bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_WITH_AS(read_fpgrid(is), doctest::Contains("truncated"),
                         FpError);
  }
  {
    std::istringstream is(bytes + "zz");
    CHECK_THROWS_WITH_AS(read_fpgrid(is), doctest::Contains("trailing"),
                         FpError);
  }
}

TEST_CASE("pgm scales min-max into 16-bit big-endian") {
  GridDensity g;
  g.spec = make_2d(0.0, 0.5, 0.0, 0.0, 0.5);  // 2x1 grid
  g.values.resize(2);
  g.values << 0.0, 1.0;
  std::ostringstream os;
  write_pgm(os, g);
  const std::string bytes = os.str();
  const std::string header = "P5\n2 1\n65535\n";
  REQUIRE(bytes.substr(0, header.size()) == header);
  REQUIRE(bytes.size() == header.size() + 4);
  CHECK(static_cast<std::uint8_t>(bytes[header.size() + 0]) == 0x00);
  CHECK(static_cast<std::uint8_t>(bytes[header.size() + 1]) == 0x00);
  CHECK(static_cast<std::uint8_t>(bytes[header.size() + 2]) == 0xFF);
  CHECK(static_cast<std::uint8_t>(bytes[header.size() + 3]) == 0xFF);
}

TEST_CASE("constant field renders all-zero") {
  GridDensity g;
  g.spec = make_2d(0.0, 1.0, 0.0, 1.0, 0.5);
  g.values = Eigen::VectorXd::Constant(9, 3.25);
  std::ostringstream os;
  write_pgm(os, g);
  const std::string bytes = os.str();
  const std::string header = "P5\n3 3\n65535\n";
  REQUIRE(bytes.substr(0, header.size()) == header);
  for (std::size_t i = header.size(); i < bytes.size(); ++i)
    CHECK(bytes[i] == '\0');
}

TEST_CASE("pgm and csv refuse non-2D grids") {
  GridDensity g;
  g.spec = make_1d(0.0, 1.0, 0.5);
  g.values = Eigen::VectorXd::Zero(3);
  std::ostringstream os;
  CHECK_THROWS_AS(write_pgm(os, g), FpError);
  CHECK_THROWS_AS(write_csv(os, g), FpError);
}

TEST_CASE("csv emits one row per node") {
  GridDensity g;
  g.spec = make_2d(0.0, 1.0, 0.0, 2.0, 0.5);
  g.values = Eigen::VectorXd::LinSpaced(15, 0.0, 1.0);
  std::ostringstream os;
  write_csv(os, g);
  const std::string text = os.str();
  std::int64_t rows = 0;
  for (const char c : text)
    if (c == '\n') ++rows;
  CHECK(rows == g.spec.total_nodes());
}
