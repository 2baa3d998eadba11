#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include "einode/csv.hpp"
#include "einode/errors.hpp"
#include "einode/svg.hpp"

using namespace einode;
namespace fs = std::filesystem;

TEST_CASE("number formatting round-trips exactly") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(rng) * std::pow(10.0, (i % 40) - 20);
    CHECK(parse_number(format_number(v)) == v);
  }
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(std::isnan(parse_number("nan")));
  CHECK(parse_number("1e3") == 1000.0);
  CHECK_THROWS_AS(parse_number("1.0abc"), Error);
}

TEST_CASE("CSV rows quote fields that need it") {
  std::ostringstream out;
  write_csv_row(out, {"a", "b,c", "say \"hi\""});
  CHECK(out.str() == "a,\"b,c\",\"say \"\"hi\"\"\"\n");
}

TEST_CASE("tables round-trip through files") {
  NumericTable t{{"t", "x"}, {}};
  for (int k = 0; k < 50; ++k) t.rows.push_back({k / 3.0, std::exp(-k / 7.0)});
  t.rows.push_back({1.0, std::numeric_limits<double>::quiet_NaN()});
  const auto path = (fs::temp_directory_path() / "einode_csv_test.csv").string();
  write_csv(path, t);
  const NumericTable back = read_csv(path);
  fs::remove(path);
  CHECK(back.header == t.header);
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) CHECK(back.rows[i] == t.rows[i]);
  CHECK(std::isnan(back.rows.back()[1]));
  CHECK(back.column("x") == 1);
  CHECK_THROWS_AS(back.column("y"), Error);
  CHECK_THROWS_AS(read_csv("/nonexistent/file.csv"), Error);
}

TEST_CASE("SVG output is well formed and splits at gaps") {
  PlotPanel p{"loss", "step", "l", true, 0.5, {}};
  p.series.push_back({"a & b", {1, 2, 3, 4}, {1.0, 0.1, std::nan(""), 0.01}, false});
  p.series.push_back({"c", {1, 2}, {-1.0, 2.0}, true});
  const std::string svg = render_svg({p, PlotPanel{"empty", "x", "y", false, std::nan(""), {}}});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("a &amp; b") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  CHECK(svg.find("nan") == std::string::npos);
}
