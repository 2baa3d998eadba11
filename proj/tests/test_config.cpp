#include <doctest.h>

#include <cmath>
#include <string>

#include "einode/config.hpp"
#include "einode/errors.hpp"

using namespace einode;

TEST_CASE("values, tables and comments") {
  const ConfigDocument doc = ConfigDocument::parse(R"(
name = "demo # not a comment"   # trailing comment
flag = true
[system]
c = 25.0
d = -5e-2
big = 1_000
neg_inf = -inf
[training]
seeds = [1, 2,
         3]   # multi-line
configurations = ["SOL", "SOL+FRQ"]
empty = []
)");
  CHECK(doc.string("", "name", "") == "demo # not a comment");
  CHECK(doc.boolean("", "flag", false));
  CHECK(doc.number("system", "c", 0.0) == 25.0);
  CHECK(doc.number("system", "d", 0.0) == -0.05);
  CHECK(doc.integer("system", "big", 0) == 1000);
  CHECK(std::isinf(doc.number("system", "neg_inf", 0.0)));
  CHECK(doc.numbers("training", "seeds", {}) == std::vector<double>{1, 2, 3});
  CHECK(doc.strings("training", "configurations", {}) ==
        std::vector<std::string>{"SOL", "SOL+FRQ"});
  CHECK(doc.numbers("training", "empty", {7}).empty());
  CHECK(doc.number("system", "m", 1.5) == 1.5);
  CHECK(doc.has_table("system"));
  CHECK_FALSE(doc.has_table("solver"));
  CHECK_NOTHROW(doc.reject_unused());
}

TEST_CASE("string escapes") {
  const ConfigDocument doc = ConfigDocument::parse(R"(s = "a\"b\\c\td")");
  CHECK(doc.string("", "s", "") == "a\"b\\c\td");
}

TEST_CASE("unused keys are reported") {
  const ConfigDocument doc = ConfigDocument::parse("[system]\nc = 1\ncc = 2\n");
  doc.number("system", "c", 0.0);
  CHECK(doc.unused_keys("system") == std::vector<std::string>{"cc"});
  CHECK_THROWS_WITH_AS(doc.reject_unused(), doctest::Contains("unknown key"), ConfigError);
}

TEST_CASE("malformed input names the line") {
  auto fails = [](const char* text, const char* fragment) {
    try {
      ConfigDocument::parse(text, "t.toml");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
      return true;
    }
    return false;
  };
  CHECK(fails("a = 1\nb = \n", "t.toml:2"));
  CHECK(fails("a = \"open\n", "t.toml:1"));
  CHECK(fails("[unterminated\n", "t.toml:1"));
  CHECK(fails("a = 1\na = 2\n", "t.toml:2"));
  CHECK(fails("a = [1, 2\n", "t.toml:1"));
  CHECK(fails("a = 1x\n", "t.toml:1"));
  CHECK(fails("= 3\n", "t.toml:1"));
}

TEST_CASE("type mismatches") {
  const ConfigDocument doc = ConfigDocument::parse("a = \"x\"\nb = 1.5\nc = [1, \"two\"]\n");
  CHECK_THROWS_AS(doc.number("", "a", 0.0), ConfigError);
  CHECK_THROWS_AS(doc.integer("", "b", 0), ConfigError);
  CHECK_THROWS_AS(doc.numbers("", "c", {}), ConfigError);
  CHECK_THROWS_AS(doc.boolean("", "b", false), ConfigError);
}

TEST_CASE("missing file") {
  CHECK_THROWS_WITH_AS(ConfigDocument::load("/nonexistent/x.toml"),
                       doctest::Contains("cannot open config file"), ConfigError);
}
