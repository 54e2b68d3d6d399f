#include <string>

#include "doctest.h"
#include "invsq/config.hpp"
#include "invsq/errors.hpp"

using invsq::ConfigError;
using invsq::parse_config_text;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("minimal file") {
  const auto c = parse_config_text("n = 3\na = 0\np = 3\n");
  CHECK(c.kind == "simulate");
  CHECK(c.params().p_in_range());
  CHECK(c.params().scattering_ok());
  CHECK(c.solver.n_modes == 256);
  CHECK(parse_config_text("").params().n() == 3);
}

TEST_CASE("coupling below the Hardy threshold") {
  const auto msg = error_of("# model\nn = 3\na = -0.5\n");
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(msg.find("-0.25") != std::string::npos);
}

TEST_CASE("energy-critical exponent depends on the experiment") {
  const auto sim = parse_config_text("experiment = simulate\nn = 3\np = 5\n");
  CHECK_FALSE(sim.params().p_in_range());
  const auto msg = error_of("experiment = scatter\nn = 3\np = 5\n");
  CHECK(msg.find("p < 1 + 4/(n-2)") != std::string::npos);
}

TEST_CASE("syntax and key errors carry line numbers") {
  CHECK(error_of("n = 3\n\nbogus = 1\n").find("line 3: unknown key 'bogus'") != std::string::npos);
  CHECK(error_of("n = 3\nn = 4\n").find("line 2: duplicate") != std::string::npos);
  CHECK(error_of("dt = fast\n").find("line 1") != std::string::npos);
  CHECK(error_of("just words\n").find("line 1") != std::string::npos);
  CHECK(error_of("n = 2\n").find("n >= 3") != std::string::npos);
  CHECK(error_of("p = 0.5\n").find("line 1") != std::string::npos);
  CHECK(error_of("dt = -1\n").find("dt") != std::string::npos);
  CHECK_FALSE(error_of("experiment = verify\n").empty());
  CHECK_FALSE(error_of("experiment = heatkernel\nn = 4\n").empty());
  CHECK_FALSE(error_of("initial.snapshot = /nonexistent/u.snap\n").empty());
  CHECK_FALSE(error_of("hardy.s = 1\n").empty());
  CHECK_FALSE(error_of("experiment = launch\n").empty());
}

TEST_CASE("verify shorthand and lists") {
  const auto c = parse_config_text("experiment = verify:sobolev  # trailing comment\nsobolev.r = 1.2, 2\n");
  CHECK(c.kind == "verify");
  CHECK(c.check == "sobolev");
  REQUIRE(c.sobolev_r.size() == 2);
  CHECK(c.sobolev_r[1] == 2.0);
}

TEST_CASE("round trip") {
  const char* text =
      "experiment = scatter\nn = 3\na = 0.5\np = 3\ndt = 0.01\nn-modes = 1024\nnu-override = 0.7\n"
      "initial.family = sector-gaussian\ninitial.amplitude = 0.1234567890123\nseed = 42\n";
  const auto c = parse_config_text(text);
  const auto s = invsq::serialize_config(c);
  const auto again = parse_config_text(s);
  CHECK(invsq::serialize_config(again) == s);
  CHECK(invsq::config_hash(again) == invsq::config_hash(c));
  CHECK(invsq::config_hash(c).size() == 16);
  CHECK(again.solver.initial.amplitude == 0.1234567890123);
  CHECK(*again.solver.nu_override == 0.7);

  auto other = c;
  other.seed = 43;
  CHECK(invsq::config_hash(other) != invsq::config_hash(c));
}

TEST_CASE("hash ignores the output directory") {
  auto a = parse_config_text("out-dir = here\n");
  auto b = parse_config_text("out-dir = there\n");
  CHECK(invsq::config_hash(a) == invsq::config_hash(b));
  CHECK(invsq::serialize_config(a) != invsq::serialize_config(b));
}
