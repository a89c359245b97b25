#include <doctest.h>

#include <cstdio>
#include <limits>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gel/config.hpp"
#include "gel/errors.hpp"
#include "gel/io.hpp"

using namespace gel;

TEST_CASE("dataset construction enforces its invariants") {
  Matrix one_row(1, 2);
  one_row << 1, 2;
  CHECK_THROWS_AS(Dataset{one_row}, ConfigError);
  Matrix with_nan(3, 1);
  with_nan << 1, std::numeric_limits<double>::quiet_NaN(), 3;
  CHECK_THROWS_AS(Dataset{with_nan}, ConfigError);
  Matrix ok(2, 1);
  ok << 1, 2;
  Dataset d{ok};
  CHECK(d.n() == 2);
  CHECK(d.d() == 1);
}

TEST_CASE("csv reading with and without header") {
  std::istringstream plain("1.5,2\n-0.5,3\n0,1\n");
  Dataset d1 = read_csv_dataset(plain, "mem");
  CHECK(d1.n() == 3);
  CHECK(d1.d() == 2);
  CHECK(d1.values()(0, 0) == 1.5);

  std::istringstream with_header("x,y\n1.5,2\n-0.5,3\n");
  Dataset d2 = read_csv_dataset(with_header, "mem");
  CHECK(d2.n() == 2);
  CHECK(d2.values()(1, 1) == 3.0);
}

TEST_CASE("csv errors carry line and column numbers") {
  std::istringstream bad("1,2\n3,oops\n5,6\n");
  try {
    read_csv_dataset(bad, "mem");
    FAIL("expected InputError");
  } catch (const InputError& e) {
    std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
    CHECK(msg.find("oops") != std::string::npos);
  }

  std::istringstream ragged("1,2\n3\n");
  CHECK_THROWS_WITH_AS(read_csv_dataset(ragged, "mem"),
                       doctest::Contains("expected 2 columns"), InputError);

  std::istringstream nonfinite("1,2\n3,inf\n");
  CHECK_THROWS_AS(read_csv_dataset(nonfinite, "mem"), InputError);

  std::istringstream tiny("1,2\n");
  CHECK_THROWS_WITH_AS(read_csv_dataset(tiny, "mem"),
                       doctest::Contains("at least 2"), InputError);

  CHECK_THROWS_AS(read_csv_dataset("/nonexistent/file.csv"), InputError);
}

TEST_CASE("format_double round-trips doubles exactly") {
  for (double x : {0.1, 1.0 / 3.0, 1e-17, -2.5e300, 3.141592653589793}) {
    CHECK(std::stod(format_double(x)) == x);
  }
}

TEST_CASE("atomic write leaves no temp file") {
  const std::string path = "/tmp/gel_io_test_atomic.txt";
  std::filesystem::remove(path);
  atomic_write_file(path, "alpha\n");
  CHECK(read_file(path) == "alpha\n");
  CHECK(!std::filesystem::exists(path + ".tmp"));
  atomic_write_file(path, "beta\n");
  CHECK(read_file(path) == "beta\n");
  std::filesystem::remove(path);
}

TEST_CASE("run config round-trips through its canonical form") {
  RunConfig cfg;
  cfg.command = "test";
  cfg.data_path = "/tmp/d.csv";
  cfg.model_spec = "logistic";
  cfg.link = "et";
  cfg.regime = "iv";
  cfg.penalty_tau = 0.25;
  cfg.theta0 = {0.8, 0.2, 0.0};
  cfg.alpha = 0.1;
  cfg.seed = 777;
  cfg.out = "/tmp/out";
  cfg.workers = 3;
  cfg.mode = "wilks";
  cfg.tol_outer = 1e-7;

  std::string canon = canonical_config(cfg);
  RunConfig parsed = parse_config_text(canon, "mem");
  CHECK(canonical_config(parsed) == canon);
  CHECK(parsed.theta0.size() == 3);
  CHECK(parsed.theta0[0] == 0.8);
  CHECK(parsed.seed == 777);
  CHECK(parsed.tol_outer == 1e-7);

  CHECK_THROWS_WITH_AS(parse_config_text("nonsense_key = 1\n", "mem"),
                       doctest::Contains("unknown config key"), InputError);
  CHECK_THROWS_AS(parse_config_text("alpha 0.05\n", "mem"), InputError);
}

TEST_CASE("design files parse with field-level errors") {
  const std::string good =
      "model = logistic\n"
      "estimators = el, pel, gmm\n"
      "regimes = i, iv\n"
      "psis = 0.1, 0.3\n"
      "ns = 500, 1000\n"
      "c_dim = 5\n"
      "reps = 7\n"
      "base_seed = 42\n";
  McDesign d = parse_design_text(good, "mem");
  CHECK(d.model_kind == "logistic");
  CHECK(d.estimators.size() == 3);
  CHECK(d.regimes.size() == 2);
  CHECK(d.ns.size() == 2);
  CHECK(d.reps == 7);
  CHECK(d.base_seed == 42);

  CHECK_THROWS_WITH_AS(parse_design_text("model = mean\n", "mem"),
                       doctest::Contains("estimators"), InputError);
  CHECK_THROWS_WITH_AS(
      parse_design_text(good + "reps = nope\n", "mem"),
      doctest::Contains("reps"), InputError);
  CHECK_THROWS_WITH_AS(parse_design_text(good + "bogus = 1\n", "mem"),
                       doctest::Contains("unknown design key"), InputError);
}

TEST_CASE("model specs resolve against the data width") {
  MomentModel mean = resolve_model("", 3);
  CHECK(mean.name == "mean");
  CHECK(mean.p == 3);

  MomentModel logit = resolve_model("logistic", 5);
  CHECK(logit.p == 4);
  CHECK(logit.r == 8);

  MomentModel var = resolve_model("var:2:1", 4);
  CHECK(var.p == 4);

  CHECK_THROWS_WITH_AS(resolve_model("var:2:2", 4),
                       doctest::Contains("s(m+1)"), ConfigError);
  CHECK_THROWS_AS(resolve_model("var:2", 4), ConfigError);
  CHECK_THROWS_AS(resolve_model("gibberish", 4), ConfigError);
  CHECK_THROWS_AS(resolve_model("logistic", 1), ConfigError);
}

TEST_CASE("scheme resolution from regime or explicit M/L") {
  RunConfig cfg;
  cfg.regime = "iv";
  BlockScheme s = resolve_scheme(cfg, 500);
  CHECK(s.M == 10);
  CHECK(s.L == 5);

  RunConfig explicit_cfg;
  explicit_cfg.block_m = 6;
  explicit_cfg.block_l = 2;
  BlockScheme s2 = resolve_scheme(explicit_cfg, 100);
  CHECK(s2.M == 6);
  CHECK(s2.L == 2);

  RunConfig both;
  both.regime = "i";
  both.block_m = 2;
  CHECK_THROWS_AS(resolve_scheme(both, 100), ConfigError);

  RunConfig neither;
  BlockScheme s3 = resolve_scheme(neither, 100);
  CHECK(s3.M == 1);  // defaults to regime (i)
  CHECK(s3.L == 1);

  RunConfig m_only;
  m_only.block_m = 4;
  BlockScheme s4 = resolve_scheme(m_only, 100);
  CHECK(s4.M == 4);
  CHECK(s4.L == 4);
}
