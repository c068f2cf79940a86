#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lossrobust/cli.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace lossrobust;
using namespace lossrobust::cli;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lossrobust");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lossrobust_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

std::string config_path(const std::string& name) { return std::string(LOSSROBUST_CONFIG_DIR) + "/" + name; }

RunConfig parse_text(const std::string& text) {
  std::istringstream in(text);
  return RunConfig::parse(in, "test.conf");
}

double cell(const CsvTable& t, std::size_t row, const std::string& column) {
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i] == column) return std::stod(t.rows.at(row).at(i));
  }
  FAIL("no column " << column);
  return 0.0;
}

}  // namespace

TEST_CASE("config parser reads keys, comments and quotes") {
  const RunConfig cfg = parse_text(
      "# comment\n"
      "model.family = \"normal\"   # trailing\n"
      "\n"
      "model.theta = 1.5\n"
      "experiment.n_grid = 10, 20 ,40\n");
  CHECK(cfg.text("model.family") == "normal");
  CHECK(cfg.number("model.theta") == 1.5);
  CHECK(cfg.numbers("experiment.n_grid") == std::vector<double>{10, 20, 40});
  CHECK_FALSE(cfg.has("model.mu0"));
  CHECK(cfg.number("model.mu0", -2.0) == -2.0);
}

TEST_CASE("unknown key is rejected with its line number") {
  try {
    parse_text("model.family = normal\n\nexperiment.replicatons = 10\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("test.conf:3") != std::string::npos);
    CHECK(msg.find("replicatons") != std::string::npos);
  }
}

TEST_CASE("duplicate keys, missing '=' and bad numbers are config errors") {
  CHECK_THROWS_AS(parse_text("model.theta = 1\nmodel.theta = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_text("model.theta\n"), ConfigError);
  const RunConfig cfg = parse_text("model.theta = one\n");
  try {
    (void)cfg.number("model.theta");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("test.conf:1") != std::string::npos);
  }
}

TEST_CASE("missing required keys are listed together") {
  const RunConfig cfg = parse_text("model.family = normal\n");
  try {
    cfg.require({"model.family", "model.theta", "class.kind"});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("model.theta") != std::string::npos);
    CHECK(msg.find("class.kind") != std::string::npos);
  }
}

TEST_CASE("experiment config picks up grid, measure and class") {
  const RunConfig cfg = parse_text(
      "class.kind = asymmetric_quadratic\nclass.k1 = 1\nclass.k2 = 3\n"
      "experiment.n_grid = 10, 20\nexperiment.replications = 7\nexperiment.measure = range\n");
  const ExperimentConfig exp = experiment_from_config(cfg, 99, 3);
  CHECK(exp.n_grid == std::vector<std::size_t>{10, 20});
  CHECK(exp.replications == 7);
  CHECK(exp.measure == Measure::range);
  CHECK(exp.master_seed == 99);
  CHECK(exp.workers == 3);
  REQUIRE(exp.class_spec);
  CHECK(exp.class_spec->band.has_value());

  CHECK_THROWS_AS(experiment_from_config(parse_text("experiment.n_grid = 10, 2.5\n"), 1, 1), ConfigError);
  CHECK_THROWS_AS(experiment_from_config(parse_text("experiment.measure = spread\n"), 1, 1), ConfigError);
  CHECK_THROWS_AS(class_from_config(parse_text("class.kind = asymmetric_quadratic\nclass.k1 = 2\nclass.k2 = 2\n")),
                  ConfigError);
}

TEST_CASE("seed comes from the flag, then the config, then the default") {
  const RunConfig with = parse_text("experiment.seed = 18446744073709551615\n");
  const RunConfig without = parse_text("model.theta = 0\n");
  Options opts;
  CHECK(effective_seed(without, opts) == 42);
  CHECK(effective_seed(with, opts) == 18446744073709551615ull);
  opts.seed = 5;
  opts.seed_from_flag = true;
  CHECK(effective_seed(with, opts) == 5);
  CHECK_THROWS_AS(effective_seed(parse_text("experiment.seed = -3\n"), Options{}), ConfigError);
}

TEST_CASE("model from config: families and a misspecified sampler") {
  const SamplingModel normal =
      model_from_config(parse_text("model.family = normal\nmodel.theta = 1\nmodel.mu0 = 0\nmodel.lambda0 = 1\n"
                                   "model.lambda = 4\n"),
                        1);
  CHECK(normal.family == ModelFamily::normal_known_precision);
  CHECK(normal.I_theta == doctest::Approx(0.25));

  const SamplingModel expo = model_from_config(parse_text("model.family = exponential\nmodel.theta = 2\n"), 1);
  CHECK(expo.I_theta == doctest::Approx(4.0));

  const SamplingModel mis = model_from_config(
      parse_text("model.family = exponential\nmodel.theta = 2\nmodel.true_sampler = gamma(2, 4)\nmodel.I_theta = 3\n"), 1);
  CHECK(mis.I_theta == 3.0);

  CHECK_THROWS_AS(model_from_config(parse_text("model.family = cauchy\nmodel.theta = 0\n"), 1), ConfigError);
  CHECK_THROWS_AS(model_from_config(parse_text("model.family = normal\nmodel.theta = 0\n"), 1), ConfigError);
  CHECK_THROWS_AS(parse_sampler("normal(0)"), ConfigError);
  CHECK_THROWS_AS(parse_sampler("uniform(0, 1)"), ConfigError);
  Rng rng(3);
  const double x = parse_sampler("exponential(2)")(rng);
  CHECK(x > 0.0);
}

TEST_CASE("test functions vanish at theta and carry their derivatives") {
  for (const char* name : {"linear", "quadratic", "cubic", "zero", "log"}) {
    const TestFunction tf = test_function(name, 2.0);
    CHECK(tf.f(2.0) == doctest::Approx(0.0));
    const double h = 1e-4;
    CHECK(tf.gradient == doctest::Approx((tf.f(2.0 + h) - tf.f(2.0 - h)) / (2 * h)).epsilon(1e-6));
    CHECK(tf.hessian ==
          doctest::Approx((tf.f(2.0 + h) - 2 * tf.f(2.0) + tf.f(2.0 - h)) / (h * h)).epsilon(1e-4).scale(1.0));
  }
  CHECK_THROWS_AS(test_function("log", -1.0), ConfigError);
  CHECK_THROWS_AS(test_function("sine", 0.0), ConfigError);
}

TEST_CASE("CSV round trip keeps 17 significant digits") {
  const fs::path dir = scratch_dir("csv");
  CsvTable t;
  t.header = {"a", "b", "note"};
  const std::vector<double> values{0.1, 1.0 / 3.0, -2.718281828459045e-300, 6.02214076e23, 2.2250738585072014e-308};
  for (double v : values) t.rows.push_back({format_number(v), format_number(-v), "x,\"y\""});
  const std::string path = (dir / "t.csv").string();
  write_csv(path, t);

  const CsvTable back = read_csv(path);
  CHECK(back.header == t.header);
  REQUIRE(back.rows.size() == values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    CHECK(std::stod(back.rows[i][0]) == values[i]);
    CHECK(std::stod(back.rows[i][1]) == -values[i]);
    CHECK(back.rows[i][2] == "x,\"y\"");
  }
  std::ifstream raw(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(raw)), std::istreambuf_iterator<char>());
  CHECK(bytes.find('\r') == std::string::npos);
}

TEST_CASE("help exits 0, usage errors exit 2") {
  CHECK(run_cli({"--help"}).code == kExitOk);
  CHECK(run_cli({}).code == kExitConfig);
  CHECK(run_cli({"bogus"}).code == kExitConfig);
  CHECK(run_cli({"rates"}).code == kExitConfig);
  CHECK(run_cli({"--workers", "0", "dam-demo"}).code == kExitConfig);
  CHECK(run_cli({"rates", "/nonexistent/config.conf"}).code == kExitConfig);
}

TEST_CASE("rates: unknown key exits 2 and names the key") {
  const fs::path dir = scratch_dir("unknown");
  const fs::path conf = write_file(dir / "bad.conf",
                                   "model.family = normal\nmodel.theta = 0\nexperiment.replicatons = 10\n");
  const Run r = run_cli({"rates", conf.string(), "--out", dir.string()});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("replicatons") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "rates_curve.csv"));
}

TEST_CASE("rates: missing keys exit 2 before any output") {
  const fs::path dir = scratch_dir("missing");
  const fs::path conf = write_file(dir / "m.conf", "model.family = normal\nmodel.theta = 0\n");
  const Run r = run_cli({"rates", conf.string(), "--out", dir.string()});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("class.kind") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "rates_curve.csv"));
}

TEST_CASE("rates: asymmetric quadratic diameter and range slopes") {
  const fs::path dir = scratch_dir("rates");
  const Run diam = run_cli({"rates", config_path("aq_diameter.conf"), "--out", dir.string()});
  CHECK(diam.code == kExitOk);
  const CsvTable fit = read_csv((dir / "aq_diameter_fit.csv").string());
  CHECK(fit.header == std::vector<std::string>{"slope", "stderr", "intercept", "r_squared", "predicted", "pass"});
  CHECK(cell(fit, 0, "slope") == doctest::Approx(-0.5).epsilon(0.1));
  CHECK(fit.rows[0][5] == "true");

  const CsvTable curve = read_csv((dir / "aq_diameter_curve.csv").string());
  CHECK(curve.header == std::vector<std::string>{"n", "replication", "measure_value", "status"});
  CHECK(curve.rows.size() == 6 * 200);
  // diameter = (r_L - r_U) / sqrt(1 + n) for every replication.
  const double n = cell(curve, 0, "n");
  CHECK(cell(curve, 0, "measure_value") ==
        doctest::Approx((oracle::r_lower - oracle::r_upper) / std::sqrt(1.0 + n)).epsilon(1e-6));

  const Run range = run_cli({"rates", config_path("aq_range.conf"), "--out", dir.string()});
  CHECK(range.code == kExitOk);
  CHECK(cell(read_csv((dir / "aq_range_fit.csv").string()), 0, "slope") == doctest::Approx(-1.0).epsilon(0.05));
}

TEST_CASE("rates: slope outside the band exits 1") {
  const fs::path dir = scratch_dir("band");
  const fs::path conf = write_file(dir / "wrong.conf",
                                   "model.family = normal\nmodel.theta = 0\nmodel.mu0 = 0\nmodel.lambda0 = 1\n"
                                   "model.lambda = 1\nclass.kind = asymmetric_quadratic\nclass.k1 = 1\nclass.k2 = 2\n"
                                   "experiment.n_grid = 50, 100, 200, 400\nexperiment.replications = 5\n"
                                   "experiment.measure = diameter\nexperiment.predicted_exponent = -1\n");
  const Run r = run_cli({"rates", conf.string(), "--out", dir.string()});
  CHECK(r.code == kExitRuntime);
  CHECK(read_csv((dir / "rates_fit.csv").string()).rows[0][5] == "false");
}

TEST_CASE("rates: same seed reproduces the curve, any worker count") {
  const fs::path a = scratch_dir("seed_a"), b = scratch_dir("seed_b");
  const fs::path small = write_file(a / "small.conf",
                                    "model.family = exponential\nmodel.theta = 0.5\nclass.kind = dam\n"
                                    "class.bracket = 0.01, 40\nexperiment.n_grid = 50, 100, 200, 400\n"
                                    "experiment.replications = 20\nexperiment.measure = diameter\n"
                                    "experiment.predicted_exponent = -0.5\nexperiment.band = 10\n"
                                    "experiment.limit = auto\n");
  run_cli({"--seed", "7", "rates", small.string(), "--out", a.string()});
  run_cli({"--seed", "7", "--workers", "3", "rates", small.string(), "--out", b.string()});
  const CsvTable ca = read_csv((a / "rates_curve.csv").string());
  const CsvTable cb = read_csv((b / "rates_curve.csv").string());
  CHECK(ca.rows == cb.rows);
  run_cli({"--seed", "8", "rates", small.string(), "--out", b.string()});
  CHECK_FALSE(read_csv((b / "rates_curve.csv").string()).rows == ca.rows);
}

TEST_CASE("diagnostics: dam, asymmetric quadratic and constant classes") {
  const Run dam = run_cli({"diagnostics", config_path("dam_diagnostics.conf")});
  CHECK(dam.code == kExitOk);
  CHECK(dam.out.find("1a  pass") != std::string::npos);
  CHECK(dam.out.find("1c  pass") != std::string::npos);
  CHECK(dam.out.find("1g  pass") != std::string::npos);

  const Run aq = run_cli({"diagnostics", config_path("aq_diagnostics.conf")});
  CHECK(aq.code == kExitOk);
  CHECK(aq.out.find("1c  flagged") != std::string::npos);
  CHECK(aq.out.find("registered kink") != std::string::npos);

  const Run zero = run_cli({"diagnostics", config_path("constant_diagnostics.conf")});
  CHECK(zero.code == kExitOk);
  CHECK(zero.out.find("1g  fail") != std::string::npos);
}

TEST_CASE("thm81 and thm82 configs pass and write trend tables") {
  const fs::path dir = scratch_dir("trend");
  CHECK(run_cli({"thm81", config_path("thm81_normal.conf"), "--out", dir.string()}).code == kExitOk);
  CHECK(run_cli({"thm82", config_path("thm82_exponential.conf"), "--out", dir.string()}).code == kExitOk);
  const CsvTable t = read_csv((dir / "thm81_normal_trend.csv").string());
  CHECK(t.header == std::vector<std::string>{"n", "median", "q1", "q3", "failures"});
  CHECK(t.rows.size() == 4);

  // A test function with a nonzero gradient is outside the second-order statement.
  const fs::path conf = write_file(dir / "lin.conf", "model.family = exponential\nmodel.theta = 2\ntest.function = log\n");
  CHECK(run_cli({"thm82", conf.string(), "--out", dir.string()}).code == kExitRuntime);
}

TEST_CASE("dam-demo reproduces the flood example") {
  const fs::path dir = scratch_dir("dam");
  const Run r = run_cli({"dam-demo", "--out", dir.string()});
  CHECK(r.code == kExitOk);
  const CsvTable t = read_csv((dir / "dam_demo.csv").string());
  REQUIRE(t.rows.size() == 1);
  CHECK(std::abs(cell(t, 0, "d_0") - 4.5) <= 0.05);
  CHECK(std::abs(cell(t, 0, "sup_regret") - 19.5) <= 0.3);
  CHECK(std::abs(cell(t, 0, "limit_sup_regret") - 20.0) <= 1.0);
  CHECK(cell(t, 0, "d_U") == doctest::Approx(oracle::dam_dU).epsilon(1e-9));
  CHECK(cell(t, 0, "d_L") == doctest::Approx(oracle::dam_dL).epsilon(1e-9));
  CHECK(cell(t, 0, "limit_diameter") == doctest::Approx(oracle::dam_limit_diameter).epsilon(1e-8));
}

TEST_CASE("normal-demo: scaled columns and precondition") {
  const fs::path dir = scratch_dir("normal");
  const Run r = run_cli({"normal-demo", "--n-list", "0,10,1000", "--mu0", "3", "--out", dir.string()});
  CHECK(r.code == kExitOk);
  const CsvTable t = read_csv((dir / "normal_demo.csv").string());
  REQUIRE(t.rows.size() == 3);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(cell(t, i, "diameter_scaled") ==
          doctest::Approx(oracle::r_lower - oracle::r_upper).epsilon(1e-6));
    CHECK(cell(t, i, "range_scaled") == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(t.rows[i].back() == "false");
  }
  const Run bad = run_cli({"normal-demo", "--k1", "1", "--k2", "1"});
  CHECK(bad.code == kExitConfig);
}
