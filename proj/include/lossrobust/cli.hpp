#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lossrobust/errors.hpp"
#include "lossrobust/ratelab.hpp"

namespace lossrobust::cli {

// Bad or incomplete configuration; maps to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

// Flat `key = value` configuration with `#` comments and dotted keys.
class RunConfig {
 public:
  static RunConfig parse(std::istream& in, const std::string& source = "<config>");
  static RunConfig load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  void require(const std::vector<std::string>& keys) const;

  std::string text(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::size_t count(const std::string& key, std::size_t fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::optional<Interval> interval(const std::string& key) const;

  const std::string& source() const { return source_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  const Entry& entry(const std::string& key) const;
  std::string where(const std::string& key) const;

  std::string source_;
  std::map<std::string, Entry> entries_;
};

struct Options {
  std::uint64_t seed = 42;
  bool seed_from_flag = false;  // --seed given; beats experiment.seed
  unsigned workers = 1;
  std::optional<std::string> out_dir;
};

// Every key a configuration may contain.
const std::vector<std::string>& known_keys();

// Samplers written as name(arg, ...): normal(m, sd), exponential(rate),
// lognormal(m, s), gamma(shape, rate).
Sampler parse_sampler(const std::string& spec);

// The seed feeds the replication estimate of I_theta under a custom true sampler.
SamplingModel model_from_config(const RunConfig& cfg, std::uint64_t seed);
ClassSpec class_from_config(const RunConfig& cfg);
ExperimentConfig experiment_from_config(const RunConfig& cfg, std::uint64_t seed, unsigned workers);

// --seed when given on the command line, else experiment.seed, else the default.
std::uint64_t effective_seed(const RunConfig& cfg, const Options& opts);

struct TestFunction {
  std::function<double(double)> f;
  double gradient = 0.0;
  double hessian = 0.0;
  std::string label;
};

// linear, quadratic, cubic, zero, log; all vanish at theta.
TestFunction test_function(const std::string& name, double theta);

// ---- CSV ------------------------------------------------------------------

std::string format_number(double v);  // %.17g
std::string csv_field(const std::string& s);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

CsvTable curve_table(const MeasureCurve& curve);
CsvTable fit_table(const RateFit& fit, bool pass);

// ---- commands -------------------------------------------------------------

struct NormalDemoArgs {
  double k1 = 1.0;
  double k2 = 2.0;
  double mu0 = 0.0;
  double lambda0 = 1.0;
  double lambda = 1.0;
  std::vector<double> n_list{10, 100, 1000, 10000};
};

int cmd_dam_demo(const Options& opts, std::ostream& out);
int cmd_normal_demo(const NormalDemoArgs& args, const Options& opts, std::ostream& out);
int cmd_rates(const std::string& config_path, const Options& opts, std::ostream& out);
int cmd_diagnostics(const std::string& config_path, const Options& opts, std::ostream& out);
int cmd_thm81(const std::string& config_path, const Options& opts, std::ostream& out);
int cmd_thm82(const std::string& config_path, const Options& opts, std::ostream& out);

// Parses argv, dispatches, and maps errors to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lossrobust::cli
