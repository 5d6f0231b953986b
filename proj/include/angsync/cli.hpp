#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "angsync/angles.hpp"

namespace angsync::cli {

/// Bad command line, config or input file. Maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

/// Flat key=value settings. `#` starts a comment; later assignments win.
class Config {
 public:
  static Config parse(std::istream& is);
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string str(const std::string& key, const std::string& fallback) const;
  double real(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback) const;
  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  /// Comma-separated list.
  std::vector<std::string> list(const std::string& key, const std::string& fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

/// One CSV row. Unset optionals are written as empty fields.
struct RunRecord {
  std::string model;
  std::optional<int> n;
  std::optional<double> p;
  std::optional<int> k;
  std::optional<double> eta;
  std::optional<int> option;
  std::optional<std::uint64_t> seed;
  std::string method;
  std::string loss;
  std::optional<double> mse;
  std::vector<double> mse_layers;
  std::optional<double> ane;
  std::optional<double> upset;
  std::optional<double> cycle;
  double runtime_s = 0.0;
};

/// model,n,p,k,eta,option,seed,method,loss,mse,mse_l1..mse_l<max_k>,ane,upset,cycle,runtime_s
std::string csv_header(int max_k);
std::string csv_row(const RunRecord& r, int max_k);

/// Angle file: `# n=<N> k=<K>` then one row of k angles per node.
void write_angles(std::ostream& os, const AngleMatrix& r);
AngleMatrix read_angles(std::istream& is);

/// Parallel workers for sweeps: ANGSYNC_WORKERS if set, else the hardware thread count.
int worker_count();

void cmd_gen(const Config& cfg);
RunRecord cmd_solve(const Config& cfg);
std::vector<RunRecord> cmd_train(const Config& cfg);

struct SweepResult {
  std::vector<RunRecord> rows;
  std::vector<std::string> failures;  // one message per failed row
  bool numerical_failure = false;
  int max_k = 1;
};
/// Writes the CSV to cfg["out"] (stdout when unset or "-").
SweepResult cmd_sweep(const Config& cfg, std::ostream& out);
RunRecord cmd_snl(const Config& cfg);

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace angsync::cli
