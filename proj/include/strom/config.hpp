#ifndef STROM_CONFIG_HPP
#define STROM_CONFIG_HPP

#include <map>
#include <string>

#include "strom/continuation.hpp"

namespace strom {

// Flat key = value configuration with typed keys; unknown keys are errors.
class KeyValueFile {
 public:
  static KeyValueFile parse_file(const std::string& path);
  static KeyValueFile parse_text(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  int get_int(const std::string& key, int fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<std::string> get_tokens(const std::string& key,
                                      const std::vector<std::string>& fallback);
  // Throws UsageError listing keys that were never consumed (typo protection).
  void finish() const;

 private:
  std::map<std::string, std::string> kv_;
  mutable std::map<std::string, bool> used_;
};

struct RunConfig {
  int schema_version = 1;
  std::string mode;  // verify | linearize | residual | squareroot | solve | solve-coupled
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_dir = "out";

  int lattice_n = 8;
  std::array<bool, 6> active_axes{true, true, false, false, false, false};
  std::array<double, 6> periods = Lattice::default_periods();

  std::string metric_spec = "identity";  // identity | scale:<c> | diag:<a,b,c>
  double f_re = 1.0, f_im = 0.0;
  int rank = 2;

  ContinuationConfig continuation;
  double manufactured_amplitude = 1e-2;
  int manufactured_max_mode = 1;
  bool manufactured_enabled = false;

  double fault_lambda_scale = 1.0;  // verify-battery fault injection (tests only)

  std::string input_state;  // residual mode
  std::string input_form;   // squareroot mode

  static RunConfig from_file(const std::string& path, const std::string& mode_override = "");
  static RunConfig from_kv(KeyValueFile kv, const std::string& mode_override = "");

  LatticePtr make_lattice() const;
  Eigen::Matrix3cd make_g_hat() const;
  Testbed make_testbed() const;
};

}  // namespace strom

#endif
