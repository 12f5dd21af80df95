#ifndef STROM_VERIFY_HPP
#define STROM_VERIFY_HPP

#include "strom/continuation.hpp"

namespace strom {

// One row of the identity battery. Residuals are compared against per-row
// tolerances taken from the module contracts; rows that need resolution the
// lattice cannot provide are skipped, not failed.
struct CheckRow {
  std::string id;    // machine-readable invariant id (module.invariant)
  std::string desc;  // human-readable description
  double residual = 0.0;
  double tol = 0.0;
  enum class Status { Pass, Fail, Skip } status = Status::Pass;
};

struct VerifyOptions {
  int n = 8;
  std::array<bool, 6> active_axes{true, true, false, false, false, false};
  std::array<double, 6> periods = Lattice::default_periods();
  Eigen::Matrix3cd g_hat = Eigen::Matrix3cd::Identity();
  int rank = 2;
  std::uint64_t seed = 0;
  double fault_lambda_scale = 1.0;  // test fixture: != 1 corrupts the Lambda normalization
};

std::vector<CheckRow> run_verify_battery(const VerifyOptions& opt);
bool all_pass(const std::vector<CheckRow>& rows);
std::string format_rows(const std::vector<CheckRow>& rows);

// Finite-difference Gateaux derivative of the system map at the origin against the
// assembled blocks (shared by the battery and the acceptance suite).
struct GateauxReport {
  std::array<double, 3> steps{1e-2, 5e-3, 2.5e-3};
  std::array<double, 3> block_err{};     // | FD - (L1 u' , L2 T') | combined L2
  std::array<double, 3> offdiag_err{};   // (2,1) block: anomaly response to u-only probes
  double order_lo = 0.0, order_hi = 0.0;
  double offdiag_order_lo = 0.0, offdiag_order_hi = 0.0;
  double alpha_probe = 0.05;
};
GateauxReport gateaux_vs_blocks(const Testbed& tb, std::uint64_t seed);

// Convergence order of variation_metric against centered finite differences of
// sqrt_positive_22 (orders of successive error ratios over halved steps).
struct VariationOrderReport {
  std::array<double, 3> steps{1e-2, 5e-3, 2.5e-3};
  std::array<double, 3> err{};
  double order_lo = 0.0, order_hi = 0.0;
};
VariationOrderReport variation_metric_order(const Testbed& tb, std::uint64_t seed,
                                            double lambda_scale = 1.0);

}  // namespace strom

#endif
