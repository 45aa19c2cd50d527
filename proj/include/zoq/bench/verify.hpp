#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace zoq::bench {

struct VerifyOptions {
  /// 10⁴ Monte Carlo samples and fewer bound replications instead of 10⁵.
  bool quick = false;
  /// Negative control: uses d+2 where the Avg formulas have d+1.
  bool inject_wrong_constant = false;
  std::uint64_t seed = 2024;
  int threads = 0;
};

struct VerifyCheck {
  std::string name;
  double empirical = 0.0;
  double target = 0.0;
  /// |empirical − target| / scale must stay within band. For exact checks
  /// scale is a rounding tolerance.
  double scale = 0.0;
  double z = 0.0;
  double band = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  double seconds = 0.0;
  bool all_pass() const;
};

VerifyReport run_verify(const VerifyOptions& options);
void print_verify_report(const VerifyReport& report, std::ostream& out);

}  // namespace zoq::bench
