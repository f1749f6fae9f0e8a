#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace opgd::cli {

enum ExitCode : int { kOk = 0, kConfig = 2, kData = 3, kNumerical = 4 };

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

struct GradcheckReport {
  int instances = 0;
  int failures = 0;
  double max_rel_error = 0;
  int cluster_failures = 0;  // same instances, clustering objective with the class model as mixture
  double cluster_max_rel_error = 0;
};

/// Compares the analytic gradient of the classification log-likelihood with
/// central differences of an extended-precision evaluation on random instances
/// (n <= 50, p <= 8, p' <= 4, K <= 4, at least 3 points per class). The clustering
/// objective is checked against central differences of its own value.
GradcheckReport gradcheck_suite(int instances, std::uint64_t seed, double tolerance);

}  // namespace opgd::cli
