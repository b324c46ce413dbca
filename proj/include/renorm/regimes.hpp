#pragma once

#include <span>
#include <string>
#include <vector>

#include "renorm/micro_min.hpp"

namespace renorm {

struct RegimeCell {
  double b = 0.0;
  std::vector<int> degrees;
  RegimeLabel label = RegimeLabel::AllZeroDegrees;
  micro::MinimizationResult result;
  std::string summary;
};

/// Classification of every (b, degree pattern) pair, with the minimiser (closed
/// form where one exists), the witness energies or the infimum interval.
std::vector<RegimeCell> table_regimes(std::span<const double> bs,
                                      const std::vector<std::vector<int>>& patterns,
                                      const micro::SolverOptions& opts = {});

}  // namespace renorm
