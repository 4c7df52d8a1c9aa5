#include "svmrot/params.hpp"

#include <cmath>
#include <sstream>

#include "svmrot/error.hpp"

namespace svmrot {

bool PhysicalParams::is_quantum(double rel_tol) const {
  const double expected = hbar / (2.0 * mass);
  return std::abs(nu - expected) <= rel_tol * std::abs(expected);
}

void PhysicalParams::require_quantum(double rel_tol) const {
  if (!(mass > 0.0) || !(hbar > 0.0)) {
    throw ConfigError("mass and hbar must be positive");
  }
  if (!is_quantum(rel_tol)) {
    std::ostringstream os;
    os.precision(17);
    os << "nu = " << nu << " differs from hbar/(2M) = " << hbar / (2.0 * mass);
    throw ConfigError(os.str());
  }
}

}  // namespace svmrot
