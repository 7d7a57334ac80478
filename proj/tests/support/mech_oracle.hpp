#pragma once

#include "pivot/mechanics.hpp"

namespace testsup {

// Facts about planar equilibrium established by an independent route:
// the gripper force at the grasp point is eliminated through torque balance
// about the contact point (the library eliminates it about the grasp point),
// and the one-parameter family of table reactions is scanned on a dense grid
// plus exact cone-boundary solves.
struct EquilibriumFacts {
  bool feasible = false;      // some table reaction balances inside the cone
  bool interior = false;      // some reaction strictly inside the cone
  bool toward_edge = false;   // boundary equilibrium with O sliding toward Q
  bool away_edge = false;     // boundary equilibrium with O sliding away from Q
};

EquilibriumFacts equilibrium_oracle(const pivot::PlanarConfig& cfg);

}  // namespace testsup
