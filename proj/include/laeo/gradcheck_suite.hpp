#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace laeo {

struct GradCheckRow {
  std::string loss;
  int configs = 0;
  double max_rel_err = 0.0;
};

// Finite-difference verification of every loss gradient plus the assembled
// objective, over random configurations sampled away from the nonsmooth sets
// (kinks of |.|, branch switches, degeneracy cuts). Detached losses are
// differenced around their frozen targets, matching stop-gradient semantics.
std::vector<GradCheckRow> run_gradcheck(uint64_t seed, int configs_per_loss = 500);

}  // namespace laeo
