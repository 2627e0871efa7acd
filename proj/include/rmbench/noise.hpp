#pragma once

#include "rmbench/rmcore.hpp"
#include "rmbench/rng.hpp"

namespace rmbench::noise {

// Noise level k plus the event alphabet P of the target environment.
struct NoiseConfig {
  double level = 0.0;  // k in [0, 1]
  rm::Alphabet alphabet;

  void validate() const;
};

// Random label tampering. With probability 1-k the label passes through
// unchanged. Otherwise one event e is drawn uniformly from the label and a
// substitute from the whole alphabet: drawing e itself removes it, anything
// else replaces it (set semantics, so substituting an event the label
// already holds shrinks it).
//
// Draw order is fixed for reproducibility: one Bernoulli draw always, then
// one draw for e and one for the substitute iff tampering triggers. An empty
// label is returned unchanged (there is no target to tamper with) and
// consumes only the Bernoulli draw.
rm::LabelSet tamper_label(rm::LabelSet label, const NoiseConfig& cfg, Rng& rng);

}  // namespace rmbench::noise
