#include "rmbench/noise.hpp"

namespace rmbench::noise {

void NoiseConfig::validate() const {
  if (!(level >= 0.0 && level <= 1.0))
    throw rm::RmError("noise level must be in [0,1]");
  if (alphabet.size() == 0) throw rm::RmError("noise alphabet must be nonempty");
}

namespace {

int nth_set_bit(std::uint32_t bits, int n) {
  for (int i = 0; i < 32; ++i) {
    if (!((bits >> i) & 1u)) continue;
    if (n == 0) return i;
    --n;
  }
  return -1;
}

}  // namespace

rm::LabelSet tamper_label(rm::LabelSet label, const NoiseConfig& cfg,
                          Rng& rng) {
  const bool tamper = rng.next_double() < cfg.level;
  if (!tamper) return label;
  if (label.empty()) return label;
  const int target = nth_set_bit(label.bits, rng.next_index(label.size()));
  const int substitute = rng.next_index(cfg.alphabet.size());
  rm::LabelSet out = label.without(target);
  if (substitute != target) out = out.with(substitute);
  return out;
}

}  // namespace rmbench::noise
