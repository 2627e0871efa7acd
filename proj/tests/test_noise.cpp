#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <map>

#include "rmbench/noise.hpp"
#include "rmbench/rng.hpp"

using namespace rmbench;
using rm::LabelSet;

namespace {

const rm::Alphabet& abc() {
  static rm::Alphabet a({"room_orange", "room_green", "room_blue", "sym_club",
                         "sym_spade", "sym_diamond", "got_club", "got_spade",
                         "got_diamond", "arrow_right", "arrow_left"});
  return a;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_THROWS_AS(noise::NoiseConfig({-0.1, abc()}).validate(),
                  std::runtime_error);
  CHECK_THROWS_AS(noise::NoiseConfig({1.1, abc()}).validate(),
                  std::runtime_error);
  CHECK_NOTHROW(noise::NoiseConfig({0.0, abc()}).validate());
  CHECK_NOTHROW(noise::NoiseConfig({1.0, abc()}).validate());
}

TEST_CASE("zero noise is the identity") {
  const noise::NoiseConfig cfg{0.0, abc()};
  Rng rng(1);
  for (std::uint32_t bits = 0; bits < (1u << abc().size()); bits += 37) {
    const LabelSet l{bits};
    CHECK(noise::tamper_label(l, cfg, rng) == l);
  }
}

TEST_CASE("empty labels pass through at any level") {
  const noise::NoiseConfig cfg{1.0, abc()};
  Rng rng(2);
  for (int i = 0; i < 100; ++i)
    CHECK(noise::tamper_label({}, cfg, rng).empty());
}

TEST_CASE("a substitution changing the shown symbol is reachable") {
  // The label {room_orange, sym_club, arrow_left} can turn into
  // {room_orange, sym_spade, arrow_left}: the tamper picks sym_club and the
  // substitute draw picks sym_spade.
  const noise::NoiseConfig cfg{1.0, abc()};
  const LabelSet in = LabelSet::of(abc(), {"room_orange", "sym_club",
                                           "arrow_left"});
  const LabelSet want = LabelSet::of(abc(), {"room_orange", "sym_spade",
                                             "arrow_left"});
  bool seen = false;
  for (std::uint64_t seed = 1; seed <= 3000 && !seen; ++seed) {
    Rng rng(seed);
    seen = noise::tamper_label(in, cfg, rng) == want;
  }
  CHECK(seen);
}

TEST_CASE("singleton label at full noise: exact output distribution") {
  // Tampering always fires, the single event is always the target, and the
  // substitute is uniform over the alphabet. Drawing the event itself removes
  // it (probability 1/11 of the empty label); each other event replaces it.
  const noise::NoiseConfig cfg{1.0, abc()};
  const int n = abc().size();
  const LabelSet in = LabelSet::of(abc(), {"sym_club"});

  const int trials = 110000;
  std::map<std::uint32_t, int> hist;
  Rng rng(9);
  for (int i = 0; i < trials; ++i)
    ++hist[noise::tamper_label(in, cfg, rng).bits];

  const double p = 1.0 / n;
  const double sigma = std::sqrt(trials * p * (1 - p));  // ~94.8
  const int lo = static_cast<int>(trials * p - 4 * sigma);
  const int hi = static_cast<int>(trials * p + 4 * sigma);

  CHECK(hist.size() == static_cast<std::size_t>(n));  // empty + 10 singletons
  CHECK(hist[0] > lo);
  CHECK(hist[0] < hi);
  for (int b = 0; b < n; ++b) {
    if (abc().name(b) == "sym_club") {
      // Drawing sym_club as the substitute removes it, so the input label
      // itself never comes back out.
      CHECK(hist.count(in.bits) == 0);
      continue;
    }
    const std::uint32_t out = 1u << b;
    CHECK(hist[out] > lo);
    CHECK(hist[out] < hi);
  }
}

TEST_CASE("substituting an event already present shrinks the label") {
  // From {room_green, got_club}, picking room_green as target and got_club
  // as substitute yields the singleton {got_club}.
  const noise::NoiseConfig cfg{1.0, abc()};
  const LabelSet in = LabelSet::of(abc(), {"room_green", "got_club"});
  const LabelSet want = LabelSet::of(abc(), {"got_club"});
  bool seen = false;
  for (std::uint64_t seed = 1; seed <= 3000 && !seen; ++seed) {
    Rng rng(seed);
    seen = noise::tamper_label(in, cfg, rng) == want;
  }
  CHECK(seen);
}

TEST_CASE("tampering changes at most one event in and one event out") {
  const noise::NoiseConfig cfg{1.0, abc()};
  const std::uint32_t all = (1u << abc().size()) - 1u;
  Rng rng(13);
  Rng pick(14);
  for (int i = 0; i < 20000; ++i) {
    const LabelSet in{pick.next_u64() & all};
    const LabelSet out = noise::tamper_label(in, cfg, rng);
    CHECK((out.bits & ~all) == 0u);  // stays inside the alphabet
    const int removed = std::popcount(in.bits & ~out.bits);
    const int added = std::popcount(out.bits & ~in.bits);
    CHECK(removed <= 1);
    CHECK(added <= 1);
    // An addition only happens as a substitution, never alone.
    if (added == 1) CHECK(removed == 1);
  }
}

TEST_CASE("tamper rate matches the configured level") {
  const double k = 0.3;
  const noise::NoiseConfig cfg{k, abc()};
  // Every tamper of a nonempty label changes it: the target is always
  // removed, and it can never be re-added in the same tamper (drawing it as
  // the substitute means removal). So P(output != input) = k exactly.
  const LabelSet in = LabelSet::of(abc(), {"room_orange", "sym_club",
                                           "arrow_left"});
  const int trials = 100000;
  int changed = 0;
  Rng rng(21);
  for (int i = 0; i < trials; ++i)
    if (noise::tamper_label(in, cfg, rng) != in) ++changed;
  const double sigma = std::sqrt(trials * k * (1 - k));
  CHECK(std::abs(changed - trials * k) < 4 * sigma);
}
