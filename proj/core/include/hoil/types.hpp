#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace hoil {

using Rng = std::mt19937_64;

/// Which of the two observation encoders an object reads.
enum class Space : std::uint8_t { Expert, Learner };

inline char space_char(Space s) { return s == Space::Expert ? 'E' : 'L'; }

/// Three-way partition of state-action space: latent demonstration (+1),
/// observed demonstration (0), non-expert data (-1).
enum class TernaryLabel : int { LatentDemo = 1, ObservedDemo = 0, NonExpert = -1 };

inline const char* label_name(TernaryLabel l) {
  switch (l) {
    case TernaryLabel::LatentDemo: return "H";
    case TernaryLabel::ObservedDemo: return "O";
    case TernaryLabel::NonExpert: return "N";
  }
  return "?";
}

/// SplitMix64 finalizer; derives independent stream seeds from one run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(const std::string& what, long batch_index)
      : std::runtime_error(what + " (batch index " + std::to_string(batch_index) + ")"),
        batch_index_(batch_index) {}
  long batch_index() const { return batch_index_; }

 private:
  long batch_index_;
};

}  // namespace hoil
