#pragma once

namespace uvesc {

/// Required definiteness of a symmetric matrix-valued constraint.
enum class Sense { kNegativeDefinite, kPositiveSemidefinite, kPositiveDefinite };

inline const char* to_string(Sense sense) {
  switch (sense) {
    case Sense::kNegativeDefinite: return "negative_definite";
    case Sense::kPositiveSemidefinite: return "positive_semidefinite";
    case Sense::kPositiveDefinite: return "positive_definite";
  }
  return "unknown";
}

}  // namespace uvesc
