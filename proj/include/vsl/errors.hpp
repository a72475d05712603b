#pragma once

#include <stdexcept>
#include <string>

namespace vsl {

// All toolkit failures derive from Error so callers can catch one base.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : Error { using Error::Error; };
struct SingularMatrix : Error { using Error::Error; };
struct NotHermitian : Error { using Error::Error; };
struct NotProjector : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// geometry
struct ClusterAmbiguity : Error { using Error::Error; };

// propagation
struct StepFailure : Error { using Error::Error; };

// wronskian / contours
struct NearExceptionalSet : Error { using Error::Error; };
struct ContourTooClose : Error { using Error::Error; };
struct WindingUnstable : Error { using Error::Error; };

// spectrum
struct NearPole : Error { using Error::Error; };
struct RankMismatch : Error { using Error::Error; };
struct UnresolvedCluster : Error { using Error::Error; };
struct DegenerateZ : Error { using Error::Error; };

} // namespace vsl
