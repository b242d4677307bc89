// Error taxonomy shared by all modules.
//
// Every failure the library can signal derives from negf::Error so callers
// (and the CLI) can distinguish configuration problems from numerical ones.
#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace negf {

// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid or inconsistent user-supplied configuration (bad geometry, unknown
// config keys, atomic group that cannot fit a cluster, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// A caller broke an API precondition (dimension mismatch and the like).
class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& msg) : Error(msg) {}
};

// A diagonal block turned out numerically singular during factorization.
// Carries the pivot index within the block and a human-readable context
// (layer or cluster that was being eliminated).
class SingularBlock : public Error {
 public:
  SingularBlock(const std::string& msg, int pivot_index)
      : Error(msg), pivot_index(pivot_index) {}
  int pivot_index;
};

// An edge of the system graph connects two clusters that are not in an
// ancestor–descendant relationship.  Lists every offending edge as
// {dof u, dof v, cluster of u, cluster of v}.
class PartitionViolation : public Error {
 public:
  PartitionViolation(const std::string& msg,
                     std::vector<std::array<int, 4>> edges)
      : Error(msg), edges(std::move(edges)) {}
  std::vector<std::array<int, 4>> edges;
};

// An iterative computation (surface Green's function decimation) failed to
// reach its tolerance within the iteration cap.
class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& msg) : Error(msg) {}
};

// A matrix that must be skew-Hermitian (M† == −M) violates that property
// beyond the documented tolerance.
class NonSkewHermitianInput : public Error {
 public:
  explicit NonSkewHermitianInput(const std::string& msg) : Error(msg) {}
};

// A quantity that should vanish up to roundoff came out too large
// (e.g. a real part of a lesser Green's function diagonal).
class ResidualTooLarge : public Error {
 public:
  explicit ResidualTooLarge(const std::string& msg) : Error(msg) {}
};

}  // namespace negf
