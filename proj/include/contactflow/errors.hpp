#pragma once

#include <stdexcept>
#include <string>

namespace contactflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rank-deficient jet: F is not an immersion at this node.
class DegenerateImmersion : public Error {
 public:
  using Error::Error;
};

// det Dphi <= 0; the gauge map stopped being an orientation preserving diffeomorphism.
class OrientationLoss : public Error {
 public:
  using Error::Error;
};

class DiffeomorphismBreakdown : public Error {
 public:
  using Error::Error;
};

class BoundarySolveError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Input data or configuration that a constructor refuses.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace contactflow
