#pragma once

#include <stdexcept>
#include <string>

namespace imvote {

// Base of every error the library throws. Each subclass names one failure
// mode so callers (and the CLI exit-code mapping) can dispatch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonPositiveDepth : public Error {
 public:
  explicit NonPositiveDepth(const std::string& what = "point has non-positive depth")
      : Error(what) {}
};

class DegenerateRay : public Error {
 public:
  explicit DegenerateRay(const std::string& what = "ray direction has zero length")
      : Error(what) {}
};

class InvalidRotation : public Error {
 public:
  explicit InvalidRotation(const std::string& what = "matrix is not a proper rotation")
      : Error(what) {}
};

class ClassOutOfRange : public Error {
 public:
  explicit ClassOutOfRange(const std::string& what = "class id outside [0, NC)")
      : Error(what) {}
};

class OutOfBounds : public Error {
 public:
  explicit OutOfBounds(const std::string& what = "pixel outside image bounds")
      : Error(what) {}
};

class TooFewPoints : public Error {
 public:
  explicit TooFewPoints(const std::string& what = "fewer points than requested seeds")
      : Error(what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what = "tensor width does not match parameters")
      : Error(what) {}
};

class PlacementFailure : public Error {
 public:
  explicit PlacementFailure(const std::string& what = "could not place objects without overlap")
      : Error(what) {}
};

class DivergedLoss : public Error {
 public:
  explicit DivergedLoss(const std::string& what = "training loss became non-finite")
      : Error(what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(what) {}
};

}  // namespace imvote
