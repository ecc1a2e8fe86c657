#pragma once

#include <stdexcept>
#include <string>

namespace qtsynth {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Logarithmic map requested at the cut locus (w <= -1 + eps).
class AntipodalInput : public Error {
public:
  using Error::Error;
};

/// Iterative mean solver exceeded its iteration cap.
class NoConvergence : public Error {
public:
  using Error::Error;
};

/// Quaternion norm deviates from 1 by more than the repair tolerance.
class NormViolation : public Error {
public:
  using Error::Error;
};

/// Fewer grid points than cubic interpolation requires.
class GridTooShort : public Error {
public:
  using Error::Error;
};

/// Two objects expected on the same time grid disagree.
class GridMismatch : public Error {
public:
  using Error::Error;
};

/// Reconstructed tangent value left the injectivity radius (norm >= pi).
class TangentOverflow : public Error {
public:
  using Error::Error;
};

/// Synthesis or tuning parameters violate their constraints.
class InvalidConfig : public Error {
public:
  using Error::Error;
};

/// Tuning grid has an empty axis.
class EmptyGrid : public Error {
public:
  using Error::Error;
};

/// Correlation matrix could not be repaired to positive definite.
class SingularCorrelation : public Error {
public:
  using Error::Error;
};

/// A matrix needed for a normalized statistic is identically zero.
class ZeroNorm : public Error {
public:
  using Error::Error;
};

/// Operands have incompatible dimensions.
class SizeMismatch : public Error {
public:
  using Error::Error;
};

/// Row-paired matrices differ in shape.
class ShapeMismatch : public Error {
public:
  using Error::Error;
};

/// Exact permutation search requested beyond the enumerable size.
class ExactTooLarge : public Error {
public:
  using Error::Error;
};

/// Neighbor count outside [1, n-1].
class InvalidK : public Error {
public:
  using Error::Error;
};

/// Malformed input file; message carries the line number.
class ParseError : public Error {
public:
  using Error::Error;
};

/// Filesystem failure while reading or writing outputs.
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace qtsynth
