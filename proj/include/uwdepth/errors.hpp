#pragma once

#include <stdexcept>
#include <string>

namespace uwdepth {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mathematical input outside the function's domain (e.g. point beyond the
/// gnomonic horizon).
struct DomainError : Error {
  using Error::Error;
};

/// Tensor or image shapes inconsistent with the operation.
struct ShapeError : Error {
  using Error::Error;
};

/// A configuration or parameter value outside its valid range.
struct ParamError : Error {
  using Error::Error;
};

/// Model specification is internally inconsistent.
struct SpecError : Error {
  using Error::Error;
};

/// Autodiff graph misuse (e.g. backward from a non-scalar).
struct GraphError : Error {
  using Error::Error;
};

/// No valid pixel under the mask.
struct EmptyMaskError : Error {
  using Error::Error;
};

/// Training requested on an empty split.
struct EmptyDatasetError : Error {
  using Error::Error;
};

/// Requested crop larger than the image.
struct SizeError : Error {
  using Error::Error;
};

/// Filesystem-level failure (missing file, short read, ...).
struct IoError : Error {
  using Error::Error;
};

/// File exists but its contents are not in the expected format.
struct FormatError : Error {
  using Error::Error;
};

/// RGB and depth dimensions of a pair disagree.
struct AlignmentError : Error {
  using Error::Error;
};

/// Checkpoint was written by an incompatible format version.
struct CheckpointVersionError : Error {
  using Error::Error;
};

/// Invalid key or value in a config document.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace uwdepth
