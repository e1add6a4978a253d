#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gaitkit {

enum class ErrorCode {
  Config,
  Parse,
  Schema,
  Ordering,
  Dimension,
  MissingJoint,
  DegenerateGeometry,
  DegenerateFit,
  EmptyInput,
  InsufficientData,
  Sequencing,
  Range,
  InvalidFeature,
  InsufficientLandmarks,
  InconsistentLandmarks,
  EmptyOverlap,
  Io,
  Internal,
};

std::string_view to_string(ErrorCode code);

/// Process exit status for an error category: 2 config, 3 parse, 4 insufficient
/// data, 5 sync failure, 6 internal.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gaitkit
