#pragma once

#include <stdexcept>
#include <string>

namespace gmatch {

enum class ErrorCode {
  AsymmetricAdjacency,
  SelfLoop,
  FeatureShapeMismatch,
  ShapeMismatch,
  WidthMismatch,
  InvalidDepth,
  StaleIntermediates,
  KinkProximity,
  NonFinite,
  IndexMismatch,
  TooLarge,
  InvalidPermutation,
  ConnectivityRetryExceeded,
  EmptyDataset,
  IoError,
  FormatError,
  VersionMismatch,
  InvalidArgument,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gmatch
