#include "gmatch/error.hpp"

namespace gmatch {

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::AsymmetricAdjacency: return "AsymmetricAdjacency";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::FeatureShapeMismatch: return "FeatureShapeMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::InvalidDepth: return "InvalidDepth";
    case ErrorCode::StaleIntermediates: return "StaleIntermediates";
    case ErrorCode::KinkProximity: return "KinkProximity";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::IndexMismatch: return "IndexMismatch";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::InvalidPermutation: return "InvalidPermutation";
    case ErrorCode::ConnectivityRetryExceeded: return "ConnectivityRetryExceeded";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

}  // namespace gmatch
