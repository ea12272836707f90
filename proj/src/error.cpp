#include "tripmine/error.hpp"

namespace tripmine {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::UnknownStop: return "UnknownStop";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::WeakKey: return "WeakKey";
    case ErrorCode::UnknownPseudonym: return "UnknownPseudonym";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BadReference: return "BadReference";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::MalformedXml: return "MalformedXml";
    case ErrorCode::MalformedGeoJson: return "MalformedGeoJson";
    case ErrorCode::MissingSegmentId: return "MissingSegmentId";
    case ErrorCode::NonLineStringGeometry: return "NonLineStringGeometry";
    case ErrorCode::NoConsent: return "NoConsent";
    case ErrorCode::InvalidEnvelope: return "InvalidEnvelope";
    case ErrorCode::FeedUnavailable: return "FeedUnavailable";
    case ErrorCode::NotFound: return "NotFound";
  }
  return "Unknown";
}

}  // namespace tripmine
