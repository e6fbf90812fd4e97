#include "funcnav/error.hpp"

namespace funcnav {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kPreconditionViolated: return "PreconditionViolated";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kIllegalActionType: return "IllegalActionType";
    case ErrorCode::kInvalidActionInput: return "InvalidActionInput";
    case ErrorCode::kProviderUnreachable: return "ProviderUnreachable";
    case ErrorCode::kMalformedOutput: return "MalformedOutput";
    case ErrorCode::kFixtureExhausted: return "FixtureExhausted";
    case ErrorCode::kMatcherMiss: return "MatcherMiss";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kBackendUnreachable: return "BackendUnreachable";
    case ErrorCode::kUnknownFixtureApp: return "UnknownFixtureApp";
    case ErrorCode::kSessionClosed: return "SessionClosed";
    case ErrorCode::kPageUnavailable: return "PageUnavailable";
    case ErrorCode::kScreenshotFailed: return "ScreenshotFailed";
    case ErrorCode::kElementNotFound: return "ElementNotFound";
    case ErrorCode::kNoMatchingTransition: return "NoMatchingTransition";
    case ErrorCode::kActionRejected: return "ActionRejected";
    case ErrorCode::kEmbedderMismatch: return "EmbedderMismatch";
    case ErrorCode::kEmptyDB: return "EmptyDB";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kImageDecodeFailed: return "ImageDecodeFailed";
    case ErrorCode::kZeroTasks: return "ZeroTasks";
    case ErrorCode::kMissingReferenceLength: return "MissingReferenceLength";
    case ErrorCode::kBundleNotFound: return "BundleNotFound";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
  }
  return "Unknown";
}

}  // namespace funcnav
