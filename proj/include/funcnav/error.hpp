#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace funcnav {

enum class ErrorCode {
  kInvalidArgument,
  kPreconditionViolated,
  kIoError,
  // domain
  kIllegalActionType,
  kInvalidActionInput,
  // llm_gateway
  kProviderUnreachable,
  kMalformedOutput,
  kFixtureExhausted,
  kMatcherMiss,
  // embeddings
  kDimensionMismatch,
  kZeroVector,
  // browser
  kBackendUnreachable,
  kUnknownFixtureApp,
  kSessionClosed,
  kPageUnavailable,
  kScreenshotFailed,
  kElementNotFound,
  kNoMatchingTransition,
  kActionRejected,
  // planner
  kEmbedderMismatch,
  kEmptyDB,
  // decider
  kIndexOutOfRange,
  kImageDecodeFailed,
  // evalkit
  kZeroTasks,
  kMissingReferenceLength,
  kBundleNotFound,
  // fixtures
  kInvalidSpec,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace funcnav
