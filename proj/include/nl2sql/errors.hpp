#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nl2sql {

enum class ErrorCode {
  UnreadableDatabase,
  AnnotationParse,
  UnresolvedLink,
  Transport,
  Service,
  ReplayMiss,
  MalformedLlmOutput,
  MissingContext,
  KeyAbsent,
  PreconditionViolated,
  NoListFound,
  NoSqlFound,
  ForbiddenStatement,
  InvalidOnFailure,
  MalformedCall,
  InterpreterMissing,
  Io,
  UnparseableSql,
  Config,
};

std::string_view to_string(ErrorCode code);

// Every library failure surfaces as this type; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Transport, service and replay failures all originate in the model gateway.
inline bool is_gateway_error(ErrorCode code) {
  return code == ErrorCode::Transport || code == ErrorCode::Service ||
         code == ErrorCode::ReplayMiss;
}

// Non-fatal notes collected by lenient parsers and validators.
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, std::string message) {
  if (sink != nullptr) sink->push_back(std::move(message));
}

}  // namespace nl2sql
