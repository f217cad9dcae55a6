#include "nl2sql/errors.hpp"

namespace nl2sql {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnreadableDatabase: return "UnreadableDatabase";
    case ErrorCode::AnnotationParse: return "ParseError";
    case ErrorCode::UnresolvedLink: return "UnresolvedLink";
    case ErrorCode::Transport: return "TransportError";
    case ErrorCode::Service: return "ServiceError";
    case ErrorCode::ReplayMiss: return "ReplayMiss";
    case ErrorCode::MalformedLlmOutput: return "MalformedLLMOutput";
    case ErrorCode::MissingContext: return "MissingContext";
    case ErrorCode::KeyAbsent: return "KeyAbsent";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::NoListFound: return "NoListFound";
    case ErrorCode::NoSqlFound: return "NoSqlFound";
    case ErrorCode::ForbiddenStatement: return "ForbiddenStatement";
    case ErrorCode::InvalidOnFailure: return "InvalidOnFailure";
    case ErrorCode::MalformedCall: return "MalformedCall";
    case ErrorCode::InterpreterMissing: return "InterpreterMissing";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::UnparseableSql: return "UnparseableSql";
    case ErrorCode::Config: return "ConfigError";
  }
  return "Error";
}

}  // namespace nl2sql
