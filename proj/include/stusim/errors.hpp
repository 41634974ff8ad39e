#pragma once

#include <stdexcept>
#include <string>

namespace stusim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file did not parse as the documented format (record files, fixtures, snapshots).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Parsed data violates a documented invariant (duplicate ids, bad order indices, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Fewer records than the configured split requires.
class InsufficientDataError : public Error {
 public:
  InsufficientDataError(std::size_t have, std::size_t need)
      : Error("insufficient records: have " + std::to_string(have) + ", need " +
              std::to_string(need)),
        have_(have),
        need_(need) {}

  std::size_t have() const { return have_; }
  std::size_t need() const { return need_; }

 private:
  std::size_t have_;
  std::size_t need_;
};

/// Filesystem failure; message always names the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A request violated the gateway invariants; no backend call was made.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Backend failure surfaced through the gateway.
class GatewayError : public Error {
 public:
  using Error::Error;
};

/// Retryable transport-level failure (connection refused, 5xx, timeout).
class TransportError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

/// The scripted backend had no entry for a request.
class ScriptedMissError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

/// A model response could not be parsed into concepts/relations/verdicts.
/// Carries the raw text so the failure stays auditable next to the run log.
class ExtractionParseError : public Error {
 public:
  ExtractionParseError(const std::string& message, std::string raw_response)
      : Error(message), raw_response_(std::move(raw_response)) {}

  const std::string& raw_response() const { return raw_response_; }

 private:
  std::string raw_response_;
};

/// A pred-role response lacked the required correct/incorrect marker.
class PredictionParseError : public Error {
 public:
  using Error::Error;
};

/// Prompt template problems: unknown template or unresolved placeholder.
class TemplateError : public Error {
 public:
  using Error::Error;
};

/// Evaluation inputs do not line up (task ids, lengths).
class AlignmentError : public Error {
 public:
  using Error::Error;
};

}  // namespace stusim
