#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evacmap {

// Broad failure classes; they map one-to-one onto CLI exit codes and C API
// status values.
enum class ErrorKind {
  Config = 1,
  InputData = 2,
  Runtime = 3,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Short machine-readable tag, e.g. "parse_error" or "domain_error".
  const std::string& code() const noexcept { return code_; }

private:
  ErrorKind kind_;
  std::string code_;
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorKind::Config, "config_error", message) {}
};

// Malformed input file. `feature_index` is the offending feature, or npos when
// the whole document is unreadable.
class ParseError : public Error {
public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  ParseError(const std::string& message, std::size_t feature_index = npos)
      : Error(ErrorKind::InputData, "parse_error", message),
        feature_index_(feature_index) {}

  std::size_t feature_index() const noexcept { return feature_index_; }

private:
  std::size_t feature_index_;
};

class EmptyNetworkError : public Error {
public:
  explicit EmptyNetworkError(const std::string& message)
      : Error(ErrorKind::InputData, "empty_network", message) {}
};

class OutsideBoundsError : public Error {
public:
  explicit OutsideBoundsError(const std::string& message)
      : Error(ErrorKind::InputData, "outside_bbox", message) {}
};

class UnknownIdError : public Error {
public:
  explicit UnknownIdError(const std::string& message)
      : Error(ErrorKind::InputData, "unknown_id", message) {}
};

class DomainError : public Error {
public:
  explicit DomainError(const std::string& message)
      : Error(ErrorKind::Runtime, "domain_error", message) {}
};

class RoutingError : public Error {
public:
  explicit RoutingError(const std::string& message)
      : Error(ErrorKind::Runtime, "routing_error", message) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& message)
      : Error(ErrorKind::Runtime, "io_error", message) {}
};

} // namespace evacmap
