#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace loomata {

enum class ErrorKind {
  Domain,       // argument outside the operation's domain
  Validation,   // malformed value or schema violation
  Parse,        // malformed bytes (image, JSON, WIF)
  Unsupported,  // valid input the operation does not handle (e.g. k != 2)
  Capacity,     // loom capacity exceeded
  Io,           // file system failure
  Conflict,     // stale revision
  NotFound,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& message) : Error(ErrorKind::Domain, message) {}
};

struct UnsupportedError : Error {
  explicit UnsupportedError(const std::string& message)
      : Error(ErrorKind::Unsupported, message) {}
};

struct IoError : Error {
  explicit IoError(const std::string& message) : Error(ErrorKind::Io, message) {}
};

/// Validation failure. `path` addresses the offending element, e.g.
/// "table[17]" or "/evolution/init/density".
class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& message)
      : Error(ErrorKind::Validation, path.empty() ? message : path + ": " + message),
        path_(std::move(path)),
        message_(message) {}

  const std::string& path() const noexcept { return path_; }
  /// Message without the path prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  std::string path_;
  std::string message_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& message)
      : Error(ErrorKind::Parse, message + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class CapacityError : public Error {
 public:
  CapacityError(int required, int capacity)
      : Error(ErrorKind::Capacity, "draft needs " + std::to_string(required) +
                                       " shafts, loom capacity is " +
                                       std::to_string(capacity)),
        required_(required),
        capacity_(capacity) {}

  int required() const noexcept { return required_; }
  int capacity() const noexcept { return capacity_; }

 private:
  int required_;
  int capacity_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Capacity: return "capacity";
    case ErrorKind::Io: return "io";
    case ErrorKind::Conflict: return "conflict";
    case ErrorKind::NotFound: return "not-found";
  }
  return "unknown";
}

}  // namespace loomata
