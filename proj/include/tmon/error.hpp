#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace tmon {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (JSON, PPM, JSON-lines). `line` is 1-based, 0 if unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that breaks a domain invariant. `field_path` points at the
// offending field, e.g. "entities[2].path".
class ValidationError : public Error {
 public:
  ValidationError(std::string field_path, const std::string& what)
      : Error(field_path + ": " + what), field_path_(std::move(field_path)) {}
  const std::string& field_path() const { return field_path_; }

 private:
  std::string field_path_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Failures talking to an external inference endpoint. Each carries the
// endpoint it was talking to.
class RemoteError : public Error {
 public:
  RemoteError(std::string endpoint, const std::string& what)
      : Error(endpoint + ": " + what), endpoint_(std::move(endpoint)) {}
  const std::string& endpoint() const { return endpoint_; }

 private:
  std::string endpoint_;
};

class TimeoutError : public RemoteError {
 public:
  using RemoteError::RemoteError;
};

class TransportError : public RemoteError {
 public:
  TransportError(std::string endpoint, const std::string& what, int status = 0)
      : RemoteError(std::move(endpoint), what), status_(status) {}
  // HTTP status when the server answered, 0 when the connection itself failed.
  int status() const { return status_; }

 private:
  int status_;
};

class MalformedResponseError : public RemoteError {
 public:
  using RemoteError::RemoteError;
};

}  // namespace tmon
