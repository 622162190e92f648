#pragma once

#include <stdexcept>
#include <string>

namespace chipcost {

/// Base class for every error raised while loading or deriving a model.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed XML / JSON input. Carries the source name and (when known) line.
class ParseError : public Error {
 public:
  ParseError(std::string source, long line, const std::string& what);

  const std::string& source() const { return source_; }
  long line() const { return line_; }

 private:
  std::string source_;
  long line_;
};

/// A field failed a range or reference check. `path` names the element,
/// e.g. `system/chip[interposer]/chip[cpu]`.
class ValidationError : public Error {
 public:
  ValidationError(std::string path, std::string field, const std::string& what);

  const std::string& path() const { return path_; }
  const std::string& field() const { return field_; }

 private:
  std::string path_;
  std::string field_;
};

/// Two library entries of the same kind share a name.
class ConflictError : public Error {
 public:
  using Error::Error;
};

/// The model is well formed but physically inconsistent
/// (IO reach shorter than die separation, larger die stacked on a smaller one).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace chipcost
