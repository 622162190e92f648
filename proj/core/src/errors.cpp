#include "chipcost/errors.hpp"

namespace chipcost {

namespace {

std::string FormatParse(const std::string& source, long line, const std::string& what) {
  std::string msg = source;
  if (line > 0) msg += ":" + std::to_string(line);
  msg += ": " + what;
  return msg;
}

std::string FormatValidation(const std::string& path, const std::string& field,
                             const std::string& what) {
  std::string msg = path;
  if (!field.empty()) msg += ": field '" + field + "'";
  msg += ": " + what;
  return msg;
}

}  // namespace

ParseError::ParseError(std::string source, long line, const std::string& what)
    : Error(FormatParse(source, line, what)), source_(std::move(source)), line_(line) {}

ValidationError::ValidationError(std::string path, std::string field, const std::string& what)
    : Error(FormatValidation(path, field, what)), path_(std::move(path)), field_(std::move(field)) {}

}  // namespace chipcost
