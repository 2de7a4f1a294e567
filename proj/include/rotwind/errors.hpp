#pragma once

#include <stdexcept>
#include <string>

namespace rotwind {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// H1/H2 style hypothesis failures on the wind stress.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

// Bad configuration; carries the JSON path of the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace rotwind
