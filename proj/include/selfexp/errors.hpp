#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfexp {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class ReplayMissError : public Error {
 public:
  explicit ReplayMissError(std::string key)
      : Error("replay cache has no response for request " + key), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class OracleSaturatedError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class RankDeficientError : public Error {
 public:
  using Error::Error;
};

class UnsupportedMetric : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  LoadError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Raised by perturbation explainers after every query has been attempted.
// failed() lists the perturbation indices whose query failed.
class PerturbationError : public Error {
 public:
  PerturbationError(const std::string& what, std::vector<std::size_t> failed)
      : Error(what), failed_(std::move(failed)) {}
  const std::vector<std::size_t>& failed() const { return failed_; }

 private:
  std::vector<std::size_t> failed_;
};

}  // namespace selfexp
