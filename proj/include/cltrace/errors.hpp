#pragma once

#include <stdexcept>
#include <string>

namespace cltrace {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands belong to different group families.
class KindMismatch : public Error {
 public:
  using Error::Error;
};

/// The Laplacian is only tabulated for monomials of trace-degree <= 2.
class UnsupportedShape : public Error {
 public:
  using Error::Error;
};

/// An exact moment formula was requested below the rank where it holds.
class BelowThreshold : public Error {
 public:
  BelowThreshold(const std::string& what, int threshold, int rank)
      : Error(what), threshold_(threshold), rank_(rank) {}
  int threshold() const noexcept { return threshold_; }
  int rank() const noexcept { return rank_; }

 private:
  int threshold_;
  int rank_;
};

/// Malformed polynomial text.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at offset " + std::to_string(position) + ")"), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Argument outside an operation's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid study configuration; field() names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error("config field '" + field + "': " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace cltrace
