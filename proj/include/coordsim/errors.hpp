#pragma once

#include <stdexcept>
#include <string>

namespace coordsim {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad scenario content: unknown preset, unknown objective name, invalid
// topology parameters, malformed config file.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Caller passed structurally wrong arguments (size mismatch, out-of-range
// rate, invalid player index).
class UsageError : public Error {
public:
  using Error::Error;
};

// Request would enumerate 2^|V| configurations past the cap.
class SizeError : public Error {
public:
  using Error::Error;
};

// A function left its numeric domain during evaluation (e.g. a marginal
// reached 1 inside a penalty term).
class EvalError : public Error {
public:
  using Error::Error;
};

// Scalar root bracketing failed: no sign change over the search interval.
class BracketError : public Error {
public:
  using Error::Error;
};

// Filesystem failures in the harness and CLI.
class IoError : public Error {
public:
  using Error::Error;
};

} // namespace coordsim
