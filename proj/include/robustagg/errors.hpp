#pragma once

#include <stdexcept>
#include <string>

namespace robustagg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: out-of-range parameters, bad JSON schema, bad flags.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A signal (or signal profile) that occurs with probability zero; its
/// posterior is undefined.
class ZeroProbabilitySignal : public Error {
 public:
  using Error::Error;
};

class DegenerateStateSpace : public Error {
 public:
  using Error::Error;
};

class BoundaryForecast : public Error {
 public:
  using Error::Error;
};

class AmbiguousReportMatching : public Error {
 public:
  using Error::Error;
};

class InfeasibleDomain : public Error {
 public:
  using Error::Error;
};

}  // namespace robustagg
