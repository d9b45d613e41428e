#pragma once

#include <stdexcept>
#include <string>

namespace zpi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A parameter is outside its mathematical domain (q not in [0,1], negative lambda, ...).
class DomainError : public Error {
  public:
    using Error::Error;
};

/// A truncated distribution would lose more than the allowed tail mass.
class TruncationError : public Error {
  public:
    TruncationError(int requested, int required)
        : Error("n_max=" + std::to_string(requested) + " loses more than the tail tolerance; n_max >= " +
                std::to_string(required) + " required"),
          requested_(requested), required_(required) {}

    int requested() const noexcept { return requested_; }
    int required() const noexcept { return required_; }

  private:
    int requested_;
    int required_;
};

/// A quality metric has a zero denominator.
class UndefinedMetricError : public Error {
  public:
    using Error::Error;
};

/// A conditional reconstruction found no frame with the requested photon count.
class EmptySelectionError : public Error {
  public:
    explicit EmptySelectionError(int k)
        : Error("no frame recorded exactly " + std::to_string(k) + " photon(s); cannot reconstruct k=" +
                std::to_string(k)),
          k_(k) {}

    int k() const noexcept { return k_; }

  private:
    int k_;
};

/// Malformed or inconsistent input data (files, dimensions, missing fields).
class DataError : public Error {
  public:
    using Error::Error;
};

/// Invalid run configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

}  // namespace zpi
