#pragma once

#include <stdexcept>
#include <string>

namespace dclab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid polygon, point outside a corner wedge, resonant exponent, ...
class GeometryError : public Error {
public:
  using Error::Error;
};

/// Mesh generation could not satisfy the request.
class MeshError : public Error {
public:
  using Error::Error;
};

/// Linear or optimization solver failure.
class SolverError : public Error {
public:
  using Error::Error;
};

/// Malformed experiment configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Least-squares extraction could not be carried out.
class ExtractionError : public Error {
public:
  using Error::Error;
};

}  // namespace dclab
