#pragma once

#include <stdexcept>
#include <string>

namespace mdpm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class MeshError : public Error {
 public:
  using Error::Error;
};

// Raised when a closest-point projection has two distinct minimizers, i.e. the
// configuration is outside the scale where the mixed-dimensional model applies.
class ProjectionAmbiguous : public Error {
 public:
  using Error::Error;
};

class SpaceError : public Error {
 public:
  using Error::Error;
};

class StrainError : public Error {
 public:
  using Error::Error;
};

class RelationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace mdpm
