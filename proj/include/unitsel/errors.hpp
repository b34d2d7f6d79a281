#pragma once

#include <stdexcept>
#include <string>

namespace unitsel {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Misuse of a structure: unknown variable, scope mismatch, bad cardinality.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Malformed or illegal input documents and models.
class InputError : public Error {
 public:
  using Error::Error;
};

// Conditioning evidence has zero probability for every candidate unit.
class InconsistentEvidenceError : public Error {
 public:
  using Error::Error;
};

// An internal invariant was breached (e.g. unpaired factors in RMAP_VE).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace unitsel
