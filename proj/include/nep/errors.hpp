#pragma once

#include <stdexcept>

namespace nep {

// Input data violated a documented precondition or file contract.
class ContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem or stream failure (missing file, unreadable, write error).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A serialized artifact (model, boundary table) has an unsupported version
// or cannot be decoded at all.
class VersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nep
