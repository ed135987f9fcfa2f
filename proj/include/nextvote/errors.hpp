#pragma once

#include <stdexcept>
#include <string>

namespace nextvote {

// Malformed or unusable input data (corpus files, catalog files, model documents).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// A token or model artifact does not resolve against the catalog it is paired with.
class CatalogMismatchError : public std::runtime_error {
 public:
  explicit CatalogMismatchError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nextvote
