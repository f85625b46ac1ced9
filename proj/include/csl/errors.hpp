#pragma once

#include <stdexcept>
#include <string>

namespace csl {

// Invalid arguments are reported with std::invalid_argument. The types below
// cover the remaining failure classes that callers may want to tell apart.

// A precondition on a parameter regime is violated (e.g. a closed form used
// outside the range where it holds).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Stored bytes do not match their trailing digest.
class CorruptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Wrong magic, unknown version or otherwise unreadable file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two sketches built from different frequency sets.
class IncompatibleSketchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptySketchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace csl
