#pragma once

#include <stdexcept>
#include <string>

namespace zipfmem {

// Non-finite loss, gradient, or parameter encountered while training.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An environment was driven outside its reset/step protocol.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Map generation could not satisfy placement constraints.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation was requested on an object in an unusable state (e.g. empty buffer).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace zipfmem
