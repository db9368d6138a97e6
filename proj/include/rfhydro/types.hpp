#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rfhydro {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;
using RealVector = std::vector<double>;
using BitVector = std::vector<std::uint8_t>;

/// Hydration class. `dehydrated` is the positive class in every confusion matrix.
enum class Label : int { hydrated = 0, dehydrated = 1 };

/// Sensing geometry: chest reflection (CBDM) or hand transmission (HBDM).
enum class Method { cbdm, hbdm };

std::string_view to_string(Label label);
std::string_view to_string(Method method);
Label parse_label(std::string_view text);
Method parse_method(std::string_view text);

inline int label_index(Label label) { return static_cast<int>(label); }
inline Label label_from_index(int index) { return index ? Label::dehydrated : Label::hydrated; }

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix shape does not match what the operation requires.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters or configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data violates an operation precondition (empty sets, degenerate pilots, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace rfhydro
