#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynkt/tensor.hpp"

namespace dynkt {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

/// Writes the parameter container (see docs/FORMATS.md):
///
///   "DKTPARAM" | u32 version=1 | u32 count |
///   count x { u32 name_len | name | u32 rank | u64 dims[rank] | f64 values[prod(dims)] }
///
/// All integers and floats little-endian.
void write_param_container(std::ostream& out, std::span<const NamedArray> arrays);
std::vector<NamedArray> read_param_container(std::istream& in);

}  // namespace dynkt
