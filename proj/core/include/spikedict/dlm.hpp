#pragma once

#include <string>

#include "spikedict/types.hpp"

namespace spikedict {

/// DLM1 matrix file: ASCII header "DLM1 <rows> <cols>\n" followed by
/// rows*cols little-endian IEEE-754 doubles in row-major order.
void write_dlm(const std::string& path, const Matrix& m);

/// Reads a DLM1 file. Throws std::runtime_error on "bad magic", "truncated"
/// or malformed headers, naming the path.
Matrix read_dlm(const std::string& path);

}  // namespace spikedict
