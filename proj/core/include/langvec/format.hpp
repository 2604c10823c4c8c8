#pragma once

#include <string>

namespace langvec {

/// Shortest text that reads back to the same double. Integral values keep a
/// trailing `.0`; NaN prints as `nan`, infinities as `inf` / `-inf`.
std::string format_number(double value);

}  // namespace langvec
