#pragma once

#include <string>

namespace qgbec {

/// 17 significant digits, always with a decimal point or exponent ("0.0", "1.0",
/// "-1.0000000000000002"), "nan"/"inf" otherwise. Round-trips every double.
std::string format_double(double x);

}  // namespace qgbec
