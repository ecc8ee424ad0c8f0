#pragma once

#include <string>

namespace oblique {

/// Shortest decimal string that round-trips to the same double.
/// Non-finite values print as "inf", "-inf" and "nan".
std::string format_double(double v);

}  // namespace oblique
