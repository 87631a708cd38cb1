#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace bsweyl {

using WarningHandler = std::function<void(const std::string&)>;

// Default handler prints the first few warnings of each kind to stderr.
void set_warning_handler(WarningHandler handler);
void warn(const std::string& kind, const std::string& message);

std::size_t warning_count(const std::string& kind);
void reset_warning_counts();

}  // namespace bsweyl
