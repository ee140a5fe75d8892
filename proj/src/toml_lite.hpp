#pragma once

#include <string>

#include <json.hpp>

namespace lgds {

// Parses the subset of TOML that experiment configs use: [tables],
// [[arrays of tables]], dotted keys, strings, booleans, numbers, and possibly
// nested, possibly multiline arrays. Inline tables, dates, and multiline
// strings are rejected. Throws ConfigError with a line number on bad input.
nlohmann::json parse_toml_lite(const std::string& text);

}  // namespace lgds
