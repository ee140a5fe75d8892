#include "toml_lite.hpp"

#include <cctype>
#include <cstdlib>
#include <limits>
#include <vector>

#include "lgds/errors.hpp"

namespace lgds {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

// Cuts a '#' comment, honoring quotes. Returns the bracket depth change of the
// remaining text so the caller can join multiline arrays.
std::string strip_comment(const std::string& raw, int line, int* depth_delta) {
  std::string out;
  bool in_string = false;
  for (size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (in_string) {
      out += c;
      if (c == '\\' && i + 1 < raw.size()) out += raw[++i];
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '#') break;
    if (c == '"') in_string = true;
    if (c == '[') *depth_delta += 1;
    if (c == ']') *depth_delta -= 1;
    out += c;
  }
  if (in_string) fail(line, "unterminated string");
  return out;
}

struct ValueParser {
  const std::string& s;
  int line;
  size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }

  nlohmann::json parse_value() {
    skip_ws();
    if (pos >= s.size()) fail(line, "missing value");
    if (s[pos] == '"') return parse_string();
    if (s[pos] == '[') return parse_array();
    if (s[pos] == '{') fail(line, "inline tables are not supported; use a [section]");
    return parse_scalar();
  }

  nlohmann::json parse_string() {
    ++pos;
    std::string out;
    while (pos < s.size() && s[pos] != '"') {
      char c = s[pos++];
      if (c == '\\') {
        if (pos >= s.size()) fail(line, "dangling escape");
        switch (s[pos++]) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(line, "unsupported string escape");
        }
      } else {
        out += c;
      }
    }
    if (pos >= s.size()) fail(line, "unterminated string");
    ++pos;
    return out;
  }

  nlohmann::json parse_array() {
    ++pos;  // '['
    nlohmann::json arr = nlohmann::json::array();
    while (true) {
      skip_ws();
      if (pos >= s.size()) fail(line, "unterminated array");
      if (s[pos] == ']') {
        ++pos;
        return arr;
      }
      arr.push_back(parse_value());
      skip_ws();
      if (pos < s.size() && s[pos] == ',') {
        ++pos;
        continue;
      }
      if (pos < s.size() && s[pos] == ']') {
        ++pos;
        return arr;
      }
      fail(line, "expected ',' or ']' in array");
    }
  }

  nlohmann::json parse_scalar() {
    const size_t start = pos;
    while (pos < s.size() && s[pos] != ',' && s[pos] != ']' && s[pos] != ' ' && s[pos] != '\t')
      ++pos;
    std::string tok = s.substr(start, pos - start);
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    if (tok == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::string digits;
    for (char c : tok)
      if (c != '_') digits += c;  // TOML allows 1_000
    const char* begin = digits.c_str();
    char* end = nullptr;
    if (digits.find_first_of(".eE") == std::string::npos) {
      const long long v = std::strtoll(begin, &end, 10);
      if (end == begin + digits.size() && !digits.empty()) return v;
    }
    const double d = std::strtod(begin, &end);
    if (end == begin + digits.size() && !digits.empty()) return d;
    fail(line, "cannot parse value '" + tok + "'");
  }
};

// Dotted key into segments; segments may be bare or quoted.
std::vector<std::string> split_path(const std::string& text, int line) {
  std::vector<std::string> path;
  std::string cur;
  bool in_string = false;
  bool has_segment = false;
  for (char c : text) {
    if (in_string) {
      if (c == '"') in_string = false;
      else cur += c;
      has_segment = true;
      continue;
    }
    if (c == '"') {
      in_string = true;
      continue;
    }
    if (c == '.') {
      if (!has_segment && cur.empty()) fail(line, "empty key segment");
      path.push_back(cur);
      cur.clear();
      has_segment = false;
      continue;
    }
    if (c == ' ' || c == '\t') continue;
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
      cur += c;
      has_segment = true;
    } else {
      fail(line, std::string("bad character '") + c + "' in key");
    }
  }
  if (in_string) fail(line, "unterminated quoted key");
  if (!has_segment && cur.empty()) fail(line, "empty key");
  path.push_back(cur);
  return path;
}

// Walks/creates the object spine for a table path; arrays of tables resolve to
// their most recent element, as in TOML.
nlohmann::json* descend(nlohmann::json* node, const std::string& key, int line) {
  nlohmann::json& slot = (*node)[key];
  if (slot.is_null()) slot = nlohmann::json::object();
  if (slot.is_array()) {
    if (slot.empty()) fail(line, "referencing empty table array '" + key + "'");
    return &slot.back();
  }
  if (!slot.is_object()) fail(line, "key '" + key + "' is not a table");
  return &slot;
}

}  // namespace

nlohmann::json parse_toml_lite(const std::string& text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* table = &root;

  size_t offset = 0;
  int line_no = 0;
  while (offset <= text.size()) {
    const size_t nl = text.find('\n', offset);
    std::string raw = text.substr(offset, nl == std::string::npos ? std::string::npos
                                                                  : nl - offset);
    offset = nl == std::string::npos ? text.size() + 1 : nl + 1;
    line_no += 1;
    const int line = line_no;

    int depth = 0;
    std::string logical = strip_comment(raw, line, &depth);
    // Join continuation lines of a multiline array.
    while (depth > 0 && offset <= text.size()) {
      const size_t nl2 = text.find('\n', offset);
      std::string cont = text.substr(offset, nl2 == std::string::npos ? std::string::npos
                                                                      : nl2 - offset);
      offset = nl2 == std::string::npos ? text.size() + 1 : nl2 + 1;
      line_no += 1;
      logical += ' ';
      logical += strip_comment(cont, line_no, &depth);
    }
    if (depth != 0) fail(line, "unbalanced brackets");

    const size_t first = logical.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const size_t last = logical.find_last_not_of(" \t\r");
    logical = logical.substr(first, last - first + 1);

    if (logical.front() == '[') {
      const bool array_table = logical.size() >= 2 && logical[1] == '[';
      const std::string closer = array_table ? "]]" : "]";
      if (logical.size() < 2 * closer.size() ||
          logical.compare(logical.size() - closer.size(), closer.size(), closer) != 0)
        fail(line, "malformed table header");
      const std::string inner =
          logical.substr(closer.size(), logical.size() - 2 * closer.size());
      const std::vector<std::string> path = split_path(inner, line);
      nlohmann::json* node = &root;
      for (size_t i = 0; i + 1 < path.size(); ++i) node = descend(node, path[i], line);
      nlohmann::json& slot = (*node)[path.back()];
      if (array_table) {
        if (slot.is_null()) slot = nlohmann::json::array();
        if (!slot.is_array()) fail(line, "key '" + path.back() + "' is not a table array");
        slot.push_back(nlohmann::json::object());
        table = &slot.back();
      } else {
        if (slot.is_null()) slot = nlohmann::json::object();
        if (!slot.is_object()) fail(line, "key '" + path.back() + "' is not a table");
        table = &slot;
      }
      continue;
    }

    const size_t eq = [&] {
      bool in_string = false;
      for (size_t i = 0; i < logical.size(); ++i) {
        if (in_string) {
          if (logical[i] == '"') in_string = false;
          continue;
        }
        if (logical[i] == '"') in_string = true;
        else if (logical[i] == '=') return i;
      }
      return std::string::npos;
    }();
    if (eq == std::string::npos) fail(line, "expected 'key = value'");

    const std::vector<std::string> path = split_path(logical.substr(0, eq), line);
    const std::string value_text = logical.substr(eq + 1);
    ValueParser vp{value_text, line};
    nlohmann::json value = vp.parse_value();
    vp.skip_ws();
    if (vp.pos != value_text.size()) fail(line, "trailing characters after value");

    nlohmann::json* node = table;
    for (size_t i = 0; i + 1 < path.size(); ++i) node = descend(node, path[i], line);
    (*node)[path.back()] = std::move(value);
  }
  return root;
}

}  // namespace lgds
