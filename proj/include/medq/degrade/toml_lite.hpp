#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace medq::toml {

// The subset of TOML used by the configuration files: [table] and [dotted.table] headers,
// bare or quoted keys, numbers, basic strings, booleans, single-line numeric arrays and comments.
using Value = std::variant<double, bool, std::string, std::vector<double>>;
using Table = std::map<std::string, Value>;

struct Document {
  /// Keyed by the full dotted header; "" holds root keys.
  std::map<std::string, Table> tables;

  const Table* find(const std::string& header) const;
};

Document parse(const std::string& text);

std::string format_number(double v);

}  // namespace medq::toml
