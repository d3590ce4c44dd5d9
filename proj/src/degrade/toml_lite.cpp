#include "medq/degrade/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "medq/error.hpp"

namespace medq::toml {

namespace {

class Cursor {
 public:
  Cursor(const std::string& line, std::size_t number) : s_(line), line_(number) {}

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool done() {
    skip_ws();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  bool consume(char c) {
    skip_ws();
    if (peek() != c) return false;
    ++pos_;
    return true;
  }
  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("TOML line " + std::to_string(line_) + ": " + what);
  }

  std::string key() {
    skip_ws();
    if (peek() == '"') return basic_string();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
                                s_[pos_] == '-')) {
      ++pos_;
    }
    if (start == pos_) fail("expected key");
    return s_.substr(start, pos_ - start);
  }

  std::string dotted_key() {
    std::string k = key();
    while (consume('.')) k += "." + key();
    return k;
  }

  std::string basic_string() {
    expect('"');
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("dangling escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: fail("unsupported escape");
        }
      } else {
        out.push_back(c);
      }
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  double number() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                s_[pos_] == '+' || s_[pos_] == '-' || s_[pos_] == '_')) {
      ++pos_;
    }
    std::string text;
    for (std::size_t i = start; i < pos_; ++i) {
      if (s_[i] != '_') text.push_back(s_[i]);
    }
    if (text == "inf" || text == "+inf") return INFINITY;
    if (text == "-inf") return -INFINITY;
    double v = 0.0;
    const char* first = text.data();
    if (!text.empty() && text[0] == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) fail("invalid number '" + text + "'");
    return v;
  }

  Value value() {
    skip_ws();
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '[') {
      ++pos_;
      std::vector<double> arr;
      if (consume(']')) return arr;
      do {
        arr.push_back(number());
      } while (consume(','));
      expect(']');
      return arr;
    }
    if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      return false;
    }
    return number();
  }

 private:
  const std::string& s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace

const Table* Document::find(const std::string& header) const {
  auto it = tables.find(header);
  return it == tables.end() ? nullptr : &it->second;
}

Document parse(const std::string& text) {
  Document doc;
  doc.tables[""];
  std::string current;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    Cursor cur(line, number);
    if (cur.done()) continue;
    if (cur.consume('[')) {
      current = cur.dotted_key();
      cur.expect(']');
      if (!cur.done()) cur.fail("trailing characters after table header");
      if (doc.tables.count(current) && !doc.tables[current].empty()) cur.fail("duplicate table [" + current + "]");
      doc.tables[current];
      continue;
    }
    const std::string key = cur.key();
    cur.expect('=');
    Value v = cur.value();
    if (!cur.done()) cur.fail("trailing characters after value");
    auto& table = doc.tables[current];
    if (!table.emplace(key, std::move(v)).second) cur.fail("duplicate key '" + key + "'");
  }
  return doc;
}

std::string format_number(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::ostringstream os;
    os << static_cast<long long>(v) << ".0";
    return os.str();
  }
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace medq::toml
