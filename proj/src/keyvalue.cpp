#include "incidentlab/keyvalue.hpp"

#include "incidentlab/common.hpp"

namespace incidentlab {

KeyValueDoc KeyValueDoc::parse(const std::string& text) {
  KeyValueDoc doc;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty key");
    doc.set(key, trim(std::string_view(line).substr(eq + 1)));
  }
  return doc;
}

KeyValueDoc KeyValueDoc::load(const std::string& path) {
  std::string text;
  for (const auto& l : read_lines(path)) {
    text += l;
    text += '\n';
  }
  try {
    return parse(text);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string KeyValueDoc::str() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

void KeyValueDoc::save(const std::string& path) const { write_text(path, str()); }

void KeyValueDoc::set(const std::string& key, const std::string& value) {
  auto it = index_.find(key);
  if (it != index_.end()) {
    entries_[it->second].second = value;
    return;
  }
  index_[key] = entries_.size();
  entries_.emplace_back(key, value);
}

void KeyValueDoc::set(const std::string& key, double value) { set(key, format_double(value)); }

void KeyValueDoc::set(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }

const std::string& KeyValueDoc::get(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) throw ParseError("missing key '" + key + "'");
  return entries_[it->second].second;
}

std::string KeyValueDoc::get_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

double KeyValueDoc::get_double(const std::string& key) const { return parse_double(get(key), key); }

double KeyValueDoc::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t KeyValueDoc::get_int_or(const std::string& key, std::int64_t fallback) const {
  return has(key) ? parse_int(get(key), key) : fallback;
}

bool KeyValueDoc::get_bool_or(const std::string& key, bool fallback) const {
  return has(key) ? parse_bool(get(key), key) : fallback;
}

}  // namespace incidentlab
