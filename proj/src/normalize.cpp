#include "pairtask/text.hpp"

namespace pairtask {

namespace {

bool is_word_byte(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

bool is_space_byte(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool starts_with_icase(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (s.size() - pos < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (lower(s[pos + i]) != prefix[i]) return false;
  return true;
}

bool url_starts_at(std::string_view s, std::size_t pos) {
  const char c = lower(s[pos]);
  if (c == 'h') return starts_with_icase(s, pos, "http://") || starts_with_icase(s, pos, "https://");
  if (c == 'w') return starts_with_icase(s, pos, "www.");
  return false;
}

}  // namespace

std::string normalize_text(std::string_view raw) {
  const EmojiTable& emoji = EmojiTable::bundled();
  std::string out;
  out.reserve(raw.size());

  std::size_t i = 0;
  while (i < raw.size()) {
    if (url_starts_at(raw, i)) {
      while (i < raw.size() && !is_space_byte(raw[i])) ++i;
      out += kUrlToken;
      continue;
    }
    if (raw[i] == '@' && i + 1 < raw.size() && is_word_byte(raw[i + 1])) {
      i += 1;
      while (i < raw.size() && is_word_byte(raw[i])) ++i;
      out += kUserToken;
      continue;
    }
    if (auto m = emoji.match(raw, i)) {
      out += '[';
      out += m->name;
      out += ']';
      i += m->length;
      continue;
    }
    char32_t cp = 0;
    std::size_t len = decode_utf8(raw, i, cp);
    if (len == 0) len = 1;  // invalid byte: copy verbatim
    out.append(raw.substr(i, len));
    i += len;
  }
  return out;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = lower(c);
  return out;
}

std::vector<std::string> tokenize_lower(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space_byte(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space_byte(text[i])) ++i;
    if (i > start) tokens.push_back(ascii_lower(text.substr(start, i - start)));
  }
  return tokens;
}

}  // namespace pairtask
