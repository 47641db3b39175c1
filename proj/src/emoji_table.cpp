#include <algorithm>
#include <charconv>

#include "pairtask/error.hpp"
#include "pairtask/text.hpp"

namespace pairtask {

namespace detail {
extern const std::string_view kEmojiTableTsv;
}

std::size_t decode_utf8(std::string_view s, std::size_t pos, char32_t& cp) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
  const unsigned char b0 = byte(pos);
  std::size_t len = 0;
  char32_t value = 0;
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    value = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    value = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    value = b0 & 0x07;
  } else {
    return 0;
  }
  if (pos + len > s.size()) return 0;
  for (std::size_t i = 1; i < len; ++i) {
    const unsigned char b = byte(pos + i);
    if ((b & 0xC0) != 0x80) return 0;
    value = (value << 6) | (b & 0x3F);
  }
  // reject overlong forms and surrogates
  if ((len == 2 && value < 0x80) || (len == 3 && value < 0x800) || (len == 4 && value < 0x10000) ||
      value > 0x10FFFF || (value >= 0xD800 && value <= 0xDFFF))
    return 0;
  cp = value;
  return len;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

EmojiTable EmojiTable::parse(std::string_view tsv) {
  EmojiTable table;
  std::size_t line_no = 0;
  while (!tsv.empty()) {
    const std::size_t nl = tsv.find('\n');
    std::string_view line = tsv.substr(0, nl);
    tsv = nl == std::string_view::npos ? std::string_view{} : tsv.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos || tab + 1 >= line.size())
      throw DataError("emoji table line " + std::to_string(line_no) + ": expected '<codepoints>\\t<name>'");
    std::string_view cps = line.substr(0, tab);
    std::string key;
    std::size_t count = 0;
    while (!cps.empty()) {
      const std::size_t sp = cps.find(' ');
      const std::string_view hex = cps.substr(0, sp);
      std::uint32_t cp = 0;
      auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), cp, 16);
      if (ec != std::errc{} || ptr != hex.data() + hex.size())
        throw DataError("emoji table line " + std::to_string(line_no) + ": bad codepoint '" + std::string(hex) + "'");
      append_utf8(key, cp);
      ++count;
      cps = sp == std::string_view::npos ? std::string_view{} : cps.substr(sp + 1);
    }
    table.max_codepoints_ = std::max(table.max_codepoints_, count);
    char32_t first = 0;
    decode_utf8(key, 0, first);
    table.first_codepoints_.push_back(first);
    table.names_.emplace_back(std::move(key), std::string(line.substr(tab + 1)));
  }
  std::sort(table.names_.begin(), table.names_.end());
  auto& firsts = table.first_codepoints_;
  std::sort(firsts.begin(), firsts.end());
  firsts.erase(std::unique(firsts.begin(), firsts.end()), firsts.end());
  return table;
}

const EmojiTable& EmojiTable::bundled() {
  static const EmojiTable table = parse(detail::kEmojiTableTsv);
  return table;
}

std::optional<std::string_view> EmojiTable::lookup(std::string_view utf8_sequence) const {
  auto it = std::lower_bound(names_.begin(), names_.end(), utf8_sequence,
                             [](const auto& entry, std::string_view k) { return entry.first < k; });
  if (it == names_.end() || it->first != utf8_sequence) return std::nullopt;
  return std::string_view(it->second);
}

std::optional<EmojiTable::Match> EmojiTable::match(std::string_view text, std::size_t pos) const {
  char32_t first = 0;
  if (pos >= text.size() || decode_utf8(text, pos, first) == 0 ||
      !std::binary_search(first_codepoints_.begin(), first_codepoints_.end(), first))
    return std::nullopt;

  // byte offsets after 1..max_codepoints_ decoded codepoints
  std::size_t ends[16];
  std::size_t n = 0;
  std::size_t at = pos;
  const std::size_t limit = std::min<std::size_t>(max_codepoints_, std::size(ends));
  while (n < limit && at < text.size()) {
    char32_t cp = 0;
    const std::size_t len = decode_utf8(text, at, cp);
    if (len == 0) break;
    at += len;
    ends[n++] = at;
  }
  for (std::size_t k = n; k > 0; --k) {
    const std::size_t len = ends[k - 1] - pos;
    if (auto name = lookup(text.substr(pos, len))) return Match{len, *name};
  }
  return std::nullopt;
}

}  // namespace pairtask
