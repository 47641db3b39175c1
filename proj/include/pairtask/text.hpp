#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pairtask {

inline constexpr std::string_view kUrlToken = "[URL]";
inline constexpr std::string_view kUserToken = "[USER]";

/// Replaces URLs with `[URL]`, `@username` tokens with `[USER]` and emoji with
/// their bracketed lowercase name (e.g. `[grinning face]`). Idempotent.
///
/// A URL starts at `http://`, `https://` (case-insensitive) or `www.` and runs
/// to the next ASCII whitespace. A username is `@` followed by one or more
/// ASCII word characters `[A-Za-z0-9_]`. Emoji are matched longest-first
/// against the bundled table; unknown codepoints and invalid UTF-8 pass
/// through unchanged.
std::string normalize_text(std::string_view raw);

/// Bundled codepoint-sequence -> name table used by normalize_text.
class EmojiTable {
 public:
  struct Match {
    std::size_t length;  // bytes consumed
    std::string_view name;
  };

  static const EmojiTable& bundled();

  /// Parses the `HEX HEX...<TAB>name` format of data/emoji_names.tsv.
  static EmojiTable parse(std::string_view tsv);

  /// Longest table entry starting at byte offset `pos`, if any.
  std::optional<Match> match(std::string_view text, std::size_t pos) const;

  std::optional<std::string_view> lookup(std::string_view utf8_sequence) const;
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::pair<std::string, std::string>> names_;  // sorted by key
  std::vector<char32_t> first_codepoints_;                  // sorted, unique
  std::size_t max_codepoints_ = 0;
};

/// Decodes one UTF-8 codepoint at `pos`. Returns the byte length, or 0 for an
/// invalid/truncated sequence.
std::size_t decode_utf8(std::string_view s, std::size_t pos, char32_t& cp);

void append_utf8(std::string& out, char32_t cp);

/// Whitespace split + ASCII lowercase.
std::vector<std::string> tokenize_lower(std::string_view text);

std::string ascii_lower(std::string_view s);

}  // namespace pairtask
