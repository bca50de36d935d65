#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace emoforge::textprep {

// Decodes UTF-8 into code points. Invalid byte sequences become U+FFFD
// (one replacement per rejected byte) so cleaning never throws.
std::vector<uint32_t> utf8_decode(std::string_view text);
std::string utf8_encode(const std::vector<uint32_t>& cps);
void utf8_append(std::string& out, uint32_t cp);

// True if `text` is well-formed UTF-8 (shortest-form, no surrogates).
bool utf8_valid(std::string_view text);

// Canonical composition (NFC) restricted to the Bengali block: decomposes
// the two-part vowel signs and the nukta consonants, applies canonical
// ordering of combining marks, then recomposes the non-excluded pairs.
// Idempotent; identity outside the Bengali block.
std::string normalize(std::string_view text);

struct CleanConfig {
    bool strip_html = true;
    bool strip_urls = true;
    bool strip_digits = true;   // ASCII 0-9 and Bengali U+09E6..U+09EF
    bool strip_punct = true;
    std::set<uint32_t> combining_marks_to_strip;  // default: keep all marks
};

// Normalizes, then removes HTML tags, URL spans, digits and punctuation per
// the enabled flags, collapses whitespace runs to single spaces and trims.
// Idempotent. Never removes Bengali vowel signs unless they are listed in
// combining_marks_to_strip.
std::string clean_text(std::string_view raw, const CleanConfig& config = {});

struct EmojiMap {
    // emoji sequence (one or more code points) -> replacement word
    std::map<std::string, std::string> entries;

    static EmojiMap defaults();
    // Tab-separated file: emoji-sequence TAB replacement-word, one per line,
    // "#" starts a comment line. Throws on unreadable or malformed input.
    static EmojiMap load(const std::string& path);
};

// Replaces every mapped emoji sequence (longest match first) by its word,
// space-separated from its neighbours; maximal unmapped emoji runs collapse
// to a single space. Text without emoji passes through unchanged. Applied
// before clean_text so the replacement words survive punctuation stripping.
std::string map_emojis(std::string_view text, const EmojiMap& map);

struct StopWordList {
    std::set<std::string> words;  // normalized via normalize()

    static StopWordList defaults();
    // One token per line, "#" starts a comment. Throws on unreadable input.
    static StopWordList load(const std::string& path);

    bool contains(std::string_view token) const;
    void insert(std::string_view token);
};

using TokenSeq = std::vector<std::string>;

// Splits cleaned text into maximal runs of non-separator code points.
// Separators are whitespace plus anything the punctuation filter covers.
TokenSeq tokenize(std::string_view text);

TokenSeq remove_stopwords(const TokenSeq& tokens, const StopWordList& list);

// Full pipeline: map_emojis -> clean_text -> tokenize -> remove_stopwords.
TokenSeq preprocess(std::string_view raw, const CleanConfig& config,
                    const EmojiMap& emoji, const StopWordList& stopwords);

}  // namespace emoforge::textprep
