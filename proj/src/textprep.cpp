#include "emoforge/textprep.hpp"

#include <algorithm>
#include <fstream>

#include "emoforge/common.hpp"

namespace emoforge::textprep {

namespace {

constexpr uint32_t kReplacement = 0xFFFD;

bool is_ascii_ws(uint32_t c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_space(uint32_t c) {
    return is_ascii_ws(c) || c == 0x00A0 || c == 0x2028 || c == 0x2029 || c == 0x3000;
}

// Invisible formatting characters removed without leaving a space.
bool is_zero_width(uint32_t c) {
    return (c >= 0x200B && c <= 0x200F) || c == 0x2060 || c == 0xFEFF ||
           (c >= 0xFE00 && c <= 0xFE0F);
}

bool is_digit_cp(uint32_t c) {
    return (c >= '0' && c <= '9') || (c >= 0x09E6 && c <= 0x09EF);
}

bool is_punct_cp(uint32_t c) {
    if (c < 0x80) {
        if (is_ascii_ws(c)) return false;
        if (c >= '0' && c <= '9') return false;
        if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z')) return false;
        return true;  // remaining ASCII: punctuation and stray controls
    }
    if (c >= 0x00A1 && c <= 0x00BF) return true;       // Latin-1 punctuation and signs
    if (c >= 0x2000 && c <= 0x206F) return true;       // general punctuation
    if (c == 0x0964 || c == 0x0965) return true;       // danda, double danda
    if (c >= 0x09F2 && c <= 0x09FB) return true;       // Bengali currency and marks
    if (c >= 0x20D0 && c <= 0x20FF) return true;       // symbol diacritics (keycap etc.)
    return false;
}

bool is_separator(uint32_t c) {
    return is_space(c) || is_zero_width(c) || is_punct_cp(c) || is_digit_cp(c);
}

// Bengali-block canonical combining classes.
int ccc(uint32_t c) {
    switch (c) {
        case 0x09BC: return 7;    // nukta
        case 0x09CD: return 9;    // virama
        case 0x09FE: return 230;  // sandhi mark
        default: return 0;
    }
}

bool is_emoji_base(uint32_t c) {
    return (c >= 0x1F000 && c <= 0x1FAFF) ||  // pictographs, emoticons, transport, ...
           (c >= 0x2600 && c <= 0x27BF) ||    // misc symbols, dingbats
           (c >= 0x2B00 && c <= 0x2BFF) ||    // arrows, stars
           (c >= 0x2300 && c <= 0x23FF);      // misc technical (watch, hourglass, ...)
}

// Characters that extend an emoji run but do not form one on their own.
bool is_emoji_extend(uint32_t c) {
    return c == 0x200D || c == 0x20E3 || (c >= 0xFE0E && c <= 0xFE0F);
}

std::string strip_html_tags(const std::string& text) {
    std::string cur = text;
    for (;;) {
        std::string next;
        next.reserve(cur.size());
        bool changed = false;
        size_t i = 0;
        while (i < cur.size()) {
            if (cur[i] == '<') {
                size_t j = i + 1;
                while (j < cur.size() && cur[j] != '<' && cur[j] != '>') ++j;
                if (j < cur.size() && cur[j] == '>') {
                    next += ' ';
                    i = j + 1;
                    changed = true;
                    continue;
                }
            }
            next += cur[i++];
        }
        if (!changed) return next;
        cur = std::move(next);
    }
}

bool starts_with_at(const std::vector<uint32_t>& cps, size_t pos, std::string_view ascii) {
    if (pos + ascii.size() > cps.size()) return false;
    for (size_t k = 0; k < ascii.size(); ++k) {
        uint32_t c = cps[pos + k];
        if (c >= 'A' && c <= 'Z') c += 32;
        if (c != static_cast<uint32_t>(static_cast<unsigned char>(ascii[k]))) return false;
    }
    return true;
}

// Removes scheme-prefixed spans anywhere and "www."-prefixed spans at token
// starts; a span runs to the next whitespace.
std::vector<uint32_t> strip_url_spans(const std::vector<uint32_t>& cps) {
    std::vector<uint32_t> out;
    out.reserve(cps.size());
    size_t i = 0;
    bool at_token_start = true;
    while (i < cps.size()) {
        bool hit = starts_with_at(cps, i, "http://") || starts_with_at(cps, i, "https://") ||
                   starts_with_at(cps, i, "ftp://") ||
                   (at_token_start && starts_with_at(cps, i, "www."));
        if (hit) {
            while (i < cps.size() && !is_space(cps[i])) ++i;
            out.push_back(' ');
            at_token_start = true;
            continue;
        }
        at_token_start = is_space(cps[i]);
        out.push_back(cps[i]);
        ++i;
    }
    return out;
}

const char* const kDefaultStopWords[] = {
    // Deduplicated published list; the source table repeats three entries.
    "এ", "যায়", "এর", "হয়", "িক", "বা", "যাক", "য", "ক", "সব", "উপর",
    "হেব", "এই", "একই", "তাকে", "আগ", "কখন", "আছে", "তাই", "স", "সই",
    "তার", "যি", "অধীন", "কর", "িছিল", "আমি", "এবং", "তারা", "কার",
    "এটি", "গুলি", "হেতু", "সেটা", "আরও", "খুব", "পের", "কোন", "কেন",
    "সকল", "ঠিক", "যারা", "তুমি",
};

}  // namespace

std::vector<uint32_t> utf8_decode(std::string_view text) {
    std::vector<uint32_t> cps;
    cps.reserve(text.size());
    size_t i = 0;
    const auto byte = [&](size_t k) { return static_cast<unsigned char>(text[k]); };
    while (i < text.size()) {
        unsigned char b0 = byte(i);
        if (b0 < 0x80) {
            cps.push_back(b0);
            ++i;
            continue;
        }
        int len = 0;
        uint32_t cp = 0;
        if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
        else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
        else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
        else { cps.push_back(kReplacement); ++i; continue; }
        if (i + len > text.size()) { cps.push_back(kReplacement); ++i; continue; }
        bool ok = true;
        for (int k = 1; k < len; ++k) {
            unsigned char b = byte(i + k);
            if ((b & 0xC0) != 0x80) { ok = false; break; }
            cp = (cp << 6) | (b & 0x3F);
        }
        if (!ok) { cps.push_back(kReplacement); ++i; continue; }
        bool shortest = (len == 2 && cp >= 0x80) || (len == 3 && cp >= 0x800) ||
                        (len == 4 && cp >= 0x10000);
        if (!shortest || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            cps.push_back(kReplacement);
            ++i;
            continue;
        }
        cps.push_back(cp);
        i += len;
    }
    return cps;
}

void utf8_append(std::string& out, uint32_t cp) {
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

std::string utf8_encode(const std::vector<uint32_t>& cps) {
    std::string out;
    out.reserve(cps.size() * 3);
    for (uint32_t cp : cps) utf8_append(out, cp);
    return out;
}

bool utf8_valid(std::string_view text) {
    auto cps = utf8_decode(text);
    for (uint32_t cp : cps)
        if (cp == kReplacement) return false;
    // U+FFFD may appear literally; re-encode round trip settles it.
    return utf8_encode(cps) == text;
}

std::string normalize(std::string_view text) {
    std::vector<uint32_t> in = utf8_decode(text);
    std::vector<uint32_t> d;
    d.reserve(in.size() + 4);
    for (uint32_t c : in) {
        switch (c) {
            case 0x09CB: d.push_back(0x09C7); d.push_back(0x09BE); break;
            case 0x09CC: d.push_back(0x09C7); d.push_back(0x09D7); break;
            case 0x09DC: d.push_back(0x09A1); d.push_back(0x09BC); break;
            case 0x09DD: d.push_back(0x09A2); d.push_back(0x09BC); break;
            case 0x09DF: d.push_back(0x09AF); d.push_back(0x09BC); break;
            default: d.push_back(c);
        }
    }
    // Canonical ordering: stable-sort consecutive marks by combining class.
    for (size_t i = 1; i < d.size(); ++i) {
        if (ccc(d[i]) == 0) continue;
        size_t j = i;
        while (j > 0 && ccc(d[j - 1]) > ccc(d[j])) {
            std::swap(d[j - 1], d[j]);
            --j;
        }
    }
    // Recompose the two non-excluded pairs (ra/rha/ya + nukta stay apart).
    std::vector<uint32_t> out;
    out.reserve(d.size());
    for (uint32_t c : d) {
        if (!out.empty() && out.back() == 0x09C7 && c == 0x09BE) {
            out.back() = 0x09CB;
        } else if (!out.empty() && out.back() == 0x09C7 && c == 0x09D7) {
            out.back() = 0x09CC;
        } else {
            out.push_back(c);
        }
    }
    return utf8_encode(out);
}

std::string clean_text(std::string_view raw, const CleanConfig& config) {
    std::string text = normalize(raw);
    if (config.strip_html) text = strip_html_tags(text);
    std::vector<uint32_t> cps = utf8_decode(text);
    if (config.strip_urls) cps = strip_url_spans(cps);

    std::vector<uint32_t> kept;
    kept.reserve(cps.size());
    for (uint32_t c : cps) {
        if (config.combining_marks_to_strip.count(c)) continue;
        if (config.strip_punct && is_zero_width(c)) continue;
        if (config.strip_digits && is_digit_cp(c)) { kept.push_back(' '); continue; }
        if (config.strip_punct && is_punct_cp(c)) { kept.push_back(' '); continue; }
        kept.push_back(c);
    }

    std::vector<uint32_t> collapsed;
    collapsed.reserve(kept.size());
    for (uint32_t c : kept) {
        if (is_space(c)) {
            if (!collapsed.empty() && collapsed.back() != ' ') collapsed.push_back(' ');
        } else {
            collapsed.push_back(c);
        }
    }
    if (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
    return normalize(utf8_encode(collapsed));
}

EmojiMap EmojiMap::defaults() {
    EmojiMap m;
    m.entries = {
        {"😊", "আনন্দময়"},
        {"🙏", "কৃতজ্ঞতা"},
        {"😀", "হাসি"},
        {"😂", "হাসি"},
        {"🤣", "হাসি"},
        {"😢", "কান্না"},
        {"😭", "কান্না"},
        {"😡", "রাগ"},
        {"😠", "রাগ"},
        {"😍", "মুগ্ধ"},
        {"❤", "ভালোবাসা"},
        {"❤️", "ভালোবাসা"},
        {"😱", "আতঙ্ক"},
        {"😨", "ভয়"},
        {"😮", "বিস্ময়"},
        {"😲", "বিস্ময়"},
        {"😞", "হতাশ"},
        {"😔", "হতাশ"},
        {"🤢", "ঘৃণা"},
        {"👍", "প্রশংসা"},
    };
    for (auto& [k, v] : m.entries) v = normalize(v);
    return m;
}

EmojiMap EmojiMap::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open emoji map: " + path);
    EmojiMap m;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
            throw data_error("malformed emoji map line " + std::to_string(lineno) +
                             " in " + path);
        m.entries[line.substr(0, tab)] = normalize(line.substr(tab + 1));
    }
    return m;
}

std::string map_emojis(std::string_view text, const EmojiMap& map) {
    std::vector<uint32_t> cps = utf8_decode(text);
    // Map keys as code point sequences, longest first.
    std::vector<std::pair<std::vector<uint32_t>, const std::string*>> keys;
    keys.reserve(map.entries.size());
    for (const auto& [k, v] : map.entries) keys.emplace_back(utf8_decode(k), &v);
    std::stable_sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
        return a.first.size() > b.first.size();
    });

    std::string out;
    out.reserve(text.size());
    const auto emit_word = [&](const std::string& word, size_t next) {
        if (!out.empty() && out.back() != ' ') out += ' ';
        out += word;
        if (next < cps.size() && !is_space(cps[next])) out += ' ';
    };

    size_t i = 0;
    while (i < cps.size()) {
        const std::string* word = nullptr;
        size_t match_len = 0;
        for (const auto& [kcps, v] : keys) {
            if (kcps.empty() || i + kcps.size() > cps.size()) continue;
            if (std::equal(kcps.begin(), kcps.end(), cps.begin() + i)) {
                word = v;
                match_len = kcps.size();
                break;
            }
        }
        if (word) {
            emit_word(*word, i + match_len);
            i += match_len;
            continue;
        }
        if (is_emoji_base(cps[i])) {
            // Consume the unmapped run, but stop where a mapped sequence begins.
            size_t j = i + 1;
            while (j < cps.size() && (is_emoji_base(cps[j]) || is_emoji_extend(cps[j]))) {
                bool mapped_here = false;
                for (const auto& kv : keys) {
                    const auto& kcps = kv.first;
                    if (!kcps.empty() && j + kcps.size() <= cps.size() &&
                        std::equal(kcps.begin(), kcps.end(), cps.begin() + j)) {
                        mapped_here = true;
                        break;
                    }
                }
                if (mapped_here) break;
                ++j;
            }
            out += ' ';
            i = j;
            continue;
        }
        utf8_append(out, cps[i]);
        ++i;
    }
    return out;
}

StopWordList StopWordList::defaults() {
    StopWordList list;
    for (const char* w : kDefaultStopWords) list.insert(w);
    return list;
}

StopWordList StopWordList::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open stop-word list: " + path);
    StopWordList list;
    std::string line;
    while (std::getline(in, line)) {
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        size_t b = line.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) continue;
        size_t e = line.find_last_not_of(" \t\r\n");
        list.insert(line.substr(b, e - b + 1));
    }
    return list;
}

bool StopWordList::contains(std::string_view token) const {
    return words.count(normalize(token)) > 0;
}

void StopWordList::insert(std::string_view token) {
    words.insert(normalize(token));
}

TokenSeq tokenize(std::string_view text) {
    std::vector<uint32_t> cps = utf8_decode(text);
    TokenSeq tokens;
    std::string cur;
    for (uint32_t c : cps) {
        if (is_separator(c)) {
            if (!cur.empty()) tokens.push_back(std::move(cur));
            cur.clear();
        } else {
            utf8_append(cur, c);
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

TokenSeq remove_stopwords(const TokenSeq& tokens, const StopWordList& list) {
    TokenSeq out;
    out.reserve(tokens.size());
    for (const auto& t : tokens)
        if (!list.contains(t)) out.push_back(t);
    return out;
}

TokenSeq preprocess(std::string_view raw, const CleanConfig& config,
                    const EmojiMap& emoji, const StopWordList& stopwords) {
    std::string mapped = map_emojis(raw, emoji);
    std::string cleaned = clean_text(mapped, config);
    return remove_stopwords(tokenize(cleaned), stopwords);
}

}  // namespace emoforge::textprep
