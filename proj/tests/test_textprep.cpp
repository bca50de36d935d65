#include "emoforge/textprep.hpp"

#include <set>
#include <string>
#include <vector>

#include "doctest.h"

using namespace emoforge::textprep;

namespace {

std::string join(const TokenSeq& toks) {
    std::string s;
    for (size_t i = 0; i < toks.size(); ++i) {
        if (i) s += ' ';
        s += toks[i];
    }
    return s;
}

std::set<uint32_t> cp_set(const std::string& s) {
    auto v = utf8_decode(s);
    return {v.begin(), v.end()};
}

}  // namespace

TEST_SUITE("textprep") {

TEST_CASE("utf8 round trip and validation") {
    std::string s = "ক খ abc ১৯";
    CHECK(utf8_encode(utf8_decode(s)) == s);
    CHECK(utf8_valid(s));
    CHECK(utf8_valid(""));
    CHECK_FALSE(utf8_valid("\xFF"));
    CHECK_FALSE(utf8_valid("\xE0\x80\x80"));       // overlong
    CHECK_FALSE(utf8_valid(std::string("\xC3", 1)));  // truncated
    // lenient decode: one replacement per rejected byte
    CHECK(utf8_decode("\xFF\xFE").size() == 2);
}

TEST_CASE("normalize composes and decomposes the Bengali block") {
    // precomposed O sign == decomposed E sign + AA sign
    CHECK(normalize("ো") == normalize("ো"));
    CHECK(utf8_decode(normalize("ো")) == std::vector<uint32_t>{0x09CB});
    CHECK(utf8_decode(normalize("ৌ")) == std::vector<uint32_t>{0x09CC});
    // ya+nukta is composition-excluded: precomposed form decomposes and stays so
    CHECK(utf8_decode(normalize("য়")) == std::vector<uint32_t>{0x09AF, 0x09BC});
    CHECK(utf8_decode(normalize("য়")) ==
          std::vector<uint32_t>{0x09AF, 0x09BC});
    CHECK(utf8_decode(normalize("ড়")) == std::vector<uint32_t>{0x09A1, 0x09BC});
    CHECK(utf8_decode(normalize("ঢ়")) == std::vector<uint32_t>{0x09A2, 0x09BC});
    // canonical ordering: virama(9) after nukta(7)
    CHECK(utf8_decode(normalize("ক়্")) ==
          std::vector<uint32_t>{0x0995, 0x09BC, 0x09CD});
    // idempotent, identity outside the block
    std::string mixed = "abc য় ো xyz";
    CHECK(normalize(normalize(mixed)) == normalize(mixed));
    CHECK(normalize("hello") == "hello");
}

TEST_CASE("clean_text removes html, urls, digits, punctuation") {
    CHECK(clean_text("দাম 500 টাকা! <b>ভাল</b> https://x.com") == "দাম টাকা ভাল");
    CHECK(clean_text("") == "");
    CHECK(clean_text("২০২৩ সাল") == "সাল");
    CHECK(clean_text("দেখুন www.example.com এখানে") == "দেখুন এখানে");
    CHECK(clean_text("ftp://a/b ক") == "ক");
    CHECK(clean_text("মূল্য:https://x.com/path?q=1") == "মূল্য");
    CHECK(clean_text("<<b>>ক") == "ক");
    CHECK(clean_text("ক<unclosed খ") == "ক unclosed খ");
    CHECK(clean_text("ভাল।খারাপ") == "ভাল খারাপ");
    CHECK(clean_text("৳১০০ মাত্র!!") == "মাত্র");
}

TEST_CASE("clean_text respects config flags") {
    CleanConfig keep_digits;
    keep_digits.strip_digits = false;
    CHECK(clean_text("ক 12 খ", keep_digits) == "ক 12 খ");

    CleanConfig keep_punct;
    keep_punct.strip_punct = false;
    CHECK(clean_text("ভাল!", keep_punct) == "ভাল!");

    CleanConfig keep_html;
    keep_html.strip_html = false;
    keep_html.strip_punct = false;
    CHECK(clean_text("<b>ক</b>", keep_html) == "<b>ক</b>");

    CleanConfig keep_urls;
    keep_urls.strip_urls = false;
    keep_urls.strip_punct = false;
    keep_urls.strip_digits = false;
    CHECK(clean_text("https://x.com", keep_urls) == "https://x.com");
}

TEST_CASE("clean_text combining mark stripping") {
    CleanConfig cfg;
    cfg.combining_marks_to_strip = {0x09BC};
    // ya + nukta loses the nukta
    CHECK(utf8_decode(clean_text("য়", cfg)) == std::vector<uint32_t>{0x09AF});
    // stripping between E sign and AA sign lets them recompose
    CHECK(utf8_decode(clean_text("কে়া", cfg)) ==
          std::vector<uint32_t>{0x0995, 0x09CB});
    // default config keeps matras intact
    CHECK(clean_text("ভালো") == "ভালো");
    CHECK(clean_text("খেয়েছি") == normalize("খেয়েছি"));
}

TEST_CASE("clean_text is idempotent") {
    std::vector<std::string> inputs = {
        "দাম 500 টাকা! <b>ভাল</b> https://x.com",
        "",
        "  ক   খ ",
        "ভাল। খারাপ… <i>x</i> www.y.z ১২৩",
        "ো5ৌ",
        "a<b<c>d>e",
    };
    for (const auto& s : inputs) {
        std::string once = clean_text(s);
        CHECK(clean_text(once) == once);
    }
}

TEST_CASE("clean_text introduces no content code points") {
    std::vector<std::string> inputs = {
        "দাম 500 টাকা! <b>ভাল</b> https://x.com",
        "ভাল। খারাপ ১২৩ 😊",
        "ক‍খ গ",
    };
    for (const auto& s : inputs) {
        auto allowed = cp_set(normalize(s));
        allowed.insert(' ');
        for (uint32_t c : utf8_decode(clean_text(s))) CHECK(allowed.count(c) == 1);
    }
}

TEST_CASE("map_emojis applies the default mappings") {
    EmojiMap m = EmojiMap::defaults();
    CHECK(map_emojis("😊", m) == normalize("আনন্দময়"));
    CHECK(map_emojis("🙏", m) == normalize("কৃতজ্ঞতা"));
    CHECK(map_emojis("ভাল লাগল", m) == "ভাল লাগল");  // no emoji: unchanged
    CHECK(map_emojis("", m) == "");
}

TEST_CASE("map_emojis spacing, runs and longest match") {
    EmojiMap m = EmojiMap::defaults();
    CHECK(clean_text(map_emojis("ভাল😊", m)) == "ভাল " + normalize("আনন্দময়"));
    CHECK(clean_text(map_emojis("😊ভাল", m)) == normalize("আনন্দময়") + " ভাল");
    // unmapped emoji collapse to a space
    CHECK(clean_text(map_emojis("ভাল🦑🦑 কথা", m)) == "ভাল কথা");
    // mapped sequence inside a run still found
    CHECK(clean_text(map_emojis("🦑😊", m)) == normalize("আনন্দময়"));

    EmojiMap two;
    two.entries["❤"] = "ক";
    two.entries["❤️"] = "খ";  // heart + variation selector
    CHECK(map_emojis("❤️", two) == "খ");
    CHECK(map_emojis("❤", two) == "ক");

    EmojiMap empty_map;
    CHECK(map_emojis("ভাল😊", empty_map) == "ভাল ");
}

TEST_CASE("tokenize splits on whitespace and residual punctuation") {
    CHECK(tokenize("আমি ভাল") == TokenSeq{"আমি", "ভাল"});
    CHECK(tokenize("") == TokenSeq{});
    CHECK(tokenize("  ক   খ ") == TokenSeq{"ক", "খ"});
    CHECK(tokenize("ক,খ;গ") == TokenSeq{"ক", "খ", "গ"});
    for (const auto& t : tokenize(" ক খ।গ 12 ")) {
        CHECK_FALSE(t.empty());
        CHECK(t.find(' ') == std::string::npos);
    }
}

TEST_CASE("stop word removal") {
    StopWordList sw = StopWordList::defaults();
    CHECK(remove_stopwords({"এই", "বই", "ভাল"}, sw) == TokenSeq{"বই", "ভাল"});
    CHECK(remove_stopwords({}, sw) == TokenSeq{});
    StopWordList empty;
    CHECK(remove_stopwords({"এই", "বই"}, empty) == TokenSeq{"এই", "বই"});
    // survivors keep their order
    TokenSeq in = {"ভাল", "এবং", "খারাপ", "বা", "মন্দ"};
    CHECK(remove_stopwords(in, sw) == TokenSeq{"ভাল", "খারাপ", "মন্দ"});
}

TEST_CASE("default stop word list covers the published table") {
    StopWordList sw = StopWordList::defaults();
    CHECK(sw.words.size() == 43);  // 46 entries, three repeats
    const char* const table[] = {
        "এ", "যায়", "এর", "হয়", "িক", "বা", "যাক", "য", "ক", "সব", "উপর",
        "হেব", "এই", "একই", "তাকে", "আগ", "কখন", "আছে", "তাই", "স", "সই",
        "তার", "যি", "অধীন", "কর", "িছিল", "আমি", "এবং", "তারা", "কার",
        "এটি", "গুলি", "হেতু", "সেটা", "আরও", "খুব", "পের", "কোন", "কেন",
        "সকল", "ঠিক", "যারা", "তুমি",
    };
    for (const char* w : table) CHECK(sw.contains(w));
    CHECK_FALSE(sw.contains("বই"));
    // membership is normalization-insensitive
    CHECK(sw.contains(normalize("হয়")));
}

TEST_CASE("list and map file loaders match the shipped defaults") {
    std::string root = EMOFORGE_SOURCE_DIR;
    StopWordList from_file = StopWordList::load(root + "/data/stopwords_bn.txt");
    CHECK(from_file.words == StopWordList::defaults().words);
    EmojiMap from_tsv = EmojiMap::load(root + "/data/emoji_map_bn.tsv");
    CHECK(from_tsv.entries == EmojiMap::defaults().entries);
    CHECK_THROWS(StopWordList::load(root + "/data/no_such_file.txt"));
}

TEST_CASE("full pipeline composes and is idempotent") {
    CleanConfig cfg;
    EmojiMap em = EmojiMap::defaults();
    StopWordList sw = StopWordList::defaults();
    TokenSeq toks = preprocess("এই বইটা 😊 দারুণ! <b>পড়ুন</b> www.shop.com", cfg, em, sw);
    CHECK(toks == TokenSeq{"বইটা", normalize("আনন্দময়"), "দারুণ", normalize("পড়ুন")});
    TokenSeq again = preprocess(join(toks), cfg, em, sw);
    CHECK(again == toks);
}

}  // TEST_SUITE
