#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace emoforge::corpus {

enum class EmotionLabel : int {
    anger = 0,
    sadness = 1,
    happiness = 2,
    disgust = 3,
    sarcastic = 4,
    fear = 5,
    surprise = 6,
    disappointed = 7,
};

inline constexpr int kNumLabels = 8;

std::string_view label_name(EmotionLabel label);
EmotionLabel parse_label(std::string_view name);  // throws data error
const std::array<EmotionLabel, kNumLabels>& all_labels();

enum class Source { facebook, twitter, news, ecommerce, other };
std::string_view source_name(Source source);
Source parse_source(std::string_view name);  // throws data error

enum class Split { train, val, test };
std::string_view split_name(Split split);
Split parse_split(std::string_view name);  // throws data error

struct Sample {
    std::string id;
    std::string text;
    Source source = Source::other;
    std::map<std::string, EmotionLabel> votes;
    std::optional<EmotionLabel> label;
    std::optional<Split> split;
    bool adjudicated = false;
    // Unknown JSONL keys, preserved across load/save.
    nlohmann::ordered_json extras = nlohmann::ordered_json::object();

    bool operator==(const Sample& other) const;
};

struct Corpus {
    std::vector<Sample> samples;
    // Number of unknown-key occurrences seen by the last load; not persisted.
    size_t unknown_key_warnings = 0;

    bool operator==(const Corpus& other) const { return samples == other.samples; }
    const Sample* find(std::string_view id) const;
};

// JSON Lines, one object per line: id, text, source, label (string or null),
// votes (object, may be absent), split (string or null), adjudicated (bool,
// default false). Unknown keys are kept and counted as warnings. Errors name
// the offending line.
Corpus load_corpus(const std::string& path);
void save_corpus(const Corpus& corpus, const std::string& path);

// Strict majority over the vote multiset; nullopt on a tie. Throws on an
// empty vote map.
std::optional<EmotionLabel> majority_vote(
    const std::map<std::string, EmotionLabel>& votes);

// Minimum number of votes before a label is derived automatically.
inline constexpr size_t kVoteQuorum = 3;

// Records (or replaces) one annotator's vote. At quorum the label is
// recomputed from the votes; an adjudicated label is left alone.
Corpus record_vote(Corpus corpus, const std::string& sample_id,
                   const std::string& annotator, EmotionLabel vote);

// Lead-role override for tied votes; sets the label and the adjudicated flag.
Corpus adjudicate(Corpus corpus, const std::string& sample_id, EmotionLabel label,
                  bool lead_role);

struct SplitSpec {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;
    uint64_t seed = 0;
};

// Per-label seeded shuffle, then largest-remainder allocation across
// train/val/test (ties favour train, then val). Every sample must be
// labeled. Deterministic in (corpus order, seed).
Corpus stratified_split(Corpus corpus, const SplitSpec& spec);

struct CorpusStats {
    size_t sentences = 0;
    size_t words = 0;  // maximal non-whitespace runs after normalization
    std::array<size_t, kNumLabels> per_class{};
    size_t unlabeled = 0;
};

CorpusStats corpus_stats(const Corpus& corpus);

}  // namespace emoforge::corpus
