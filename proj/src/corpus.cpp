#include "emoforge/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "emoforge/common.hpp"
#include "emoforge/textprep.hpp"

namespace emoforge::corpus {

namespace {

const std::array<std::string_view, kNumLabels> kLabelNames = {
    "anger", "sadness", "happiness", "disgust",
    "sarcastic", "fear", "surprise", "disappointed",
};

const std::array<std::string_view, 5> kSourceNames = {
    "facebook", "twitter", "news", "ecommerce", "other",
};

const std::array<std::string_view, 3> kSplitNames = {"train", "val", "test"};

bool ws_cp(uint32_t c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
           c == '\f' || c == 0x00A0 || c == 0x2028 || c == 0x2029 || c == 0x3000;
}

}  // namespace

std::string_view label_name(EmotionLabel label) {
    return kLabelNames[static_cast<int>(label)];
}

EmotionLabel parse_label(std::string_view name) {
    for (int i = 0; i < kNumLabels; ++i)
        if (kLabelNames[i] == name) return static_cast<EmotionLabel>(i);
    throw data_error("unknown label \"" + std::string(name) + "\"");
}

const std::array<EmotionLabel, kNumLabels>& all_labels() {
    static const std::array<EmotionLabel, kNumLabels> labels = [] {
        std::array<EmotionLabel, kNumLabels> a{};
        for (int i = 0; i < kNumLabels; ++i) a[i] = static_cast<EmotionLabel>(i);
        return a;
    }();
    return labels;
}

std::string_view source_name(Source source) {
    return kSourceNames[static_cast<int>(source)];
}

Source parse_source(std::string_view name) {
    for (size_t i = 0; i < kSourceNames.size(); ++i)
        if (kSourceNames[i] == name) return static_cast<Source>(i);
    throw data_error("unknown source \"" + std::string(name) + "\"");
}

std::string_view split_name(Split split) {
    return kSplitNames[static_cast<int>(split)];
}

Split parse_split(std::string_view name) {
    for (size_t i = 0; i < kSplitNames.size(); ++i)
        if (kSplitNames[i] == name) return static_cast<Split>(i);
    throw data_error("unknown split \"" + std::string(name) + "\"");
}

bool Sample::operator==(const Sample& other) const {
    return id == other.id && text == other.text && source == other.source &&
           votes == other.votes && label == other.label && split == other.split &&
           adjudicated == other.adjudicated && extras == other.extras;
}

const Sample* Corpus::find(std::string_view id) const {
    for (const auto& s : samples)
        if (s.id == id) return &s;
    return nullptr;
}

namespace {

Sample parse_sample_line(const std::string& line, size_t lineno, size_t* warnings) {
    nlohmann::ordered_json obj;
    try {
        obj = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw data_error("malformed line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!obj.is_object())
        throw data_error("malformed line " + std::to_string(lineno) +
                         ": record is not an object");

    const auto at_line = [&](const std::string& what) {
        return data_error(what + " at line " + std::to_string(lineno));
    };

    Sample s;
    if (!obj.contains("id") || !obj["id"].is_string() ||
        obj["id"].get<std::string>().empty())
        throw at_line("missing or invalid id");
    s.id = obj["id"].get<std::string>();

    if (!obj.contains("text") || !obj["text"].is_string())
        throw at_line("missing or invalid text");
    s.text = obj["text"].get<std::string>();

    if (!obj.contains("source") || !obj["source"].is_string())
        throw at_line("missing or invalid source");
    try {
        s.source = parse_source(obj["source"].get<std::string>());
    } catch (const Error&) {
        throw at_line("unknown source");
    }

    if (obj.contains("label") && !obj["label"].is_null()) {
        if (!obj["label"].is_string()) throw at_line("invalid label");
        try {
            s.label = parse_label(obj["label"].get<std::string>());
        } catch (const Error&) {
            throw at_line("unknown label");
        }
    }

    if (obj.contains("votes") && !obj["votes"].is_null()) {
        if (!obj["votes"].is_object()) throw at_line("invalid votes");
        for (const auto& [annotator, value] : obj["votes"].items()) {
            if (!value.is_string()) throw at_line("invalid vote value");
            try {
                s.votes[annotator] = parse_label(value.get<std::string>());
            } catch (const Error&) {
                throw at_line("unknown label");
            }
        }
    }

    if (obj.contains("split") && !obj["split"].is_null()) {
        if (!obj["split"].is_string()) throw at_line("invalid split");
        try {
            s.split = parse_split(obj["split"].get<std::string>());
        } catch (const Error&) {
            throw at_line("unknown split");
        }
    }

    if (obj.contains("adjudicated")) {
        if (!obj["adjudicated"].is_boolean()) throw at_line("invalid adjudicated flag");
        s.adjudicated = obj["adjudicated"].get<bool>();
    }

    static const std::set<std::string> known = {
        "id", "text", "source", "label", "votes", "split", "adjudicated"};
    for (const auto& [key, value] : obj.items()) {
        if (!known.count(key)) {
            s.extras[key] = value;
            ++*warnings;
        }
    }

    if (s.label && s.votes.size() >= kVoteQuorum && !s.adjudicated) {
        auto mv = majority_vote(s.votes);
        if (!mv || *mv != *s.label)
            throw at_line("label contradicts majority vote");
    }
    return s;
}

}  // namespace

Corpus load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open corpus file: " + path);
    Corpus c;
    std::set<std::string> ids;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        Sample s = parse_sample_line(line, lineno, &c.unknown_key_warnings);
        if (!ids.insert(s.id).second)
            throw data_error("duplicate id \"" + s.id + "\" at line " +
                             std::to_string(lineno));
        c.samples.push_back(std::move(s));
    }
    return c;
}

namespace {

nlohmann::ordered_json sample_to_json(const Sample& s) {
    nlohmann::ordered_json obj;
    obj["id"] = s.id;
    obj["text"] = s.text;
    obj["source"] = std::string(source_name(s.source));
    obj["label"] = s.label ? nlohmann::ordered_json(std::string(label_name(*s.label)))
                           : nlohmann::ordered_json(nullptr);
    if (!s.votes.empty()) {
        nlohmann::ordered_json votes = nlohmann::ordered_json::object();
        for (const auto& [annotator, vote] : s.votes)
            votes[annotator] = std::string(label_name(vote));
        obj["votes"] = votes;
    }
    obj["split"] = s.split ? nlohmann::ordered_json(std::string(split_name(*s.split)))
                           : nlohmann::ordered_json(nullptr);
    if (s.adjudicated) obj["adjudicated"] = true;
    for (const auto& [key, value] : s.extras.items()) obj[key] = value;
    return obj;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ostringstream out;
    for (const auto& s : corpus.samples) out << sample_to_json(s).dump() << '\n';
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot write corpus file: " + path);
    f << out.str();
    f.flush();
    if (!f) throw io_error("write failed: " + path);
}

std::optional<EmotionLabel> majority_vote(
    const std::map<std::string, EmotionLabel>& votes) {
    if (votes.empty()) throw data_error("majority_vote requires at least one vote");
    std::array<size_t, kNumLabels> counts{};
    for (const auto& [annotator, label] : votes) ++counts[static_cast<int>(label)];
    size_t best = 0;
    int best_label = -1;
    bool tied = false;
    for (int i = 0; i < kNumLabels; ++i) {
        if (counts[i] > best) {
            best = counts[i];
            best_label = i;
            tied = false;
        } else if (counts[i] == best && counts[i] > 0) {
            tied = true;
        }
    }
    if (tied || best_label < 0) return std::nullopt;
    return static_cast<EmotionLabel>(best_label);
}

Corpus record_vote(Corpus corpus, const std::string& sample_id,
                   const std::string& annotator, EmotionLabel vote) {
    for (auto& s : corpus.samples) {
        if (s.id != sample_id) continue;
        s.votes[annotator] = vote;
        if (!s.adjudicated && s.votes.size() >= kVoteQuorum)
            s.label = majority_vote(s.votes);
        return corpus;
    }
    throw data_error("unknown sample id \"" + sample_id + "\"");
}

Corpus adjudicate(Corpus corpus, const std::string& sample_id, EmotionLabel label,
                  bool lead_role) {
    if (!lead_role)
        throw usage_error("adjudication requires the lead annotator role");
    for (auto& s : corpus.samples) {
        if (s.id != sample_id) continue;
        s.label = label;
        s.adjudicated = true;
        return corpus;
    }
    throw data_error("unknown sample id \"" + sample_id + "\"");
}

Corpus stratified_split(Corpus corpus, const SplitSpec& spec) {
    const double ratios[3] = {spec.train, spec.val, spec.test};
    for (double r : ratios)
        if (!(r > 0.0 && r < 1.0))
            throw usage_error("split ratios must lie strictly between 0 and 1");
    if (std::fabs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9)
        throw usage_error("split ratios must sum to 1");

    std::array<std::vector<size_t>, kNumLabels> by_class;
    for (size_t i = 0; i < corpus.samples.size(); ++i) {
        const auto& s = corpus.samples[i];
        if (!s.label)
            throw data_error("unlabeled sample \"" + s.id + "\" cannot be split");
        by_class[static_cast<int>(*s.label)].push_back(i);
    }

    for (int k = 0; k < kNumLabels; ++k) {
        auto& group = by_class[k];
        if (group.empty()) continue;
        Rng rng(derive_seed(spec.seed, 0x5317u + static_cast<uint64_t>(k)));
        shuffle(group, rng);

        const size_t n = group.size();
        size_t counts[3];
        double rem[3];
        size_t assigned = 0;
        for (int j = 0; j < 3; ++j) {
            double exact = static_cast<double>(n) * ratios[j];
            counts[j] = static_cast<size_t>(std::floor(exact));
            rem[j] = exact - static_cast<double>(counts[j]);
            assigned += counts[j];
        }
        int order[3] = {0, 1, 2};
        std::stable_sort(order, order + 3,
                         [&](int a, int b) { return rem[a] > rem[b]; });
        for (size_t left = n - assigned, j = 0; left > 0; --left, ++j)
            ++counts[order[j]];

        size_t pos = 0;
        for (int j = 0; j < 3; ++j)
            for (size_t t = 0; t < counts[j]; ++t)
                corpus.samples[group[pos++]].split = static_cast<Split>(j);
    }
    return corpus;
}

CorpusStats corpus_stats(const Corpus& corpus) {
    CorpusStats st;
    st.sentences = corpus.samples.size();
    for (const auto& s : corpus.samples) {
        auto cps = textprep::utf8_decode(textprep::normalize(s.text));
        bool in_word = false;
        for (uint32_t c : cps) {
            if (ws_cp(c)) {
                in_word = false;
            } else if (!in_word) {
                in_word = true;
                ++st.words;
            }
        }
        if (s.label)
            ++st.per_class[static_cast<int>(*s.label)];
        else
            ++st.unlabeled;
    }
    return st;
}

}  // namespace emoforge::corpus
