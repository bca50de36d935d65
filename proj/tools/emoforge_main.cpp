#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "emoforge/pipeline.hpp"

namespace {

using namespace emoforge;
using evalkit::FeatureKind;
using evalkit::GridParams;
using evalkit::GridSpec;
using evalkit::ModelKind;
using nlohmann::ordered_json;
using textprep::TokenSeq;

constexpr const char* kToolVersion = "0.1.0";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    std::ostringstream body;
    body << in.rdbuf();
    if (in.bad()) throw io_error("cannot read " + path);
    return body.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw io_error("cannot write " + path);
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

std::string file_digest(const std::string& path) { return hex64(fnv1a64(read_file(path))); }

ordered_json load_json(const std::string& path, const char* what) {
    const std::string text = read_file(path);
    try {
        return ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string(what) + " " + path + ": " + e.what());
    }
}

// CLI runs default to pinned timings so reruns are byte-identical; a config
// file or the grid --wall-clock flag opts back into real measurements.
GridParams load_params(const std::string& config_path) {
    GridParams p;
    p.wall_clock = false;
    if (config_path.empty()) return p;
    const auto j = load_json(config_path, "config file");
    p = evalkit::params_from_json(j);
    if (!j.contains("wall_clock")) p.wall_clock = false;
    return p;
}

std::string iso_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string join_tokens(const TokenSeq& tokens) {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::string trimmed(const std::string& line) {
    const auto a = line.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = line.find_last_not_of(" \t\r\n");
    return line.substr(a, b - a + 1);
}

// Seeded subcommands record a null timestamp so their outputs stay
// byte-identical across reruns.
ordered_json run_manifest(const char* subcommand,
                          const std::vector<std::pair<std::string, std::string>>& inputs,
                          bool stamp) {
    ordered_json j;
    j["tool"] = "emoforge";
    j["version"] = kToolVersion;
    j["subcommand"] = subcommand;
    auto in = ordered_json::object();
    for (const auto& [name, path] : inputs)
        in[name] = {{"path", path}, {"digest", file_digest(path)}};
    j["inputs"] = std::move(in);
    j["timestamp"] = stamp ? ordered_json(iso_timestamp()) : ordered_json();
    return j;
}

textprep::StopWordList stopwords_from(const std::string& path) {
    return path.empty() ? textprep::StopWordList::defaults() : textprep::StopWordList::load(path);
}

textprep::EmojiMap emoji_from(const std::string& path) {
    return path.empty() ? textprep::EmojiMap::defaults() : textprep::EmojiMap::load(path);
}

std::string label_menu() {
    std::string out;
    for (auto l : corpus::all_labels()) {
        if (!out.empty()) out += ", ";
        out += corpus::label_name(l);
    }
    return out;
}

void print_stats(const corpus::Corpus& c) {
    const auto st = corpus::corpus_stats(c);
    std::cout << "samples " << st.sentences << ", words " << st.words << ", unlabeled "
              << st.unlabeled << "\n";
    for (auto l : corpus::all_labels()) {
        const size_t n = st.per_class[static_cast<size_t>(l)];
        if (n) std::cout << "  " << corpus::label_name(l) << ": " << n << "\n";
    }
    if (c.unknown_key_warnings)
        std::cout << "warning: " << c.unknown_key_warnings
                  << " unknown key occurrence(s) preserved\n";
}

struct IngestArgs {
    std::string input, output;
};

void cmd_ingest(const IngestArgs& a) {
    const auto c = corpus::load_corpus(a.input);
    print_stats(c);
    if (!a.output.empty()) {
        corpus::save_corpus(c, a.output);
        std::cout << "wrote " << a.output << "\n";
    }
}

struct AnnotateArgs {
    std::string corpus, annotator, output;
    bool lead = false;
};

void cmd_annotate(const AnnotateArgs& a) {
    if (!a.lead && a.annotator.empty())
        throw usage_error("annotate needs --annotator unless --lead is given");
    const std::string out_path = a.output.empty() ? a.corpus : a.output;
    auto c = corpus::load_corpus(a.corpus);

    std::vector<std::string> ids;
    for (const auto& s : c.samples) {
        if (s.label) continue;
        if (a.lead && s.votes.size() < corpus::kVoteQuorum) continue;
        ids.push_back(s.id);
    }

    const std::string menu = label_menu();
    size_t applied = 0;
    bool stopped = false;
    for (const auto& id : ids) {
        if (stopped) break;
        const corpus::Sample* s = c.find(id);
        if (!s) continue;
        std::cout << s->id << " [" << s->votes.size() << " vote(s)]: " << s->text << "\n";
        for (;;) {
            std::cout << "label (" << menu << "), skip or stop: " << std::flush;
            std::string line;
            if (!std::getline(std::cin, line)) {
                stopped = true;
                break;
            }
            line = trimmed(line);
            if (line == "stop") {
                stopped = true;
                break;
            }
            if (line == "skip") break;
            try {
                const auto label = corpus::parse_label(line);
                c = a.lead ? corpus::adjudicate(std::move(c), id, label, true)
                           : corpus::record_vote(std::move(c), id, a.annotator, label);
                ++applied;
            } catch (const Error& e) {
                std::cout << e.what() << "\n";
                continue;
            }
            break;
        }
    }

    corpus::save_corpus(c, out_path);
    size_t labeled = 0;
    for (const auto& s : c.samples) labeled += s.label.has_value();
    std::cout << (a.lead ? "adjudicated " : "recorded ") << applied
              << (a.lead ? " label(s)" : " vote(s)") << "; " << labeled << " of "
              << c.samples.size() << " samples labeled\n";
    std::cout << "wrote " << out_path << "\n";
}

struct PreprocessArgs {
    std::string corpus, stopwords, emoji, output;
};

void cmd_preprocess(const PreprocessArgs& a) {
    const auto stop = stopwords_from(a.stopwords);
    const auto emoji = emoji_from(a.emoji);
    auto c = corpus::load_corpus(a.corpus);
    size_t tokens = 0;
    for (auto& s : c.samples) {
        const TokenSeq toks = textprep::preprocess(s.text, {}, emoji, stop);
        tokens += toks.size();
        s.text = join_tokens(toks);
    }
    corpus::save_corpus(c, a.output);
    std::cout << "preprocessed " << c.samples.size() << " samples (" << tokens
              << " tokens), wrote " << a.output << "\n";
}

struct SplitArgs {
    std::string corpus, ratios = "0.70,0.15,0.15", output;
    uint64_t seed = 0;
};

void cmd_split(const SplitArgs& a) {
    const auto parts = split_list(a.ratios);
    if (parts.size() != 3)
        throw usage_error("--ratios needs three comma-separated numbers");
    corpus::SplitSpec spec;
    try {
        spec.train = std::stod(parts[0]);
        spec.val = std::stod(parts[1]);
        spec.test = std::stod(parts[2]);
    } catch (const std::exception&) {
        throw usage_error("--ratios needs three comma-separated numbers");
    }
    spec.seed = a.seed;
    auto c = corpus::stratified_split(corpus::load_corpus(a.corpus), spec);
    corpus::save_corpus(c, a.output);
    size_t tr = 0, va = 0, te = 0;
    for (const auto& s : c.samples) {
        tr += s.split == corpus::Split::train;
        va += s.split == corpus::Split::val;
        te += s.split == corpus::Split::test;
    }
    std::cout << "split " << c.samples.size() << " samples: train " << tr << ", val " << va
              << ", test " << te << ", wrote " << a.output << "\n";
}

pipeline::TrainData gather_train_data(const corpus::Corpus& c) {
    pipeline::TrainData d;
    for (const auto& s : c.samples) {
        if (!s.label || !s.split) continue;
        const int y = static_cast<int>(*s.label);
        if (*s.split == corpus::Split::train) {
            d.train_docs.push_back(textprep::tokenize(s.text));
            d.train_y.push_back(y);
        } else if (*s.split == corpus::Split::val) {
            d.val_docs.push_back(textprep::tokenize(s.text));
            d.val_y.push_back(y);
        }
    }
    if (d.train_docs.empty())
        throw data_error("corpus has no labeled train-split samples (run split first)");
    return d;
}

struct TrainArgs {
    std::string corpus, features, model, config, out;
    bool balance = false;
    uint64_t seed = 0;
};

void cmd_train(const TrainArgs& a) {
    const FeatureKind f = evalkit::parse_feature(a.features);
    const ModelKind m = evalkit::parse_model(a.model);
    const auto c = corpus::load_corpus(a.corpus);
    const auto d = gather_train_data(c);
    const GridParams p = load_params(a.config);
    auto pl = pipeline::fit_pipeline(f, m, a.balance, d, p, a.seed);
    pl.manifest["run"] = run_manifest("train", {{"corpus", a.corpus}}, false);
    const auto artifact = pl.to_json();
    write_file(a.out, artifact.dump(2) + "\n");
    std::cout << "trained " << a.features << "-" << a.model << " on " << d.train_docs.size()
              << " samples (manifest " << artifact.at("manifest_hash").get<std::string>()
              << "), wrote " << a.out << "\n";
}

struct EvaluateArgs {
    std::string model, corpus, report;
};

void cmd_evaluate(const EvaluateArgs& a) {
    auto pl = pipeline::Pipeline::from_json(load_json(a.model, "model file"));
    const auto c = corpus::load_corpus(a.corpus);
    bool any_test = false;
    for (const auto& s : c.samples) any_test = any_test || s.split == corpus::Split::test;
    std::vector<int> y_true, y_pred;
    for (const auto& s : c.samples) {
        if (!s.label) continue;
        if (any_test && s.split != corpus::Split::test) continue;
        y_true.push_back(static_cast<int>(*s.label));
        y_pred.push_back(pl.predict(textprep::tokenize(s.text)));
    }
    if (y_true.empty()) throw data_error("no labeled samples to evaluate");
    const auto cm = evalkit::confusion_matrix(y_true, y_pred, pl.classes);
    const auto mr = evalkit::metrics_from_confusion(cm);

    ordered_json r;
    r["type"] = "evaluation_report";
    r["tool"] = "emoforge";
    r["version"] = kToolVersion;
    r["model"] = {{"path", a.model},
                  {"digest", file_digest(a.model)},
                  {"feature", evalkit::feature_name(pl.feature)},
                  {"kind", evalkit::model_name(pl.model)}};
    r["corpus"] = {{"path", a.corpus}, {"digest", file_digest(a.corpus)}};
    r["split"] = any_test ? "test" : "all";
    r["samples"] = y_true.size();
    r["averaging"] = mr.averaging;
    r["metrics"] = mr.to_json();
    r["confusion"] = cm.to_json();
    r["timestamp"] = iso_timestamp();
    write_file(a.report, r.dump(2) + "\n");

    char line[160];
    std::snprintf(line, sizeof line,
                  "evaluated %zu samples: accuracy %.4f, macro f1 %.4f\n", y_true.size(),
                  mr.accuracy, mr.macro_f1);
    std::cout << line << "wrote " << a.report << "\n";
}

struct GridArgs {
    std::string corpus, features, models, config, out, json;
    bool balance = false, study = false, wall_clock = false;
    uint64_t seed = 0;
};

void cmd_grid(const GridArgs& a) {
    GridSpec spec;
    if (a.features.empty())
        spec.features.assign(evalkit::all_features().begin(), evalkit::all_features().end());
    else
        for (const auto& name : split_list(a.features))
            spec.features.push_back(evalkit::parse_feature(name));
    if (a.models.empty())
        spec.models.assign(evalkit::all_models().begin(), evalkit::all_models().end());
    else
        for (const auto& name : split_list(a.models))
            spec.models.push_back(evalkit::parse_model(name));
    spec.seed = a.seed;
    spec.balance = a.balance;
    GridParams p = load_params(a.config);
    if (a.wall_clock) p.wall_clock = true;
    const auto c = corpus::load_corpus(a.corpus);

    if (a.study) {
        const auto r = evalkit::balancing_report(c, spec, p);
        write_file(a.out, r.to_csv());
        if (!a.json.empty()) write_file(a.json, r.to_json().dump(2) + "\n");
        size_t improved = 0, ok = 0;
        for (const auto& d : r.deltas) {
            ok += d.ok;
            improved += d.ok && d.d_f1 > 0.0;
        }
        std::cout << "balance study: " << r.deltas.size() << " cell(s), " << ok << " ok, "
                  << improved << " with better macro f1 (manifest " << r.manifest_hash
                  << "), wrote " << a.out << "\n";
        return;
    }

    const auto r = evalkit::run_grid(c, spec, p);
    write_file(a.out, r.to_csv());
    if (!a.json.empty()) write_file(a.json, r.to_json().dump(2) + "\n");
    size_t failed = 0;
    for (const auto& row : r.rows) failed += !row.ok;
    std::cout << "grid: " << r.rows.size() << " row(s), " << failed << " failed (manifest "
              << r.manifest_hash << "), wrote " << a.out << "\n";
}

struct PredictArgs {
    std::string model, text, stopwords, emoji;
};

void cmd_predict(const PredictArgs& a) {
    auto pl = pipeline::Pipeline::from_json(load_json(a.model, "model file"));
    const auto tokens =
        textprep::preprocess(a.text, {}, emoji_from(a.emoji), stopwords_from(a.stopwords));
    const int label = pl.predict(tokens);
    std::cout << corpus::label_name(static_cast<corpus::EmotionLabel>(label)) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"emoforge: Bengali text emotion classification toolkit"};
    app.require_subcommand(1);

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Validate a JSONL corpus and report stats");
    c_ingest->add_option("--input", ingest.input, "corpus JSONL to read")->required();
    c_ingest->add_option("--output", ingest.output, "re-serialized corpus path");

    AnnotateArgs annotate;
    auto* c_annotate =
        app.add_subcommand("annotate", "Record emotion votes or adjudicate ties");
    c_annotate->add_option("--corpus", annotate.corpus, "corpus JSONL")->required();
    c_annotate->add_option("--annotator", annotate.annotator, "annotator id");
    c_annotate->add_flag("--lead", annotate.lead, "adjudicate quorum ties instead of voting");
    c_annotate->add_option("--output", annotate.output, "output path (default: --corpus)");

    PreprocessArgs preprocess;
    auto* c_preprocess =
        app.add_subcommand("preprocess", "Clean, tokenize and de-stopword sample text");
    c_preprocess->add_option("--corpus", preprocess.corpus, "corpus JSONL")->required();
    c_preprocess->add_option("--stopwords", preprocess.stopwords, "stop word list file");
    c_preprocess->add_option("--emoji-map", preprocess.emoji, "emoji replacement table");
    c_preprocess->add_option("--output", preprocess.output, "output corpus path")->required();

    SplitArgs split;
    auto* c_split = app.add_subcommand("split", "Stratified train/val/test assignment");
    c_split->add_option("--corpus", split.corpus, "corpus JSONL")->required();
    c_split->add_option("--ratios", split.ratios, "train,val,test fractions");
    c_split->add_option("--seed", split.seed, "shuffle seed");
    c_split->add_option("--output", split.output, "output corpus path")->required();

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "Fit one feature-model pipeline");
    c_train->add_option("--corpus", train.corpus, "split corpus JSONL")->required();
    c_train->add_option("--features", train.features,
                        "count, tfidf, skipgram, subword or contextual")
        ->required();
    c_train->add_option("--model", train.model,
                        "dt, rf, svm, nb, rnn, lstm, hybrid or ensemble")
        ->required();
    c_train->add_flag("--balance", train.balance, "oversample the training split");
    c_train->add_option("--config", train.config, "hyperparameter JSON file");
    c_train->add_option("--seed", train.seed, "master seed");
    c_train->add_option("--out", train.out, "model artifact path")->required();

    EvaluateArgs evaluate;
    auto* c_evaluate = app.add_subcommand("evaluate", "Score a saved model on a corpus");
    c_evaluate->add_option("--model", evaluate.model, "model artifact")->required();
    c_evaluate->add_option("--corpus", evaluate.corpus, "corpus JSONL")->required();
    c_evaluate->add_option("--report", evaluate.report, "report JSON path")->required();

    GridArgs grid;
    auto* c_grid = app.add_subcommand("grid", "Evaluate a feature x model grid");
    c_grid->add_option("--corpus", grid.corpus, "split corpus JSONL")->required();
    c_grid->add_option("--features", grid.features, "comma list (default: all)");
    c_grid->add_option("--models", grid.models, "comma list (default: all)");
    c_grid->add_flag("--balance", grid.balance, "oversample every training split");
    c_grid->add_flag("--balance-study", grid.study, "run every cell with SMOTE off and on");
    c_grid->add_option("--config", grid.config, "hyperparameter JSON file");
    c_grid->add_option("--seed", grid.seed, "master seed");
    c_grid->add_option("--out", grid.out, "CSV report path")->required();
    c_grid->add_option("--json", grid.json, "JSON report path");
    c_grid->add_flag("--wall-clock", grid.wall_clock, "report real timings (not rerun-stable)");

    PredictArgs predict;
    auto* c_predict = app.add_subcommand("predict", "Label one raw text");
    c_predict->add_option("--model", predict.model, "model artifact")->required();
    c_predict->add_option("--text", predict.text, "raw input text")->required();
    c_predict->add_option("--stopwords", predict.stopwords, "stop word list file");
    c_predict->add_option("--emoji-map", predict.emoji, "emoji replacement table");

    if (argc < 2) {
        std::cerr << app.help();
        return 1;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "emoforge: " << e.what() << "\n";
        return 1;
    }

    try {
        if (*c_ingest) cmd_ingest(ingest);
        if (*c_annotate) cmd_annotate(annotate);
        if (*c_preprocess) cmd_preprocess(preprocess);
        if (*c_split) cmd_split(split);
        if (*c_train) cmd_train(train);
        if (*c_evaluate) cmd_evaluate(evaluate);
        if (*c_grid) cmd_grid(grid);
        if (*c_predict) cmd_predict(predict);
        return 0;
    } catch (const Error& e) {
        std::cerr << "emoforge: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "emoforge: " << e.what() << "\n";
        return 1;
    }
}
