#include "xvec/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <spdlog/spdlog.h>

#include "xvec/util.hpp"

namespace xvec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
    fs::path p(value);
    return p.is_absolute() ? p : base / p;
}

std::vector<std::string> comma_list(const std::string& text) {
    std::vector<std::string> out;
    for (auto part : split(text, ','))
        if (!trim(part).empty()) out.emplace_back(trim(part));
    return out;
}

}  // namespace

PipelineConfig PipelineConfig::parse(std::istream& in, const fs::path& base_dir) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }

    PipelineConfig cfg;
    const auto str = [&](const char* key) { return tree.get_optional<std::string>(key); };
    const auto size = [&](const char* key, std::size_t& dst) {
        if (auto v = tree.get_optional<std::size_t>(key)) dst = *v;
    };
    const auto real = [&](const char* key, double& dst) {
        if (auto v = tree.get_optional<double>(key)) dst = *v;
    };

    auto corpus_a = str("input.corpus_a");
    if (!corpus_a) corpus_a = str("input.corpus");
    if (!corpus_a) throw std::invalid_argument("config: input.corpus_a is required");
    cfg.corpus_a = resolve(base_dir, *corpus_a);
    if (auto b = str("input.corpus_b"); b && !trim(*b).empty()) cfg.corpus_b = resolve(base_dir, *b);
    if (auto e = str("input.embeddings"); e && !trim(*e).empty())
        cfg.embeddings = resolve(base_dir, *e);
    if (auto t = str("input.testsets"))
        for (const auto& item : comma_list(*t)) cfg.testsets.push_back(resolve(base_dir, item));

    if (auto caps = str("vocab.caps")) cfg.caps = PosCaps::parse(*caps);
    real("cooc.decay", cfg.decay);
    size("cooc.max_distance", cfg.max_distance);
    size("cooc.window", cfg.window);

    size("criteria.candidates", cfg.candidates);
    size("criteria.a_size", cfg.a_size);
    size("criteria.m", cfg.m);
    real("criteria.eps", cfg.zero_eps);
    if (auto agg = str("criteria.aggregation")) {
        const auto v = to_lower(trim(*agg));
        if (v == "sum") cfg.aggregation = WsAggregation::Sum;
        else if (v == "mean") cfg.aggregation = WsAggregation::Mean;
        else throw std::invalid_argument("config: criteria.aggregation must be sum or mean");
    }

    const auto rules_ref = [&](const char* key, std::string& dst) {
        if (auto v = str(key)) {
            const std::string name(trim(*v));
            dst = find_builtin_rule_set(name) ? name : resolve(base_dir, name).string();
        }
    };
    rules_ref("rules.ir", cfg.ir_rules);
    rules_ref("rules.fr", cfg.fr_rules);
    size("rules.tree_max_depth", cfg.tree_max_depth);
    size("rules.tree_min_leaf", cfg.tree_min_leaf);

    size("bpso.n_b", cfg.swarm.n_select);
    size("bpso.train_size", cfg.bpso_train_size);
    size("bpso.population", cfg.swarm.population);
    size("bpso.iterations", cfg.swarm.iterations);
    real("bpso.inertia", cfg.swarm.inertia);
    real("bpso.c1", cfg.swarm.c1);
    real("bpso.c2", cfg.swarm.c2);
    real("bpso.v_max", cfg.swarm.v_max);
    size("golden.runs", cfg.golden_runs);
    size("golden.keep", cfg.golden_keep);

    size("wordsel.n_s", cfg.n_s);
    size("wordsel.train_size", cfg.wordsel_train_size);
    if (auto m = str("wordsel.method")) {
        auto method = parse_influence_method(*m);
        if (!method) throw std::invalid_argument("config: wordsel.method must be naive or incremental");
        cfg.wordsel_method = *method;
    }

    if (auto out = str("run.out_dir")) cfg.out_dir = resolve(base_dir, *out);
    if (auto seed = tree.get_optional<std::uint64_t>("run.seed")) cfg.seed = *seed;
    if (auto b = str("run.baseline")) cfg.baseline = std::string(trim(*b));
    cfg.swarm.seed = cfg.seed;
    return cfg;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    return parse(in, fs::absolute(path).parent_path());
}

const std::vector<std::string>& matrix_stage_names() {
    static const std::vector<std::string> names = {"X_baseline", "X_A",    "X_IR",   "X_FR",
                                                   "X_BA",       "X_BFR",  "X_SA",   "X_SFR",
                                                   "X_SA_G",     "X_SA_Gc", "X_BA_Gc"};
    return names;
}

void emit_manifest(const RunResult& result, std::ostream& out) {
    if (result.artifacts.empty()) throw std::invalid_argument("manifest: no artifacts were built");
    json j;
    j["inputs"] = result.inputs;
    j["artifacts"] = json::array();
    for (const auto& a : result.artifacts) {
        json e;
        e["name"] = a.name;
        e["kind"] = a.kind;
        e["recipe"] = a.recipe;
        e["path"] = a.path;
        e["provenance"] = a.provenance;
        e["context_words"] = a.context_words;
        if (a.kind == "matrix") {
            e["rows"] = a.rows;
            e["nnz"] = a.nnz;
        }
        e["sha256"] = a.content_sha256;
        j["artifacts"].push_back(std::move(e));
    }
    out << j.dump(2) << '\n';
}

namespace {

std::string key_of(std::initializer_list<std::string> parts) {
    std::string joined;
    for (const auto& p : parts) {
        joined += p;
        joined.push_back('\x1f');
    }
    return sha256_hex(joined);
}

std::string num(double v) { return format_sig(v, 17); }
std::string num(std::size_t v) { return std::to_string(v); }

std::string list_key(const std::vector<std::string>& words) {
    std::string joined;
    for (const auto& w : words) joined += w + "\n";
    return sha256_hex(joined);
}

std::vector<std::string> labels_of(const std::vector<Term>& terms) {
    std::vector<std::string> out;
    out.reserve(terms.size());
    for (const auto& t : terms) out.push_back(t.label());
    return out;
}

void write_word_list(const std::vector<std::string>& words, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& w : words) out << w << '\n';
}

std::vector<std::string> union_ordered(const std::vector<std::string>& a,
                                       const std::vector<std::string>& b) {
    std::vector<std::string> out = a;
    std::set<std::string> seen(a.begin(), a.end());
    for (const auto& w : b)
        if (seen.insert(w).second) out.push_back(w);
    return out;
}

SparseMatrix concat_columns(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.row_labels() != b.row_labels()) throw std::invalid_argument("concat_columns: row mismatch");
    auto cols = a.col_labels();
    cols.insert(cols.end(), b.col_labels().begin(), b.col_labels().end());
    SparseMatrix out(a.row_labels(), std::move(cols));
    const auto offset = static_cast<std::uint32_t>(a.n_cols());
    for (std::size_t r = 0; r < a.n_rows(); ++r) {
        std::vector<MatrixEntry> row(a.row(r).begin(), a.row(r).end());
        for (const auto& e : b.row(r)) row.push_back({e.col + offset, e.value});
        out.set_row(r, std::move(row));
    }
    return out;
}

RuleSet resolve_rules(const std::string& ref) {
    if (auto rs = find_builtin_rule_set(ref)) return *rs;
    std::ifstream in(ref);
    if (!in) throw std::runtime_error("rule set '" + ref + "' is neither builtin nor a readable file");
    return read_rule_set(in, fs::path(ref).stem().string());
}

std::string rules_text(const RuleSet& rs) {
    std::ostringstream os;
    write_rule_set(rs, os);
    return os.str();
}

class StageError : public std::runtime_error {
public:
    StageError(const std::string& stage, const std::string& what)
        : std::runtime_error("stage " + stage + ": " + what) {}
};

struct CorpusState {
    std::string id;
    fs::path path;
    int part = 0;  // 0 whole file, 1 first half, 2 second half
    std::string key;

    std::optional<std::vector<Sentence>> sentences;
    std::optional<Vocabulary> vocab;
    std::string vocab_key;
    std::optional<SparseMatrix> raw_decay;
    std::string raw_decay_key;
    std::optional<SparseMatrix> raw_window;
    std::string raw_window_key;
    std::optional<CriteriaTable> criteria;
    std::optional<LabeledSets> sets;
    std::string criteria_key;

    struct List {
        std::vector<std::string> words;
        std::string key;
    };
    std::map<std::string, List> lists;
    std::map<std::string, std::pair<SparseMatrix, std::string>> ppmi;  // by list key
    std::optional<GoldenResult> golden;
    std::string golden_key;
};

}  // namespace

struct Pipeline::Impl {
    PipelineConfig cfg;
    fs::path cache_dir;
    std::map<std::string, std::unique_ptr<CorpusState>> corpora;
    std::optional<DenseEmbeddings> embeddings;
    std::string embeddings_sha;
    RunResult result;

    struct Built {
        SparseMatrix matrix;
        std::string key;
        std::string recipe;
    };
    std::map<std::string, Built> matrices;
    std::map<std::string, CorpusState::List> outputs;  // word lists written to out_dir

    explicit Impl(PipelineConfig c) : cfg(std::move(c)), cache_dir(cfg.out_dir / "cache") {}

    // --- cache -----------------------------------------------------------

    fs::path cache_file(const std::string& stage, const std::string& key, const std::string& ext) {
        return cache_dir / (stage + "-" + key.substr(0, 16) + ext);
    }

    template <class T>
    T cached(const std::string& stage, const std::string& key, const std::string& ext,
             const std::function<T()>& compute,
             const std::function<void(const T&, const fs::path&)>& save,
             const std::function<T(const fs::path&)>& load) {
        const auto path = cache_file(stage, key, ext);
        if (fs::exists(path)) {
            result.events.push_back({stage, key, true});
            spdlog::info("{}: cache hit", stage);
            return load(path);
        }
        spdlog::info("{}: computing", stage);
        T value = compute();
        const auto tmp = fs::path(path.string() + ".tmp");
        save(value, tmp);
        fs::rename(tmp, path);
        result.events.push_back({stage, key, false});
        return value;
    }

    SparseMatrix cached_matrix(const std::string& stage, const std::string& key,
                               const std::function<SparseMatrix()>& compute) {
        return cached<SparseMatrix>(
            stage, key, ".tsv", compute,
            [](const SparseMatrix& m, const fs::path& p) { save_matrix(m, p, 17); },
            [](const fs::path& p) { return load_matrix(p); });
    }

    json cached_json(const std::string& stage, const std::string& key, const std::function<json()>& compute) {
        return cached<json>(
            stage, key, ".json", compute,
            [](const json& j, const fs::path& p) {
                std::ofstream out(p);
                out << j.dump(1) << '\n';
            },
            [](const fs::path& p) {
                std::ifstream in(p);
                return json::parse(in);
            });
    }

    // --- inputs ----------------------------------------------------------

    CorpusState& corpus(const std::string& id) {
        auto it = corpora.find(id);
        if (it != corpora.end()) return *it->second;
        auto st = std::make_unique<CorpusState>();
        st->id = id;
        if (id == "b") {
            st->path = *cfg.corpus_b;
        } else {
            st->path = cfg.corpus_a;
            st->part = id == "a.half1" ? 1 : id == "a.half2" ? 2 : 0;
        }
        if (!fs::exists(st->path)) throw StageError("corpus", "missing corpus file " + st->path.string());
        const auto sha = sha256_file(st->path);
        result.inputs["corpus:" + st->path.filename().string()] = sha;
        st->key = key_of({sha, num(static_cast<std::size_t>(st->part))});
        return *corpora.emplace(id, std::move(st)).first->second;
    }

    const std::vector<Sentence>& sentences(CorpusState& c) {
        if (!c.sentences) {
            auto all = load_corpus(c.path);
            if (c.part != 0) {
                const std::size_t half = all.size() / 2;
                if (c.part == 1) all.resize(half);
                else all.erase(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(half));
            }
            c.sentences = std::move(all);
        }
        return *c.sentences;
    }

    const DenseEmbeddings& emb() {
        if (!embeddings) {
            if (cfg.embeddings.empty()) throw StageError("criteria", "no embeddings configured");
            if (!fs::exists(cfg.embeddings))
                throw StageError("criteria", "missing embeddings file " + cfg.embeddings.string());
            embeddings = load_embeddings(cfg.embeddings);
            if (embeddings->empty()) throw StageError("criteria", "embedding file is empty");
        }
        return *embeddings;
    }

    const std::string& emb_sha() {
        if (embeddings_sha.empty()) {
            if (cfg.embeddings.empty() || !fs::exists(cfg.embeddings))
                throw StageError("criteria", "no embeddings configured");
            embeddings_sha = sha256_file(cfg.embeddings);
            result.inputs["embeddings:" + cfg.embeddings.filename().string()] = embeddings_sha;
        }
        return embeddings_sha;
    }

    // --- per-corpus stages ----------------------------------------------

    const Vocabulary& vocab(CorpusState& c) {
        if (!c.vocab) {
            std::string caps;
            for (auto v : cfg.caps.caps) caps += std::to_string(v) + ",";
            c.vocab_key = key_of({"vocab", c.key, caps});
            c.vocab = cached<Vocabulary>(
                "vocab." + c.id, c.vocab_key, ".tsv",
                [&] { return build_vocabulary(sentences(c), cfg.caps); },
                [](const Vocabulary& v, const fs::path& p) {
                    std::ofstream out(p);
                    write_vocabulary(v, out);
                },
                [](const fs::path& p) {
                    std::ifstream in(p);
                    return read_vocabulary(in);
                });
            c.lists["A"] = {labels_of(most_frequent(*c.vocab, cfg.a_size)),
                            key_of({"A", c.vocab_key, num(cfg.a_size)})};
            c.lists["C"] = {labels_of(most_frequent(*c.vocab, cfg.candidates)),
                            key_of({"C", c.vocab_key, num(cfg.candidates)})};
        }
        return *c.vocab;
    }

    const CorpusState::List& list(CorpusState& c, const std::string& name) {
        vocab(c);
        if (!c.lists.count(name)) {
            if (name == "IR" || name == "FR") {
                const RuleSet rs = resolve_rules(name == "IR" ? cfg.ir_rules : cfg.fr_rules);
                const auto& table = criteria(c);
                c.lists[name] = {evaluate_rule_set(rs, table), key_of({name, c.criteria_key, rules_text(rs)})};
            } else if (name == "BA" || name == "BFR") {
                c.lists[name] = bpso(c, name == "BA" ? "A" : "FR", name);
            } else if (name == "SA" || name == "SFR") {
                c.lists[name] = wordsel(c, name == "SA" ? "A" : "FR", name);
            } else {
                throw std::logic_error("unknown list " + name);
            }
        }
        return c.lists.at(name);
    }

    const SparseMatrix& raw_decay(CorpusState& c) {
        if (!c.raw_decay) {
            const auto& v = vocab(c);
            const auto contexts = union_ordered(c.lists.at("A").words, c.lists.at("C").words);
            c.raw_decay_key = key_of({"raw_decay", c.vocab_key, list_key(contexts), num(cfg.decay),
                                      num(cfg.max_distance)});
            c.raw_decay = cached_matrix("raw_decay." + c.id, c.raw_decay_key, [&] {
                std::vector<Term> ctx;
                for (const auto& w : contexts) ctx.push_back(Term::parse(w));
                return build_cooc_decay(sentences(c), v.terms(), ctx, {cfg.decay, cfg.max_distance});
            });
        }
        return *c.raw_decay;
    }

    // Raw decay counts covering at least `words` as columns.
    const SparseMatrix& raw_decay_covering(CorpusState& c, const std::vector<std::string>& words) {
        raw_decay(c);
        std::vector<std::string> missing;
        for (const auto& w : words)
            if (!c.raw_decay->col_of(w)) missing.push_back(w);
        if (missing.empty()) return *c.raw_decay;
        std::sort(missing.begin(), missing.end());
        const auto key = key_of({"raw_decay_extra", c.raw_decay_key, list_key(missing)});
        auto extra = cached_matrix("raw_decay_extra." + c.id, key, [&] {
            std::vector<Term> ctx;
            for (const auto& w : missing) ctx.push_back(Term::parse(w));
            return build_cooc_decay(sentences(c), vocab(c).terms(), ctx, {cfg.decay, cfg.max_distance});
        });
        c.raw_decay = concat_columns(*c.raw_decay, extra);
        c.raw_decay_key = key_of({c.raw_decay_key, key});
        return *c.raw_decay;
    }

    const SparseMatrix& raw_window(CorpusState& c) {
        if (!c.raw_window) {
            const auto& v = vocab(c);
            const auto& a = c.lists.at("A");
            c.raw_window_key = key_of({"raw_window", c.vocab_key, a.key, num(cfg.window)});
            c.raw_window = cached_matrix("raw_window." + c.id, c.raw_window_key, [&] {
                std::vector<Term> ctx;
                for (const auto& w : a.words) ctx.push_back(Term::parse(w));
                return build_cooc_window(sentences(c), v.terms(), ctx, cfg.window);
            });
        }
        return *c.raw_window;
    }

    const CriteriaTable& criteria(CorpusState& c) {
        if (!c.criteria) {
            const auto& v = vocab(c);
            c.criteria_key = key_of({"criteria", c.vocab_key, c.lists.at("C").key, c.lists.at("A").key,
                                     num(cfg.m), num(cfg.zero_eps),
                                     cfg.aggregation == WsAggregation::Sum ? "sum" : "mean", emb_sha()});
            auto table = cached<CriteriaTable>(
                "criteria." + c.id, c.criteria_key, ".tsv",
                [&] {
                    std::vector<Term> cand;
                    for (const auto& w : c.lists.at("C").words) cand.push_back(Term::parse(w));
                    CriteriaOptions opts;
                    opts.zero_eps = cfg.zero_eps;
                    opts.aggregation = cfg.aggregation;
                    return compute_criteria(cand, emb(), v, opts);
                },
                [](const CriteriaTable& t, const fs::path& p) {
                    std::ofstream out(p);
                    write_criteria(t, out);
                },
                [](const fs::path& p) {
                    std::ifstream in(p);
                    return read_criteria(in);
                });
            c.sets = build_labeled_sets(table, c.lists.at("A").words, cfg.m);
            c.criteria = std::move(table);
        }
        return *c.criteria;
    }

    // PPMI over the decay counts restricted to `words` as context columns.
    std::pair<const SparseMatrix*, std::string> decay_ppmi(CorpusState& c, const std::vector<std::string>& words) {
        const auto lk = list_key(words);
        if (auto it = c.ppmi.find(lk); it != c.ppmi.end()) return {&it->second.first, it->second.second};
        const auto& raw = raw_decay_covering(c, words);
        const auto key = key_of({"ppmi", c.raw_decay_key, lk});
        SparseMatrix restricted = restrict_columns(raw, words);
        SparseMatrix m;
        try {
            m = ppmi_transform(restricted);
        } catch (const std::domain_error&) {
            spdlog::warn("corpus {}: no co-occurrence mass for a {}-word context set", c.id, words.size());
            m = std::move(restricted);
        }
        auto& slot = c.ppmi[lk];
        slot = {std::move(m), key};
        return {&slot.first, key};
    }

    SparseMatrix training_rows(const SparseMatrix& x, const Vocabulary& v, std::size_t n) {
        return select_rows(x, labels_of(proportional_sample(v, n)));
    }

    SwarmConfig swarm(std::uint64_t seed_offset) const {
        SwarmConfig s = cfg.swarm;
        s.seed = cfg.seed + seed_offset;
        return s;
    }

    static std::string swarm_text(const SwarmConfig& s) {
        return key_of({num(s.population), num(s.iterations), num(s.inertia), num(s.c1), num(s.c2),
                       num(s.n_select), num(s.v_max), std::to_string(s.seed)});
    }

    CorpusState::List bpso(CorpusState& c, const std::string& source, const std::string& name) {
        const auto& words = list(c, source).words;
        auto [x, xkey] = decay_ppmi(c, words);
        const SwarmConfig s = swarm(name == "BA" ? 0 : 1);
        const auto key = key_of({"bpso", xkey, num(cfg.bpso_train_size), swarm_text(s)});
        const std::string stage = "bpso." + name + "." + c.id;
        const json j = cached_json(stage, key, [&, x = x] {
            const auto train = training_rows(*x, vocab(c), cfg.bpso_train_size);
            BpsoResult res;
            try {
                res = run_bpso(train, s);
            } catch (const std::invalid_argument& e) {
                throw StageError(stage, e.what());
            }
            json out;
            out["best_value"] = res.best_value;
            out["trace"] = res.trace;
            out["selected"] = selected_labels(res.best, train.col_labels());
            return out;
        });
        {
            std::ofstream trace(cfg.out_dir / ("trace_" + name + ".csv"));
            trace << "iteration,gbest_value\n";
            const auto t = j.at("trace").get<std::vector<double>>();
            for (std::size_t i = 0; i < t.size(); ++i) trace << i << ',' << format_sig(t[i], 17) << '\n';
        }
        return {j.at("selected").get<std::vector<std::string>>(), key};
    }

    CorpusState::List wordsel(CorpusState& c, const std::string& source, const std::string& name) {
        const auto& words = list(c, source).words;
        auto [x, xkey] = decay_ppmi(c, words);
        const auto key = key_of({"wordsel", xkey, num(cfg.wordsel_train_size),
                                 num(static_cast<std::size_t>(cfg.wordsel_method))});
        const std::string stage = "wordsel." + name + "." + c.id;
        const json j = cached_json(stage, key, [&, x = x] {
            const auto train = training_rows(*x, vocab(c), cfg.wordsel_train_size);
            if (train.n_rows() < 2) throw StageError(stage, "training set needs at least 2 words");
            const auto scores = column_influence(train, cfg.wordsel_method);
            json out;
            out["words"] = scores.words;
            out["scores"] = scores.scores;
            return out;
        });
        const ColumnScores scores{j.at("words").get<std::vector<std::string>>(),
                                  j.at("scores").get<std::vector<double>>()};
        {
            std::ofstream out(cfg.out_dir / ("scores_" + name + ".csv"));
            write_scores(scores, out);
        }
        if (cfg.n_s > scores.words.size())
            throw StageError(stage, "N_S = " + std::to_string(cfg.n_s) + " exceeds the " +
                                        std::to_string(scores.words.size()) + " available context words");
        return {select_top(scores, cfg.n_s), key_of({key, num(cfg.n_s)})};
    }

    const GoldenResult& golden(CorpusState& c, std::uint64_t seed_offset) {
        if (!c.golden) {
            const auto& fr = list(c, "FR").words;
            auto [x, xkey] = decay_ppmi(c, fr);
            const SwarmConfig s = swarm(seed_offset);
            c.golden_key = key_of({"golden", xkey, num(cfg.bpso_train_size), swarm_text(s),
                                   num(cfg.golden_runs), num(cfg.golden_keep)});
            const std::string stage = "golden." + c.id;
            const json j = cached_json(stage, c.golden_key, [&, x = x] {
                const auto train = training_rows(*x, vocab(c), cfg.bpso_train_size);
                if (s.n_select > train.n_cols())
                    throw StageError(stage, "N_B = " + std::to_string(s.n_select) + " exceeds |FR| = " +
                                                std::to_string(train.n_cols()));
                const CosineObjective objective(train);
                const auto g = extract_golden(objective, s, cfg.golden_runs, cfg.golden_keep);
                json out;
                out["golden"] = g.golden;
                out["kept"] = g.kept;
                out["runs"] = json::array();
                for (const auto& r : g.runs)
                    out["runs"].push_back({{"seed", r.seed}, {"best_value", r.best_value}, {"selected", r.selected}});
                return out;
            });
            GoldenResult g;
            g.golden = j.at("golden").get<std::vector<std::string>>();
            g.kept = j.at("kept").get<std::vector<std::size_t>>();
            for (const auto& r : j.at("runs"))
                g.runs.push_back({r.at("seed").get<std::uint64_t>(), r.at("best_value").get<double>(),
                                  r.at("selected").get<std::vector<std::string>>()});
            c.golden = std::move(g);
        }
        return *c.golden;
    }

    std::pair<CorpusState*, CorpusState*> golden_corpora() {
        if (cfg.corpus_b) return {&corpus("a"), &corpus("b")};
        return {&corpus("a.half1"), &corpus("a.half2")};
    }

    const CorpusState::List& golden_list(const std::string& name) {
        if (!outputs.count(name)) {
            auto [g1, g2] = golden_corpora();
            const auto& a = golden(*g1, 2);
            if (name == "G") {
                outputs["G"] = {a.golden, g1->golden_key};
            } else {
                const auto& b = golden(*g2, 3);
                outputs["golden_b"] = {b.golden, g2->golden_key};
                outputs["G"] = {a.golden, g1->golden_key};
                outputs["Gc"] = {common_golden(a.golden, b.golden), key_of({g1->golden_key, g2->golden_key})};
            }
        }
        return outputs.at(name);
    }

    // --- matrices --------------------------------------------------------

    void build_matrix(const std::string& name) {
        if (matrices.count(name)) return;
        auto& main = corpus("a");
        const auto from_list = [&](const std::vector<std::string>& words, const std::string& list_key_,
                                   const std::string& recipe) {
            auto [x, key] = decay_ppmi(main, words);
            matrices[name] = {*x, key_of({key, list_key_}), recipe};
        };
        const auto publish = [&](const std::string& list_name) {
            outputs[list_name] = list(main, list_name);
        };

        if (name == "X_baseline") {
            const auto& raw = raw_window(main);
            matrices[name] = {ppmi_transform(raw), key_of({"ppmi", main.raw_window_key}),
                              "PPMI of window=" + std::to_string(cfg.window) + " counts, contexts A"};
            publish("A");
        } else if (name == "X_A" || name == "X_IR" || name == "X_FR" || name == "X_BA" ||
                   name == "X_BFR" || name == "X_SA" || name == "X_SFR") {
            const std::string set = name.substr(2);
            const auto& l = list(main, set);
            static const std::map<std::string, std::string> recipes = {
                {"A", "PPMI of decay counts, contexts A (most frequent words)"},
                {"IR", "PPMI of decay counts, contexts selected by the IR rule set"},
                {"FR", "PPMI of decay counts, contexts selected by the FR rule set"},
                {"BA", "PPMI of decay counts, contexts chosen by BPSO from A"},
                {"BFR", "PPMI of decay counts, contexts chosen by BPSO from FR"},
                {"SA", "PPMI of decay counts, contexts chosen by word selection from A"},
                {"SFR", "PPMI of decay counts, contexts chosen by word selection from FR"}};
            from_list(l.words, l.key, recipes.at(set));
            publish(set);
        } else if (name == "X_SA_G" || name == "X_SA_Gc" || name == "X_BA_Gc") {
            const std::string base = name == "X_BA_Gc" ? "BA" : "SA";
            const std::string g = name == "X_SA_G" ? "G" : "Gc";
            const auto& bl = list(main, base);
            const auto& gl = golden_list(g);
            const auto words = union_ordered(bl.words, gl.words);
            from_list(words, key_of({bl.key, gl.key}),
                      "PPMI of decay counts, contexts " + base + " union " + g +
                          (name == "X_BA_Gc" ? " (expected to degrade)" : ""));
            publish(base);
        } else {
            throw std::invalid_argument("unknown stage '" + name + "'");
        }
    }

    void build_trees() {
        auto& main = corpus("a");
        const auto& table = criteria(main);
        const auto& sets = *main.sets;
        fs::create_directories(cfg.out_dir / "trees");
        TreeOptions opts{cfg.tree_max_depth, cfg.tree_min_leaf, false};
        const std::vector<std::pair<std::string, std::optional<Pos>>> groups = {
            {"all", std::nullopt}, {"noun", Pos::Noun}, {"verb", Pos::Verb},
            {"adjective", Pos::Adjective}, {"adverb", Pos::Adverb}};
        for (const auto& [gname, pos] : groups) {
            try {
                const auto tree = train_tree(table, sets.u_at, pos, opts);
                std::ofstream(cfg.out_dir / "trees" / ("tree_" + gname + ".json")) << tree_to_json(tree).dump(2) << '\n';
                std::ofstream rules(cfg.out_dir / "trees" / ("rules_" + gname + ".txt"));
                write_rule_set(tree_to_rules(tree, "tree_" + gname), rules);
            } catch (const std::invalid_argument& e) {
                spdlog::warn("tree {}: {}", gname, e.what());
            }
        }
        const auto& ir = list(main, "IR").words;
        const std::map<std::string, std::set<std::string>> selections = {
            {"common", sets.common}, {"in", sets.in}, {"out", sets.out},
            {"ir", std::set<std::string>(ir.begin(), ir.end())}};
        fs::create_directories(cfg.out_dir / "scatter");
        for (const auto& [sname, sel] : selections)
            for (const auto& [pname, pair] : {std::pair{"wf-ws", FeaturePair::WfWs},
                                              std::pair{"nz-ws", FeaturePair::NzWs},
                                              std::pair{"nz-wf", FeaturePair::NzWf}}) {
                std::ofstream out(cfg.out_dir / "scatter" / (sname + "_" + pname + ".csv"));
                emit_scatter(table, sel, pair, out);
            }
        std::ofstream crit(cfg.out_dir / "criteria.tsv");
        write_criteria(table, crit);
    }

    void evaluate_all() {
        if (cfg.testsets.empty()) throw StageError("eval", "no test sets configured");
        std::vector<TestSet> sets;
        for (const auto& p : cfg.testsets) {
            if (!fs::exists(p)) throw StageError("eval", "missing test set " + p.string());
            result.inputs["testset:" + p.filename().string()] = sha256_file(p);
            sets.push_back(load_testset(p));
        }
        for (const auto& name : matrix_stage_names()) {
            auto it = matrices.find(name);
            if (it == matrices.end()) continue;
            for (const auto& ts : sets) {
                try {
                    result.evaluation.push_back(evaluate(it->second.matrix, ts, name));
                } catch (const std::exception& e) {
                    EvalEntry failed{name, ts.name, std::nullopt, 0, 0, e.what()};
                    spdlog::warn("eval {} on {}: {}", name, ts.name, e.what());
                    result.evaluation.push_back(std::move(failed));
                }
            }
        }
        std::string baseline = cfg.baseline;
        if (!matrices.count(baseline)) {
            for (const auto& n : matrix_stage_names())
                if (matrices.count(n)) {
                    baseline = n;
                    break;
                }
            spdlog::warn("baseline {} not built; deltas are relative to {}", cfg.baseline, baseline);
        }
        std::ofstream report(cfg.out_dir / "report.csv");
        write_report(result.evaluation, baseline, report);

        std::vector<std::pair<std::string, std::string>> comparisons;
        for (const auto& [m, b] : std::vector<std::pair<std::string, std::string>>{
                 {"X_A", "X_baseline"}, {"X_IR", "X_A"}, {"X_FR", "X_A"}, {"X_BA", "X_A"},
                 {"X_BFR", "X_FR"}, {"X_SA", "X_A"}, {"X_SFR", "X_FR"}, {"X_SA_G", "X_SA"},
                 {"X_SA_Gc", "X_SA"}, {"X_BA_Gc", "X_BA"}, {"X_SA_Gc", "X_baseline"}})
            if (matrices.count(m) && matrices.count(b)) comparisons.emplace_back(m, b);
        std::ofstream deltas(cfg.out_dir / "deltas.csv");
        write_comparisons(result.evaluation, comparisons, deltas);
    }

    RunResult run(const std::set<std::string>& requested) {
        fs::create_directories(cache_dir);
        fs::create_directories(cfg.out_dir / "matrices");
        std::set<std::string> stages = requested;
        if (stages.empty()) {
            stages.insert(matrix_stage_names().begin(), matrix_stage_names().end());
            stages.insert("trees");
            stages.insert("eval");
        }
        for (const auto& s : stages)
            if (s != "trees" && s != "eval" &&
                std::find(matrix_stage_names().begin(), matrix_stage_names().end(), s) ==
                    matrix_stage_names().end())
                throw std::invalid_argument("unknown stage '" + s + "'");

        for (const auto& name : matrix_stage_names())
            if (stages.count(name)) build_matrix(name);
        if (stages.count("trees")) build_trees();

        for (const auto& name : matrix_stage_names()) {
            auto it = matrices.find(name);
            if (it == matrices.end()) continue;
            const auto rel = fs::path("matrices") / (name + ".tsv");
            save_matrix(it->second.matrix, cfg.out_dir / rel);
            result.artifacts.push_back({name, "matrix", it->second.recipe, rel.generic_string(),
                                        it->second.key, it->second.matrix.n_cols(),
                                        it->second.matrix.n_rows(), it->second.matrix.nnz(),
                                        sha256_file(cfg.out_dir / rel)});
        }
        for (const auto& [name, l] : outputs) {
            const std::string file = name == "G" ? "golden.txt" : name + ".txt";
            write_word_list(l.words, cfg.out_dir / file);
            result.artifacts.push_back({name, "wordlist", "context word list", file, l.key, l.words.size(),
                                        0, 0, sha256_file(cfg.out_dir / file)});
        }
        if (stages.count("eval")) evaluate_all();

        std::ofstream manifest(cfg.out_dir / "manifest.json");
        emit_manifest(result, manifest);
        return result;
    }
};

Pipeline::Pipeline(PipelineConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}
Pipeline::~Pipeline() = default;

RunResult Pipeline::run(const std::set<std::string>& stages) { return impl_->run(stages); }

}  // namespace xvec
