// Command-line front end for the xvec library.
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include <spdlog/spdlog.h>

#include "xvec/pipeline.hpp"
#include "xvec/util.hpp"

using namespace xvec;
namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

std::vector<std::string> read_lines(const fs::path& path) {
    auto in = open_in(path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line))
        if (!trim(line).empty()) out.emplace_back(trim(line));
    return out;
}

void write_lines(const std::vector<std::string>& words, const fs::path& path) {
    auto out = open_out(path);
    for (const auto& w : words) out << w << '\n';
}

Vocabulary load_vocab(const fs::path& path) {
    auto in = open_in(path);
    return read_vocabulary(in);
}

CriteriaTable load_criteria(const fs::path& path) {
    auto in = open_in(path);
    return read_criteria(in);
}

std::vector<Term> terms_of(const std::vector<std::string>& labels) {
    std::vector<Term> out;
    for (const auto& l : labels) out.push_back(Term::parse(l));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Explicit word vectors: counting, PPMI, context selection, evaluation"};
    app.require_subcommand(1);
    spdlog::set_level(spdlog::level::warn);
    app.add_flag_callback("-v,--verbose", [] { spdlog::set_level(spdlog::level::info); }, "Log progress");

    // build-vocab
    auto* vocab_cmd = app.add_subcommand("build-vocab", "Count lemma+POS frequencies");
    fs::path vc_corpus, vc_out;
    std::string vc_caps = "N=20000,V=10000,J=10000,R=5000";
    vocab_cmd->add_option("--corpus", vc_corpus)->required();
    vocab_cmd->add_option("--caps", vc_caps);
    vocab_cmd->add_option("--out", vc_out)->required();
    vocab_cmd->callback([&] {
        const auto vocab = build_vocabulary(load_corpus(vc_corpus), PosCaps::parse(vc_caps));
        auto out = open_out(vc_out);
        write_vocabulary(vocab, out);
    });

    // build-cooc
    auto* cooc_cmd = app.add_subcommand("build-cooc", "Count word-context co-occurrences");
    fs::path cc_corpus, cc_vocab, cc_contexts, cc_out;
    std::string cc_mode = "decay";
    double cc_decay = 0.1;
    std::size_t cc_window = 10, cc_max_distance = 0;
    cooc_cmd->add_option("--corpus", cc_corpus)->required();
    cooc_cmd->add_option("--vocab", cc_vocab, "Target words (vocabulary TSV)")->required();
    cooc_cmd->add_option("--contexts", cc_contexts, "One context word per line")->required();
    cooc_cmd->add_option("--mode", cc_mode)->check(CLI::IsMember({"decay", "window"}));
    cooc_cmd->add_option("--decay", cc_decay);
    cooc_cmd->add_option("--max-distance", cc_max_distance);
    cooc_cmd->add_option("--window", cc_window);
    cooc_cmd->add_option("--out", cc_out)->required();
    cooc_cmd->callback([&] {
        const auto corpus = load_corpus(cc_corpus);
        const auto targets = load_vocab(cc_vocab).terms();
        const auto contexts = terms_of(read_lines(cc_contexts));
        const auto m = cc_mode == "decay"
                           ? build_cooc_decay(corpus, targets, contexts, {cc_decay, cc_max_distance})
                           : build_cooc_window(corpus, targets, contexts, cc_window);
        save_matrix(m, cc_out);
    });

    // ppmi
    auto* ppmi_cmd = app.add_subcommand("ppmi", "PPMI-transform a count matrix");
    fs::path pp_in, pp_out;
    ppmi_cmd->add_option("--in", pp_in)->required();
    ppmi_cmd->add_option("--out", pp_out)->required();
    ppmi_cmd->callback([&] { save_matrix(ppmi_transform(load_matrix(pp_in)), pp_out); });

    // criteria
    auto* crit_cmd = app.add_subcommand("criteria", "Compute WS/WF/NZ and class labels");
    fs::path cr_emb, cr_vocab, cr_out;
    std::size_t cr_candidates = 10000, cr_a = 5000, cr_m = 3000;
    double cr_eps = 0.01;
    crit_cmd->add_option("--emb", cr_emb)->required();
    crit_cmd->add_option("--vocab", cr_vocab)->required();
    crit_cmd->add_option("--candidates", cr_candidates);
    crit_cmd->add_option("--a-size", cr_a, "Size of the most-frequent set A");
    crit_cmd->add_option("--eps", cr_eps);
    crit_cmd->add_option("--M", cr_m);
    crit_cmd->add_option("--out", cr_out)->required();
    crit_cmd->callback([&] {
        const auto vocab = load_vocab(cr_vocab);
        CriteriaOptions opts;
        opts.zero_eps = cr_eps;
        auto table = compute_criteria(most_frequent(vocab, cr_candidates), load_embeddings(cr_emb), vocab, opts);
        std::vector<std::string> a;
        for (const auto& t : most_frequent(vocab, cr_a)) a.push_back(t.label());
        build_labeled_sets(table, a, cr_m);
        auto out = open_out(cr_out);
        write_criteria(table, out);
    });

    // scatter
    auto* scatter_cmd = app.add_subcommand("scatter", "Emit criteria scatter data for one labeled set");
    fs::path sc_criteria, sc_out;
    std::string sc_pair = "wf-ws", sc_set = "common";
    bool sc_norm = false;
    scatter_cmd->add_option("--criteria", sc_criteria)->required();
    scatter_cmd->add_option("--pair", sc_pair)->check(CLI::IsMember({"wf-ws", "nz-ws", "nz-wf"}));
    scatter_cmd->add_option("--set", sc_set)->check(CLI::IsMember({"common", "in", "out", "all"}));
    scatter_cmd->add_flag("--normalized", sc_norm);
    scatter_cmd->add_option("--out", sc_out)->required();
    scatter_cmd->callback([&] {
        const auto table = load_criteria(sc_criteria);
        const int want = sc_set == "common" ? 1 : sc_set == "in" ? 2 : sc_set == "out" ? 3 : 0;
        std::set<std::string> sel;
        for (const auto& r : table.rows())
            if (want == 0 ? r.label.has_value() : r.label == want) sel.insert(r.word);
        auto out = open_out(sc_out);
        emit_scatter(table, sel, *parse_feature_pair(sc_pair), out, sc_norm);
    });

    // rules
    auto* rules_cmd = app.add_subcommand("rules", "Apply or learn selection rules");
    rules_cmd->require_subcommand(1);
    auto* apply_cmd = rules_cmd->add_subcommand("apply", "Select words with a rule set");
    std::string ra_ruleset = "final_normalized";
    fs::path ra_criteria, ra_out;
    apply_cmd->add_option("--ruleset", ra_ruleset, "Builtin name or rule file");
    apply_cmd->add_option("--criteria", ra_criteria)->required();
    apply_cmd->add_option("--out", ra_out)->required();
    apply_cmd->callback([&] {
        RuleSet rs;
        if (auto b = find_builtin_rule_set(ra_ruleset)) {
            rs = *b;
        } else {
            auto in = open_in(ra_ruleset);
            rs = read_rule_set(in, fs::path(ra_ruleset).stem().string());
        }
        write_lines(evaluate_rule_set(rs, load_criteria(ra_criteria)), ra_out);
    });

    auto* train_cmd = rules_cmd->add_subcommand("train", "Fit a CART tree on labeled words");
    fs::path rt_criteria, rt_out, rt_rules_out;
    std::string rt_pos = "all";
    std::size_t rt_depth = 6, rt_leaf = 20;
    bool rt_norm = false;
    train_cmd->add_option("--criteria", rt_criteria)->required();
    train_cmd->add_option("--pos", rt_pos)->check(CLI::IsMember({"all", "noun", "verb", "adjective", "adverb"}));
    train_cmd->add_option("--max-depth", rt_depth);
    train_cmd->add_option("--min-leaf", rt_leaf);
    train_cmd->add_flag("--normalized", rt_norm);
    train_cmd->add_option("--out", rt_out)->required();
    train_cmd->add_option("--rules-out", rt_rules_out);
    train_cmd->callback([&] {
        const auto table = load_criteria(rt_criteria);
        std::set<std::string> words;
        for (const auto& r : table.rows())
            if (r.label) words.insert(r.word);
        std::optional<Pos> pos;
        if (rt_pos != "all") pos = parse_pos(rt_pos);
        const auto tree = train_tree(table, words, pos, {rt_depth, rt_leaf, rt_norm});
        open_out(rt_out) << tree_to_json(tree).dump(2) << '\n';
        if (!rt_rules_out.empty()) {
            auto out = open_out(rt_rules_out);
            write_rule_set(tree_to_rules(tree, "tree_" + rt_pos), out);
        }
    });

    // bpso / golden
    SwarmConfig swarm;
    fs::path bp_train, bp_out, bp_trace;
    const auto swarm_options = [&](CLI::App* cmd) {
        cmd->add_option("--train-matrix", bp_train)->required();
        cmd->add_option("--nb", swarm.n_select);
        cmd->add_option("--pop", swarm.population);
        cmd->add_option("--iters", swarm.iterations);
        cmd->add_option("--w", swarm.inertia);
        cmd->add_option("--c1", swarm.c1);
        cmd->add_option("--c2", swarm.c2);
        cmd->add_option("--vmax", swarm.v_max);
        cmd->add_option("--seed", swarm.seed);
        cmd->add_option("--out", bp_out)->required();
    };
    auto* bpso_cmd = app.add_subcommand("bpso", "Select context columns with binary PSO");
    swarm_options(bpso_cmd);
    bpso_cmd->add_option("--trace", bp_trace);
    bpso_cmd->callback([&] {
        const auto train = load_matrix(bp_train);
        const auto res = run_bpso(train, swarm);
        write_lines(selected_labels(res.best, train.col_labels()), bp_out);
        if (!bp_trace.empty()) {
            auto out = open_out(bp_trace);
            out << "iteration,gbest_value\n";
            for (std::size_t i = 0; i < res.trace.size(); ++i) out << i << ',' << format_sig(res.trace[i], 17) << '\n';
        }
    });

    auto* golden_cmd = app.add_subcommand("golden", "Intersect the best of several BPSO runs");
    std::size_t gd_runs = 20, gd_keep = 3;
    fs::path gd_other;
    swarm_options(golden_cmd);
    golden_cmd->add_option("--runs", gd_runs);
    golden_cmd->add_option("--keep", gd_keep);
    golden_cmd->add_option("--intersect", gd_other, "Golden list from a second corpus");
    golden_cmd->callback([&] {
        const CosineObjective objective(load_matrix(bp_train));
        auto golden = extract_golden(objective, swarm, gd_runs, gd_keep).golden;
        if (!gd_other.empty()) golden = common_golden(golden, read_lines(gd_other));
        write_lines(golden, bp_out);
    });

    // wordsel
    auto* ws_cmd = app.add_subcommand("wordsel", "Rank context columns by distance-matrix influence");
    fs::path ws_matrix, ws_train, ws_out, ws_scores;
    std::size_t ws_ns = 1000;
    std::string ws_method = "incremental";
    ws_cmd->add_option("--matrix", ws_matrix)->required();
    ws_cmd->add_option("--train-words", ws_train);
    ws_cmd->add_option("--ns", ws_ns);
    ws_cmd->add_option("--method", ws_method)->check(CLI::IsMember({"naive", "incremental"}));
    ws_cmd->add_option("--out", ws_out)->required();
    ws_cmd->add_option("--scores", ws_scores);
    ws_cmd->callback([&] {
        auto m = load_matrix(ws_matrix);
        if (!ws_train.empty()) m = select_rows(m, read_lines(ws_train));
        const auto scores = column_influence(m, *parse_influence_method(ws_method));
        write_lines(select_top(scores, ws_ns), ws_out);
        if (!ws_scores.empty()) {
            auto out = open_out(ws_scores);
            write_scores(scores, out);
        }
    });

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Spearman correlation on word-similarity test sets");
    std::vector<fs::path> ev_matrices, ev_testsets;
    std::string ev_baseline = "X_baseline";
    fs::path ev_out;
    eval_cmd->add_option("--matrix", ev_matrices, "Matrix files, named by file stem")->required();
    eval_cmd->add_option("--testset", ev_testsets)->required();
    eval_cmd->add_option("--baseline", ev_baseline);
    eval_cmd->add_option("--out", ev_out)->required();
    eval_cmd->callback([&] {
        std::vector<TestSet> sets;
        for (const auto& p : ev_testsets) sets.push_back(load_testset(p));
        std::vector<EvalEntry> entries;
        for (const auto& p : ev_matrices) {
            const auto m = load_matrix(p);
            for (const auto& ts : sets) {
                try {
                    entries.push_back(evaluate(m, ts, p.stem().string()));
                } catch (const std::runtime_error& e) {
                    entries.push_back({p.stem().string(), ts.name, std::nullopt, 0, 0, e.what()});
                }
            }
        }
        auto out = open_out(ev_out);
        write_report(entries, ev_baseline, out);
    });

    // pipeline
    auto* pipe_cmd = app.add_subcommand("pipeline", "Run the full workflow from a config file");
    pipe_cmd->require_subcommand(1);
    auto* run_cmd = pipe_cmd->add_subcommand("run", "Build the requested stages");
    fs::path pr_config, pr_out_dir;
    std::string pr_stages;
    run_cmd->add_option("--config", pr_config)->required();
    run_cmd->add_option("--stages", pr_stages, "Comma-separated, e.g. X_SA_Gc,eval");
    run_cmd->add_option("--out-dir", pr_out_dir, "Overrides run.out_dir");
    run_cmd->callback([&] {
        auto cfg = PipelineConfig::load(pr_config);
        if (!pr_out_dir.empty()) cfg.out_dir = pr_out_dir;
        std::set<std::string> stages;
        for (auto s : split(pr_stages, ','))
            if (!trim(s).empty()) stages.emplace(trim(s));
        const auto result = Pipeline(cfg).run(stages);
        std::ofstream log(cfg.out_dir / "run.log");
        for (const auto& e : result.events) {
            const auto line = e.stage + (e.cache_hit ? " cache-hit " : " built ") + e.key.substr(0, 16);
            std::cout << line << '\n';
            log << line << '\n';
        }
        std::cout << result.artifacts.size() << " artifacts in " << cfg.out_dir.string() << '\n';
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
