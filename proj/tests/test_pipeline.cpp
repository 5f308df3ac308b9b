#include "doctest.h"

#include <sstream>

#include "support.hpp"
#include "xvec/pipeline.hpp"

using namespace xvec;
namespace fs = std::filesystem;

namespace {

// Small random corpus, embeddings and test set written into `dir`.
void write_inputs(const testing::TempDir& dir) {
    std::mt19937_64 gen(99);
    const char* tags[] = {"NN", "VB", "JJ", "RB"};
    std::ostringstream corpus, corpus_b;
    for (int s = 0; s < 400; ++s) {
        auto& out = s % 2 ? corpus_b : corpus;
        for (int k = 0; k < 10; ++k) {
            const int cls = static_cast<int>(gen() % 4);
            const int id = static_cast<int>(std::min(gen() % 30, gen() % 30));
            const std::string lemma = std::string(1, "nvjr"[cls]) + std::to_string(id);
            out << lemma << '\t' << lemma << '\t' << tags[cls] << '\n';
        }
        out << '\n';
    }
    dir.file("a.vert", corpus.str() + corpus_b.str());
    dir.file("b.vert", corpus_b.str());

    std::ostringstream emb;
    std::uniform_real_distribution<double> u(0.2, 1.0);
    for (char c : std::string("nvjr"))
        for (int id = 0; id < 30; ++id) {
            emb << c << id;
            const int zeros = static_cast<int>(gen() % 6);
            for (int d = 0; d < 10; ++d) emb << ' ' << (d < zeros ? 0.001 : u(gen));
            emb << '\n';
        }
    dir.file("emb.txt", emb.str());

    std::ostringstream ts;
    for (int i = 0; i < 15; ++i) ts << 'n' << i << "\tv" << i << '\t' << (i * 7 % 11) << '\n';
    dir.file("sim.tsv", ts.str());
}

std::string config_text(const std::string& extra_input = "", double decay = 0.1) {
    std::ostringstream c;
    c << "[input]\ncorpus_a = a.vert\nembeddings = emb.txt\ntestsets = sim.tsv\n" << extra_input
      << "[vocab]\ncaps = N=30,V=30,J=30,R=30\n"
      << "[cooc]\ndecay = " << decay << "\n"
      << "[criteria]\ncandidates = 60\na_size = 40\nm = 10\n"
      << "[bpso]\nn_b = 8\ntrain_size = 30\npopulation = 4\niterations = 4\n"
      << "[golden]\nruns = 3\nkeep = 2\n"
      << "[wordsel]\nn_s = 8\ntrain_size = 30\n"
      << "[rules]\ntree_min_leaf = 3\n"
      << "[run]\nout_dir = out\nseed = 5\n";
    return c.str();
}

PipelineConfig load(const testing::TempDir& dir, const std::string& text) {
    std::istringstream in(text);
    return PipelineConfig::parse(in, dir.path());
}

std::size_t count_lines(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) ++n;
    return n;
}

}  // namespace

TEST_CASE("config parsing") {
    testing::TempDir dir("cfg");
    const auto cfg = load(dir, config_text("corpus_b = b.vert\n"));
    CHECK(cfg.corpus_a == dir.path() / "a.vert");
    CHECK(*cfg.corpus_b == dir.path() / "b.vert");
    CHECK(cfg.testsets.size() == 1);
    CHECK(cfg.swarm.n_select == 8);
    CHECK(cfg.swarm.seed == 5);
    CHECK(cfg.n_s == 8);
    CHECK(cfg.caps[Pos::Adverb] == 30);
    CHECK(cfg.window == 10);
    CHECK(cfg.fr_rules == "final_normalized");
    CHECK_THROWS(load(dir, "[run]\nseed = 1\n"));
    CHECK_THROWS(load(dir, config_text() + "[criteria]\naggregation = median\n"));
}

TEST_CASE("manifest") {
    RunResult empty;
    std::ostringstream out;
    CHECK_THROWS(emit_manifest(empty, out));

    RunResult r;
    r.artifacts.push_back({"X_A", "matrix", "recipe", "matrices/X_A.tsv", "abc", 3, 2, 4, "def"});
    r.artifacts.push_back({"A", "wordlist", "list", "A.txt", "ghi", 3, 0, 0, "jkl"});
    emit_manifest(r, out);
    const auto j = nlohmann::json::parse(out.str());
    CHECK(j.at("artifacts").size() == 2);
    CHECK(j.at("artifacts")[0].at("context_words") == 3);
}

TEST_CASE("pipeline runs") {
    testing::TempDir dir("pipe");
    write_inputs(dir);

    SUBCASE("smallest run") {
        auto cfg = load(dir, config_text());
        const auto r = Pipeline(cfg).run({"X_baseline", "eval"});
        CHECK(fs::exists(dir.path() / "out/matrices/X_baseline.tsv"));
        const auto report = testing::slurp(dir.path() / "out/report.csv");
        CHECK(report.find("X_baseline,sim,") != std::string::npos);
        REQUIRE(r.evaluation.size() == 1);
        CHECK(r.evaluation[0].matrix == "X_baseline");
    }

    SUBCASE("full run, rerun from cache") {
        auto cfg = load(dir, config_text());
        const auto first = Pipeline(cfg).run();
        for (const auto& name : matrix_stage_names())
            CHECK(fs::exists(dir.path() / "out/matrices" / (name + ".tsv")));
        for (const auto* list : {"A.txt", "IR.txt", "FR.txt", "BA.txt", "BFR.txt", "SA.txt", "SFR.txt",
                                 "golden.txt", "Gc.txt"})
            CHECK(fs::exists(dir.path() / "out" / list));
        CHECK(count_lines(dir.path() / "out/SA.txt") == 8);
        CHECK(count_lines(dir.path() / "out/BA.txt") == 8);
        for (const auto& e : first.events) CHECK_FALSE(e.cache_hit);

        std::map<std::string, std::string> before;
        for (const auto& a : first.artifacts) before[a.path] = testing::slurp(dir.path() / "out" / a.path);
        const auto report = testing::slurp(dir.path() / "out/report.csv");
        const auto manifest = testing::slurp(dir.path() / "out/manifest.json");

        const auto second = Pipeline(cfg).run();
        CHECK_FALSE(second.events.empty());
        for (const auto& e : second.events) CHECK(e.cache_hit);
        for (const auto& [path, content] : before) CHECK(testing::slurp(dir.path() / "out" / path) == content);
        CHECK(testing::slurp(dir.path() / "out/report.csv") == report);
        CHECK(testing::slurp(dir.path() / "out/manifest.json") == manifest);

        std::map<std::string, std::size_t> ctx;
        for (const auto& a : first.artifacts) ctx[a.name] = a.context_words;
        CHECK(ctx["X_SA"] == 8);
        CHECK(ctx["X_BA"] == 8);
        CHECK(ctx["X_SA_Gc"] >= 8);
        CHECK(ctx["X_SA_Gc"] <= 8 + ctx["Gc"]);

        // A fresh computation in another directory yields the cached provenance.
        auto fresh_cfg = cfg;
        fresh_cfg.out_dir = dir.path() / "fresh";
        const auto fresh = Pipeline(fresh_cfg).run({"X_SA"});
        for (const auto& a : fresh.artifacts)
            for (const auto& b : first.artifacts)
                if (a.name == b.name) CHECK(a.provenance == b.provenance);
    }

    SUBCASE("two corpora feed the common golden set") {
        auto cfg = load(dir, config_text("corpus_b = b.vert\n"));
        const auto r = Pipeline(cfg).run({"X_SA_Gc"});
        std::set<std::string> stages;
        for (const auto& e : r.events) stages.insert(e.stage);
        CHECK(stages.count("golden.a"));
        CHECK(stages.count("golden.b"));
        const auto m = load_matrix(dir.path() / "out/matrices/X_SA_Gc.tsv");
        std::ifstream sa(dir.path() / "out/SA.txt"), gc(dir.path() / "out/Gc.txt");
        std::set<std::string> words;
        std::string w;
        while (sa >> w) words.insert(w);
        while (gc >> w) words.insert(w);
        CHECK(m.n_cols() == words.size());
        CHECK(m.n_cols() >= 8);
    }

    SUBCASE("provenance follows the decay parameter") {
        auto a = load(dir, config_text());
        auto b = load(dir, config_text("", 0.2));
        b.out_dir = dir.path() / "out2";
        const auto ra = Pipeline(a).run({"X_A"});
        const auto rb = Pipeline(b).run({"X_A"});
        CHECK(ra.artifacts[0].provenance != rb.artifacts[0].provenance);
        CHECK(ra.inputs == rb.inputs);
    }

    SUBCASE("missing inputs name the stage") {
        auto cfg = load(dir, config_text());
        cfg.embeddings = dir.path() / "nope.txt";
        CHECK_THROWS_WITH(Pipeline(cfg).run({"X_FR"}), doctest::Contains("stage criteria"));
        auto cfg2 = load(dir, config_text());
        cfg2.testsets = {dir.path() / "missing.tsv"};
        CHECK_THROWS_WITH(Pipeline(cfg2).run({"X_A", "eval"}), doctest::Contains("stage eval"));
        CHECK_THROWS(Pipeline(load(dir, config_text())).run({"X_unknown"}));
    }

    SUBCASE("N_S larger than the context set") {
        auto cfg = load(dir, config_text());
        cfg.n_s = 1000;
        CHECK_THROWS_WITH(Pipeline(cfg).run({"X_SA"}), doctest::Contains("N_S"));
    }
}
