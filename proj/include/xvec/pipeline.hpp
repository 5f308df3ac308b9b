#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "xvec/bpso.hpp"
#include "xvec/corpus.hpp"
#include "xvec/criteria.hpp"
#include "xvec/eval.hpp"
#include "xvec/matrix.hpp"
#include "xvec/rules.hpp"
#include "xvec/wordsel.hpp"

namespace xvec {

struct PipelineConfig {
    std::filesystem::path corpus_a;
    std::optional<std::filesystem::path> corpus_b;
    std::filesystem::path embeddings;
    std::vector<std::filesystem::path> testsets;
    std::filesystem::path out_dir = "out";

    PosCaps caps;
    double decay = 0.1;
    std::size_t max_distance = 0;
    std::size_t window = 10;

    std::size_t candidates = 10000;
    std::size_t a_size = 5000;
    std::size_t m = 3000;
    double zero_eps = 0.01;
    WsAggregation aggregation = WsAggregation::Sum;

    std::string ir_rules = "initial_raw";
    std::string fr_rules = "final_normalized";
    std::size_t tree_max_depth = 6;
    std::size_t tree_min_leaf = 20;

    SwarmConfig swarm{};  // n_select is N_B
    std::size_t bpso_train_size = 2000;
    std::size_t golden_runs = 20;
    std::size_t golden_keep = 3;

    std::size_t n_s = 1000;
    std::size_t wordsel_train_size = 18000;
    InfluenceMethod wordsel_method = InfluenceMethod::Incremental;

    std::uint64_t seed = 42;
    std::string baseline = "X_baseline";

    // INI-style: [section] then key = value. Relative paths resolve against
    // `base_dir`.
    static PipelineConfig parse(std::istream& in, const std::filesystem::path& base_dir);
    static PipelineConfig load(const std::filesystem::path& path);
};

// Matrix names, in build and report order.
const std::vector<std::string>& matrix_stage_names();

struct ArtifactRecord {
    std::string name;
    std::string kind;  // "matrix" or "wordlist"
    std::string recipe;
    std::string path;  // relative to out_dir
    std::string provenance;
    std::size_t context_words = 0;
    std::size_t rows = 0;
    std::size_t nnz = 0;
    std::string content_sha256;
};

struct StageEvent {
    std::string stage;
    std::string key;
    bool cache_hit = false;
};

struct RunResult {
    std::vector<ArtifactRecord> artifacts;
    std::vector<StageEvent> events;
    std::vector<EvalEntry> evaluation;
    std::map<std::string, std::string> inputs;  // input name -> sha256
};

// Writes the manifest as JSON. Throws on an empty artifact list.
void emit_manifest(const RunResult& result, std::ostream& out);

class Pipeline {
public:
    explicit Pipeline(PipelineConfig cfg);
    ~Pipeline();

    // `stages` may name matrices (X_A, X_SA_Gc, ...), "trees" and "eval";
    // empty means everything. Prerequisites are built as needed.
    RunResult run(const std::set<std::string>& stages = {});

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace xvec
