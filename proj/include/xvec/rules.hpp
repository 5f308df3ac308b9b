#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "xvec/corpus.hpp"
#include "xvec/criteria.hpp"

namespace xvec {

enum class Comparator { Gt, Ge, Le, Lt, Range };

// Range is inclusive on both ends: lo <= x <= hi.
struct Condition {
    Criterion criterion = Criterion::WS;
    Comparator cmp = Comparator::Gt;
    double lo = 0.0;
    double hi = 0.0;

    bool matches(double x) const;
    std::string to_string() const;
    bool operator==(const Condition&) const = default;
};

enum class RuleAction { Select, Unselect };

struct Rule {
    std::vector<Condition> conjuncts;  // empty: always matches
    RuleAction action = RuleAction::Select;

    bool matches(const CriteriaRow& row, bool normalized) const;
    std::string to_string() const;
    bool operator==(const Rule&) const = default;
};

enum class RuleScale { Raw, Normalized };

// Ordered IF / ELSE IF chain: the first rule whose conjuncts all hold
// decides; a word no rule matches is not selected.
struct RuleSet {
    std::string name;
    RuleScale scale = RuleScale::Normalized;
    std::vector<Rule> rules;

    bool selects(const CriteriaRow& row) const;
};

// Words of `table` (table order) the rule set selects. Throws when the
// rule set needs normalized values and the table has none.
std::vector<std::string> evaluate_rule_set(const RuleSet& rs, const CriteriaTable& table);

// initial_raw, final_normalized, rule_base_1..3, final_raw.
const std::map<std::string, RuleSet>& builtin_rule_sets();
std::optional<RuleSet> find_builtin_rule_set(std::string_view name);

// One rule per line: "SELECT: WS>0.6 & NZ>0.24 & WF>0.0015",
// "UNSELECT: WF<5900", "SELECT: 600<=WS<=700 & WF>8000", "SELECT: *".
// A "# scale: raw|normalized" comment sets the scale.
void write_rule_set(const RuleSet& rs, std::ostream& out);
RuleSet read_rule_set(std::istream& in, std::string name = "file");
Rule parse_rule(std::string_view line);

struct TreeNode {
    bool leaf = true;
    Criterion criterion = Criterion::WS;
    double threshold = 0.0;  // left: x <= threshold, right: x > threshold
    int left = -1;
    int right = -1;
    std::array<std::size_t, 3> counts{};  // samples of labels 1, 2, 3
    int majority() const;                 // ties go to the lower label
    double gini() const;
};

class DecisionTree {
public:
    DecisionTree() = default;
    DecisionTree(std::vector<TreeNode> nodes, bool normalized)
        : nodes_(std::move(nodes)), normalized_(normalized) {}

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    bool normalized() const noexcept { return normalized_; }
    std::size_t leaf_of(const CriteriaRow& row) const;
    int classify(const CriteriaRow& row) const { return nodes_[leaf_of(row)].majority(); }
    std::size_t depth() const;

private:
    std::vector<TreeNode> nodes_;
    bool normalized_ = false;
};

struct TreeOptions {
    std::size_t max_depth = 6;
    std::size_t min_leaf = 20;
    bool normalized = false;
};

// Greedy CART with Gini impurity over {WS, WF, NZ} for the labeled words of
// `words` present in `table`, optionally restricted to one POS class.
DecisionTree train_tree(const CriteriaTable& table, const std::set<std::string>& words,
                        std::optional<Pos> pos_filter, const TreeOptions& options = {});

// One rule per leaf; labels 1 and 2 select, 3 unselects.
RuleSet tree_to_rules(const DecisionTree& tree, std::string name = "tree");

nlohmann::json tree_to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const nlohmann::json& j);

}  // namespace xvec
