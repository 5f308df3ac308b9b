#include "xvec/rules.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "xvec/util.hpp"

namespace xvec {

bool Condition::matches(double x) const {
    switch (cmp) {
        case Comparator::Gt: return x > lo;
        case Comparator::Ge: return x >= lo;
        case Comparator::Le: return x <= lo;
        case Comparator::Lt: return x < lo;
        case Comparator::Range: return lo <= x && x <= hi;
    }
    return false;
}

std::string Condition::to_string() const {
    const std::string name(criterion_name(criterion));
    // Shortest text that reads back to the same double.
    const auto num = [](double v) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, res.ptr);
    };
    switch (cmp) {
        case Comparator::Gt: return name + ">" + num(lo);
        case Comparator::Ge: return name + ">=" + num(lo);
        case Comparator::Le: return name + "<=" + num(lo);
        case Comparator::Lt: return name + "<" + num(lo);
        case Comparator::Range: return num(lo) + "<=" + name + "<=" + num(hi);
    }
    return name;
}

bool Rule::matches(const CriteriaRow& row, bool normalized) const {
    return std::all_of(conjuncts.begin(), conjuncts.end(), [&](const Condition& c) {
        return c.matches(row.value(c.criterion, normalized));
    });
}

std::string Rule::to_string() const {
    std::string out = action == RuleAction::Select ? "SELECT: " : "UNSELECT: ";
    if (conjuncts.empty()) return out + "*";
    for (std::size_t i = 0; i < conjuncts.size(); ++i) {
        if (i > 0) out += " & ";
        out += conjuncts[i].to_string();
    }
    return out;
}

bool RuleSet::selects(const CriteriaRow& row) const {
    const bool normalized = scale == RuleScale::Normalized;
    for (const auto& r : rules)
        if (r.matches(row, normalized)) return r.action == RuleAction::Select;
    return false;
}

std::vector<std::string> evaluate_rule_set(const RuleSet& rs, const CriteriaTable& table) {
    if (rs.rules.empty()) throw std::invalid_argument("rule set '" + rs.name + "' is empty");
    if (rs.scale == RuleScale::Normalized && !table.has_normalized())
        throw std::invalid_argument("rule set '" + rs.name +
                                    "' needs normalized criteria, table has raw values only");
    std::vector<std::string> out;
    for (const auto& row : table.rows())
        if (rs.selects(row)) out.push_back(row.word);
    return out;
}

namespace {

Condition gt(Criterion c, double v) { return {c, Comparator::Gt, v, 0.0}; }
Condition ge(Criterion c, double v) { return {c, Comparator::Ge, v, 0.0}; }
Condition lt(Criterion c, double v) { return {c, Comparator::Lt, v, 0.0}; }
Condition range(Criterion c, double lo, double hi) { return {c, Comparator::Range, lo, hi}; }

Rule select(std::vector<Condition> cs) { return {std::move(cs), RuleAction::Select}; }

std::map<std::string, RuleSet> make_builtins() {
    using enum Criterion;
    std::map<std::string, RuleSet> out;

    // The leading WF guard makes every later branch implicitly WF >= 5900.
    out["initial_raw"] = RuleSet{
        "initial_raw",
        RuleScale::Raw,
        {
            Rule{{lt(WF, 5900)}, RuleAction::Unselect},
            select({ge(WF, 11063), gt(NZ, 30)}),
            select({ge(WF, 8000), gt(WS, 700)}),
            select({range(WF, 6600, 11063), gt(WS, 763), gt(NZ, 39.5)}),
            select({range(WF, 6600, 11063), gt(WS, 643), gt(NZ, 54.5)}),
            select({range(WF, 6600, 11063), gt(WS, 746), range(NZ, 39.5, 54.5)}),
            select({range(WF, 5900, 6600), gt(WS, 763), ge(NZ, 54.5)}),
            select({gt(WF, 7000), ge(NZ, 54.5)}),
        }};

    out["final_normalized"] = RuleSet{
        "final_normalized", RuleScale::Normalized, {select({gt(WS, 0.6), gt(NZ, 0.24), gt(WF, 0.0015)})}};

    out["rule_base_1"] = RuleSet{"rule_base_1",
                                 RuleScale::Raw,
                                 {select({gt(WS, 700), gt(WF, 6000)}),
                                  select({range(WS, 600, 700), gt(WF, 8000)})}};
    out["rule_base_2"] = RuleSet{"rule_base_2",
                                 RuleScale::Raw,
                                 {select({gt(WS, 700), gt(NZ, 40)}),
                                  select({range(WS, 600, 700), gt(NZ, 50)})}};
    out["rule_base_3"] = RuleSet{"rule_base_3",
                                 RuleScale::Raw,
                                 {select({gt(WF, 8000), gt(NZ, 30)}),
                                  select({range(WF, 6000, 8000), gt(NZ, 50)})}};
    out["final_raw"] = RuleSet{
        "final_raw", RuleScale::Raw, {select({gt(WS, 700), gt(NZ, 40), gt(WF, 8000)})}};
    return out;
}

}  // namespace

const std::map<std::string, RuleSet>& builtin_rule_sets() {
    static const std::map<std::string, RuleSet> sets = make_builtins();
    return sets;
}

std::optional<RuleSet> find_builtin_rule_set(std::string_view name) {
    const auto& sets = builtin_rule_sets();
    auto it = sets.find(std::string(name));
    if (it == sets.end()) return std::nullopt;
    return it->second;
}

void write_rule_set(const RuleSet& rs, std::ostream& out) {
    out << "# scale: " << (rs.scale == RuleScale::Raw ? "raw" : "normalized") << '\n';
    for (const auto& r : rs.rules) out << r.to_string() << '\n';
}

namespace {

Condition parse_condition(std::string_view text) {
    text = trim(text);
    const auto fail = [&] {
        return std::invalid_argument("bad rule condition '" + std::string(text) + "'");
    };
    // lo<=X<=hi
    if (const auto first = text.find("<="); first != std::string_view::npos) {
        const auto second = text.find("<=", first + 2);
        if (second != std::string_view::npos) {
            double lo, hi;
            auto crit = parse_criterion(text.substr(first + 2, second - first - 2));
            if (!crit || !parse_double(text.substr(0, first), lo) ||
                !parse_double(text.substr(second + 2), hi) || lo > hi)
                throw fail();
            return range(*crit, lo, hi);
        }
    }
    static const std::pair<std::string_view, Comparator> ops[] = {
        {">=", Comparator::Ge}, {"<=", Comparator::Le}, {">", Comparator::Gt}, {"<", Comparator::Lt}};
    for (const auto& [op, cmp] : ops) {
        const auto at = text.find(op);
        if (at == std::string_view::npos) continue;
        auto crit = parse_criterion(text.substr(0, at));
        double v;
        if (!crit || !parse_double(text.substr(at + op.size()), v)) throw fail();
        return {*crit, cmp, v, 0.0};
    }
    throw fail();
}

}  // namespace

Rule parse_rule(std::string_view line) {
    line = trim(line);
    const auto colon = line.find(':');
    if (colon == std::string_view::npos)
        throw std::invalid_argument("rule needs 'SELECT:' or 'UNSELECT:' prefix: " + std::string(line));
    const std::string action = to_lower(trim(line.substr(0, colon)));
    Rule rule;
    if (action == "select") rule.action = RuleAction::Select;
    else if (action == "unselect") rule.action = RuleAction::Unselect;
    else throw std::invalid_argument("unknown rule action '" + action + "'");
    const auto body = trim(line.substr(colon + 1));
    if (body == "*") return rule;
    for (auto part : split(body, '&')) rule.conjuncts.push_back(parse_condition(part));
    return rule;
}

RuleSet read_rule_set(std::istream& in, std::string name) {
    RuleSet rs{std::move(name), RuleScale::Normalized, {}};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = trim(line);
        if (view.empty()) continue;
        if (view.front() == '#') {
            const auto lower = to_lower(view);
            if (lower.find("scale: raw") != std::string::npos) rs.scale = RuleScale::Raw;
            else if (lower.find("scale: normalized") != std::string::npos) rs.scale = RuleScale::Normalized;
            continue;
        }
        try {
            rs.rules.push_back(parse_rule(view));
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    if (rs.rules.empty()) throw std::invalid_argument("rule file contains no rules");
    return rs;
}

int TreeNode::majority() const {
    int best = 0;
    for (int k = 1; k < 3; ++k)
        if (counts[static_cast<std::size_t>(k)] > counts[static_cast<std::size_t>(best)]) best = k;
    return best + 1;
}

namespace {

double gini_of(const std::array<std::size_t, 3>& counts) {
    const double n = static_cast<double>(counts[0] + counts[1] + counts[2]);
    if (n == 0.0) return 0.0;
    double sum_sq = 0.0;
    for (auto c : counts) sum_sq += (static_cast<double>(c) / n) * (static_cast<double>(c) / n);
    return 1.0 - sum_sq;
}

}  // namespace

double TreeNode::gini() const { return gini_of(counts); }

std::size_t DecisionTree::leaf_of(const CriteriaRow& row) const {
    if (nodes_.empty()) throw std::logic_error("empty decision tree");
    std::size_t i = 0;
    while (!nodes_[i].leaf) {
        const auto& n = nodes_[i];
        i = static_cast<std::size_t>(row.value(n.criterion, normalized_) <= n.threshold ? n.left
                                                                                        : n.right);
    }
    return i;
}

std::size_t DecisionTree::depth() const {
    std::function<std::size_t(int)> rec = [&](int i) -> std::size_t {
        const auto& n = nodes_[static_cast<std::size_t>(i)];
        if (n.leaf) return 0;
        return 1 + std::max(rec(n.left), rec(n.right));
    };
    return nodes_.empty() ? 0 : rec(0);
}

namespace {

struct Sample {
    std::array<double, 3> x;  // indexed by Criterion
    int label;
};

class TreeBuilder {
public:
    TreeBuilder(std::vector<Sample> samples, const TreeOptions& options)
        : samples_(std::move(samples)), options_(options) {}

    std::vector<TreeNode> build() {
        std::vector<std::size_t> all(samples_.size());
        std::iota(all.begin(), all.end(), 0);
        grow(all, 0);
        return std::move(nodes_);
    }

private:
    std::array<std::size_t, 3> count(const std::vector<std::size_t>& idx) const {
        std::array<std::size_t, 3> c{};
        for (auto i : idx) ++c[static_cast<std::size_t>(samples_[i].label - 1)];
        return c;
    }

    int grow(const std::vector<std::size_t>& idx, std::size_t depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(TreeNode{});
        nodes_.back().counts = count(idx);
        const double parent_gini = gini_of(nodes_.back().counts);
        if (depth >= options_.max_depth || parent_gini == 0.0 || idx.size() < 2 * options_.min_leaf)
            return id;

        double best_gini = parent_gini;
        std::optional<std::pair<Criterion, double>> best;
        const double n = static_cast<double>(idx.size());
        for (Criterion c : kCriteria) {
            const auto k = static_cast<std::size_t>(c);
            std::vector<std::size_t> sorted = idx;
            std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
                return samples_[a].x[k] < samples_[b].x[k];
            });
            std::array<std::size_t, 3> left{}, right = count(sorted);
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                const auto lab = static_cast<std::size_t>(samples_[sorted[i]].label - 1);
                ++left[lab];
                --right[lab];
                const double a = samples_[sorted[i]].x[k], b = samples_[sorted[i + 1]].x[k];
                if (a == b) continue;
                const std::size_t n_left = i + 1, n_right = sorted.size() - n_left;
                if (n_left < options_.min_leaf || n_right < options_.min_leaf) continue;
                const double g = (static_cast<double>(n_left) * gini_of(left) +
                                  static_cast<double>(n_right) * gini_of(right)) /
                                 n;
                if (g < best_gini - 1e-12) {
                    best_gini = g;
                    best = std::make_pair(c, a + (b - a) / 2.0);
                }
            }
        }
        if (!best) return id;

        const auto k = static_cast<std::size_t>(best->first);
        std::vector<std::size_t> li, ri;
        for (auto i : idx) (samples_[i].x[k] <= best->second ? li : ri).push_back(i);
        nodes_[static_cast<std::size_t>(id)].leaf = false;
        nodes_[static_cast<std::size_t>(id)].criterion = best->first;
        nodes_[static_cast<std::size_t>(id)].threshold = best->second;
        const int l = grow(li, depth + 1);
        const int r = grow(ri, depth + 1);
        nodes_[static_cast<std::size_t>(id)].left = l;
        nodes_[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    std::vector<Sample> samples_;
    TreeOptions options_;
    std::vector<TreeNode> nodes_;
};

}  // namespace

DecisionTree train_tree(const CriteriaTable& table, const std::set<std::string>& words,
                        std::optional<Pos> pos_filter, const TreeOptions& options) {
    if (options.normalized && !table.has_normalized())
        throw std::invalid_argument("normalized tree requested on a raw criteria table");
    std::vector<Sample> samples;
    for (const auto& row : table.rows()) {
        if (!words.count(row.word)) continue;
        if (pos_filter && Term::parse(row.word).pos != *pos_filter) continue;
        if (!row.label)
            throw std::invalid_argument("training word " + row.word + " has no class label");
        samples.push_back({{row.value(Criterion::WS, options.normalized),
                            row.value(Criterion::WF, options.normalized),
                            row.value(Criterion::NZ, options.normalized)},
                           *row.label});
    }
    if (samples.empty() || samples.size() < options.min_leaf)
        throw std::invalid_argument("too few labeled samples (" + std::to_string(samples.size()) +
                                    ") for min_leaf " + std::to_string(options.min_leaf));
    return DecisionTree(TreeBuilder(std::move(samples), options).build(), options.normalized);
}

RuleSet tree_to_rules(const DecisionTree& tree, std::string name) {
    RuleSet rs{std::move(name), tree.normalized() ? RuleScale::Normalized : RuleScale::Raw, {}};
    std::vector<Condition> path;
    std::function<void(int)> walk = [&](int i) {
        const auto& n = tree.nodes()[static_cast<std::size_t>(i)];
        if (n.leaf) {
            const int label = n.majority();
            rs.rules.push_back({path, label == 3 ? RuleAction::Unselect : RuleAction::Select});
            return;
        }
        path.push_back({n.criterion, Comparator::Le, n.threshold, 0.0});
        walk(n.left);
        path.back().cmp = Comparator::Gt;
        walk(n.right);
        path.pop_back();
    };
    if (!tree.nodes().empty()) walk(0);
    return rs;
}

nlohmann::json tree_to_json(const DecisionTree& tree) {
    std::function<nlohmann::json(int)> rec = [&](int i) {
        const auto& n = tree.nodes()[static_cast<std::size_t>(i)];
        nlohmann::json j;
        j["counts"] = n.counts;
        if (n.leaf) {
            j["label"] = n.majority();
            return j;
        }
        j["criterion"] = std::string(criterion_name(n.criterion));
        j["threshold"] = n.threshold;
        j["left"] = rec(n.left);
        j["right"] = rec(n.right);
        return j;
    };
    nlohmann::json out;
    out["normalized"] = tree.normalized();
    out["root"] = tree.nodes().empty() ? nlohmann::json() : rec(0);
    return out;
}

DecisionTree tree_from_json(const nlohmann::json& j) {
    std::vector<TreeNode> nodes;
    std::function<int(const nlohmann::json&)> rec = [&](const nlohmann::json& n) -> int {
        const int id = static_cast<int>(nodes.size());
        nodes.push_back(TreeNode{});
        nodes.back().counts = n.at("counts").get<std::array<std::size_t, 3>>();
        if (!n.contains("criterion")) return id;
        auto crit = parse_criterion(n.at("criterion").get<std::string>());
        if (!crit) throw std::invalid_argument("bad criterion in tree json");
        nodes[static_cast<std::size_t>(id)].leaf = false;
        nodes[static_cast<std::size_t>(id)].criterion = *crit;
        nodes[static_cast<std::size_t>(id)].threshold = n.at("threshold").get<double>();
        const int l = rec(n.at("left"));
        const int r = rec(n.at("right"));
        nodes[static_cast<std::size_t>(id)].left = l;
        nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    };
    if (!j.at("root").is_null()) rec(j.at("root"));
    return DecisionTree(std::move(nodes), j.value("normalized", false));
}

}  // namespace xvec
