#include "rockmass/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace rockmass::models {

using nlohmann::json;

namespace {

const std::vector<std::string> kKindNames = {
    "knn",  "decision_tree", "random_forest",     "extra_trees", "gbt",
    "logistic_regression", "linear_regression", "dummy",       "voting"};

json defaults_for(ModelKind kind) {
    switch (kind) {
        case ModelKind::Knn:
            return {{"k", 5}, {"distance_metric", "manhattan"}, {"weights", "uniform"}};
        case ModelKind::DecisionTree:
            return {{"max_depth", 20}, {"min_samples_leaf", 1}};
        case ModelKind::RandomForest:
        case ModelKind::ExtraTrees:
            return {{"n_trees", 100}, {"max_depth", 25}, {"min_samples_leaf", 1},
                    {"max_features", "sqrt"}};
        case ModelKind::GradientBoostedTrees:
            return {{"n_rounds", 50}, {"learning_rate", 0.1}, {"max_depth", 3},
                    {"min_samples_leaf", 1}, {"max_features", "all"}};
        case ModelKind::LogisticRegression:
            return {{"learning_rate", 0.5}, {"l2", 1e-4}, {"max_iter", 500}, {"tol", 1e-6}};
        case ModelKind::LinearRegression:
            return {{"ridge", 1e-8}};
        case ModelKind::Dummy:
            return json::object();
        case ModelKind::Voting:
            return {{"members", json::array()}, {"vote_mode", "soft"}};
    }
    return json::object();
}

int hyper_int(const json& h, const char* key) { return h.at(key).get<int>(); }
double hyper_double(const json& h, const char* key) { return h.at(key).get<double>(); }

std::size_t features_per_node(const json& h, std::size_t n_features) {
    const auto& mf = h.at("max_features");
    if (mf.is_string()) {
        std::string s = mf.get<std::string>();
        if (s == "all") return n_features;
        if (s == "sqrt")
            return std::max<std::size_t>(
                1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features))));
        throw Error("BadHyperparameter", "max_features: " + s);
    }
    int m = mf.get<int>();
    if (m < 1) throw Error("BadHyperparameter", "max_features must be >= 1");
    return std::min<std::size_t>(static_cast<std::size_t>(m), n_features);
}

}  // namespace

ModelKind kind_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i)
        if (kKindNames[i] == name) return static_cast<ModelKind>(i);
    throw Error("UnknownKind", "unknown model kind: " + name);
}

const std::string& kind_name(ModelKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

json ModelSpec::to_json() const {
    return {{"kind", kind_name(kind)},
            {"task", task == Task::Classification ? "classification" : "regression"},
            {"hyper", hyper},
            {"seed", seed}};
}

ModelSpec ModelSpec::from_json(const json& j) {
    ModelSpec s;
    s.kind = kind_from_name(j.at("kind").get<std::string>());
    std::string task = j.value("task", "classification");
    if (task != "classification" && task != "regression")
        throw Error("BadHyperparameter", "task: " + task);
    s.task = task == "classification" ? Task::Classification : Task::Regression;
    s.hyper = j.value("hyper", json::object());
    s.seed = j.value("seed", std::uint64_t{0});
    return s;
}

json ModelSpec::resolved_hyper() const {
    json resolved = defaults_for(kind);
    for (auto& [key, value] : hyper.items()) {
        if (!resolved.contains(key))
            throw Error("BadHyperparameter", kind_name(kind) + " has no hyperparameter " + key);
        resolved[key] = value;
    }
    return resolved;
}

// ---------------------------------------------------------------------------
// implementation backends

namespace detail {

struct ModelImpl {
    virtual ~ModelImpl() = default;
    // classification backends fill proba; regression backends fill value
    virtual std::vector<std::vector<double>> proba(const DataMatrix& rows) const {
        throw Error("BadHyperparameter", "not a classifier");
    }
    virtual std::vector<double> value(const DataMatrix& rows) const {
        throw Error("BadHyperparameter", "not a regressor");
    }
    // hard labels default to argmax of proba; KNN and voting override for
    // their documented tie-breaks
    virtual std::vector<int> labels(const DataMatrix& rows) const {
        auto p = proba(rows);
        std::vector<int> out(p.size());
        for (std::size_t i = 0; i < p.size(); ++i)
            out[i] = static_cast<int>(std::max_element(p[i].begin(), p[i].end()) - p[i].begin());
        return out;
    }
    virtual json state() const = 0;
    virtual std::vector<double> importances(std::size_t) const { return {}; }
};

namespace {

// ---- trees ----------------------------------------------------------------

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    std::vector<double> leaf;  // class distribution or single value
};

struct Tree {
    std::vector<TreeNode> nodes;

    const std::vector<double>& apply(const double* row) const {
        int i = 0;
        while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
            const auto& n = nodes[static_cast<std::size_t>(i)];
            i = row[n.feature] <= n.threshold ? n.left : n.right;
        }
        return nodes[static_cast<std::size_t>(i)].leaf;
    }

    json to_json() const {
        json arr = json::array();
        for (const auto& n : nodes)
            arr.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right},
                           {"v", n.leaf}});
        return arr;
    }

    static Tree from_json(const json& arr) {
        Tree t;
        for (const auto& j : arr) {
            TreeNode n;
            n.feature = j.at("f").get<int>();
            n.threshold = j.at("t").get<double>();
            n.left = j.at("l").get<int>();
            n.right = j.at("r").get<int>();
            n.leaf = j.at("v").get<std::vector<double>>();
            t.nodes.push_back(std::move(n));
        }
        return t;
    }
};

struct TreeParams {
    int max_depth = 20;
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;    // 0 = all
    bool random_thresholds = false;  // extra-trees split mode
    int n_classes = 0;               // 0 = regression targets
};

// Grows one tree. Classification uses Gini, regression variance; leaf values
// are class distributions or target means. Gain per feature feeds the
// importance accounting.
class TreeBuilder {
public:
    TreeBuilder(const DataMatrix& x, const std::vector<int>* yc, const std::vector<double>* yr,
                const TreeParams& params, Rng& rng, std::vector<double>* importance)
        : x_(x), yc_(yc), yr_(yr), p_(params), rng_(rng), importance_(importance) {}

    Tree build(const std::vector<std::size_t>& indices) {
        Tree t;
        grow(t, indices, 0);
        return t;
    }

private:
    const DataMatrix& x_;
    const std::vector<int>* yc_;
    const std::vector<double>* yr_;
    TreeParams p_;
    Rng& rng_;
    std::vector<double>* importance_;

    double node_impurity(const std::vector<std::size_t>& idx) const {
        double n = static_cast<double>(idx.size());
        if (p_.n_classes > 0) {
            std::vector<double> counts(static_cast<std::size_t>(p_.n_classes), 0.0);
            for (auto i : idx) counts[static_cast<std::size_t>((*yc_)[i])] += 1.0;
            double g = 1.0;
            for (double c : counts) g -= (c / n) * (c / n);
            return g;
        }
        double s = 0.0, ss = 0.0;
        for (auto i : idx) {
            double v = (*yr_)[i];
            s += v;
            ss += v * v;
        }
        return ss / n - (s / n) * (s / n);
    }

    std::vector<double> leaf_value(const std::vector<std::size_t>& idx) const {
        if (p_.n_classes > 0) {
            std::vector<double> dist(static_cast<std::size_t>(p_.n_classes), 0.0);
            for (auto i : idx) dist[static_cast<std::size_t>((*yc_)[i])] += 1.0;
            for (double& d : dist) d /= static_cast<double>(idx.size());
            return dist;
        }
        double s = 0.0;
        for (auto i : idx) s += (*yr_)[i];
        return {s / static_cast<double>(idx.size())};
    }

    std::vector<std::size_t> candidate_features() {
        std::size_t d = x_.n_cols;
        std::size_t m = p_.max_features == 0 ? d : std::min(p_.max_features, d);
        if (m == d) {
            std::vector<std::size_t> all(d);
            std::iota(all.begin(), all.end(), 0);
            return all;
        }
        std::vector<std::size_t> pool(d);
        std::iota(pool.begin(), pool.end(), 0);
        for (std::size_t i = 0; i < m; ++i)
            std::swap(pool[i], pool[i + rng_.uniform_int(d - i)]);
        pool.resize(m);
        return pool;
    }

    struct Split {
        bool valid = false;
        std::size_t feature = 0;
        double threshold = 0.0;
        double impurity_decrease = 0.0;
        std::vector<std::size_t> left, right;
    };

    Split best_exact_split(const std::vector<std::size_t>& idx, std::size_t f,
                           double parent_impurity) const {
        Split best;
        std::vector<std::pair<double, std::size_t>> vals;
        vals.reserve(idx.size());
        for (auto i : idx) vals.emplace_back(x_.at(i, f), i);
        std::sort(vals.begin(), vals.end());
        double n = static_cast<double>(idx.size());

        if (p_.n_classes > 0) {
            std::vector<double> left_counts(static_cast<std::size_t>(p_.n_classes), 0.0);
            std::vector<double> total(static_cast<std::size_t>(p_.n_classes), 0.0);
            for (auto i : idx) total[static_cast<std::size_t>((*yc_)[i])] += 1.0;
            for (std::size_t s = 0; s + 1 < vals.size(); ++s) {
                left_counts[static_cast<std::size_t>((*yc_)[vals[s].second])] += 1.0;
                if (vals[s].first == vals[s + 1].first) continue;
                double nl = static_cast<double>(s + 1), nr = n - nl;
                if (nl < static_cast<double>(p_.min_samples_leaf) ||
                    nr < static_cast<double>(p_.min_samples_leaf))
                    continue;
                double gl = 1.0, gr = 1.0;
                for (std::size_t c = 0; c < left_counts.size(); ++c) {
                    double lc = left_counts[c], rc = total[c] - lc;
                    gl -= (lc / nl) * (lc / nl);
                    gr -= (rc / nr) * (rc / nr);
                }
                double dec = parent_impurity - (nl / n) * gl - (nr / n) * gr;
                if (dec > best.impurity_decrease + 1e-15) {
                    best.valid = true;
                    best.feature = f;
                    best.threshold = 0.5 * (vals[s].first + vals[s + 1].first);
                    best.impurity_decrease = dec;
                }
            }
        } else {
            double total_s = 0.0;
            for (auto i : idx) total_s += (*yr_)[i];
            double ls = 0.0, lss = 0.0, tss = 0.0;
            for (auto i : idx) tss += (*yr_)[i] * (*yr_)[i];
            for (std::size_t s = 0; s + 1 < vals.size(); ++s) {
                double v = (*yr_)[vals[s].second];
                ls += v;
                lss += v * v;
                if (vals[s].first == vals[s + 1].first) continue;
                double nl = static_cast<double>(s + 1), nr = n - nl;
                if (nl < static_cast<double>(p_.min_samples_leaf) ||
                    nr < static_cast<double>(p_.min_samples_leaf))
                    continue;
                double rs = total_s - ls, rss = tss - lss;
                double vl = lss / nl - (ls / nl) * (ls / nl);
                double vr = rss / nr - (rs / nr) * (rs / nr);
                double dec = parent_impurity - (nl / n) * vl - (nr / n) * vr;
                if (dec > best.impurity_decrease + 1e-15) {
                    best.valid = true;
                    best.feature = f;
                    best.threshold = 0.5 * (vals[s].first + vals[s + 1].first);
                    best.impurity_decrease = dec;
                }
            }
        }
        return best;
    }

    Split random_split(const std::vector<std::size_t>& idx, std::size_t f,
                       double parent_impurity) {
        Split sp;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (auto i : idx) {
            lo = std::min(lo, x_.at(i, f));
            hi = std::max(hi, x_.at(i, f));
        }
        if (!(hi > lo)) return sp;
        double threshold = rng_.uniform_range(lo, hi);
        std::vector<std::size_t> left, right;
        for (auto i : idx) (x_.at(i, f) <= threshold ? left : right).push_back(i);
        if (left.size() < p_.min_samples_leaf || right.size() < p_.min_samples_leaf) return sp;
        double n = static_cast<double>(idx.size());
        double dec = parent_impurity - (static_cast<double>(left.size()) / n) * node_impurity(left) -
                     (static_cast<double>(right.size()) / n) * node_impurity(right);
        if (dec <= 1e-15) return sp;
        sp.valid = true;
        sp.feature = f;
        sp.threshold = threshold;
        sp.impurity_decrease = dec;
        sp.left = std::move(left);
        sp.right = std::move(right);
        return sp;
    }

    int grow(Tree& t, const std::vector<std::size_t>& idx, int depth) {
        int node_id = static_cast<int>(t.nodes.size());
        t.nodes.emplace_back();
        double impurity = node_impurity(idx);
        bool stop = depth >= p_.max_depth || idx.size() < 2 * p_.min_samples_leaf ||
                    impurity <= 1e-12;
        Split best;
        if (!stop) {
            for (auto f : candidate_features()) {
                auto sp = p_.random_thresholds ? random_split(idx, f, impurity)
                                               : best_exact_split(idx, f, impurity);
                if (sp.valid && sp.impurity_decrease > best.impurity_decrease) best = std::move(sp);
            }
        }
        if (!best.valid) {
            t.nodes[static_cast<std::size_t>(node_id)].leaf = leaf_value(idx);
            return node_id;
        }
        if (best.left.empty()) {  // exact split carries no partition yet
            for (auto i : idx)
                (x_.at(i, best.feature) <= best.threshold ? best.left : best.right).push_back(i);
        }
        if (importance_)
            (*importance_)[best.feature] += best.impurity_decrease * static_cast<double>(idx.size());
        int left = grow(t, best.left, depth + 1);
        int right = grow(t, best.right, depth + 1);
        auto& node = t.nodes[static_cast<std::size_t>(node_id)];
        node.feature = static_cast<int>(best.feature);
        node.threshold = best.threshold;
        node.left = left;
        node.right = right;
        return node_id;
    }
};

// ---- concrete models -------------------------------------------------------

struct DummyImpl : ModelImpl {
    std::vector<double> prior;  // classification
    int majority = 0;
    double mean = 0.0;  // regression
    bool classification = true;

    std::vector<std::vector<double>> proba(const DataMatrix& rows) const override {
        return std::vector<std::vector<double>>(rows.n_rows, prior);
    }
    std::vector<int> labels(const DataMatrix& rows) const override {
        return std::vector<int>(rows.n_rows, majority);
    }
    std::vector<double> value(const DataMatrix& rows) const override {
        return std::vector<double>(rows.n_rows, mean);
    }
    json state() const override {
        return {{"prior", prior}, {"majority", majority}, {"mean", mean},
                {"classification", classification}};
    }
};

struct KnnImpl : ModelImpl {
    DataMatrix train;
    std::vector<int> yc;
    std::vector<double> yr;
    int k = 5;
    bool manhattan = true;
    bool distance_weighted = false;
    int n_classes = 0;  // 0 = regression

    struct Neighbourhood {
        std::vector<double> dist;
        std::vector<std::size_t> idx;
    };

    Neighbourhood neighbours(const double* row) const {
        std::size_t n = train.n_rows;
        std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), n);
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double* t = train.row(i);
            double acc = 0.0;
            if (manhattan)
                for (std::size_t c = 0; c < train.n_cols; ++c) acc += std::abs(row[c] - t[c]);
            else {
                for (std::size_t c = 0; c < train.n_cols; ++c) {
                    double diff = row[c] - t[c];
                    acc += diff * diff;
                }
                acc = std::sqrt(acc);
            }
            d[i] = acc;
        }
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + static_cast<long>(kk), order.end(),
                          [&](std::size_t a, std::size_t b) {
                              return d[a] != d[b] ? d[a] < d[b] : a < b;
                          });
        Neighbourhood nb;
        for (std::size_t i = 0; i < kk; ++i) {
            nb.idx.push_back(order[i]);
            nb.dist.push_back(d[order[i]]);
        }
        return nb;
    }

    std::vector<std::vector<double>> proba(const DataMatrix& rows) const override {
        std::vector<std::vector<double>> out(rows.n_rows);
        for (std::size_t r = 0; r < rows.n_rows; ++r) {
            auto nb = neighbours(rows.row(r));
            std::vector<double> votes(static_cast<std::size_t>(n_classes), 0.0);
            double total = 0.0;
            for (std::size_t i = 0; i < nb.idx.size(); ++i) {
                double w = distance_weighted ? 1.0 / (nb.dist[i] + 1e-12) : 1.0;
                votes[static_cast<std::size_t>(yc[nb.idx[i]])] += w;
                total += w;
            }
            for (double& v : votes) v /= total;
            out[r] = std::move(votes);
        }
        return out;
    }

    std::vector<int> labels(const DataMatrix& rows) const override {
        std::vector<int> out(rows.n_rows);
        for (std::size_t r = 0; r < rows.n_rows; ++r) {
            auto nb = neighbours(rows.row(r));
            std::vector<double> votes(static_cast<std::size_t>(n_classes), 0.0);
            std::vector<double> sum_dist(static_cast<std::size_t>(n_classes), 0.0);
            for (std::size_t i = 0; i < nb.idx.size(); ++i) {
                double w = distance_weighted ? 1.0 / (nb.dist[i] + 1e-12) : 1.0;
                auto c = static_cast<std::size_t>(yc[nb.idx[i]]);
                votes[c] += w;
                sum_dist[c] += nb.dist[i];
            }
            // ties break toward the nearer summed distance, then class order
            std::size_t best = 0;
            bool seen = false;
            for (std::size_t c = 0; c < votes.size(); ++c) {
                if (votes[c] == 0.0) continue;
                if (!seen || votes[c] > votes[best] ||
                    (votes[c] == votes[best] && sum_dist[c] < sum_dist[best])) {
                    best = c;
                    seen = true;
                }
            }
            out[r] = static_cast<int>(best);
        }
        return out;
    }

    std::vector<double> value(const DataMatrix& rows) const override {
        std::vector<double> out(rows.n_rows);
        for (std::size_t r = 0; r < rows.n_rows; ++r) {
            auto nb = neighbours(rows.row(r));
            double s = 0.0, wsum = 0.0;
            for (std::size_t i = 0; i < nb.idx.size(); ++i) {
                double w = distance_weighted ? 1.0 / (nb.dist[i] + 1e-12) : 1.0;
                s += w * yr[nb.idx[i]];
                wsum += w;
            }
            out[r] = s / wsum;
        }
        return out;
    }

    json state() const override {
        return {{"x", train.values},     {"n_rows", train.n_rows}, {"n_cols", train.n_cols},
                {"yc", yc},              {"yr", yr},               {"k", k},
                {"manhattan", manhattan}, {"distance_weighted", distance_weighted},
                {"n_classes", n_classes}};
    }
};

struct ForestImpl : ModelImpl {
    std::vector<Tree> trees;
    int n_classes = 0;
    std::vector<double> importance;

    std::vector<std::vector<double>> proba(const DataMatrix& rows) const override {
        std::vector<std::vector<double>> out(
            rows.n_rows, std::vector<double>(static_cast<std::size_t>(n_classes), 0.0));
        for (std::size_t r = 0; r < rows.n_rows; ++r) {
            for (const auto& t : trees) {
                const auto& leaf = t.apply(rows.row(r));
                for (std::size_t c = 0; c < leaf.size(); ++c) out[r][c] += leaf[c];
            }
            for (double& v : out[r]) v /= static_cast<double>(trees.size());
        }
        return out;
    }

    std::vector<double> value(const DataMatrix& rows) const override {
        std::vector<double> out(rows.n_rows, 0.0);
        for (std::size_t r = 0; r < rows.n_rows; ++r) {
            for (const auto& t : trees) out[r] += t.apply(rows.row(r))[0];
            out[r] /= static_cast<double>(trees.size());
        }
        return out;
    }

    json state() const override {
        json arr = json::array();
        for (const auto& t : trees) arr.push_back(t.to_json());
        return {{"trees", arr}, {"n_classes", n_classes}, {"importance", importance}};
    }

    std::vector<double> importances(std::size_t n_features) const override {
        std::vector<double> norm = importance;
        norm.resize(n_features, 0.0);
        double s = std::accumulate(norm.begin(), norm.end(), 0.0);
        if (s > 0.0)
            for (double& v : norm) v /= s;
        return norm;
    }
};

struct GbtImpl : ModelImpl {
    // trees[round][class] for classification; trees[round][0] for regression
    std::vector<std::vector<Tree>> trees;
    double learning_rate = 0.1;
    double base_score = 0.0;  // regression init (label mean)
    std::vector<double> base_logits;
    int n_classes = 0;
    std::vector<double> importance;

    std::vector<std::vector<double>> raw_scores(const DataMatrix& rows) const {
        std::size_t k = n_classes > 0 ? static_cast<std::size_t>(n_classes) : 1;
        std::vector<std::vector<double>> f(rows.n_rows, std::vector<double>(k, 0.0));
        for (std::size_t r = 0; r < rows.n_rows; ++r) {
            if (n_classes > 0)
                for (std::size_t c = 0; c < k; ++c) f[r][c] = base_logits[c];
            else
                f[r][0] = base_score;
            for (const auto& round : trees)
                for (std::size_t c = 0; c < round.size(); ++c)
                    f[r][c] += learning_rate * round[c].apply(rows.row(r))[0];
        }
        return f;
    }

    std::vector<std::vector<double>> proba(const DataMatrix& rows) const override {
        auto f = raw_scores(rows);
        for (auto& row : f) {
            double mx = *std::max_element(row.begin(), row.end());
            double sum = 0.0;
            for (double& v : row) {
                v = std::exp(v - mx);
                sum += v;
            }
            for (double& v : row) v /= sum;
        }
        return f;
    }

    std::vector<double> value(const DataMatrix& rows) const override {
        auto f = raw_scores(rows);
        std::vector<double> out(rows.n_rows);
        for (std::size_t r = 0; r < rows.n_rows; ++r) out[r] = f[r][0];
        return out;
    }

    json state() const override {
        json rounds = json::array();
        for (const auto& round : trees) {
            json per_class = json::array();
            for (const auto& t : round) per_class.push_back(t.to_json());
            rounds.push_back(per_class);
        }
        return {{"trees", rounds},       {"learning_rate", learning_rate},
                {"base_score", base_score}, {"base_logits", base_logits},
                {"n_classes", n_classes},   {"importance", importance}};
    }

    std::vector<double> importances(std::size_t n_features) const override {
        std::vector<double> norm = importance;
        norm.resize(n_features, 0.0);
        double s = std::accumulate(norm.begin(), norm.end(), 0.0);
        if (s > 0.0)
            for (double& v : norm) v /= s;
        return norm;
    }
};

struct LogisticImpl : ModelImpl {
    std::vector<double> weights;  // K x (d+1), bias last
    int n_classes = 0;
    std::size_t n_features = 0;

    std::vector<std::vector<double>> proba(const DataMatrix& rows) const override {
        std::vector<std::vector<double>> out(
            rows.n_rows, std::vector<double>(static_cast<std::size_t>(n_classes), 0.0));
        for (std::size_t r = 0; r < rows.n_rows; ++r) {
            const double* x = rows.row(r);
            double mx = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < n_classes; ++c) {
                const double* w = weights.data() + static_cast<std::size_t>(c) * (n_features + 1);
                double z = w[n_features];
                for (std::size_t f = 0; f < n_features; ++f) z += w[f] * x[f];
                out[r][static_cast<std::size_t>(c)] = z;
                mx = std::max(mx, z);
            }
            double sum = 0.0;
            for (double& v : out[r]) {
                v = std::exp(v - mx);
                sum += v;
            }
            for (double& v : out[r]) v /= sum;
        }
        return out;
    }

    json state() const override {
        return {{"weights", weights}, {"n_classes", n_classes}, {"n_features", n_features}};
    }
};

struct LinearImpl : ModelImpl {
    std::vector<double> coef;  // d + 1, bias last

    std::vector<double> value(const DataMatrix& rows) const override {
        std::vector<double> out(rows.n_rows);
        for (std::size_t r = 0; r < rows.n_rows; ++r) {
            const double* x = rows.row(r);
            double v = coef.back();
            for (std::size_t f = 0; f + 1 < coef.size(); ++f) v += coef[f] * x[f];
            out[r] = v;
        }
        return out;
    }

    json state() const override { return {{"coef", coef}}; }
};

struct VotingImpl : ModelImpl {
    struct Member {
        preprocess::Scaler scaler;
        TrainedModel model;
    };
    std::vector<Member> members;
    std::string vote_mode = "soft";
    int n_classes = 0;

    std::vector<std::vector<double>> proba(const DataMatrix& rows) const override {
        std::vector<std::vector<double>> out(
            rows.n_rows, std::vector<double>(static_cast<std::size_t>(n_classes), 0.0));
        for (const auto& m : members) {
            auto p = m.model.predict_proba(m.scaler.transform(rows));
            for (std::size_t r = 0; r < rows.n_rows; ++r)
                for (std::size_t c = 0; c < out[r].size(); ++c) out[r][c] += p[r][c];
        }
        for (auto& row : out)
            for (double& v : row) v /= static_cast<double>(members.size());
        return out;
    }

    std::vector<int> labels(const DataMatrix& rows) const override {
        if (vote_mode == "soft") return ModelImpl::labels(rows);
        // hard: plurality over member labels, ties toward the lowest index
        std::vector<std::vector<int>> votes(rows.n_rows,
                                            std::vector<int>(static_cast<std::size_t>(n_classes), 0));
        for (const auto& m : members) {
            auto lbl = m.model.predict(m.scaler.transform(rows));
            for (std::size_t r = 0; r < rows.n_rows; ++r)
                votes[r][static_cast<std::size_t>(lbl[r])] += 1;
        }
        std::vector<int> out(rows.n_rows);
        for (std::size_t r = 0; r < rows.n_rows; ++r)
            out[r] = static_cast<int>(
                std::max_element(votes[r].begin(), votes[r].end()) - votes[r].begin());
        return out;
    }

    std::vector<double> value(const DataMatrix& rows) const override {
        std::vector<double> out(rows.n_rows, 0.0);
        for (const auto& m : members) {
            auto v = m.model.predict_value(m.scaler.transform(rows));
            for (std::size_t r = 0; r < rows.n_rows; ++r) out[r] += v[r];
        }
        for (double& v : out) v /= static_cast<double>(members.size());
        return out;
    }

    json state() const override {
        json arr = json::array();
        for (const auto& m : members)
            arr.push_back({{"scaler",
                            {{"kind", preprocess::scaler_name(m.scaler.kind())},
                             {"offsets", m.scaler.offsets()},
                             {"scales", m.scaler.scales()}}},
                           {"model", json::parse(m.model.serialize())}});
        return {{"members", arr}, {"vote_mode", vote_mode}, {"n_classes", n_classes}};
    }
};

}  // namespace
}  // namespace detail

// ---------------------------------------------------------------------------
// fitting

namespace {

using detail::ModelImpl;

void check_finite(const DataMatrix& x) {
    for (double v : x.values)
        if (!std::isfinite(v)) throw Error("BadValue", "non-finite feature value");
}

std::shared_ptr<ModelImpl> fit_dummy(const std::vector<int>* yc, const std::vector<double>* yr,
                                     int n_classes) {
    auto impl = std::make_shared<detail::DummyImpl>();
    if (yc) {
        impl->classification = true;
        impl->prior.assign(static_cast<std::size_t>(n_classes), 0.0);
        for (int y : *yc) impl->prior[static_cast<std::size_t>(y)] += 1.0;
        for (double& p : impl->prior) p /= static_cast<double>(yc->size());
        impl->majority = static_cast<int>(
            std::max_element(impl->prior.begin(), impl->prior.end()) - impl->prior.begin());
    } else {
        impl->classification = false;
        impl->mean = std::accumulate(yr->begin(), yr->end(), 0.0) / static_cast<double>(yr->size());
    }
    return impl;
}

std::shared_ptr<ModelImpl> fit_knn(const json& h, const DataMatrix& x, const std::vector<int>* yc,
                                   const std::vector<double>* yr, int n_classes) {
    auto impl = std::make_shared<detail::KnnImpl>();
    impl->train = x;
    impl->k = hyper_int(h, "k");
    if (impl->k < 1) throw Error("BadHyperparameter", "k must be >= 1");
    std::string metric = h.at("distance_metric").get<std::string>();
    if (metric != "manhattan" && metric != "euclidean")
        throw Error("BadHyperparameter", "distance_metric: " + metric);
    impl->manhattan = metric == "manhattan";
    std::string weights = h.at("weights").get<std::string>();
    if (weights != "uniform" && weights != "distance")
        throw Error("BadHyperparameter", "weights: " + weights);
    impl->distance_weighted = weights == "distance";
    if (yc) {
        impl->yc = *yc;
        impl->n_classes = n_classes;
    } else {
        impl->yr = *yr;
    }
    return impl;
}

std::shared_ptr<ModelImpl> fit_forest(ModelKind kind, const json& h, const DataMatrix& x,
                                      const std::vector<int>* yc, const std::vector<double>* yr,
                                      int n_classes, std::uint64_t seed) {
    auto impl = std::make_shared<detail::ForestImpl>();
    impl->n_classes = yc ? n_classes : 0;
    impl->importance.assign(x.n_cols, 0.0);

    detail::TreeParams params;
    params.n_classes = impl->n_classes;
    params.min_samples_leaf = static_cast<std::size_t>(hyper_int(h, "min_samples_leaf"));

    int n_trees = 1;
    if (kind == ModelKind::DecisionTree) {
        params.max_depth = hyper_int(h, "max_depth");
    } else {
        n_trees = hyper_int(h, "n_trees");
        if (n_trees < 1) throw Error("BadHyperparameter", "n_trees must be >= 1");
        params.max_depth = hyper_int(h, "max_depth");
        params.max_features = features_per_node(h, x.n_cols);
        params.random_thresholds = kind == ModelKind::ExtraTrees;
    }
    if (params.max_depth < 1) throw Error("BadHyperparameter", "max_depth must be >= 1");

    for (int t = 0; t < n_trees; ++t) {
        // per-tree seeds derive from (master seed, tree index) so parallel and
        // serial training agree
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> idx(x.n_rows);
        if (kind == ModelKind::RandomForest) {
            for (auto& i : idx) i = rng.uniform_int(x.n_rows);  // bootstrap
            std::sort(idx.begin(), idx.end());
        } else {
            std::iota(idx.begin(), idx.end(), 0);
        }
        detail::TreeBuilder builder(x, yc, yr, params, rng, &impl->importance);
        impl->trees.push_back(builder.build(idx));
    }
    return impl;
}

std::shared_ptr<ModelImpl> fit_gbt(const json& h, const DataMatrix& x, const std::vector<int>* yc,
                                   const std::vector<double>* yr, int n_classes,
                                   std::uint64_t seed) {
    auto impl = std::make_shared<detail::GbtImpl>();
    impl->learning_rate = hyper_double(h, "learning_rate");
    impl->n_classes = yc ? n_classes : 0;
    impl->importance.assign(x.n_cols, 0.0);
    int n_rounds = hyper_int(h, "n_rounds");
    if (n_rounds < 1) throw Error("BadHyperparameter", "n_rounds must be >= 1");
    if (!(impl->learning_rate > 0.0)) throw Error("BadHyperparameter", "learning_rate must be > 0");

    detail::TreeParams params;
    params.n_classes = 0;  // trees regress gradients
    params.max_depth = hyper_int(h, "max_depth");
    params.min_samples_leaf = static_cast<std::size_t>(hyper_int(h, "min_samples_leaf"));
    params.max_features = features_per_node(h, x.n_cols);
    if (params.max_features == x.n_cols) params.max_features = 0;

    std::size_t n = x.n_rows;
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);

    if (yc) {
        std::size_t k = static_cast<std::size_t>(n_classes);
        impl->base_logits.assign(k, 0.0);  // uniform prior in logit space
        std::vector<std::vector<double>> f(n, std::vector<double>(k, 0.0));
        std::vector<double> residual(n);
        for (int round = 0; round < n_rounds; ++round) {
            // softmax probabilities for the current scores
            std::vector<std::vector<double>> p(n, std::vector<double>(k, 0.0));
            for (std::size_t i = 0; i < n; ++i) {
                double mx = *std::max_element(f[i].begin(), f[i].end());
                double sum = 0.0;
                for (std::size_t c = 0; c < k; ++c) {
                    p[i][c] = std::exp(f[i][c] - mx);
                    sum += p[i][c];
                }
                for (std::size_t c = 0; c < k; ++c) p[i][c] /= sum;
            }
            std::vector<detail::Tree> per_class;
            for (std::size_t c = 0; c < k; ++c) {
                for (std::size_t i = 0; i < n; ++i)
                    residual[i] = (static_cast<std::size_t>((*yc)[i]) == c ? 1.0 : 0.0) - p[i][c];
                Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(round) * k + c));
                detail::TreeBuilder builder(x, nullptr, &residual, params, rng, &impl->importance);
                auto tree = builder.build(all);
                // Newton leaf rescale for multinomial log-loss
                std::vector<double> num(tree.nodes.size(), 0.0), den(tree.nodes.size(), 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    int node = 0;
                    while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
                        const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
                        node = x.at(i, static_cast<std::size_t>(nd.feature)) <= nd.threshold
                                   ? nd.left
                                   : nd.right;
                    }
                    num[static_cast<std::size_t>(node)] += residual[i];
                    den[static_cast<std::size_t>(node)] += p[i][c] * (1.0 - p[i][c]);
                }
                double kk = static_cast<double>(k);
                for (std::size_t nd = 0; nd < tree.nodes.size(); ++nd) {
                    if (tree.nodes[nd].feature >= 0) continue;
                    double leaf = den[nd] > 1e-12 ? ((kk - 1.0) / kk) * num[nd] / den[nd] : 0.0;
                    tree.nodes[nd].leaf = {leaf};
                }
                for (std::size_t i = 0; i < n; ++i)
                    f[i][c] += impl->learning_rate * tree.apply(x.row(i))[0];
                per_class.push_back(std::move(tree));
            }
            impl->trees.push_back(std::move(per_class));
        }
    } else {
        impl->base_score = std::accumulate(yr->begin(), yr->end(), 0.0) / static_cast<double>(n);
        std::vector<double> f(n, impl->base_score);
        std::vector<double> residual(n);
        for (int round = 0; round < n_rounds; ++round) {
            for (std::size_t i = 0; i < n; ++i) residual[i] = (*yr)[i] - f[i];
            Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(round)));
            detail::TreeBuilder builder(x, nullptr, &residual, params, rng, &impl->importance);
            auto tree = builder.build(all);
            for (std::size_t i = 0; i < n; ++i)
                f[i] += impl->learning_rate * tree.apply(x.row(i))[0];
            impl->trees.push_back({std::move(tree)});
        }
    }
    return impl;
}

std::shared_ptr<ModelImpl> fit_logistic(const json& h, const DataMatrix& x,
                                        const std::vector<int>& y, int n_classes) {
    if (n_classes < 2) throw Error("DegenerateTraining", "logistic regression needs >= 2 classes");
    std::set<int> observed(y.begin(), y.end());
    if (observed.size() < 2)
        throw Error("DegenerateTraining", "training labels collapse to a single class");
    auto impl = std::make_shared<detail::LogisticImpl>();
    impl->n_classes = n_classes;
    impl->n_features = x.n_cols;
    std::size_t k = static_cast<std::size_t>(n_classes);
    std::size_t stride = x.n_cols + 1;
    impl->weights.assign(k * stride, 0.0);

    double lr = hyper_double(h, "learning_rate");
    double l2 = hyper_double(h, "l2");
    int max_iter = hyper_int(h, "max_iter");
    double tol = hyper_double(h, "tol");
    std::size_t n = x.n_rows;
    double prev_loss = std::numeric_limits<double>::infinity();
    std::vector<double> grad(k * stride);

    for (int iter = 0; iter < max_iter; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        std::vector<double> z(k);
        for (std::size_t i = 0; i < n; ++i) {
            const double* xi = x.row(i);
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double* w = impl->weights.data() + c * stride;
                z[c] = w[x.n_cols];
                for (std::size_t f = 0; f < x.n_cols; ++f) z[c] += w[f] * xi[f];
                mx = std::max(mx, z[c]);
            }
            double sum = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                z[c] = std::exp(z[c] - mx);
                sum += z[c];
            }
            for (std::size_t c = 0; c < k; ++c) {
                double p = z[c] / sum;
                double err = p - (static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0);
                double* g = grad.data() + c * stride;
                for (std::size_t f = 0; f < x.n_cols; ++f) g[f] += err * xi[f];
                g[x.n_cols] += err;
                if (static_cast<std::size_t>(y[i]) == c) loss -= std::log(std::max(p, 1e-300));
            }
        }
        loss /= static_cast<double>(n);
        for (std::size_t w = 0; w < impl->weights.size(); ++w) {
            double reg = (w + 1) % stride == 0 ? 0.0 : l2 * impl->weights[w];  // no bias penalty
            impl->weights[w] -= lr * (grad[w] / static_cast<double>(n) + reg);
            loss += 0.5 * l2 * impl->weights[w] * impl->weights[w];
        }
        if (std::abs(prev_loss - loss) < tol) break;
        prev_loss = loss;
    }
    return impl;
}

std::shared_ptr<ModelImpl> fit_linear(const json& h, const DataMatrix& x,
                                      const std::vector<double>& y) {
    double ridge = hyper_double(h, "ridge");
    std::size_t d = x.n_cols + 1;
    std::vector<double> a(d * d, 0.0), b(d, 0.0);
    for (std::size_t i = 0; i < x.n_rows; ++i) {
        const double* xi = x.row(i);
        for (std::size_t p = 0; p < d; ++p) {
            double xp = p < x.n_cols ? xi[p] : 1.0;
            b[p] += xp * y[i];
            for (std::size_t q = 0; q < d; ++q) {
                double xq = q < x.n_cols ? xi[q] : 1.0;
                a[p * d + q] += xp * xq;
            }
        }
    }
    for (std::size_t p = 0; p < d; ++p) a[p * d + p] += ridge;

    // Gaussian elimination with partial pivoting
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < d; ++r)
            if (std::abs(a[r * d + col]) > std::abs(a[pivot * d + col])) pivot = r;
        if (std::abs(a[pivot * d + col]) < 1e-12)
            throw Error("DegenerateTraining", "singular normal equations");
        if (pivot != col) {
            for (std::size_t q = 0; q < d; ++q) std::swap(a[pivot * d + q], a[col * d + q]);
            std::swap(b[pivot], b[col]);
        }
        for (std::size_t r = 0; r < d; ++r) {
            if (r == col) continue;
            double factor = a[r * d + col] / a[col * d + col];
            for (std::size_t q = col; q < d; ++q) a[r * d + q] -= factor * a[col * d + q];
            b[r] -= factor * b[col];
        }
    }
    auto impl = std::make_shared<detail::LinearImpl>();
    impl->coef.resize(d);
    for (std::size_t p = 0; p < d; ++p) impl->coef[p] = b[p] / (a[p * d + p]);
    return impl;
}

std::shared_ptr<ModelImpl> fit_voting(const ModelSpec& spec, const json& h, const DataMatrix& x,
                                      const std::vector<int>* yc, const std::vector<double>* yr,
                                      const std::vector<std::string>& roster);

std::shared_ptr<ModelImpl> dispatch_fit(const ModelSpec& spec, const DataMatrix& x,
                                        const std::vector<int>* yc, const std::vector<double>* yr,
                                        const std::vector<std::string>& roster) {
    json h = spec.resolved_hyper();
    int n_classes = static_cast<int>(roster.size());
    switch (spec.kind) {
        case ModelKind::Dummy:
            return fit_dummy(yc, yr, n_classes);
        case ModelKind::Knn:
            return fit_knn(h, x, yc, yr, n_classes);
        case ModelKind::DecisionTree:
        case ModelKind::RandomForest:
        case ModelKind::ExtraTrees:
            return fit_forest(spec.kind, h, x, yc, yr, n_classes, spec.seed);
        case ModelKind::GradientBoostedTrees:
            return fit_gbt(h, x, yc, yr, n_classes, spec.seed);
        case ModelKind::LogisticRegression:
            if (!yc) throw Error("BadHyperparameter", "logistic regression is a classifier");
            return fit_logistic(h, x, *yc, n_classes);
        case ModelKind::LinearRegression:
            if (!yr) throw Error("BadHyperparameter", "linear regression is a regressor");
            return fit_linear(h, x, *yr);
        case ModelKind::Voting:
            return fit_voting(spec, h, x, yc, yr, roster);
    }
    throw Error("BadHyperparameter", "unknown model kind");
}

}  // namespace

TrainedModel fit(const ModelSpec& spec, const DataMatrix& train, const std::vector<int>& labels,
                 const std::vector<std::string>& roster) {
    if (spec.task != Task::Classification)
        throw Error("BadHyperparameter", "fit() needs a classification spec");
    if (train.n_rows == 0 || labels.size() != train.n_rows)
        throw Error("BadValue", "empty training set or misaligned labels");
    check_finite(train);
    std::set<int> present(labels.begin(), labels.end());
    if (*present.begin() < 0 || *present.rbegin() >= static_cast<int>(roster.size()))
        throw Error("BadValue", "label outside roster");

    TrainedModel m;
    m.spec_ = spec;
    m.roster_ = roster;
    m.feature_names_ = train.names;
    m.impl_ = dispatch_fit(spec, train, &labels, nullptr, roster);
    return m;
}

TrainedModel fit_regression(const ModelSpec& spec, const DataMatrix& train,
                            const std::vector<double>& labels) {
    if (spec.task != Task::Regression)
        throw Error("BadHyperparameter", "fit_regression() needs a regression spec");
    if (train.n_rows == 0 || labels.size() != train.n_rows)
        throw Error("BadValue", "empty training set or misaligned labels");
    check_finite(train);
    for (double v : labels)
        if (!std::isfinite(v)) throw Error("BadValue", "non-finite label");

    TrainedModel m;
    m.spec_ = spec;
    m.feature_names_ = train.names;
    m.impl_ = dispatch_fit(spec, train, nullptr, &labels, {});
    return m;
}

namespace {

std::shared_ptr<ModelImpl> fit_voting(const ModelSpec& spec, const json& h, const DataMatrix& x,
                                      const std::vector<int>* yc, const std::vector<double>* yr,
                                      const std::vector<std::string>& roster) {
    const auto& members = h.at("members");
    if (!members.is_array() || members.size() < 2)
        throw Error("EmptyEnsemble", "voting needs at least 2 members");
    std::string mode = h.at("vote_mode").get<std::string>();
    if (mode != "hard" && mode != "soft" && mode != "average")
        throw Error("BadHyperparameter", "vote_mode: " + mode);
    if (yr && mode != "average")
        throw Error("BadHyperparameter", "regression voting uses vote_mode 'average'");

    auto impl = std::make_shared<detail::VotingImpl>();
    impl->vote_mode = mode;
    impl->n_classes = static_cast<int>(roster.size());
    std::uint64_t member_index = 0;
    for (const auto& mj : members) {
        detail::VotingImpl::Member member;
        auto member_spec = ModelSpec::from_json(mj.at("model"));
        member_spec.task = spec.task;
        if (member_spec.seed == 0)
            member_spec.seed = Rng::derive(spec.seed, member_index);
        member.scaler = preprocess::Scaler(
            preprocess::scaler_from_name(mj.value("scaler", "none")));
        member.scaler.fit(x);
        auto scaled = member.scaler.transform(x);
        member.model = yc ? fit(member_spec, scaled, *yc, roster)
                          : fit_regression(member_spec, scaled, *yr);
        impl->members.push_back(std::move(member));
        ++member_index;
    }
    return impl;
}

}  // namespace

// ---------------------------------------------------------------------------
// TrainedModel surface

void TrainedModel::check_contract(const DataMatrix& rows) const {
    if (!impl_) throw Error("NotFitted", "model not fitted");
    if (rows.names != feature_names_)
        throw Error("FeatureContractMismatch", "feature names differ from the training contract");
}

std::vector<int> TrainedModel::predict(const DataMatrix& rows) const {
    check_contract(rows);
    if (spec_.task != Task::Classification)
        throw Error("BadHyperparameter", "predict() on a regression model");
    return impl_->labels(rows);
}

std::vector<std::vector<double>> TrainedModel::predict_proba(const DataMatrix& rows) const {
    check_contract(rows);
    if (spec_.task != Task::Classification)
        throw Error("BadHyperparameter", "predict_proba() on a regression model");
    return impl_->proba(rows);
}

std::vector<double> TrainedModel::predict_value(const DataMatrix& rows) const {
    check_contract(rows);
    if (spec_.task != Task::Regression)
        throw Error("BadHyperparameter", "predict_value() on a classification model");
    return impl_->value(rows);
}

std::vector<double> TrainedModel::feature_importances() const {
    if (!impl_) throw Error("NotFitted", "model not fitted");
    return impl_->importances(feature_names_.size());
}

std::string TrainedModel::serialize() const {
    if (!impl_) throw Error("NotFitted", "model not fitted");
    json doc = {{"schema_version", 1},
                {"spec", spec_.to_json()},
                {"roster", roster_},
                {"feature_names", feature_names_},
                {"state", impl_->state()}};
    return doc.dump();
}

namespace {

std::shared_ptr<ModelImpl> impl_from_state(const ModelSpec& spec, const json& s,
                                           const std::vector<std::string>& roster);

template <typename T>
std::shared_ptr<T> make_impl() {
    return std::make_shared<T>();
}

std::shared_ptr<ModelImpl> impl_from_state(const ModelSpec& spec, const json& s,
                                           const std::vector<std::string>& roster) {
    switch (spec.kind) {
        case ModelKind::Dummy: {
            auto impl = make_impl<detail::DummyImpl>();
            impl->prior = s.at("prior").get<std::vector<double>>();
            impl->majority = s.at("majority").get<int>();
            impl->mean = s.at("mean").get<double>();
            impl->classification = s.at("classification").get<bool>();
            return impl;
        }
        case ModelKind::Knn: {
            auto impl = make_impl<detail::KnnImpl>();
            impl->train.values = s.at("x").get<std::vector<double>>();
            impl->train.n_rows = s.at("n_rows").get<std::size_t>();
            impl->train.n_cols = s.at("n_cols").get<std::size_t>();
            impl->yc = s.at("yc").get<std::vector<int>>();
            impl->yr = s.at("yr").get<std::vector<double>>();
            impl->k = s.at("k").get<int>();
            impl->manhattan = s.at("manhattan").get<bool>();
            impl->distance_weighted = s.at("distance_weighted").get<bool>();
            impl->n_classes = s.at("n_classes").get<int>();
            return impl;
        }
        case ModelKind::DecisionTree:
        case ModelKind::RandomForest:
        case ModelKind::ExtraTrees: {
            auto impl = make_impl<detail::ForestImpl>();
            for (const auto& t : s.at("trees")) impl->trees.push_back(detail::Tree::from_json(t));
            impl->n_classes = s.at("n_classes").get<int>();
            impl->importance = s.at("importance").get<std::vector<double>>();
            return impl;
        }
        case ModelKind::GradientBoostedTrees: {
            auto impl = make_impl<detail::GbtImpl>();
            for (const auto& round : s.at("trees")) {
                std::vector<detail::Tree> per_class;
                for (const auto& t : round) per_class.push_back(detail::Tree::from_json(t));
                impl->trees.push_back(std::move(per_class));
            }
            impl->learning_rate = s.at("learning_rate").get<double>();
            impl->base_score = s.at("base_score").get<double>();
            impl->base_logits = s.at("base_logits").get<std::vector<double>>();
            impl->n_classes = s.at("n_classes").get<int>();
            impl->importance = s.at("importance").get<std::vector<double>>();
            return impl;
        }
        case ModelKind::LogisticRegression: {
            auto impl = make_impl<detail::LogisticImpl>();
            impl->weights = s.at("weights").get<std::vector<double>>();
            impl->n_classes = s.at("n_classes").get<int>();
            impl->n_features = s.at("n_features").get<std::size_t>();
            return impl;
        }
        case ModelKind::LinearRegression: {
            auto impl = make_impl<detail::LinearImpl>();
            impl->coef = s.at("coef").get<std::vector<double>>();
            return impl;
        }
        case ModelKind::Voting: {
            auto impl = make_impl<detail::VotingImpl>();
            impl->vote_mode = s.at("vote_mode").get<std::string>();
            impl->n_classes = s.at("n_classes").get<int>();
            for (const auto& mj : s.at("members")) {
                detail::VotingImpl::Member member;
                const auto& sc = mj.at("scaler");
                member.scaler = preprocess::Scaler::restore(
                    preprocess::scaler_from_name(sc.at("kind").get<std::string>()),
                    sc.at("offsets").get<std::vector<double>>(),
                    sc.at("scales").get<std::vector<double>>());
                member.model = TrainedModel::deserialize(mj.at("model").dump());
                impl->members.push_back(std::move(member));
            }
            return impl;
        }
    }
    throw Error("CorruptDocument", "unknown model kind in state");
}

}  // namespace

TrainedModel TrainedModel::deserialize(const std::string& bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::exception& e) {
        throw Error("CorruptDocument", e.what());
    }
    if (!doc.contains("schema_version"))
        throw Error("CorruptDocument", "missing schema_version");
    int version = doc.at("schema_version").get<int>();
    if (version != 1)
        throw Error("VersionMismatch", "unsupported schema_version " + std::to_string(version));
    TrainedModel m;
    try {
        m.spec_ = ModelSpec::from_json(doc.at("spec"));
        m.roster_ = doc.at("roster").get<std::vector<std::string>>();
        m.feature_names_ = doc.at("feature_names").get<std::vector<std::string>>();
        m.impl_ = impl_from_state(m.spec_, doc.at("state"), m.roster_);
    } catch (const json::exception& e) {
        throw Error("CorruptDocument", e.what());
    }
    return m;
}

}  // namespace rockmass::models
