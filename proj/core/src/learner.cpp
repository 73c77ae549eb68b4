#include "stacktier/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "stacktier/common.hpp"
#include "stacktier/parallel.hpp"
#include "stacktier/rng.hpp"
#include "tree_builder.hpp"

namespace stacktier {

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

std::size_t count_positives(const std::vector<int>& y) {
    std::size_t pos = 0;
    for (int v : y) pos += (v == 1);
    return pos;
}

void check_training_input(const Matrix& X, const std::vector<int>& y) {
    if (X.rows == 0 || X.cols == 0) throw Error("fit_learner: empty training matrix");
    if (X.rows != y.size()) throw Error("fit_learner: X/y row count mismatch");
    for (int v : y)
        if (v != 0 && v != 1) throw Error("fit_learner: non-binary label");
}

const std::set<std::string>& allowed_params(Family family) {
    static const std::set<std::string> tree = {"max_depth", "min_samples_leaf"};
    static const std::set<std::string> forest = {"n_trees", "max_depth",
                                                 "min_samples_leaf", "max_features"};
    static const std::set<std::string> gbm = {"n_rounds", "learning_rate", "max_depth",
                                              "min_samples_leaf"};
    static const std::set<std::string> xgb = {"n_rounds", "learning_rate", "max_depth",
                                              "min_samples_leaf", "lambda", "gamma"};
    static const std::set<std::string> svc = {"C", "epochs", "calibration_scale"};
    static const std::set<std::string> logreg = {"l2", "max_iter", "tol"};
    switch (family) {
        case Family::tree: return tree;
        case Family::random_forest: return forest;
        case Family::gbm: return gbm;
        case Family::xgb: return xgb;
        case Family::linear_svc: return svc;
        case Family::logreg: return logreg;
    }
    throw Error("unknown learner family");
}

void validate_spec(const LearnerSpec& spec) {
    const auto& allowed = allowed_params(spec.family);
    for (const auto& [key, value] : spec.params) {
        if (!allowed.count(key))
            throw Error("fit_learner: unknown hyperparameter '" + key + "' for family " +
                        family_name(spec.family));
        (void)value;
    }
    const auto positive = [&](const char* name) {
        if (spec.params.count(name) && !(spec.params.at(name) > 0.0))
            throw Error(std::string("fit_learner: ") + name + " must be > 0");
    };
    const auto non_negative = [&](const char* name) {
        if (spec.params.count(name) && spec.params.at(name) < 0.0)
            throw Error(std::string("fit_learner: ") + name + " must be >= 0");
    };
    positive("learning_rate");
    positive("C");
    positive("tol");
    positive("calibration_scale");
    non_negative("lambda");
    non_negative("gamma");
    non_negative("l2");
    non_negative("max_depth");
    if (spec.params.count("n_trees") && spec.params.at("n_trees") < 1.0)
        throw Error("fit_learner: n_trees must be >= 1");
    if (spec.params.count("n_rounds") && spec.params.at("n_rounds") < 0.0)
        throw Error("fit_learner: n_rounds must be >= 0");
    if (spec.params.count("min_samples_leaf") && spec.params.at("min_samples_leaf") < 1.0)
        throw Error("fit_learner: min_samples_leaf must be >= 1");
    if (spec.params.count("epochs") && spec.params.at("epochs") < 1.0)
        throw Error("fit_learner: epochs must be >= 1");
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

FittedModel constant_tree_model(Family family, std::size_t n_features,
                                std::uint64_t seed, double score) {
    FittedModel m;
    m.family = family;
    m.n_features = n_features;
    m.train_seed = seed;
    m.trees.push_back({TreeNode{-1, 0.0, -1, -1, score}});
    return m;
}

FittedModel fit_tree(const LearnerSpec& spec, const Matrix& X,
                     const std::vector<int>& y, std::uint64_t seed) {
    detail::TreeParams params;
    params.max_depth = static_cast<int>(spec.param("max_depth", 0));
    params.min_samples_leaf =
        static_cast<std::size_t>(spec.param("min_samples_leaf", 1));
    FittedModel m;
    m.family = Family::tree;
    m.n_features = X.cols;
    m.train_seed = seed;
    m.trees.push_back(detail::fit_class_tree(X, y, all_rows(X.rows), params, nullptr));
    return m;
}

FittedModel fit_forest(const LearnerSpec& spec, const Matrix& X,
                       const std::vector<int>& y, std::uint64_t seed, int threads) {
    const auto n_trees = static_cast<std::size_t>(spec.param("n_trees", 300));
    detail::TreeParams params;
    params.max_depth = static_cast<int>(spec.param("max_depth", 0));
    params.min_samples_leaf =
        static_cast<std::size_t>(spec.param("min_samples_leaf", 1));
    params.max_features = static_cast<std::size_t>(spec.param("max_features", 0));
    if (params.max_features == 0)
        params.max_features = static_cast<std::size_t>(
            std::ceil(std::sqrt(static_cast<double>(X.cols))));

    FittedModel m;
    m.family = Family::random_forest;
    m.n_features = X.cols;
    m.train_seed = seed;
    m.trees.resize(n_trees);
    parallel_for(n_trees, threads, [&](std::size_t t) {
        Rng rng(derive_seed(seed, "tree", static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> bootstrap(X.rows);
        for (auto& r : bootstrap) r = static_cast<std::size_t>(rng.next_below(X.rows));
        m.trees[t] = detail::fit_class_tree(X, y, bootstrap, params, &rng);
    });
    return m;
}

FittedModel fit_boosted(const LearnerSpec& spec, const Matrix& X,
                        const std::vector<int>& y, std::uint64_t seed) {
    const bool is_xgb = spec.family == Family::xgb;
    const auto n_rounds = static_cast<std::size_t>(spec.param("n_rounds", 100));
    const double lr = spec.param("learning_rate", 0.1);

    detail::BoostTreeParams params;
    params.max_depth = static_cast<int>(spec.param("max_depth", is_xgb ? 3 : 2));
    params.min_samples_leaf =
        static_cast<std::size_t>(spec.param("min_samples_leaf", 1));
    params.mode = is_xgb ? detail::GainMode::xgb : detail::GainMode::variance;
    if (is_xgb) {
        params.lambda = spec.param("lambda", 1.0);
        params.gamma = spec.param("gamma", 0.0);
    }

    const std::size_t n = X.rows;
    const double prevalence =
        static_cast<double>(count_positives(y)) / static_cast<double>(n);

    FittedModel m;
    m.family = spec.family;
    m.n_features = X.cols;
    m.train_seed = seed;
    m.base_margin = logit(prevalence);

    const auto rows = all_rows(n);
    std::vector<double> margin(n, m.base_margin), g(n), h(n);
    for (std::size_t round = 0; round < n_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            // variance mode fits residual y - p; xgb mode fits gradient p - y
            g[i] = is_xgb ? p - static_cast<double>(y[i])
                          : static_cast<double>(y[i]) - p;
            h[i] = std::max(p * (1.0 - p), 0.0);
        }
        auto tree = detail::fit_gh_tree(X, g, h, rows, params);
        for (auto& node : tree)
            if (node.feature < 0) node.value *= lr;
        for (std::size_t i = 0; i < n; ++i)
            margin[i] += tree_predict(tree, X.row(i));
        m.trees.push_back(std::move(tree));
    }
    return m;
}

FittedModel fit_logreg(const LearnerSpec& spec, const Matrix& X,
                       const std::vector<int>& y, std::uint64_t seed) {
    const double l2 = spec.param("l2", 0.01);
    const auto max_iter = static_cast<std::size_t>(spec.param("max_iter", 1000));
    const double tol = spec.param("tol", 1e-8);

    FittedModel m;
    m.family = Family::logreg;
    m.n_features = X.cols;
    m.train_seed = seed;
    m.weights.assign(X.cols, 0.0);
    m.bias = 0.0;

    std::vector<double> grad_w(X.cols);
    double grad_b = 0.0;
    double loss = logreg_loss_gradient(X, y, m.weights, m.bias, l2, &grad_w, &grad_b);
    double step = 1.0;
    m.converged = false;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        double gnorm = std::abs(grad_b);
        double gsq = grad_b * grad_b;
        for (double gw : grad_w) {
            gnorm = std::max(gnorm, std::abs(gw));
            gsq += gw * gw;
        }
        if (gnorm <= tol) {
            m.converged = true;
            break;
        }
        // Backtracking line search (Armijo) on the full-batch gradient.
        std::vector<double> w_next(X.cols);
        double b_next = 0.0, loss_next = 0.0;
        step *= 2.0;
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving) {
            for (std::size_t c = 0; c < X.cols; ++c)
                w_next[c] = m.weights[c] - step * grad_w[c];
            b_next = m.bias - step * grad_b;
            loss_next =
                logreg_loss_gradient(X, y, w_next, b_next, l2, nullptr, nullptr);
            if (loss_next <= loss - 0.5 * step * gsq) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // no further progress at machine precision
        m.weights = std::move(w_next);
        m.bias = b_next;
        loss = logreg_loss_gradient(X, y, m.weights, m.bias, l2, &grad_w, &grad_b);
    }
    if (!m.converged)
        log_warn("logreg: gradient tolerance not reached, returning best iterate");
    return m;
}

FittedModel fit_linear_svc(const LearnerSpec& spec, const Matrix& X,
                           const std::vector<int>& y, std::uint64_t seed) {
    const double C = spec.param("C", 1.0);
    const auto epochs = static_cast<std::size_t>(spec.param("epochs", 30));
    const double calibration = spec.param("calibration_scale", 2.0);

    const std::size_t n = X.rows;
    const double lambda = 1.0 / (C * static_cast<double>(n));

    // Pegasos-style subgradient descent with Polyak-Ruppert averaging.
    std::vector<double> w(X.cols, 0.0), w_avg(X.cols, 0.0);
    double b = 0.0, b_avg = 0.0;
    std::vector<std::size_t> order = all_rows(n);
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        Rng rng(derive_seed(seed, "svc_epoch", static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);
        for (std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const double s = y[i] == 1 ? 1.0 : -1.0;
            const auto x = X.row(i);
            double margin = b;
            for (std::size_t c = 0; c < X.cols; ++c) margin += w[c] * x[c];
            const double decay = 1.0 - eta * lambda;
            if (s * margin < 1.0) {
                for (std::size_t c = 0; c < X.cols; ++c)
                    w[c] = decay * w[c] + eta * s * x[c];
                b += eta * s;
            } else {
                for (std::size_t c = 0; c < X.cols; ++c) w[c] = decay * w[c];
            }
            for (std::size_t c = 0; c < X.cols; ++c) w_avg[c] += w[c];
            b_avg += b;
        }
    }
    const double inv_t = 1.0 / static_cast<double>(t);
    FittedModel m;
    m.family = Family::linear_svc;
    m.n_features = X.cols;
    m.train_seed = seed;
    m.weights.resize(X.cols);
    for (std::size_t c = 0; c < X.cols; ++c) m.weights[c] = w_avg[c] * inv_t;
    m.bias = b_avg * inv_t;
    m.calibration = calibration;
    return m;
}

}  // namespace

std::string family_name(Family f) {
    switch (f) {
        case Family::tree: return "tree";
        case Family::random_forest: return "random_forest";
        case Family::gbm: return "gbm";
        case Family::xgb: return "xgb";
        case Family::linear_svc: return "linear_svc";
        case Family::logreg: return "logreg";
    }
    throw Error("unknown learner family");
}

Family family_from_name(const std::string& name) {
    if (name == "tree") return Family::tree;
    if (name == "random_forest") return Family::random_forest;
    if (name == "gbm") return Family::gbm;
    if (name == "xgb") return Family::xgb;
    if (name == "linear_svc") return Family::linear_svc;
    if (name == "logreg") return Family::logreg;
    throw Error("unknown learner family '" + name + "'");
}

std::string LearnerSpec::spec_id() const {
    std::string id = family_name(family);
    for (const auto& [key, value] : params) {
        id += "|";
        id += key;
        id += "=";
        id += format_double(value);
    }
    return id;
}

double LearnerSpec::param(const std::string& name, double fallback) const {
    const auto it = params.find(name);
    return it == params.end() ? fallback : it->second;
}

double tree_predict(const std::vector<TreeNode>& tree, std::span<const double> x) {
    int node = 0;
    while (tree[node].feature >= 0) {
        node = x[static_cast<std::size_t>(tree[node].feature)] < tree[node].threshold
                   ? tree[node].left
                   : tree[node].right;
    }
    return tree[node].value;
}

double gini_impurity(std::size_t count0, std::size_t count1) {
    const std::size_t total = count0 + count1;
    if (total == 0) throw Error("gini_impurity: both counts zero");
    const double p0 = static_cast<double>(count0) / static_cast<double>(total);
    const double p1 = static_cast<double>(count1) / static_cast<double>(total);
    return 1.0 - p0 * p0 - p1 * p1;
}

double xgb_split_gain(double grad_left, double hess_left, double grad_right,
                      double hess_right, double lambda, double gamma) {
    const double dl = hess_left + lambda;
    const double dr = hess_right + lambda;
    const double dp = hess_left + hess_right + lambda;
    if (dl <= 0.0 || dr <= 0.0 || dp <= 0.0)
        throw Error("xgb_split_gain: non-positive denominator");
    const double g = grad_left + grad_right;
    return 0.5 * (grad_left * grad_left / dl + grad_right * grad_right / dr -
                  g * g / dp) -
           gamma;
}

FittedModel fit_learner(const LearnerSpec& spec, const Matrix& X,
                        const std::vector<int>& y, std::uint64_t seed,
                        int threads) {
    check_training_input(X, y);
    validate_spec(spec);

    const std::size_t pos = count_positives(y);
    const bool single_class = pos == 0 || pos == y.size();
    if (single_class) {
        if (spec.family == Family::tree || spec.family == Family::random_forest)
            return constant_tree_model(spec.family, X.cols, seed, pos == 0 ? 0.0 : 1.0);
        throw Error("fit_learner: single-class training data for family " +
                    family_name(spec.family));
    }

    switch (spec.family) {
        case Family::tree: return fit_tree(spec, X, y, seed);
        case Family::random_forest: return fit_forest(spec, X, y, seed, threads);
        case Family::gbm:
        case Family::xgb: return fit_boosted(spec, X, y, seed);
        case Family::linear_svc: return fit_linear_svc(spec, X, y, seed);
        case Family::logreg: return fit_logreg(spec, X, y, seed);
    }
    throw Error("unknown learner family");
}

std::vector<double> predict_score(const FittedModel& model, const Matrix& X) {
    if (X.cols != model.n_features)
        throw Error("predict_score: expected " + std::to_string(model.n_features) +
                    " features, got " + std::to_string(X.cols));
    std::vector<double> scores(X.rows);
    switch (model.family) {
        case Family::tree:
            for (std::size_t r = 0; r < X.rows; ++r)
                scores[r] = tree_predict(model.trees[0], X.row(r));
            break;
        case Family::random_forest:
            for (std::size_t r = 0; r < X.rows; ++r) {
                std::size_t votes = 0;
                for (const auto& tree : model.trees)
                    votes += tree_predict(tree, X.row(r)) >= 0.5;
                scores[r] = static_cast<double>(votes) /
                            static_cast<double>(model.trees.size());
            }
            break;
        case Family::gbm:
        case Family::xgb:
            for (std::size_t r = 0; r < X.rows; ++r) {
                double margin = model.base_margin;
                for (const auto& tree : model.trees)
                    margin += tree_predict(tree, X.row(r));
                scores[r] = sigmoid(margin);
            }
            break;
        case Family::linear_svc:
        case Family::logreg:
            for (std::size_t r = 0; r < X.rows; ++r) {
                const auto x = X.row(r);
                double margin = model.bias;
                for (std::size_t c = 0; c < X.cols; ++c) margin += model.weights[c] * x[c];
                scores[r] = sigmoid(model.calibration * margin);
            }
            break;
    }
    return scores;
}

double logreg_loss_gradient(const Matrix& X, const std::vector<int>& y,
                            const std::vector<double>& weights, double bias,
                            double l2, std::vector<double>* grad_w,
                            double* grad_b) {
    const std::size_t n = X.rows;
    const double inv_n = 1.0 / static_cast<double>(n);
    if (grad_w) std::fill(grad_w->begin(), grad_w->end(), 0.0);
    if (grad_b) *grad_b = 0.0;

    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const auto x = X.row(r);
        double z = bias;
        for (std::size_t c = 0; c < X.cols; ++c) z += weights[c] * x[c];
        const double s = y[r] == 1 ? 1.0 : -1.0;
        const double m = s * z;
        // log(1 + exp(-m)) without overflow
        loss += m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
        if (grad_w || grad_b) {
            const double residual = sigmoid(z) - static_cast<double>(y[r]);
            if (grad_b) *grad_b += residual * inv_n;
            if (grad_w)
                for (std::size_t c = 0; c < X.cols; ++c)
                    (*grad_w)[c] += residual * x[c] * inv_n;
        }
    }
    loss *= inv_n;
    double reg = 0.0;
    for (std::size_t c = 0; c < X.cols; ++c) {
        reg += weights[c] * weights[c];
        if (grad_w) (*grad_w)[c] += l2 * weights[c];
    }
    return loss + 0.5 * l2 * reg;
}

}  // namespace stacktier
