#include <algorithm>
#include <cmath>
#include <numeric>

#include "trichome/error.hpp"
#include "trichome/ml.hpp"

namespace trichome::ml {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double logistic_loss(double y, double z) {
    const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    return softplus - y * z;
}

GradHess logistic_grad_hess(double y, double z) {
    const double p = sigmoid(z);
    return {p - y, p * (1.0 - p)};
}

double l2_loss(double y, double z) { return 0.5 * (y - z) * (y - z); }

GradHess l2_grad_hess(double y, double z) { return {z - y, 1.0}; }

double Tree::evaluate(std::span<const double> x) const {
    int id = 0;
    while (nodes[static_cast<std::size_t>(id)].feature >= 0) {
        const TreeNode& n = nodes[static_cast<std::size_t>(id)];
        id = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(id)].value;
}

double GbdtModel::margin(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != n_features) {
        throw InputError("gbdt: expected " + std::to_string(n_features) + " features");
    }
    double z = base_score;
    for (const auto& t : trees) {
        z += learning_rate * t.evaluate(x);
    }
    return z;
}

Prediction gbdt_predict(const GbdtModel& model, std::span<const double> x) {
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw InputError("gbdt: non-finite feature");
        }
    }
    Prediction p;
    p.z = model.margin(x);
    p.p = sigmoid(p.z);
    p.label = p.p >= 0.5 ? 1 : 0;
    return p;
}

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    std::size_t left_count = 0;  // prefix length in the feature's order
};

struct Leaf {
    int node = 0;
    std::vector<std::vector<int>> order;  // per feature, sorted sample ids
    double g = 0.0;
    double h = 0.0;
    Split best;
};

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& x, const std::vector<double>& g, const std::vector<double>& h,
                const std::vector<std::vector<int>>& root_order, const GbdtParams& params)
        : x_(x), g_(g), h_(h), params_(params), root_order_(root_order) {}

    Tree build() {
        Tree tree;
        std::vector<Leaf> leaves;
        Leaf root;
        root.node = 0;
        root.order = root_order_;
        for (int i : root.order.front()) {
            root.g += g_[static_cast<std::size_t>(i)];
            root.h += h_[static_cast<std::size_t>(i)];
        }
        tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, leaf_value(root)});
        find_split(root);
        leaves.push_back(std::move(root));

        while (static_cast<int>(leaves.size()) < params_.max_leaves) {
            std::size_t pick = leaves.size();
            for (std::size_t i = 0; i < leaves.size(); ++i) {
                if (leaves[i].best.feature >= 0 && leaves[i].best.gain > 0.0 &&
                    (pick == leaves.size() || leaves[i].best.gain > leaves[pick].best.gain)) {
                    pick = i;
                }
            }
            if (pick == leaves.size()) {
                break;
            }
            Leaf parent = std::move(leaves[pick]);
            leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));
            auto [left, right] = split(parent);
            const int left_id = static_cast<int>(tree.nodes.size());
            left.node = left_id;
            right.node = left_id + 1;
            TreeNode& pn = tree.nodes[static_cast<std::size_t>(parent.node)];
            pn.feature = parent.best.feature;
            pn.threshold = parent.best.threshold;
            pn.left = left_id;
            pn.right = left_id + 1;
            pn.value = 0.0;
            tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, leaf_value(left)});
            tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, leaf_value(right)});
            find_split(left);
            find_split(right);
            leaves.push_back(std::move(left));
            leaves.push_back(std::move(right));
        }
        return tree;
    }

private:
    static double leaf_value(const Leaf& l) { return l.h > 0.0 ? -l.g / l.h : 0.0; }

    void find_split(Leaf& leaf) const {
        leaf.best = Split{};
        const std::size_t n = leaf.order.front().size();
        const auto min_leaf = static_cast<std::size_t>(std::max(1, params_.min_samples_leaf));
        if (n < 2 * min_leaf || leaf.h <= 0.0) {
            return;
        }
        const double parent_score = leaf.g * leaf.g / leaf.h;
        for (std::size_t f = 0; f < leaf.order.size(); ++f) {
            const auto& ord = leaf.order[f];
            double gl = 0.0;
            double hl = 0.0;
            for (std::size_t t = 0; t + 1 < n; ++t) {
                const auto i = static_cast<std::size_t>(ord[t]);
                gl += g_[i];
                hl += h_[i];
                const std::size_t nl = t + 1;
                if (nl < min_leaf) {
                    continue;
                }
                if (n - nl < min_leaf) {
                    break;
                }
                const double a = x_[i][f];
                const double b = x_[static_cast<std::size_t>(ord[t + 1])][f];
                if (!(a < b)) {
                    continue;
                }
                const double gr = leaf.g - gl;
                const double hr = leaf.h - hl;
                if (hl < params_.min_sum_hessian || hr < params_.min_sum_hessian) {
                    continue;
                }
                const double gain = gl * gl / hl + gr * gr / hr - parent_score;
                if (gain > leaf.best.gain) {
                    double threshold = a + (b - a) / 2.0;
                    if (!(threshold < b)) {
                        threshold = a;
                    }
                    leaf.best = Split{static_cast<int>(f), threshold, gain, nl};
                }
            }
        }
    }

    std::pair<Leaf, Leaf> split(const Leaf& parent) const {
        const auto f = static_cast<std::size_t>(parent.best.feature);
        std::vector<char> goes_left(x_.size(), 0);
        for (std::size_t t = 0; t < parent.best.left_count; ++t) {
            goes_left[static_cast<std::size_t>(parent.order[f][t])] = 1;
        }
        Leaf left;
        Leaf right;
        left.order.resize(parent.order.size());
        right.order.resize(parent.order.size());
        for (std::size_t k = 0; k < parent.order.size(); ++k) {
            left.order[k].reserve(parent.best.left_count);
            right.order[k].reserve(parent.order[k].size() - parent.best.left_count);
            for (int i : parent.order[k]) {
                (goes_left[static_cast<std::size_t>(i)] != 0 ? left.order[k] : right.order[k]).push_back(i);
            }
        }
        for (int i : left.order.front()) {
            left.g += g_[static_cast<std::size_t>(i)];
            left.h += h_[static_cast<std::size_t>(i)];
        }
        for (int i : right.order.front()) {
            right.g += g_[static_cast<std::size_t>(i)];
            right.h += h_[static_cast<std::size_t>(i)];
        }
        return {std::move(left), std::move(right)};
    }

    const FeatureMatrix& x_;
    const std::vector<double>& g_;
    const std::vector<double>& h_;
    const GbdtParams& params_;
    const std::vector<std::vector<int>>& root_order_;
};

double mean_loss(Objective obj, std::span<const double> y, std::span<const double> z) {
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sum += obj == Objective::logistic ? logistic_loss(y[i], z[i]) : l2_loss(y[i], z[i]);
    }
    return sum / static_cast<double>(y.size());
}

}  // namespace

GbdtModel gbdt_train(const FeatureMatrix& x, std::span<const double> y, Objective objective,
                     const GbdtParams& params) {
    if (x.size() != y.size()) {
        throw InputError("gbdt: row and target counts differ");
    }
    if (params.rounds < 0 || !(params.learning_rate > 0.0) || params.max_leaves < 1 || params.min_samples_leaf < 1) {
        throw InputError("gbdt: invalid parameters");
    }
    if (x.size() < 2 * static_cast<std::size_t>(params.min_samples_leaf)) {
        throw InputError("gbdt: " + std::to_string(x.size()) + " rows is fewer than 2 x min_samples_leaf");
    }
    const std::size_t n = x.size();
    const std::size_t d = x.front().size();
    if (d == 0) {
        throw InputError("gbdt: no features");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i].size() != d) {
            throw InputError("gbdt: ragged feature matrix");
        }
        for (double v : x[i]) {
            if (!std::isfinite(v)) {
                throw InputError("gbdt: non-finite feature");
            }
        }
        if (!std::isfinite(y[i])) {
            throw InputError("gbdt: non-finite target");
        }
        if (objective == Objective::logistic && y[i] != 0.0 && y[i] != 1.0) {
            throw InputError("gbdt: logistic targets must be 0 or 1");
        }
    }

    GbdtModel model;
    model.objective = objective;
    model.learning_rate = params.learning_rate;
    model.n_features = static_cast<int>(d);
    const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    if (objective == Objective::logistic) {
        const double p = std::clamp(mean_y, 1e-15, 1.0 - 1e-15);
        model.base_score = std::log(p / (1.0 - p));
    } else {
        model.base_score = mean_y;
    }

    std::vector<std::vector<int>> order(d, std::vector<int>(n));
    for (std::size_t f = 0; f < d; ++f) {
        std::iota(order[f].begin(), order[f].end(), 0);
        std::sort(order[f].begin(), order[f].end(), [&](int a, int b) {
            const double va = x[static_cast<std::size_t>(a)][f];
            const double vb = x[static_cast<std::size_t>(b)][f];
            return va < vb || (va == vb && a < b);
        });
    }

    std::vector<double> z(n, model.base_score);
    std::vector<double> g(n);
    std::vector<double> h(n);
    std::vector<double> z_try(n);
    double loss = mean_loss(objective, y, z);
    model.train_loss.push_back(loss);

    for (int round = 0; round < params.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const GradHess gh = objective == Objective::logistic ? logistic_grad_hess(y[i], z[i]) : l2_grad_hess(y[i], z[i]);
            g[i] = gh.grad;
            h[i] = gh.hess;
        }
        Tree tree = TreeBuilder(x, g, h, order, params).build();
        const Tree original = tree;
        double step = 1.0;
        bool accepted = false;
        for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
            for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
                tree.nodes[k].value = original.nodes[k].value * step;
            }
            for (std::size_t i = 0; i < n; ++i) {
                z_try[i] = z[i] + params.learning_rate * tree.evaluate(x[i]);
            }
            const double next = mean_loss(objective, y, z_try);
            if (next <= loss) {
                accepted = true;
                loss = next;
                z.swap(z_try);
            } else {
                step /= 2.0;
            }
        }
        if (!accepted) {
            for (auto& node : tree.nodes) {
                node.value = 0.0;
            }
        }
        model.trees.push_back(std::move(tree));
        model.train_loss.push_back(loss);
    }
    return model;
}

}  // namespace trichome::ml
