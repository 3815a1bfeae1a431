#include "sasv/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace sasv {

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void require_two_classes(const Dataset& data) {
    bool has0 = false, has1 = false;
    for (int y : data.labels) (y == 1 ? has1 : has0) = true;
    if (!has0 || !has1) fail(Errc::single_class_data, "training data holds a single class");
}

}  // namespace

std::string_view model_kind_to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::logistic_regression: return "logistic_regression";
        case ModelKind::gbdt: return "gbdt";
        case ModelKind::grouped_mlp: return "grouped_mlp";
    }
    return "";
}

ModelKind model_kind_from_string(std::string_view s) {
    if (s == "logistic_regression") return ModelKind::logistic_regression;
    if (s == "gbdt") return ModelKind::gbdt;
    if (s == "grouped_mlp") return ModelKind::grouped_mlp;
    fail(Errc::config_error, "unknown classifier kind: " + std::string(s));
}

std::string_view mlp_variant_to_string(MlpVariant variant) {
    switch (variant) {
        case MlpVariant::male: return "male";
        case MlpVariant::female: return "female";
        case MlpVariant::gender_independent: return "gender_independent";
    }
    return "";
}

MlpVariant mlp_variant_from_string(std::string_view s) {
    if (s == "male") return MlpVariant::male;
    if (s == "female") return MlpVariant::female;
    if (s == "gender_independent") return MlpVariant::gender_independent;
    fail(Errc::config_error, "unknown network variant: " + std::string(s));
}

void Dataset::validate() const {
    if (features.empty()) fail(Errc::empty_input, "empty dataset");
    if (labels.size() != features.size())
        fail(Errc::bad_argument, "label count differs from row count");
    if (!genders.empty() && genders.size() != features.size())
        fail(Errc::bad_argument, "gender count differs from row count");
    if (!source_ids.empty() && source_ids.size() != features.size())
        fail(Errc::bad_argument, "source id count differs from row count");
    const std::size_t d = features[0].size();
    if (d == 0) fail(Errc::empty_input, "zero-dimensional features");
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].size() != d)
            fail(Errc::layout_mismatch, "row " + std::to_string(i) + " has " +
                                            std::to_string(features[i].size()) +
                                            " features, expected " + std::to_string(d));
        for (double v : features[i])
            if (!std::isfinite(v))
                fail(Errc::non_finite_feature, "non-finite feature in row " + std::to_string(i));
        if (labels[i] != 0 && labels[i] != 1)
            fail(Errc::bad_argument, "labels must be 0 or 1");
    }
}

double oc_softmax_loss(std::span<const double> scores, std::span<const int> labels,
                       const OcsParams& params, std::vector<double>* grad) {
    if (scores.empty()) fail(Errc::empty_input, "no scores");
    if (scores.size() != labels.size())
        fail(Errc::bad_argument, "scores and labels differ in length");
    if (!(params.m_other < params.m_target) || !(std::abs(params.m_target) <= 1.0) ||
        !(std::abs(params.m_other) <= 1.0) || !(params.alpha_scale > 0.0))
        fail(Errc::bad_margins,
             "need m_other < m_target, both within [-1, 1], and a positive scale");

    const double n = static_cast<double>(scores.size());
    if (grad) grad->assign(scores.size(), 0.0);
    KahanSum loss;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) fail(Errc::bad_argument, "labels must be 0 or 1");
        const double sign = labels[i] == 1 ? 1.0 : -1.0;
        const double margin = labels[i] == 1 ? params.m_target : params.m_other;
        const double z = params.alpha_scale * sign * (margin - scores[i]);
        loss.add(softplus(z));
        if (grad) (*grad)[i] = -params.alpha_scale * sign * sigmoid(z) / n;
    }
    return loss.value() / n;
}

double logreg_loss_and_gradient(const LogregModel& model, const Dataset& data, double l2,
                                std::vector<double>& grad) {
    const std::size_t d = data.dim();
    if (model.weights.size() != d)
        fail(Errc::layout_mismatch, "weight count differs from feature count");
    grad.assign(d + 1, 0.0);
    KahanSum loss;
    const double n = static_cast<double>(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& x = data.features[i];
        double z = model.bias;
        for (std::size_t j = 0; j < d; ++j) z += model.weights[j] * x[j];
        loss.add(data.labels[i] == 1 ? softplus(-z) : softplus(z));
        const double delta = sigmoid(z) - static_cast<double>(data.labels[i]);
        for (std::size_t j = 0; j < d; ++j) grad[j] += delta * x[j];
        grad[d] += delta;
    }
    double total = loss.value() / n;
    for (std::size_t j = 0; j < d; ++j) {
        grad[j] = grad[j] / n + l2 * model.weights[j];
        total += 0.5 * l2 * model.weights[j] * model.weights[j];
    }
    grad[d] /= n;
    return total;
}

TrainedModel train_logreg(const Dataset& data, const LogregConfig& config,
                          std::ostream* train_log) {
    data.validate();
    require_two_classes(data);
    if (config.l2 < 0.0) fail(Errc::bad_argument, "l2 must be non-negative");
    if (config.epochs < 0) fail(Errc::bad_argument, "epochs must be non-negative");

    const std::size_t d = data.dim();
    TrainedModel model;
    model.kind = ModelKind::logistic_regression;
    model.input_dim = static_cast<int>(d);
    {
        std::ostringstream cfg;
        cfg << "logreg l2=" << config.l2 << " epochs=" << config.epochs << " lr=" << config.lr
            << " seed=" << config.seed;
        model.config_hash = config_digest(cfg.str());
    }

    std::mt19937_64 rng(mix_seed(config.seed, 0));
    const double range = 1.0 / std::sqrt(static_cast<double>(d));
    model.logreg.weights.resize(d);
    for (double& w : model.logreg.weights) w = range * (2.0 * uniform01(rng) - 1.0);
    model.logreg.bias = 0.0;

    if (train_log) *train_log << "epoch,loss\n";
    std::vector<double> grad;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double loss = logreg_loss_and_gradient(model.logreg, data, config.l2, grad);
        if (!std::isfinite(loss))
            fail(Errc::divergent_loss, "logistic loss diverged at epoch " + std::to_string(epoch));
        for (std::size_t j = 0; j < d; ++j) model.logreg.weights[j] -= config.lr * grad[j];
        model.logreg.bias -= config.lr * grad[d];
        if (train_log) *train_log << epoch << ',' << loss << '\n';
    }
    return model;
}

namespace {

struct BinnedFeature {
    std::vector<std::uint16_t> bins;     // per row
    std::vector<double> thresholds;      // split t sends bins <= t left; x < thresholds[t]
    int bin_count = 0;
};

BinnedFeature bin_feature(const Dataset& data, std::size_t feature, int max_bins) {
    const std::size_t n = data.size();
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = data.features[i][feature];
    std::vector<double> distinct = values;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    BinnedFeature out;
    out.bins.resize(n);
    if (static_cast<int>(distinct.size()) <= max_bins) {
        // Exact mode: one bin per distinct value, thresholds at midpoints.
        for (std::size_t i = 0; i < n; ++i)
            out.bins[i] = static_cast<std::uint16_t>(
                std::lower_bound(distinct.begin(), distinct.end(), values[i]) - distinct.begin());
        for (std::size_t t = 0; t + 1 < distinct.size(); ++t) {
            double mid = distinct[t] + (distinct[t + 1] - distinct[t]) / 2.0;
            // Keep the x < mid predicate equivalent to bin <= t even when the
            // midpoint rounds onto the lower value.
            if (!(mid > distinct[t])) mid = distinct[t + 1];
            out.thresholds.push_back(mid);
        }
        out.bin_count = static_cast<int>(distinct.size());
    } else {
        // Quantile cuts over the distinct values; x < cut goes left.
        std::vector<double> cuts;
        for (int k = 1; k < max_bins; ++k) {
            const std::size_t idx = distinct.size() * static_cast<std::size_t>(k) /
                                    static_cast<std::size_t>(max_bins);
            cuts.push_back(distinct[idx]);
        }
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        for (std::size_t i = 0; i < n; ++i)
            out.bins[i] = static_cast<std::uint16_t>(
                std::upper_bound(cuts.begin(), cuts.end(), values[i]) - cuts.begin());
        out.thresholds = cuts;
        out.bin_count = static_cast<int>(cuts.size()) + 1;
    }
    return out;
}

struct SplitChoice {
    double gain = 0.0;
    int feature = -1;
    int threshold_index = -1;
};

double leaf_objective(double g, double h, double l2) { return g * g / (h + l2); }

}  // namespace

TrainedModel train_gbdt(const Dataset& data, const GbdtConfig& config, std::ostream* train_log) {
    data.validate();
    require_two_classes(data);
    if (config.n_trees < 1) fail(Errc::bad_argument, "need at least one tree");
    if (config.max_depth < 1) fail(Errc::bad_argument, "need depth of at least one");
    if (config.max_bins < 2 || config.max_bins > 65536)
        fail(Errc::bad_argument, "max_bins must lie in [2, 65536]");

    const std::size_t n = data.size();
    const std::size_t d = data.dim();
    std::vector<BinnedFeature> binned(d);
    for (std::size_t f = 0; f < d; ++f) binned[f] = bin_feature(data, f, config.max_bins);

    TrainedModel model;
    model.kind = ModelKind::gbdt;
    model.input_dim = static_cast<int>(d);
    {
        std::ostringstream cfg;
        cfg << "gbdt trees=" << config.n_trees << " depth=" << config.max_depth
            << " lr=" << config.lr << " l2=" << config.l2 << " bins=" << config.max_bins
            << " seed=" << config.seed;
        model.config_hash = config_digest(cfg.str());
    }
    model.gbdt.learning_rate = config.lr;
    model.gbdt.base_raw = 0.0;

    std::vector<double> raw(n, model.gbdt.base_raw);
    std::vector<double> g(n), h(n);
    if (train_log) *train_log << "epoch,loss\n";

    for (int t = 0; t < config.n_trees; ++t) {
        KahanSum loss;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(raw[i]);
            g[i] = p - static_cast<double>(data.labels[i]);
            h[i] = p * (1.0 - p);
            loss.add(data.labels[i] == 1 ? softplus(-raw[i]) : softplus(raw[i]));
        }
        if (!std::isfinite(loss.value()))
            fail(Errc::divergent_loss, "boosting loss diverged at round " + std::to_string(t));
        if (train_log) *train_log << t << ',' << loss.value() / static_cast<double>(n) << '\n';

        GbdtTree tree;
        struct Pending {
            std::vector<std::size_t> rows;
            int node;
            int depth;
        };
        tree.nodes.push_back({});
        std::vector<Pending> stack;
        {
            std::vector<std::size_t> all(n);
            std::iota(all.begin(), all.end(), 0);
            stack.push_back({std::move(all), 0, 0});
        }
        while (!stack.empty()) {
            Pending cur = std::move(stack.back());
            stack.pop_back();

            double gsum = 0.0, hsum = 0.0;
            for (std::size_t i : cur.rows) {
                gsum += g[i];
                hsum += h[i];
            }

            SplitChoice best;
            if (cur.depth < config.max_depth && cur.rows.size() >= 2) {
                const double parent = leaf_objective(gsum, hsum, config.l2);
                for (std::size_t f = 0; f < d; ++f) {
                    const auto& bf = binned[f];
                    if (bf.thresholds.empty()) continue;
                    std::vector<double> gb(static_cast<std::size_t>(bf.bin_count), 0.0);
                    std::vector<double> hb(static_cast<std::size_t>(bf.bin_count), 0.0);
                    std::vector<std::uint32_t> cb(static_cast<std::size_t>(bf.bin_count), 0);
                    for (std::size_t i : cur.rows) {
                        gb[bf.bins[i]] += g[i];
                        hb[bf.bins[i]] += h[i];
                        ++cb[bf.bins[i]];
                    }
                    double gl = 0.0, hl = 0.0;
                    std::uint32_t cl = 0;
                    for (std::size_t b = 0; b + 1 < static_cast<std::size_t>(bf.bin_count); ++b) {
                        gl += gb[b];
                        hl += hb[b];
                        cl += cb[b];
                        if (cl == 0 || cl == cur.rows.size()) continue;
                        const double gain =
                            0.5 * (leaf_objective(gl, hl, config.l2) +
                                   leaf_objective(gsum - gl, hsum - hl, config.l2) - parent);
                        if (gain > best.gain) {
                            best = {gain, static_cast<int>(f), static_cast<int>(b)};
                        }
                    }
                }
            }

            if (best.feature < 0) {
                tree.nodes[static_cast<std::size_t>(cur.node)].leaf =
                    -gsum / (hsum + config.l2);
                continue;
            }

            const auto& bf = binned[static_cast<std::size_t>(best.feature)];
            std::vector<std::size_t> left_rows, right_rows;
            for (std::size_t i : cur.rows)
                (bf.bins[i] <= static_cast<std::uint16_t>(best.threshold_index) ? left_rows
                                                                                : right_rows)
                    .push_back(i);
            const int left = static_cast<int>(tree.nodes.size());
            const int right = left + 1;
            tree.nodes.push_back({});
            tree.nodes.push_back({});
            GbdtNode& node = tree.nodes[static_cast<std::size_t>(cur.node)];
            node.feature = best.feature;
            node.threshold = bf.thresholds[static_cast<std::size_t>(best.threshold_index)];
            node.left = left;
            node.right = right;
            stack.push_back({std::move(right_rows), right, cur.depth + 1});
            stack.push_back({std::move(left_rows), left, cur.depth + 1});
        }

        for (std::size_t i = 0; i < n; ++i) {
            int node = 0;
            while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
                const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
                node = data.features[i][static_cast<std::size_t>(nd.feature)] < nd.threshold
                           ? nd.left
                           : nd.right;
            }
            raw[i] += config.lr * tree.nodes[static_cast<std::size_t>(node)].leaf;
        }
        model.gbdt.trees.push_back(std::move(tree));
    }
    return model;
}

Dataset smote_oversample(const Dataset& data, int k_neighbors, std::uint64_t seed) {
    data.validate();
    if (k_neighbors < 1) fail(Errc::bad_argument, "need at least one neighbor");
    require_two_classes(data);

    std::size_t c0 = 0, c1 = 0;
    for (int y : data.labels) (y == 1 ? c1 : c0)++;
    if (c0 == c1) return data;
    const int minority = c1 < c0 ? 1 : 0;
    const std::size_t need = (c1 < c0 ? c0 - c1 : c1 - c0);

    std::vector<std::size_t> min_idx;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.labels[i] == minority) min_idx.push_back(i);
    if (min_idx.size() < static_cast<std::size_t>(k_neighbors) + 1)
        fail(Errc::too_few_minority_samples,
             "minority class needs at least k+1 rows, has " + std::to_string(min_idx.size()));

    const std::size_t d = data.dim();
    auto dist2 = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double t = data.features[a][j] - data.features[b][j];
            s += t * t;
        }
        return s;
    };

    // k nearest rows over the whole set decide which minority rows sit on the
    // class border; interpolation partners come from minority rows only.
    auto k_nearest = [&](std::size_t center, const std::vector<std::size_t>& pool) {
        std::vector<std::pair<double, std::size_t>> ranked;
        ranked.reserve(pool.size());
        for (std::size_t j : pool)
            if (j != center) ranked.push_back({dist2(center, j), j});
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_neighbors),
                                                    ranked.size());
        std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k),
                          ranked.end());
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < k; ++i) out.push_back(ranked[i].second);
        return out;
    };

    std::vector<std::size_t> all_idx(data.size());
    std::iota(all_idx.begin(), all_idx.end(), 0);

    std::vector<std::size_t> danger;
    for (std::size_t i : min_idx) {
        for (std::size_t j : k_nearest(i, all_idx))
            if (data.labels[j] != minority) {
                danger.push_back(i);
                break;
            }
    }
    if (danger.empty()) danger = min_idx;

    std::vector<std::vector<std::size_t>> partners(danger.size());
    for (std::size_t i = 0; i < danger.size(); ++i) partners[i] = k_nearest(danger[i], min_idx);

    Dataset out = data;
    std::mt19937_64 rng(mix_seed(seed, 0));
    for (std::size_t t = 0; t < need; ++t) {
        const std::size_t pick = rng() % danger.size();
        const std::size_t base = danger[pick];
        const auto& nn = partners[pick];
        const std::size_t partner = nn[rng() % nn.size()];
        double u = uniform01(rng);
        while (u == 0.0) u = uniform01(rng);

        std::vector<double> row(d);
        for (std::size_t j = 0; j < d; ++j)
            row[j] = data.features[base][j] +
                     u * (data.features[partner][j] - data.features[base][j]);
        out.features.push_back(std::move(row));
        out.labels.push_back(minority);
        if (!out.genders.empty()) out.genders.push_back(data.genders[base]);
        if (!out.source_ids.empty())
            out.source_ids.push_back(data.source_ids[base] + "#synth" + std::to_string(t));
    }
    return out;
}

double score(const TrainedModel& model, std::span<const double> features) {
    switch (model.kind) {
        case ModelKind::logistic_regression: {
            if (features.size() != model.logreg.weights.size())
                fail(Errc::layout_mismatch, "feature count differs from model input size");
            double z = model.logreg.bias;
            for (std::size_t j = 0; j < features.size(); ++j)
                z += model.logreg.weights[j] * features[j];
            return sigmoid(z);
        }
        case ModelKind::gbdt: {
            if (static_cast<int>(features.size()) != model.input_dim)
                fail(Errc::layout_mismatch, "feature count differs from model input size");
            double raw = model.gbdt.base_raw;
            for (const auto& tree : model.gbdt.trees) {
                int node = 0;
                while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
                    const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
                    node = features[static_cast<std::size_t>(nd.feature)] < nd.threshold
                               ? nd.left
                               : nd.right;
                }
                raw += model.gbdt.learning_rate *
                       tree.nodes[static_cast<std::size_t>(node)].leaf;
            }
            return sigmoid(raw);
        }
        case ModelKind::grouped_mlp:
            return mlp_forward(model.mlp, features);
    }
    fail(Errc::bad_argument, "unknown model kind");
}

}  // namespace sasv
