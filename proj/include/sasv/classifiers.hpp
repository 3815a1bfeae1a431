#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sasv/common.hpp"
#include "sasv/embedding.hpp"

namespace sasv {

/// Labeled feature rows. Label semantics are fixed per task: for the
/// countermeasure 1 = bona fide and 0 = spoof; for gender recognition
/// 1 = male and 0 = female.
struct Dataset {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    std::vector<char> genders;
    std::vector<std::string> source_ids;

    std::size_t size() const { return features.size(); }
    std::size_t dim() const { return features.empty() ? 0 : features[0].size(); }
    void validate() const;  // consistent dims, finite features, 0/1 labels
};

enum class ModelKind : int { logistic_regression = 0, gbdt = 1, grouped_mlp = 2 };
enum class MlpVariant : int { male = 0, female = 1, gender_independent = 2 };
enum class MlpHead : int { sigmoid = 0, one_class_softmax = 1 };

std::string_view model_kind_to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view s);
std::string_view mlp_variant_to_string(MlpVariant variant);
MlpVariant mlp_variant_from_string(std::string_view s);

struct OcsParams {
    double alpha_scale = 20.0;
    double m_target = 0.9;
    double m_other = 0.2;
};

/// Margin loss on cosine scores: bona fide (label 1) samples pay
/// softplus(alpha*(m_target - s)), spoof (label 0) samples pay
/// softplus(alpha*(s - m_other)); returns the mean. When grad is non-null it
/// receives d(mean loss)/d(score_i).
double oc_softmax_loss(std::span<const double> scores, std::span<const int> labels,
                       const OcsParams& params, std::vector<double>* grad = nullptr);

struct LogregConfig {
    double l2 = 0.0;
    int epochs = 500;
    double lr = 0.1;
    std::uint64_t seed = 1;
};

struct GbdtConfig {
    int n_trees = 200;
    int max_depth = 3;
    double lr = 0.1;
    double l2 = 1.0;       // leaf regularizer in the Newton step
    int max_bins = 256;
    std::uint64_t seed = 1;
};

struct GroupedMlpSpec {
    MlpVariant variant = MlpVariant::male;
    int group_width = 5;    // per-group layer output size
    int merge1_width = 40;  // first merge layer
    int merge2_width = 1;   // second merge layer / final embedding
    bool residual = false;  // shortcut projection across the first merge layer
    MlpHead head = MlpHead::sigmoid;
    double dropout_p = 0.2;
    int batch_size = 256;
    int epochs = 300;
    double lr = 0.01;
    std::uint64_t seed = 1;
    OcsParams ocs;

    void validate() const;
};

/// The three stock configurations: male (5, 40, 1) sigmoid head; female
/// (10, 40, 48) one-class softmax with residual; gender-independent
/// (10, 80, 32) likewise.
GroupedMlpSpec make_mlp_spec(MlpVariant variant);

struct LogregModel {
    std::vector<double> weights;
    double bias = 0.0;
};

struct GbdtNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double leaf = 0.0;
};

struct GbdtTree {
    std::vector<GbdtNode> nodes;  // node 0 is the root
};

struct GbdtModel {
    std::vector<GbdtTree> trees;
    double learning_rate = 0.1;
    double base_raw = 0.0;
};

struct GroupedMlpModel {
    GroupedMlpSpec spec;
    EmbeddingLayout layout;
    std::vector<std::vector<double>> group_w;  // per group: width x group_size, row-major
    std::vector<std::vector<double>> group_b;
    std::vector<double> merge1_w;  // merge1_width x concat
    std::vector<double> merge1_b;
    std::vector<double> residual_w;  // merge1_width x concat; empty when residual off
    std::vector<double> merge2_w;    // merge2_width x merge1_width
    std::vector<double> merge2_b;
    std::vector<double> head_w;  // cosine direction for the one-class head; else empty
};

struct TrainedModel {
    ModelKind kind = ModelKind::logistic_regression;
    int input_dim = 0;
    EmbeddingLayout layout;  // meaningful for grouped MLPs
    std::string config_hash;
    LogregModel logreg;
    GbdtModel gbdt;
    GroupedMlpModel mlp;
};

/// Full-batch gradient descent on the regularized logistic loss.
TrainedModel train_logreg(const Dataset& data, const LogregConfig& config,
                          std::ostream* train_log = nullptr);

/// Mean logistic loss plus (l2/2)*|w|^2 (bias unregularized); gradient laid
/// out weights-then-bias. Exposed for gradient verification.
double logreg_loss_and_gradient(const LogregModel& model, const Dataset& data, double l2,
                                std::vector<double>& grad);

/// Newton-step boosted trees on the logistic loss over quantized feature
/// histograms. When a feature has at most max_bins distinct values the
/// candidate thresholds are exactly the midpoints between consecutive
/// distinct values.
TrainedModel train_gbdt(const Dataset& data, const GbdtConfig& config,
                        std::ostream* train_log = nullptr);

/// Oversamples the minority class up to the majority count by interpolating
/// toward nearby minority rows. Synthesis draws from borderline rows (those
/// with at least one majority sample among their k nearest neighbors over
/// the whole set), or from all minority rows when no borderline rows exist.
Dataset smote_oversample(const Dataset& data, int k_neighbors, std::uint64_t seed);

/// Mini-batch SGD over the grouped network; dropout active only here, never
/// at inference. The optional dev set adds a dev-EER column to the log.
TrainedModel train_grouped_mlp(const Dataset& data, const GroupedMlpSpec& spec,
                               std::ostream* train_log = nullptr,
                               const Dataset* dev = nullptr);

/// Forward pass without dropout. Sigmoid head scores lie in [0, 1], cosine
/// head scores in [-1, 1].
double mlp_forward(const GroupedMlpModel& model, std::span<const double> features);

/// Batch loss (mean) and parameter gradients without dropout, for gradient
/// verification. Parameter order matches mlp_parameters.
double mlp_loss_and_gradient(const GroupedMlpModel& model, const Dataset& batch,
                             std::vector<double>& grad);

std::vector<double> mlp_parameters(const GroupedMlpModel& model);
void set_mlp_parameters(GroupedMlpModel& model, std::span<const double> params);

/// Seeded initial network (uniform fan-in init), before any training step.
GroupedMlpModel make_initial_mlp(const GroupedMlpSpec& spec, const EmbeddingLayout& layout);

double score(const TrainedModel& model, std::span<const double> features);

/// Binary model files: magic "SASV", version, kind, config hash, exact
/// parameter bits; reload reproduces scores bit-exactly.
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace sasv
