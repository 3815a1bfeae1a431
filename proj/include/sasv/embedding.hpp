#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sasv/common.hpp"
#include "sasv/pmf.hpp"
#include "sasv/similarity.hpp"

namespace sasv {

/// Channel-major layout of the per-utterance feature vector: for channel n
/// (1-based) and measure ordinal l (0-based), the flat index is
/// (n-1)*measure_count + l. Channels 1..channel_count/2 are the gammatone
/// half of the bank, the rest the inverse half.
struct EmbeddingLayout {
    int channel_count = 20;
    int measure_count = kMeasureCount;

    int dim() const { return channel_count * measure_count; }
    int flat_index(int channel_1based, int measure_ordinal) const {
        return (channel_1based - 1) * measure_count + measure_ordinal;
    }

    /// Groups pair each measure with one filter kind: group = measure*2 + kind
    /// where kind 0 = gammatone, 1 = inverse. Each group holds
    /// channel_count/2 values ordered by channel.
    int group_count() const { return measure_count * 2; }
    int group_size() const { return channel_count / 2; }
    int group_of(int flat_index) const;
};

struct EmbeddingParams {
    double divergence_epsilon = 1e-6;  // KL-family smoothing
    QuadraticChiParams qc;
};

struct Embedding {
    std::string source_id;
    std::string class1;
    std::string class2;
    std::string label;   // ground-truth class if known, else empty
    char gender = '-';   // 'm', 'f', or '-'
    std::vector<double> values;
};

/// Difference-of-distances feature: for every channel and measure,
/// measure(input, class2 model) - measure(input, class1 model). KL and
/// symmetric-KL slots see smoothed copies of the inputs; nothing else does.
std::vector<double> embed_utterance(const std::vector<std::vector<double>>& input_pmfs,
                                    const PmfModel& class1, const PmfModel& class2,
                                    const EmbeddingParams& params = {});

/// Splits a flat vector into the measure-by-filter-kind groups.
std::vector<std::vector<double>> regroup(std::span<const double> flat,
                                         const EmbeddingLayout& layout = {});

/// Inverse of regroup.
std::vector<double> flatten(const std::vector<std::vector<double>>& groups,
                            const EmbeddingLayout& layout = {});

/// Embedding container persisted as raw little-endian doubles plus a
/// JSON-lines sidecar carrying per-row metadata.
struct EmbeddingSet {
    EmbeddingLayout layout;
    std::vector<Embedding> rows;
};

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& base_path);
EmbeddingSet load_embeddings(const std::filesystem::path& base_path);

/// PCA over a set of equal-length vectors, for projection plots.
struct PcaResult {
    std::vector<double> mean;
    std::vector<std::vector<double>> components;  // one basis vector per kept dim
    std::vector<double> eigenvalues;              // descending, kept dims only
    std::vector<double> all_eigenvalues;          // full spectrum, descending
    bool rank_deficient = false;
};

PcaResult pca_fit(const std::vector<std::vector<double>>& data, int dims);
std::vector<double> pca_project(const PcaResult& pca, std::span<const double> v);

}  // namespace sasv
