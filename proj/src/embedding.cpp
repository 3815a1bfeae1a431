#include "sasv/embedding.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace sasv {

namespace {
bool measure_needs_smoothing(Measure m) {
    return m == Measure::kullback_leibler || m == Measure::symmetric_kullback_leibler;
}
}  // namespace

int EmbeddingLayout::group_of(int flat_index) const {
    if (flat_index < 0 || flat_index >= dim())
        fail(Errc::layout_mismatch, "flat index " + std::to_string(flat_index) +
                                        " outside 0.." + std::to_string(dim() - 1));
    const int measure = flat_index % measure_count;
    const int channel = flat_index / measure_count + 1;
    const int kind = channel <= channel_count / 2 ? 0 : 1;
    return measure * 2 + kind;
}

std::vector<double> embed_utterance(const std::vector<std::vector<double>>& input_pmfs,
                                    const PmfModel& class1, const PmfModel& class2,
                                    const EmbeddingParams& params) {
    const int channels = static_cast<int>(input_pmfs.size());
    if (channels == 0) fail(Errc::empty_input, "no input PMFs");
    if (class1.channel_count() != channels || class2.channel_count() != channels)
        fail(Errc::channel_count_mismatch,
             "input has " + std::to_string(channels) + " channels, models have " +
                 std::to_string(class1.channel_count()) + " and " +
                 std::to_string(class2.channel_count()));

    const EmbeddingLayout layout{channels, kMeasureCount};
    std::vector<double> values(static_cast<std::size_t>(layout.dim()));
    for (int n = 1; n <= channels; ++n) {
        const auto& p = input_pmfs[static_cast<std::size_t>(n - 1)];
        const auto& q1 = class1.channels[static_cast<std::size_t>(n - 1)];
        const auto& q2 = class2.channels[static_cast<std::size_t>(n - 1)];
        if (q1.size() != p.size() || q2.size() != p.size())
            fail(Errc::bin_count_mismatch,
                 "bin count differs between input and models at channel " + std::to_string(n));

        std::vector<double> ps, q1s, q2s;  // smoothed copies, built on demand
        for (int l = 0; l < kMeasureCount; ++l) {
            const auto m = static_cast<Measure>(l);
            double d1, d2;
            if (measure_needs_smoothing(m)) {
                if (ps.empty()) {
                    ps = smooth_pmf(p, params.divergence_epsilon);
                    q1s = smooth_pmf(q1, params.divergence_epsilon);
                    q2s = smooth_pmf(q2, params.divergence_epsilon);
                }
                d1 = measure(m, ps, q1s, params.qc);
                d2 = measure(m, ps, q2s, params.qc);
            } else {
                d1 = measure(m, p, q1, params.qc);
                d2 = measure(m, p, q2, params.qc);
            }
            values[static_cast<std::size_t>(layout.flat_index(n, l))] = d2 - d1;
        }
    }
    return values;
}

std::vector<std::vector<double>> regroup(std::span<const double> flat,
                                         const EmbeddingLayout& layout) {
    if (static_cast<int>(flat.size()) != layout.dim())
        fail(Errc::layout_mismatch, "expected " + std::to_string(layout.dim()) +
                                        " values, got " + std::to_string(flat.size()));
    std::vector<std::vector<double>> groups(static_cast<std::size_t>(layout.group_count()));
    for (auto& g : groups) g.reserve(static_cast<std::size_t>(layout.group_size()));
    // Walk channels in order so each group ends up channel-ordered.
    for (int idx = 0; idx < layout.dim(); ++idx)
        groups[static_cast<std::size_t>(layout.group_of(idx))].push_back(
            flat[static_cast<std::size_t>(idx)]);
    return groups;
}

std::vector<double> flatten(const std::vector<std::vector<double>>& groups,
                            const EmbeddingLayout& layout) {
    if (static_cast<int>(groups.size()) != layout.group_count())
        fail(Errc::layout_mismatch, "expected " + std::to_string(layout.group_count()) +
                                        " groups, got " + std::to_string(groups.size()));
    for (const auto& g : groups)
        if (static_cast<int>(g.size()) != layout.group_size())
            fail(Errc::layout_mismatch, "group size mismatch");

    std::vector<double> flat(static_cast<std::size_t>(layout.dim()));
    std::vector<std::size_t> cursor(groups.size(), 0);
    for (int idx = 0; idx < layout.dim(); ++idx) {
        const auto g = static_cast<std::size_t>(layout.group_of(idx));
        flat[static_cast<std::size_t>(idx)] = groups[g][cursor[g]++];
    }
    return flat;
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& base_path) {
    const int dim = set.layout.dim();
    for (const auto& row : set.rows)
        if (static_cast<int>(row.values.size()) != dim)
            fail(Errc::layout_mismatch, "embedding row length differs from layout");

    std::filesystem::path data_path = base_path;
    data_path += ".f64";
    std::filesystem::path meta_path = base_path;
    meta_path += ".jsonl";

    std::ofstream data(data_path, std::ios::binary);
    if (!data) fail(Errc::io_error, "cannot open for writing: " + data_path.string());
    for (const auto& row : set.rows) {
        for (double v : row.values) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            unsigned char b[8];
            for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
            data.write(reinterpret_cast<const char*>(b), 8);
        }
    }
    if (!data) fail(Errc::io_error, "write failed: " + data_path.string());

    std::ofstream meta(meta_path);
    if (!meta) fail(Errc::io_error, "cannot open for writing: " + meta_path.string());
    for (const auto& row : set.rows) {
        nlohmann::json j{{"source_id", row.source_id},
                         {"class1", row.class1},
                         {"class2", row.class2},
                         {"label", row.label},
                         {"gender", std::string(1, row.gender)},
                         {"dim", dim}};
        meta << j.dump() << '\n';
    }
    if (!meta) fail(Errc::io_error, "write failed: " + meta_path.string());
}

EmbeddingSet load_embeddings(const std::filesystem::path& base_path) {
    std::filesystem::path data_path = base_path;
    data_path += ".f64";
    std::filesystem::path meta_path = base_path;
    meta_path += ".jsonl";

    std::ifstream meta(meta_path);
    if (!meta) fail(Errc::io_error, "cannot open: " + meta_path.string());
    EmbeddingSet set;
    int dim = -1;
    std::string line;
    while (std::getline(meta, line)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail(Errc::io_error, "bad sidecar line in " + meta_path.string() + ": " + e.what());
        }
        Embedding row;
        row.source_id = j.value("source_id", "");
        row.class1 = j.value("class1", "");
        row.class2 = j.value("class2", "");
        row.label = j.value("label", "");
        const std::string g = j.value("gender", "-");
        row.gender = g.empty() ? '-' : g[0];
        const int row_dim = j.value("dim", 0);
        if (dim == -1) dim = row_dim;
        if (row_dim != dim || dim <= 0 || dim % kMeasureCount != 0)
            fail(Errc::layout_mismatch, "inconsistent embedding dim in " + meta_path.string());
        set.rows.push_back(std::move(row));
    }
    if (set.rows.empty()) fail(Errc::empty_input, "no rows in " + meta_path.string());
    set.layout = EmbeddingLayout{dim / kMeasureCount, kMeasureCount};

    std::ifstream data(data_path, std::ios::binary);
    if (!data) fail(Errc::io_error, "cannot open: " + data_path.string());
    for (auto& row : set.rows) {
        row.values.resize(static_cast<std::size_t>(dim));
        for (double& v : row.values) {
            unsigned char b[8];
            data.read(reinterpret_cast<char*>(b), 8);
            if (data.gcount() != 8)
                fail(Errc::io_error, "truncated embedding data: " + data_path.string());
            std::uint64_t bits = 0;
            for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
            std::memcpy(&v, &bits, 8);
        }
    }
    char extra;
    if (data.read(&extra, 1) && data.gcount() == 1)
        fail(Errc::io_error, "embedding data longer than sidecar: " + data_path.string());
    return set;
}

PcaResult pca_fit(const std::vector<std::vector<double>>& data, int dims) {
    if (dims < 1) fail(Errc::bad_argument, "PCA dims must be positive");
    const std::size_t n = data.size();
    if (n < static_cast<std::size_t>(dims) + 1)
        fail(Errc::bad_argument, "PCA needs at least dims+1 vectors");
    const std::size_t d = data[0].size();
    for (const auto& row : data)
        if (row.size() != d) fail(Errc::layout_mismatch, "PCA rows differ in length");
    if (static_cast<std::size_t>(dims) > d)
        fail(Errc::bad_argument, "PCA dims exceed vector length");

    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i][j];

    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    const Eigen::MatrixXd cov =
        centered.adjoint() * centered / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
        fail(Errc::non_finite_feature, "PCA eigendecomposition failed");

    PcaResult out;
    out.mean.assign(mean.data(), mean.data() + d);
    const Eigen::VectorXd evals = solver.eigenvalues();   // ascending
    const Eigen::MatrixXd evecs = solver.eigenvectors();
    out.all_eigenvalues.resize(d);
    for (std::size_t j = 0; j < d; ++j)
        out.all_eigenvalues[j] = evals(static_cast<Eigen::Index>(d - 1 - j));

    const double max_eval = std::max(out.all_eigenvalues.empty() ? 0.0 : out.all_eigenvalues[0], 0.0);
    int rank = 0;
    for (double ev : out.all_eigenvalues)
        if (ev > max_eval * 1e-12 && ev > 0.0) ++rank;
    out.rank_deficient = rank < dims;

    for (int k = 0; k < dims; ++k) {
        Eigen::VectorXd v = evecs.col(static_cast<Eigen::Index>(d - 1 - static_cast<std::size_t>(k)));
        // Deterministic sign: largest-magnitude entry made positive.
        Eigen::Index pivot = 0;
        double best = 0.0;
        for (Eigen::Index j = 0; j < v.size(); ++j)
            if (std::abs(v(j)) > best) {
                best = std::abs(v(j));
                pivot = j;
            }
        if (v(pivot) < 0.0) v = -v;
        out.components.emplace_back(v.data(), v.data() + d);
        out.eigenvalues.push_back(out.all_eigenvalues[static_cast<std::size_t>(k)]);
    }
    return out;
}

std::vector<double> pca_project(const PcaResult& pca, std::span<const double> v) {
    if (v.size() != pca.mean.size())
        fail(Errc::layout_mismatch, "vector length differs from PCA basis");
    std::vector<double> out;
    out.reserve(pca.components.size());
    for (const auto& comp : pca.components) {
        KahanSum dot;
        for (std::size_t j = 0; j < v.size(); ++j) dot.add((v[j] - pca.mean[j]) * comp[j]);
        out.push_back(dot.value());
    }
    return out;
}

}  // namespace sasv
