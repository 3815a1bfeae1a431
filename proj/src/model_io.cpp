#include <cstdint>
#include <fstream>

#include "sasv/binary_io.hpp"
#include "sasv/classifiers.hpp"

namespace sasv {

namespace {

constexpr char kMagic[4] = {'S', 'A', 'S', 'V'};
constexpr std::uint16_t kVersion = 1;

void put_f64_vec(std::ostream& os, const std::vector<double>& v) {
    binary::put_u32(os, static_cast<std::uint32_t>(v.size()));
    for (double x : v) binary::put_f64(os, x);
}

std::vector<double> get_f64_vec(std::istream& is, const std::filesystem::path& path) {
    const std::uint32_t n = binary::get_u32(is, path);
    std::vector<double> v(n);
    for (double& x : v) x = binary::get_f64(is, path);
    return v;
}

void check_size(const std::vector<double>& v, std::size_t expect,
                const std::filesystem::path& path) {
    if (v.size() != expect) fail(Errc::io_error, "inconsistent model file: " + path.string());
}

}  // namespace

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(Errc::io_error, "cannot write " + path.string());

    binary::put_bytes(os, kMagic, 4);
    binary::put_u16(os, kVersion);
    binary::put_u8(os, static_cast<std::uint8_t>(model.kind));
    binary::put_string(os, model.config_hash);
    binary::put_u32(os, static_cast<std::uint32_t>(model.input_dim));
    binary::put_i32(os, model.layout.channel_count);
    binary::put_i32(os, model.layout.measure_count);

    switch (model.kind) {
        case ModelKind::logistic_regression:
            put_f64_vec(os, model.logreg.weights);
            binary::put_f64(os, model.logreg.bias);
            break;
        case ModelKind::gbdt: {
            binary::put_f64(os, model.gbdt.learning_rate);
            binary::put_f64(os, model.gbdt.base_raw);
            binary::put_u32(os, static_cast<std::uint32_t>(model.gbdt.trees.size()));
            for (const GbdtTree& tree : model.gbdt.trees) {
                binary::put_u32(os, static_cast<std::uint32_t>(tree.nodes.size()));
                for (const GbdtNode& n : tree.nodes) {
                    binary::put_i32(os, n.feature);
                    binary::put_f64(os, n.threshold);
                    binary::put_i32(os, n.left);
                    binary::put_i32(os, n.right);
                    binary::put_f64(os, n.leaf);
                }
            }
            break;
        }
        case ModelKind::grouped_mlp: {
            const GroupedMlpSpec& s = model.mlp.spec;
            binary::put_i32(os, static_cast<std::int32_t>(s.variant));
            binary::put_i32(os, s.group_width);
            binary::put_i32(os, s.merge1_width);
            binary::put_i32(os, s.merge2_width);
            binary::put_u8(os, s.residual ? 1 : 0);
            binary::put_i32(os, static_cast<std::int32_t>(s.head));
            binary::put_f64(os, s.dropout_p);
            binary::put_i32(os, s.batch_size);
            binary::put_i32(os, s.epochs);
            binary::put_f64(os, s.lr);
            binary::put_u64(os, s.seed);
            binary::put_f64(os, s.ocs.alpha_scale);
            binary::put_f64(os, s.ocs.m_target);
            binary::put_f64(os, s.ocs.m_other);
            binary::put_u32(os, static_cast<std::uint32_t>(model.mlp.group_w.size()));
            for (std::size_t g = 0; g < model.mlp.group_w.size(); ++g) {
                put_f64_vec(os, model.mlp.group_w[g]);
                put_f64_vec(os, model.mlp.group_b[g]);
            }
            put_f64_vec(os, model.mlp.merge1_w);
            put_f64_vec(os, model.mlp.merge1_b);
            put_f64_vec(os, model.mlp.residual_w);
            put_f64_vec(os, model.mlp.merge2_w);
            put_f64_vec(os, model.mlp.merge2_b);
            put_f64_vec(os, model.mlp.head_w);
            break;
        }
    }
    os.flush();
    if (!os) fail(Errc::io_error, "write failed: " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(Errc::io_error, "cannot open " + path.string());

    char magic[4];
    binary::get_bytes(is, magic, 4, path);
    if (std::memcmp(magic, kMagic, 4) != 0)
        fail(Errc::io_error, "not a model file: " + path.string());
    const std::uint16_t version = binary::get_u16(is, path);
    if (version != kVersion)
        fail(Errc::io_error,
             "unsupported model version " + std::to_string(version) + ": " + path.string());

    TrainedModel model;
    const std::uint8_t kind = binary::get_u8(is, path);
    if (kind > 2) fail(Errc::io_error, "unknown model kind: " + path.string());
    model.kind = static_cast<ModelKind>(kind);
    model.config_hash = binary::get_string(is, path);
    model.input_dim = static_cast<int>(binary::get_u32(is, path));
    model.layout.channel_count = binary::get_i32(is, path);
    model.layout.measure_count = binary::get_i32(is, path);

    switch (model.kind) {
        case ModelKind::logistic_regression:
            model.logreg.weights = get_f64_vec(is, path);
            model.logreg.bias = binary::get_f64(is, path);
            check_size(model.logreg.weights, static_cast<std::size_t>(model.input_dim), path);
            break;
        case ModelKind::gbdt: {
            model.gbdt.learning_rate = binary::get_f64(is, path);
            model.gbdt.base_raw = binary::get_f64(is, path);
            const std::uint32_t n_trees = binary::get_u32(is, path);
            model.gbdt.trees.resize(n_trees);
            for (GbdtTree& tree : model.gbdt.trees) {
                const std::uint32_t n_nodes = binary::get_u32(is, path);
                tree.nodes.resize(n_nodes);
                for (GbdtNode& n : tree.nodes) {
                    n.feature = binary::get_i32(is, path);
                    n.threshold = binary::get_f64(is, path);
                    n.left = binary::get_i32(is, path);
                    n.right = binary::get_i32(is, path);
                    n.leaf = binary::get_f64(is, path);
                    if (n.feature >= model.input_dim ||
                        (n.feature >= 0 &&
                         (n.left < 0 || n.right < 0 ||
                          n.left >= static_cast<int>(n_nodes) ||
                          n.right >= static_cast<int>(n_nodes))))
                        fail(Errc::io_error, "inconsistent model file: " + path.string());
                }
            }
            break;
        }
        case ModelKind::grouped_mlp: {
            GroupedMlpSpec s;
            s.variant = static_cast<MlpVariant>(binary::get_i32(is, path));
            s.group_width = binary::get_i32(is, path);
            s.merge1_width = binary::get_i32(is, path);
            s.merge2_width = binary::get_i32(is, path);
            s.residual = binary::get_u8(is, path) != 0;
            s.head = static_cast<MlpHead>(binary::get_i32(is, path));
            s.dropout_p = binary::get_f64(is, path);
            s.batch_size = binary::get_i32(is, path);
            s.epochs = binary::get_i32(is, path);
            s.lr = binary::get_f64(is, path);
            s.seed = binary::get_u64(is, path);
            s.ocs.alpha_scale = binary::get_f64(is, path);
            s.ocs.m_target = binary::get_f64(is, path);
            s.ocs.m_other = binary::get_f64(is, path);
            s.validate();

            GroupedMlpModel& m = model.mlp;
            m.spec = s;
            m.layout = model.layout;
            const std::uint32_t groups = binary::get_u32(is, path);
            if (static_cast<int>(groups) != model.layout.group_count())
                fail(Errc::io_error, "inconsistent model file: " + path.string());
            const std::size_t gs = static_cast<std::size_t>(model.layout.group_size());
            const std::size_t concat =
                static_cast<std::size_t>(groups) * static_cast<std::size_t>(s.group_width);
            m.group_w.resize(groups);
            m.group_b.resize(groups);
            for (std::uint32_t g = 0; g < groups; ++g) {
                m.group_w[g] = get_f64_vec(is, path);
                m.group_b[g] = get_f64_vec(is, path);
                check_size(m.group_w[g], static_cast<std::size_t>(s.group_width) * gs, path);
                check_size(m.group_b[g], static_cast<std::size_t>(s.group_width), path);
            }
            m.merge1_w = get_f64_vec(is, path);
            m.merge1_b = get_f64_vec(is, path);
            m.residual_w = get_f64_vec(is, path);
            m.merge2_w = get_f64_vec(is, path);
            m.merge2_b = get_f64_vec(is, path);
            m.head_w = get_f64_vec(is, path);
            check_size(m.merge1_w, static_cast<std::size_t>(s.merge1_width) * concat, path);
            check_size(m.merge1_b, static_cast<std::size_t>(s.merge1_width), path);
            check_size(m.residual_w,
                       s.residual ? static_cast<std::size_t>(s.merge1_width) * concat : 0, path);
            check_size(m.merge2_w,
                       static_cast<std::size_t>(s.merge2_width) *
                           static_cast<std::size_t>(s.merge1_width),
                       path);
            check_size(m.merge2_b, static_cast<std::size_t>(s.merge2_width), path);
            check_size(m.head_w,
                       s.head == MlpHead::one_class_softmax
                           ? static_cast<std::size_t>(s.merge2_width)
                           : 0,
                       path);
            break;
        }
    }
    return model;
}

}  // namespace sasv
