#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "sasv/classifiers.hpp"
#include "sasv/metrics.hpp"

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

std::vector<std::vector<std::size_t>> group_indices(const EmbeddingLayout& layout) {
    std::vector<std::vector<std::size_t>> idx(static_cast<std::size_t>(layout.group_count()));
    for (int i = 0; i < layout.dim(); ++i)
        idx[static_cast<std::size_t>(layout.group_of(i))].push_back(
            static_cast<std::size_t>(i));
    return idx;
}

struct GradBuf {
    std::vector<std::vector<double>> gw, gb;
    std::vector<double> m1w, m1b, rw, m2w, m2b, hw;

    static GradBuf like(const GroupedMlpModel& m) {
        GradBuf g;
        g.gw.resize(m.group_w.size());
        g.gb.resize(m.group_b.size());
        for (std::size_t i = 0; i < m.group_w.size(); ++i) {
            g.gw[i].assign(m.group_w[i].size(), 0.0);
            g.gb[i].assign(m.group_b[i].size(), 0.0);
        }
        g.m1w.assign(m.merge1_w.size(), 0.0);
        g.m1b.assign(m.merge1_b.size(), 0.0);
        g.rw.assign(m.residual_w.size(), 0.0);
        g.m2w.assign(m.merge2_w.size(), 0.0);
        g.m2b.assign(m.merge2_b.size(), 0.0);
        g.hw.assign(m.head_w.size(), 0.0);
        return g;
    }

    void clear() {
        for (auto& v : gw) std::fill(v.begin(), v.end(), 0.0);
        for (auto& v : gb) std::fill(v.begin(), v.end(), 0.0);
        auto z = [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); };
        z(m1w);
        z(m1b);
        z(rw);
        z(m2w);
        z(m2b);
        z(hw);
    }
};

struct Scratch {
    std::vector<double> a1, c;   // per-group pre-activation and post-act concat
    std::vector<double> a2, r2;  // merge1
    std::vector<double> z;       // merge2 output
    std::vector<double> mask1, mask2;
    std::vector<double> dc, da2, dz;
};

/// One sample: forward, optional loss/backward. Returns the per-sample loss
/// already scaled by inv_n; writes the head score to *score_out.
double sample_pass(const GroupedMlpModel& m, const std::vector<std::vector<std::size_t>>& gi,
                   std::span<const double> x, int label, double inv_n, bool use_masks,
                   Scratch& s, GradBuf* grads, double* score_out) {
    const int G = static_cast<int>(gi.size());
    const int gw = m.spec.group_width;
    const int concat = G * gw;
    const int m1 = m.spec.merge1_width;
    const int m2 = m.spec.merge2_width;

    s.a1.resize(static_cast<std::size_t>(concat));
    s.c.resize(static_cast<std::size_t>(concat));
    for (int g = 0; g < G; ++g) {
        const auto& idx = gi[static_cast<std::size_t>(g)];
        const auto& W = m.group_w[static_cast<std::size_t>(g)];
        const auto& B = m.group_b[static_cast<std::size_t>(g)];
        for (int o = 0; o < gw; ++o) {
            double a = B[static_cast<std::size_t>(o)];
            for (std::size_t j = 0; j < idx.size(); ++j)
                a += W[static_cast<std::size_t>(o) * idx.size() + j] * x[idx[j]];
            const std::size_t pos = static_cast<std::size_t>(g * gw + o);
            s.a1[pos] = a;
            double r = a > 0.0 ? a : 0.0;
            if (use_masks) r *= s.mask1[pos];
            s.c[pos] = r;
        }
    }

    s.a2.resize(static_cast<std::size_t>(m1));
    s.r2.resize(static_cast<std::size_t>(m1));
    for (int o = 0; o < m1; ++o) {
        double a = m.merge1_b[static_cast<std::size_t>(o)];
        const std::size_t row = static_cast<std::size_t>(o) * static_cast<std::size_t>(concat);
        for (int j = 0; j < concat; ++j)
            a += m.merge1_w[row + static_cast<std::size_t>(j)] * s.c[static_cast<std::size_t>(j)];
        if (!m.residual_w.empty())
            for (int j = 0; j < concat; ++j)
                a += m.residual_w[row + static_cast<std::size_t>(j)] *
                     s.c[static_cast<std::size_t>(j)];
        s.a2[static_cast<std::size_t>(o)] = a;
        double r = a > 0.0 ? a : 0.0;
        if (use_masks) r *= s.mask2[static_cast<std::size_t>(o)];
        s.r2[static_cast<std::size_t>(o)] = r;
    }

    s.z.resize(static_cast<std::size_t>(m2));
    for (int o = 0; o < m2; ++o) {
        double a = m.merge2_b[static_cast<std::size_t>(o)];
        const std::size_t row = static_cast<std::size_t>(o) * static_cast<std::size_t>(m1);
        for (int j = 0; j < m1; ++j)
            a += m.merge2_w[row + static_cast<std::size_t>(j)] * s.r2[static_cast<std::size_t>(j)];
        s.z[static_cast<std::size_t>(o)] = a;
    }

    double loss = 0.0;
    s.dz.assign(static_cast<std::size_t>(m2), 0.0);
    if (m.spec.head == MlpHead::sigmoid) {
        const double zv = s.z[0];
        if (score_out) *score_out = sigmoid(zv);
        loss = (label == 1 ? softplus(-zv) : softplus(zv)) * inv_n;
        if (grads) s.dz[0] = (sigmoid(zv) - static_cast<double>(label)) * inv_n;
    } else {
        double nz = 0.0, nw = 0.0, dot = 0.0;
        for (int j = 0; j < m2; ++j) {
            const std::size_t k = static_cast<std::size_t>(j);
            nz += s.z[k] * s.z[k];
            nw += m.head_w[k] * m.head_w[k];
            dot += s.z[k] * m.head_w[k];
        }
        nz = std::sqrt(nz);
        nw = std::sqrt(nw);
        double sc = 0.0;
        if (nz > 1e-30 && nw > 1e-30) sc = dot / (nz * nw);
        if (score_out) *score_out = sc;

        const auto& p = m.spec.ocs;
        const double sign = label == 1 ? 1.0 : -1.0;
        const double margin = label == 1 ? p.m_target : p.m_other;
        const double t = p.alpha_scale * sign * (margin - sc);
        loss = softplus(t) * inv_n;
        if (grads && nz > 1e-30 && nw > 1e-30) {
            const double dls = -p.alpha_scale * sign * sigmoid(t) * inv_n;
            for (int j = 0; j < m2; ++j) {
                const std::size_t k = static_cast<std::size_t>(j);
                const double zh = s.z[k] / nz;
                const double wh = m.head_w[k] / nw;
                s.dz[k] = dls * (wh - sc * zh) / nz;
                grads->hw[k] += dls * (zh - sc * wh) / nw;
            }
        }
    }
    if (!grads) return loss;

    // merge2 backward
    s.da2.assign(static_cast<std::size_t>(m1), 0.0);
    for (int o = 0; o < m2; ++o) {
        const std::size_t k = static_cast<std::size_t>(o);
        const std::size_t row = k * static_cast<std::size_t>(m1);
        grads->m2b[k] += s.dz[k];
        for (int j = 0; j < m1; ++j) {
            const std::size_t kj = static_cast<std::size_t>(j);
            grads->m2w[row + kj] += s.dz[k] * s.r2[kj];
            s.da2[kj] += m.merge2_w[row + kj] * s.dz[k];
        }
    }
    // through merge1 dropout and relu
    for (int o = 0; o < m1; ++o) {
        const std::size_t k = static_cast<std::size_t>(o);
        double d = s.da2[k];
        if (use_masks) d *= s.mask2[k];
        if (s.a2[k] <= 0.0) d = 0.0;
        s.da2[k] = d;
    }
    // merge1 backward
    s.dc.assign(static_cast<std::size_t>(concat), 0.0);
    for (int o = 0; o < m1; ++o) {
        const std::size_t k = static_cast<std::size_t>(o);
        const double d = s.da2[k];
        if (d == 0.0) continue;
        const std::size_t row = k * static_cast<std::size_t>(concat);
        grads->m1b[k] += d;
        for (int j = 0; j < concat; ++j) {
            const std::size_t kj = static_cast<std::size_t>(j);
            grads->m1w[row + kj] += d * s.c[kj];
            s.dc[kj] += m.merge1_w[row + kj] * d;
        }
        if (!m.residual_w.empty())
            for (int j = 0; j < concat; ++j) {
                const std::size_t kj = static_cast<std::size_t>(j);
                grads->rw[row + kj] += d * s.c[kj];
                s.dc[kj] += m.residual_w[row + kj] * d;
            }
    }
    // through group dropout and relu, then group layers
    for (int g = 0; g < G; ++g) {
        const auto& idx = gi[static_cast<std::size_t>(g)];
        for (int o = 0; o < gw; ++o) {
            const std::size_t pos = static_cast<std::size_t>(g * gw + o);
            double d = s.dc[pos];
            if (use_masks) d *= s.mask1[pos];
            if (s.a1[pos] <= 0.0) d = 0.0;
            if (d == 0.0) continue;
            grads->gb[static_cast<std::size_t>(g)][static_cast<std::size_t>(o)] += d;
            auto& gwv = grads->gw[static_cast<std::size_t>(g)];
            for (std::size_t j = 0; j < idx.size(); ++j)
                gwv[static_cast<std::size_t>(o) * idx.size() + j] += d * x[idx[j]];
        }
    }
    return loss;
}

void apply_update(GroupedMlpModel& m, const GradBuf& g, double lr) {
    auto step = [lr](std::vector<double>& p, const std::vector<double>& gr) {
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * gr[i];
    };
    for (std::size_t i = 0; i < m.group_w.size(); ++i) {
        step(m.group_w[i], g.gw[i]);
        step(m.group_b[i], g.gb[i]);
    }
    step(m.merge1_w, g.m1w);
    step(m.merge1_b, g.m1b);
    step(m.residual_w, g.rw);
    step(m.merge2_w, g.m2w);
    step(m.merge2_b, g.m2b);
    step(m.head_w, g.hw);
}

EmbeddingLayout layout_for(const Dataset& data) {
    const int dim = static_cast<int>(data.dim());
    if (dim % kMeasureCount != 0 || (dim / kMeasureCount) % 2 != 0 || dim == 0)
        fail(Errc::layout_mismatch,
             "feature dimension " + std::to_string(dim) +
                 " does not form an even channel count times the measure count");
    return EmbeddingLayout{dim / kMeasureCount, kMeasureCount};
}

std::string spec_digest(const GroupedMlpSpec& s) {
    std::ostringstream cfg;
    cfg << "grouped_mlp variant=" << static_cast<int>(s.variant) << " gw=" << s.group_width
        << " m1=" << s.merge1_width << " m2=" << s.merge2_width << " residual=" << s.residual
        << " head=" << static_cast<int>(s.head) << " dropout=" << s.dropout_p
        << " batch=" << s.batch_size << " epochs=" << s.epochs << " lr=" << s.lr
        << " seed=" << s.seed << " ocs=" << s.ocs.alpha_scale << '/' << s.ocs.m_target << '/'
        << s.ocs.m_other;
    return config_digest(cfg.str());
}

}  // namespace

void GroupedMlpSpec::validate() const {
    if (group_width < 1 || merge1_width < 1 || merge2_width < 1)
        fail(Errc::config_error, "layer widths must be positive");
    if (head == MlpHead::sigmoid && merge2_width != 1)
        fail(Errc::config_error, "sigmoid head needs a single output unit");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0))
        fail(Errc::config_error, "dropout probability must lie in [0, 1)");
    if (batch_size < 1) fail(Errc::config_error, "batch size must be positive");
    if (epochs < 0) fail(Errc::config_error, "epochs must be non-negative");
    if (!(lr > 0.0)) fail(Errc::config_error, "learning rate must be positive");
    if (head == MlpHead::one_class_softmax &&
        (!(ocs.m_other < ocs.m_target) || !(ocs.alpha_scale > 0.0)))
        fail(Errc::bad_margins, "one-class margins must satisfy m_other < m_target");
}

GroupedMlpSpec make_mlp_spec(MlpVariant variant) {
    GroupedMlpSpec s;
    s.variant = variant;
    switch (variant) {
        case MlpVariant::male:
            s.group_width = 5;
            s.merge1_width = 40;
            s.merge2_width = 1;
            s.residual = false;
            s.head = MlpHead::sigmoid;
            s.batch_size = 256;
            s.epochs = 300;
            break;
        case MlpVariant::female:
            s.group_width = 10;
            s.merge1_width = 40;
            s.merge2_width = 48;
            s.residual = true;
            s.head = MlpHead::one_class_softmax;
            s.batch_size = 32;
            s.epochs = 100;
            break;
        case MlpVariant::gender_independent:
            s.group_width = 10;
            s.merge1_width = 80;
            s.merge2_width = 32;
            s.residual = true;
            s.head = MlpHead::one_class_softmax;
            s.batch_size = 128;
            s.epochs = 200;
            break;
    }
    return s;
}

GroupedMlpModel make_initial_mlp(const GroupedMlpSpec& spec, const EmbeddingLayout& layout) {
    spec.validate();
    if (layout.channel_count < 2 || layout.channel_count % 2 != 0)
        fail(Errc::layout_mismatch, "layout needs an even, positive channel count");

    GroupedMlpModel m;
    m.spec = spec;
    m.layout = layout;
    const int G = layout.group_count();
    const int gs = layout.group_size();
    const int concat = G * spec.group_width;

    std::mt19937_64 rng(mix_seed(spec.seed, 0x1247));
    auto draw = [&rng](std::size_t count, int fan_in) {
        std::vector<double> v(count);
        const double range = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& x : v) x = range * (2.0 * uniform01(rng) - 1.0);
        return v;
    };

    m.group_w.resize(static_cast<std::size_t>(G));
    m.group_b.resize(static_cast<std::size_t>(G));
    for (int g = 0; g < G; ++g) {
        m.group_w[static_cast<std::size_t>(g)] =
            draw(static_cast<std::size_t>(spec.group_width * gs), gs);
        m.group_b[static_cast<std::size_t>(g)].assign(
            static_cast<std::size_t>(spec.group_width), 0.0);
    }
    m.merge1_w = draw(static_cast<std::size_t>(spec.merge1_width * concat), concat);
    m.merge1_b.assign(static_cast<std::size_t>(spec.merge1_width), 0.0);
    if (spec.residual)
        m.residual_w = draw(static_cast<std::size_t>(spec.merge1_width * concat), concat);
    m.merge2_w = draw(static_cast<std::size_t>(spec.merge2_width * spec.merge1_width),
                      spec.merge1_width);
    m.merge2_b.assign(static_cast<std::size_t>(spec.merge2_width), 0.0);
    if (spec.head == MlpHead::one_class_softmax)
        m.head_w = draw(static_cast<std::size_t>(spec.merge2_width), spec.merge2_width);
    return m;
}

double mlp_forward(const GroupedMlpModel& model, std::span<const double> features) {
    if (static_cast<int>(features.size()) != model.layout.dim())
        fail(Errc::layout_mismatch, "feature count differs from model layout");
    const auto gi = group_indices(model.layout);
    Scratch s;
    double sc = 0.0;
    sample_pass(model, gi, features, 0, 1.0, false, s, nullptr, &sc);
    return sc;
}

double mlp_loss_and_gradient(const GroupedMlpModel& model, const Dataset& batch,
                             std::vector<double>& grad) {
    batch.validate();
    if (static_cast<int>(batch.dim()) != model.layout.dim())
        fail(Errc::layout_mismatch, "batch feature count differs from model layout");
    const auto gi = group_indices(model.layout);
    GradBuf gb = GradBuf::like(model);
    Scratch s;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    KahanSum loss;
    for (std::size_t i = 0; i < batch.size(); ++i)
        loss.add(sample_pass(model, gi, batch.features[i], batch.labels[i], inv_n, false, s,
                             &gb, nullptr));

    grad.clear();
    auto append = [&grad](const std::vector<double>& v) {
        grad.insert(grad.end(), v.begin(), v.end());
    };
    for (std::size_t g = 0; g < gb.gw.size(); ++g) {
        append(gb.gw[g]);
        append(gb.gb[g]);
    }
    append(gb.m1w);
    append(gb.m1b);
    append(gb.rw);
    append(gb.m2w);
    append(gb.m2b);
    append(gb.hw);
    return loss.value();
}

std::vector<double> mlp_parameters(const GroupedMlpModel& model) {
    std::vector<double> out;
    auto append = [&out](const std::vector<double>& v) {
        out.insert(out.end(), v.begin(), v.end());
    };
    for (std::size_t g = 0; g < model.group_w.size(); ++g) {
        append(model.group_w[g]);
        append(model.group_b[g]);
    }
    append(model.merge1_w);
    append(model.merge1_b);
    append(model.residual_w);
    append(model.merge2_w);
    append(model.merge2_b);
    append(model.head_w);
    return out;
}

void set_mlp_parameters(GroupedMlpModel& model, std::span<const double> params) {
    std::size_t cursor = 0;
    auto take = [&](std::vector<double>& v) {
        if (cursor + v.size() > params.size())
            fail(Errc::layout_mismatch, "parameter vector too short");
        std::copy(params.begin() + static_cast<std::ptrdiff_t>(cursor),
                  params.begin() + static_cast<std::ptrdiff_t>(cursor + v.size()), v.begin());
        cursor += v.size();
    };
    for (std::size_t g = 0; g < model.group_w.size(); ++g) {
        take(model.group_w[g]);
        take(model.group_b[g]);
    }
    take(model.merge1_w);
    take(model.merge1_b);
    take(model.residual_w);
    take(model.merge2_w);
    take(model.merge2_b);
    take(model.head_w);
    if (cursor != params.size())
        fail(Errc::layout_mismatch, "parameter vector longer than the model");
}

TrainedModel train_grouped_mlp(const Dataset& data, const GroupedMlpSpec& spec,
                               std::ostream* train_log, const Dataset* dev) {
    data.validate();
    spec.validate();
    const EmbeddingLayout layout = layout_for(data);

    TrainedModel trained;
    trained.kind = ModelKind::grouped_mlp;
    trained.input_dim = layout.dim();
    trained.layout = layout;
    trained.config_hash = spec_digest(spec);
    trained.mlp = make_initial_mlp(spec, layout);
    GroupedMlpModel& model = trained.mlp;

    if (spec.epochs == 0) return trained;

    const auto gi = group_indices(layout);
    const std::size_t n = data.size();
    const int concat = layout.group_count() * spec.group_width;
    const bool use_masks = spec.dropout_p > 0.0;
    const int decay_at = spec.epochs * 4 / 5;

    std::mt19937_64 rng(mix_seed(spec.seed, 0x7EA1));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    GradBuf grads = GradBuf::like(model);
    Scratch s;
    s.mask1.resize(static_cast<std::size_t>(concat));
    s.mask2.resize(static_cast<std::size_t>(spec.merge1_width));

    if (train_log) *train_log << (dev ? "epoch,loss,dev_eer\n" : "epoch,loss\n");
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        const double lr = epoch >= decay_at ? spec.lr * 0.1 : spec.lr;
        for (std::size_t i = n; i > 1; --i)
            std::swap(perm[i - 1], perm[rng() % i]);

        KahanSum epoch_loss;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(spec.batch_size)) {
            const std::size_t stop =
                std::min(n, start + static_cast<std::size_t>(spec.batch_size));
            const double inv_n = 1.0 / static_cast<double>(stop - start);
            grads.clear();
            double batch_loss = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                if (use_masks) {
                    const double keep = 1.0 / (1.0 - spec.dropout_p);
                    for (double& v : s.mask1)
                        v = uniform01(rng) < spec.dropout_p ? 0.0 : keep;
                    for (double& v : s.mask2)
                        v = uniform01(rng) < spec.dropout_p ? 0.0 : keep;
                }
                const std::size_t row = perm[k];
                batch_loss += sample_pass(model, gi, data.features[row], data.labels[row],
                                          inv_n, use_masks, s, &grads, nullptr);
            }
            if (!std::isfinite(batch_loss))
                fail(Errc::divergent_loss,
                     "training loss diverged at epoch " + std::to_string(epoch));
            apply_update(model, grads, lr);
            epoch_loss.add(batch_loss * static_cast<double>(stop - start));
        }

        if (train_log) {
            *train_log << epoch << ',' << epoch_loss.value() / static_cast<double>(n);
            if (dev) {
                TrialScoreSet dev_scores;
                for (std::size_t i = 0; i < dev->size(); ++i)
                    dev_scores.entries.push_back(
                        {"dev" + std::to_string(i), '-',
                         dev->labels[i] == 1 ? TrialClass::target : TrialClass::nontarget,
                         mlp_forward(model, dev->features[i])});
                *train_log << ',' << eer_asv(dev_scores).value;
            }
            *train_log << '\n';
        }
    }
    return trained;
}

}  // namespace sasv
