#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "sasv/classifiers.hpp"
#include "test_util.hpp"

using namespace sasv;

namespace {

Dataset make_dataset(std::vector<std::vector<double>> feats, std::vector<int> labels) {
  Dataset d;
  d.features = std::move(feats);
  d.labels = std::move(labels);
  d.genders.assign(d.labels.size(), '-');
  for (std::size_t i = 0; i < d.labels.size(); ++i)
    d.source_ids.push_back("u" + std::to_string(i));
  return d;
}

// Grouped rows shaped for the 16-group layout: dim 32 keeps every group two
// features wide, which exercises the same code paths as the full embedding.
constexpr int kSmallDim = 32;

Dataset grouped_dataset(std::mt19937_64& rng, int n, int informative_group,
                        const EmbeddingLayout& layout) {
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  std::normal_distribution<double> hi(0.7, 0.15), lo(-0.7, 0.15);
  Dataset d;
  for (int i = 0; i < n; ++i) {
    const int label = int(rng() % 2);
    std::vector<double> row(std::size_t(layout.dim()));
    for (int j = 0; j < layout.dim(); ++j) {
      if (layout.group_of(j) == informative_group)
        row[std::size_t(j)] = label ? hi(rng) : lo(rng);
      else
        row[std::size_t(j)] = noise(rng);
    }
    d.features.push_back(std::move(row));
    d.labels.push_back(label);
    d.genders.push_back('-');
    d.source_ids.push_back("g" + std::to_string(i));
  }
  return d;
}

double accuracy(const TrainedModel& model, const Dataset& data, double threshold) {
  int hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double s = score(model, data.features[i]);
    if ((s >= threshold ? 1 : 0) == data.labels[i]) ++hits;
  }
  return double(hits) / double(data.size());
}

bool fd_close(double analytic, double fd, double tol) {
  return std::fabs(analytic - fd) <= tol * std::max({1.0, std::fabs(analytic), std::fabs(fd)});
}

// Distance from point s to the segment [a, b].
double segment_residual(const std::vector<double>& s, const std::vector<double>& a,
                        const std::vector<double>& b) {
  double dot = 0.0, len2 = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    dot += (s[j] - a[j]) * (b[j] - a[j]);
    len2 += (b[j] - a[j]) * (b[j] - a[j]);
  }
  const double t = len2 > 0.0 ? std::clamp(dot / len2, 0.0, 1.0) : 0.0;
  double r2 = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double p = a[j] + t * (b[j] - a[j]);
    r2 += (s[j] - p) * (s[j] - p);
  }
  return std::sqrt(r2);
}

}  // namespace

TEST_CASE("logistic regression separates separable data") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n01(0.0, 0.4);
  Dataset d;
  for (int i = 0; i < 40; ++i) {
    const int label = i % 2;
    d.features.push_back({n01(rng) + (label ? 2.0 : -2.0), n01(rng) + (label ? 1.0 : -1.0)});
    d.labels.push_back(label);
    d.genders.push_back('-');
    d.source_ids.push_back("s" + std::to_string(i));
  }
  TrainedModel model = train_logreg(d, {});
  CHECK(accuracy(model, d, 0.5) == 1.0);
}

TEST_CASE("logistic regression on uninformative features settles at one half") {
  Dataset d = make_dataset({{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}},
                           {0, 1, 0, 1});
  TrainedModel model = train_logreg(d, {});
  for (const auto& row : d.features)
    CHECK(score(model, row) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("logistic loss gradient matches central differences") {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> n01(0.0, 1.0);
  Dataset d;
  for (int i = 0; i < 24; ++i) {
    std::vector<double> row(10);
    for (double& v : row) v = n01(rng);
    d.features.push_back(std::move(row));
    d.labels.push_back(int(rng() % 2));
    d.genders.push_back('-');
    d.source_ids.push_back("f" + std::to_string(i));
  }
  LogregModel m;
  m.weights.resize(10);
  for (double& w : m.weights) w = 0.3 * n01(rng);
  m.bias = 0.2;
  const double l2 = 0.05;

  std::vector<double> grad;
  logreg_loss_and_gradient(m, d, l2, grad);
  REQUIRE(grad.size() == 11);

  const double eps = 1e-6;
  for (std::size_t p = 0; p < 11; ++p) {
    auto perturbed = [&](double delta) {
      LogregModel q = m;
      if (p < 10)
        q.weights[p] += delta;
      else
        q.bias += delta;
      std::vector<double> g;
      return logreg_loss_and_gradient(q, d, l2, g);
    };
    const double fd = (perturbed(eps) - perturbed(-eps)) / (2.0 * eps);
    CHECK(fd_close(grad[p], fd, 1e-5));
  }
}

TEST_CASE("logistic regression rejects degenerate inputs") {
  Dataset single = make_dataset({{1.0}, {2.0}}, {1, 1});
  try {
    train_logreg(single, {});
    FAIL("expected SingleClassData");
  } catch (const SasvError& e) {
    CHECK(e.code() == Errc::single_class_data);
  }
  Dataset nan = make_dataset({{1.0}, {std::nan("")}}, {0, 1});
  try {
    train_logreg(nan, {});
    FAIL("expected NonFiniteFeature");
  } catch (const SasvError& e) {
    CHECK(e.code() == Errc::non_finite_feature);
  }
}

TEST_CASE("zero-weight logistic model scores one half exactly") {
  TrainedModel model;
  model.kind = ModelKind::logistic_regression;
  model.input_dim = 3;
  model.logreg.weights = {0.0, 0.0, 0.0};
  model.logreg.bias = 0.0;
  const std::vector<double> row = {4.0, -1.0, 0.5};
  CHECK(score(model, row) == 0.5);
}

TEST_CASE("boosted trees solve the XOR pattern") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  Dataset d;
  for (int i = 0; i < 200; ++i) {
    const double sx = rng() % 2 ? 1.0 : -1.0;
    const double sy = rng() % 2 ? 1.0 : -1.0;
    d.features.push_back({sx * u(rng), sy * u(rng)});
    d.labels.push_back(sx * sy > 0.0 ? 1 : 0);
    d.genders.push_back('-');
    d.source_ids.push_back("x" + std::to_string(i));
  }
  GbdtConfig config;
  config.n_trees = 50;
  config.max_depth = 2;
  TrainedModel model = train_gbdt(d, config);
  CHECK(accuracy(model, d, 0.5) >= 0.95);
}

TEST_CASE("boosted trees reject an empty ensemble") {
  Dataset d = make_dataset({{0.0}, {1.0}}, {0, 1});
  GbdtConfig config;
  config.n_trees = 0;
  try {
    train_gbdt(d, config);
    FAIL("expected BadArgument");
  } catch (const SasvError& e) {
    CHECK(e.code() == Errc::bad_argument);
  }
}

TEST_CASE("first tree splits monotone data at the best-gain threshold") {
  // Distinct 1-D values, labels flipping at an interior boundary.
  std::vector<std::vector<double>> feats;
  std::vector<int> labels;
  std::mt19937_64 rng(41);
  std::vector<double> xs;
  for (int i = 0; i < 30; ++i) xs.push_back(double(i) * 0.37 + 0.01 * double(rng() % 7));
  std::sort(xs.begin(), xs.end());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    feats.push_back({xs[i]});
    labels.push_back(i < 13 ? 0 : 1);
  }
  Dataset d = make_dataset(std::move(feats), std::move(labels));
  GbdtConfig config;
  config.n_trees = 1;
  config.max_depth = 1;
  TrainedModel model = train_gbdt(d, config);
  REQUIRE(model.gbdt.trees.size() == 1);
  const GbdtNode& root = model.gbdt.trees[0].nodes[0];
  REQUIRE(root.feature == 0);

  // Exhaustive best-gain scan. At a raw score of zero every row carries
  // gradient 0.5 - y and curvature 0.25.
  double best_gain = 0.0;
  double best_threshold = 0.0;
  double gsum = 0.0, hsum = 0.0;
  for (int y : d.labels) {
    gsum += 0.5 - double(y);
    hsum += 0.25;
  }
  const double lambda = config.l2;
  const double parent = gsum * gsum / (hsum + lambda);
  double gl = 0.0, hl = 0.0;
  for (std::size_t t = 0; t + 1 < xs.size(); ++t) {
    gl += 0.5 - double(d.labels[t]);
    hl += 0.25;
    const double gr = gsum - gl, hr = hsum - hl;
    const double gain =
        0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
    if (gain > best_gain) {
      best_gain = gain;
      best_threshold = xs[t] + (xs[t + 1] - xs[t]) / 2.0;
    }
  }
  CHECK(root.threshold == best_threshold);
}

TEST_CASE("balanced data passes through the oversampler untouched") {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> n01(0.0, 1.0);
  Dataset d;
  for (int i = 0; i < 12; ++i) {
    d.features.push_back({n01(rng), n01(rng)});
    d.labels.push_back(i % 2);
    d.genders.push_back(i % 2 ? 'f' : 'm');
    d.source_ids.push_back("b" + std::to_string(i));
  }
  Dataset out = smote_oversample(d, 3, 7);
  REQUIRE(out.size() == d.size());
  CHECK(out.features == d.features);
  CHECK(out.labels == d.labels);
  CHECK(out.source_ids == d.source_ids);
}

TEST_CASE("identical minority rows synthesize identical copies") {
  Dataset d;
  const std::vector<double> proto = {1.5, -0.5, 2.0};
  std::mt19937_64 rng(47);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int i = 0; i < 12; ++i) {
    d.features.push_back({n01(rng), n01(rng), n01(rng)});
    d.labels.push_back(0);
    d.genders.push_back('-');
    d.source_ids.push_back("maj" + std::to_string(i));
  }
  for (int i = 0; i < 4; ++i) {
    d.features.push_back(proto);
    d.labels.push_back(1);
    d.genders.push_back('-');
    d.source_ids.push_back("min" + std::to_string(i));
  }
  Dataset out = smote_oversample(d, 2, 9);
  for (std::size_t i = d.size(); i < out.size(); ++i) {
    CHECK(out.labels[i] == 1);
    CHECK(out.features[i] == proto);
  }
}

TEST_CASE("synthetic rows lie on minority segments and balance the classes") {
  std::mt19937_64 rng(53);
  std::normal_distribution<double> maj(0.0, 1.0), mnr(2.0, 0.8);
  Dataset d;
  for (int i = 0; i < 25; ++i) {
    d.features.push_back({maj(rng), maj(rng), maj(rng), maj(rng)});
    d.labels.push_back(0);
    d.genders.push_back('-');
    d.source_ids.push_back("a" + std::to_string(i));
  }
  std::vector<std::vector<double>> minority_rows;
  for (int i = 0; i < 9; ++i) {
    std::vector<double> row = {mnr(rng), mnr(rng), mnr(rng), mnr(rng)};
    minority_rows.push_back(row);
    d.features.push_back(row);
    d.labels.push_back(1);
    d.genders.push_back('-');
    d.source_ids.push_back("i" + std::to_string(i));
  }
  Dataset out = smote_oversample(d, 3, 11);

  std::size_t c0 = 0, c1 = 0;
  for (int y : out.labels) (y == 1 ? c1 : c0)++;
  CHECK((c0 > c1 ? c0 - c1 : c1 - c0) <= 1);

  for (std::size_t i = d.size(); i < out.size(); ++i) {
    REQUIRE(out.labels[i] == 1);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < minority_rows.size(); ++a)
      for (std::size_t b = a; b < minority_rows.size(); ++b)
        best = std::min(best,
                        segment_residual(out.features[i], minority_rows[a], minority_rows[b]));
    CHECK(best <= 1e-9);
  }
}

TEST_CASE("oversampling demands enough minority neighbors") {
  Dataset d = make_dataset({{0.0}, {1.0}, {2.0}, {3.0}, {10.0}, {11.0}},
                           {0, 0, 0, 0, 1, 1});
  try {
    smote_oversample(d, 3, 1);
    FAIL("expected TooFewMinoritySamples");
  } catch (const SasvError& e) {
    CHECK(e.code() == Errc::too_few_minority_samples);
  }
}

TEST_CASE("one-class softmax loss hand values and margins") {
  OcsParams params;  // alpha 20, m_target 0.9, m_other 0.2
  {
    const std::vector<double> s = {1.0};
    const std::vector<int> y = {1};
    CHECK(oc_softmax_loss(s, y, params) ==
          doctest::Approx(std::log1p(std::exp(-2.0))).epsilon(1e-12));
    CHECK(oc_softmax_loss(s, y, params) == doctest::Approx(0.126928).epsilon(1e-5));
  }
  {
    const std::vector<double> s = {0.2};
    const std::vector<int> y = {0};
    CHECK(oc_softmax_loss(s, y, params) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  {
    double prev = std::numeric_limits<double>::infinity();
    for (double s = params.m_target - 0.1; s <= params.m_target + 0.1 + 1e-12; s += 0.02) {
      const std::vector<double> sv = {s};
      const std::vector<int> y = {1};
      const double loss = oc_softmax_loss(sv, y, params);
      CHECK(loss < prev);
      prev = loss;
    }
  }
  OcsParams bad;
  bad.m_other = 0.95;  // above m_target
  const std::vector<double> s = {0.0};
  const std::vector<int> y = {1};
  try {
    oc_softmax_loss(s, y, bad);
    FAIL("expected BadMargins");
  } catch (const SasvError& e) {
    CHECK(e.code() == Errc::bad_margins);
  }
}

TEST_CASE("one-class softmax score gradients match central differences") {
  OcsParams params;
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> scores(12);
  std::vector<int> labels(12);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = u(rng);
    labels[i] = int(rng() % 2);
  }
  std::vector<double> grad;
  oc_softmax_loss(scores, labels, params, &grad);
  REQUIRE(grad.size() == scores.size());
  const double eps = 1e-6;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto at = [&](double delta) {
      std::vector<double> s = scores;
      s[i] += delta;
      return oc_softmax_loss(s, labels, params);
    };
    const double fd = (at(eps) - at(-eps)) / (2.0 * eps);
    CHECK(fd_close(grad[i], fd, 1e-6));
  }
}

TEST_CASE("stock network configurations") {
  GroupedMlpSpec male = make_mlp_spec(MlpVariant::male);
  CHECK(male.group_width == 5);
  CHECK(male.merge1_width == 40);
  CHECK(male.merge2_width == 1);
  CHECK(male.head == MlpHead::sigmoid);
  CHECK_FALSE(male.residual);
  CHECK(male.batch_size == 256);
  CHECK(male.epochs == 300);
  CHECK(male.dropout_p == 0.2);

  GroupedMlpSpec female = make_mlp_spec(MlpVariant::female);
  CHECK(female.group_width == 10);
  CHECK(female.merge1_width == 40);
  CHECK(female.merge2_width == 48);
  CHECK(female.head == MlpHead::one_class_softmax);
  CHECK(female.residual);
  CHECK(female.batch_size == 32);
  CHECK(female.epochs == 100);

  GroupedMlpSpec gi = make_mlp_spec(MlpVariant::gender_independent);
  CHECK(gi.group_width == 10);
  CHECK(gi.merge1_width == 80);
  CHECK(gi.merge2_width == 32);
  CHECK(gi.head == MlpHead::one_class_softmax);
  CHECK(gi.residual);
  CHECK(gi.batch_size == 128);
  CHECK(gi.epochs == 200);
}

TEST_CASE("zero-epoch training reproduces the seeded initialization") {
  std::mt19937_64 rng(61);
  EmbeddingLayout layout{kSmallDim / 8, 8};
  Dataset d = grouped_dataset(rng, 24, 0, layout);
  GroupedMlpSpec spec = make_mlp_spec(MlpVariant::male);
  spec.epochs = 0;
  spec.seed = 404;
  TrainedModel trained = train_grouped_mlp(d, spec);
  GroupedMlpModel init = make_initial_mlp(spec, layout);
  for (const auto& row : d.features)
    CHECK(mlp_forward(trained.mlp, row) == mlp_forward(init, row));
}

TEST_CASE("network gradients match central differences on both heads") {
  std::mt19937_64 rng(67);
  EmbeddingLayout layout{kSmallDim / 8, 8};
  Dataset batch = grouped_dataset(rng, 6, 2, layout);

  auto check_head = [&](GroupedMlpSpec spec) {
    spec.seed = 17;
    GroupedMlpModel model = make_initial_mlp(spec, layout);
    std::vector<double> params = mlp_parameters(model);
    REQUIRE(params.size() >= 20);

    std::vector<double> grad;
    mlp_loss_and_gradient(model, batch, grad);
    REQUIRE(grad.size() == params.size());

    std::vector<std::size_t> picks;
    for (int i = 0; i < 25; ++i) picks.push_back(rng() % params.size());
    const double eps = 1e-5;
    for (std::size_t p : picks) {
      auto at = [&](double delta) {
        std::vector<double> shifted = params;
        shifted[p] += delta;
        GroupedMlpModel m = model;
        set_mlp_parameters(m, shifted);
        std::vector<double> g;
        return mlp_loss_and_gradient(m, batch, g);
      };
      const double fd = (at(eps) - at(-eps)) / (2.0 * eps);
      CHECK(fd_close(grad[p], fd, 1e-4));
    }
  };

  GroupedMlpSpec sigmoid_spec = make_mlp_spec(MlpVariant::male);
  sigmoid_spec.group_width = 3;
  sigmoid_spec.merge1_width = 8;
  check_head(sigmoid_spec);

  GroupedMlpSpec ocs_spec = make_mlp_spec(MlpVariant::female);
  ocs_spec.group_width = 3;
  ocs_spec.merge1_width = 8;
  ocs_spec.merge2_width = 4;
  check_head(ocs_spec);
}

TEST_CASE("one informative group drives the network; the rest are inert") {
  std::mt19937_64 rng(71);
  EmbeddingLayout layout{kSmallDim / 8, 8};
  const int informative = 0;
  Dataset train = grouped_dataset(rng, 400, informative, layout);
  Dataset test = grouped_dataset(rng, 160, informative, layout);

  GroupedMlpSpec spec = make_mlp_spec(MlpVariant::male);
  spec.epochs = 120;
  spec.batch_size = 64;
  spec.lr = 0.05;
  spec.seed = 5;
  TrainedModel model = train_grouped_mlp(train, spec);
  CHECK(accuracy(model, test, 0.5) >= 0.99);

  // Permuting any uninformative group's features across rows barely moves the
  // scores.
  std::vector<double> base(test.size());
  for (std::size_t i = 0; i < test.size(); ++i)
    base[i] = score(model, test.features[i]);

  for (int g = 0; g < layout.group_count(); ++g) {
    if (g == informative) continue;
    std::vector<int> members;
    for (int j = 0; j < layout.dim(); ++j)
      if (layout.group_of(j) == g) members.push_back(j);

    std::vector<std::size_t> perm(test.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);

    Dataset shuffled = test;
    for (std::size_t i = 0; i < test.size(); ++i)
      for (int j : members)
        shuffled.features[i][std::size_t(j)] = test.features[perm[i]][std::size_t(j)];

    double mad = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i)
      mad += std::fabs(score(model, shuffled.features[i]) - base[i]);
    mad /= double(test.size());
    CHECK(mad < 0.05);
  }
}

TEST_CASE("training is deterministic per seed and inference is dropout-free") {
  std::mt19937_64 rng(73);
  EmbeddingLayout layout{kSmallDim / 8, 8};
  Dataset d = grouped_dataset(rng, 60, 1, layout);
  GroupedMlpSpec spec = make_mlp_spec(MlpVariant::male);
  spec.epochs = 10;
  spec.batch_size = 16;
  spec.seed = 99;

  TrainedModel a = train_grouped_mlp(d, spec);
  TrainedModel b = train_grouped_mlp(d, spec);
  CHECK(mlp_parameters(a.mlp) == mlp_parameters(b.mlp));

  spec.seed = 100;
  TrainedModel c = train_grouped_mlp(d, spec);
  CHECK(mlp_parameters(a.mlp) != mlp_parameters(c.mlp));

  const auto& row = d.features[0];
  CHECK(score(a, row) == score(a, row));
}

TEST_CASE("models survive a disk round trip bit-exactly") {
  auto dir = testutil::scratch_dir("classifier_io");
  std::mt19937_64 rng(79);
  EmbeddingLayout layout{kSmallDim / 8, 8};
  Dataset grouped = grouped_dataset(rng, 40, 3, layout);

  std::vector<TrainedModel> models;
  {
    std::normal_distribution<double> n01(0.0, 1.0);
    Dataset flat;
    for (int i = 0; i < 30; ++i) {
      flat.features.push_back({n01(rng), n01(rng), n01(rng)});
      flat.labels.push_back(i % 2);
      flat.genders.push_back('-');
      flat.source_ids.push_back("m" + std::to_string(i));
    }
    models.push_back(train_logreg(flat, {}));
    GbdtConfig gconf;
    gconf.n_trees = 10;
    models.push_back(train_gbdt(flat, gconf));
    GroupedMlpSpec spec = make_mlp_spec(MlpVariant::female);
    spec.epochs = 3;
    spec.batch_size = 8;
    models.push_back(train_grouped_mlp(grouped, spec));
  }

  for (std::size_t k = 0; k < models.size(); ++k) {
    const auto path = dir / ("model" + std::to_string(k) + ".sasv");
    save_model(models[k], path);
    TrainedModel back = load_model(path);
    CHECK(back.kind == models[k].kind);
    CHECK(back.config_hash == models[k].config_hash);
    if (models[k].kind == ModelKind::grouped_mlp) {
      for (const auto& row : grouped.features)
        CHECK(score(back, row) == score(models[k], row));
    } else {
      const std::vector<double> row = {0.3, -0.7, 1.1};
      CHECK(score(back, row) == score(models[k], row));
    }
  }
}

TEST_CASE("kind and variant names round-trip") {
  for (ModelKind k : {ModelKind::logistic_regression, ModelKind::gbdt, ModelKind::grouped_mlp})
    CHECK(model_kind_from_string(model_kind_to_string(k)) == k);
  for (MlpVariant v :
       {MlpVariant::male, MlpVariant::female, MlpVariant::gender_independent})
    CHECK(mlp_variant_from_string(mlp_variant_to_string(v)) == v);
  CHECK_THROWS_AS(model_kind_from_string("mystery"), SasvError);
  CHECK_THROWS_AS(mlp_variant_from_string("mystery"), SasvError);
}

TEST_CASE("feature layout mismatches are rejected at scoring time") {
  std::mt19937_64 rng(83);
  std::normal_distribution<double> n01(0.0, 1.0);
  Dataset flat;
  for (int i = 0; i < 10; ++i) {
    flat.features.push_back({n01(rng), n01(rng)});
    flat.labels.push_back(i % 2);
    flat.genders.push_back('-');
    flat.source_ids.push_back("p" + std::to_string(i));
  }
  TrainedModel model = train_logreg(flat, {});
  const std::vector<double> wrong = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(score(model, wrong), SasvError);
}
