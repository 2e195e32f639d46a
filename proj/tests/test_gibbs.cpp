#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "geweke.hpp"
#include "oracles.hpp"
#include "ordhmm/gibbs.hpp"
#include "ordhmm/io.hpp"
#include "test_support.hpp"

using namespace ordhmm;
using namespace testing_support;

namespace {

ConjugatePrior flat_k2() {
  return make_uniform_fixed_prior(
      ConjugatePrior{Eigen::MatrixXd::Ones(2, 2), DirichletEmissionPrior{{{1.0, 1.0}, {1.0, 1.0}}}});
}

template <typename Key>
double tv_distance(const std::map<Key, double>& a, const std::map<Key, double>& b) {
  double s = 0.0;
  for (const auto& [k, v] : a) s += std::abs(v - (b.count(k) ? b.at(k) : 0.0));
  for (const auto& [k, v] : b)
    if (!a.count(k)) s += v;
  return 0.5 * s;
}

void expect_same_trace(const GibbsTrace& a, const GibbsTrace& b) {
  ASSERT_EQ(a.draws.size(), b.draws.size());
  for (std::size_t i = 0; i < a.draws.size(); ++i) {
    EXPECT_EQ(a.draws[i].q, b.draws[i].q);
    EXPECT_EQ(a.draws[i].path, b.draws[i].path);
    EXPECT_EQ(a.draws[i].m, b.draws[i].m);
    EXPECT_EQ(a.draws[i].log_complete, b.draws[i].log_complete);
  }
}

}  // namespace

// =============================================================================
// FFBS
// =============================================================================

TEST(Ffbs, SingleStateIsConstant) {
  const auto p = categorical_standard({{1.0}}, {{0.4, 0.6}});
  Rng rng = make_rng(1);
  EXPECT_EQ(ffbs_standard(p, Symbols{0, 1, 1}, rng), (StatePath{0, 0, 0}));
  const auto z = ffbs_ordered(as_ordered(p), Symbols{0, 1, 1}, rng);
  EXPECT_EQ(z.z, (std::vector<int>{0, 0, 0}));
}

TEST(Ffbs, SingleObservationFrequencies) {
  const auto p = asymmetric_k2();
  const Eigen::VectorXd th = stationary_distribution(p.q);
  const double w0 = th(0) * 0.2, w1 = th(1) * 0.7;
  const double want = w0 / (w0 + w1);
  Rng rng = make_rng(2);
  const int n = 20000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += ffbs_standard(p, Symbols{1}, rng)[0] == 0;
  EXPECT_NEAR(hits / double(n), want, 3.0 * std::sqrt(want * (1 - want) / n));
  // The ordered start is deterministic.
  for (int i = 0; i < 100; ++i) EXPECT_EQ(ffbs_ordered(as_ordered(p), Symbols{1}, rng).z[0], 0);
}

TEST(Ffbs, StandardPathLawMatchesEnumeration) {
  const auto p = asymmetric_k2();
  const Symbols y{0, 1, 1, 0};
  const auto ref = oracle::standard_path_posterior(to_rows(p.q), to_vector(stationary_distribution(p.q)),
                                                   oracle::categorical_lik(std::get<CategoricalEmission>(p.emission).probs, y));
  Rng rng = make_rng(3);
  const int n = 100000;
  std::map<std::vector<int>, double> freq;
  for (int i = 0; i < n; ++i) freq[ffbs_standard(p, y, rng)] += 1.0 / n;
  EXPECT_LT(tv_distance(freq, ref), 0.01);
}

TEST(Ffbs, OrderedPathLawMatchesEnumeration) {
  const auto o = categorical_ordered({{0.5, 0.3, 0.2}, {0.2, 0.6, 0.2}, {0.3, 0.1, 0.6}}, {{0.8, 0.2}, {0.3, 0.7}, {0.5, 0.5}});
  const Symbols y{0, 1, 1, 0};
  const auto lik = oracle::categorical_lik(std::get<CategoricalEmission>(o.emission).probs, y);
  std::map<std::vector<int>, double> ref;
  double total = 0.0;
  oracle::for_each_sequence(3, y.size(), [&](const std::vector<int>& z) {
    double w = oracle::ordered_path_prob(to_rows(o.q), z);
    for (std::size_t t = 0; t < z.size(); ++t) w *= lik[t][static_cast<std::size_t>(z[t])];
    if (w > 0.0) ref[z] = w;
    total += w;
  });
  for (auto& [z, w] : ref) w /= total;
  Rng rng = make_rng(4);
  const int n = 100000;
  std::map<std::vector<int>, double> freq;
  for (int i = 0; i < n; ++i) {
    const auto zm = ffbs_ordered(o, y, rng);
    ASSERT_NO_THROW(validate_path(zm, 3));
    freq[zm.z] += 1.0 / n;
  }
  EXPECT_LT(tv_distance(freq, ref), 0.01);
}

// =============================================================================
// Conjugate updates
// =============================================================================

TEST(Updates, DirichletRowMean) {
  // Dirichlet(1,1) row with transition counts (3,1).
  StandardGibbs g(flat_k2(), Symbols{0, 0, 0, 0, 1}, 5);
  const int n = 40000;
  std::vector<double> draws;
  for (int i = 0; i < n; ++i) {
    g.set_path({0, 0, 0, 0, 1});
    g.update_parameters();
    draws.push_back(g.params().q(0, 0));
  }
  const auto s = batch_means(draws);
  EXPECT_NEAR(s.mean, 2.0 / 3.0, 3.0 * s.mcse);
  // Beta(4, 2) sd.
  EXPECT_NEAR(s.sd, std::sqrt(4.0 * 2.0 / (36.0 * 7.0)), 0.005);
}

TEST(Updates, NormalMeanPosterior) {
  const NormalEmissionPrior prior{1.0, 4.0, 0.5};
  const Reals y{2.0, 3.0, 2.5, -1.0};
  const std::vector<int> labels{0, 0, 0, 1};
  Rng rng = make_rng(6);
  const int n = 40000;
  double s0 = 0.0, s1 = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto e = std::get<GaussianEmission>(draw_emission(prior, 2, y, labels, rng));
    s0 += e.means[0] / n;
    s1 += e.means[1] / n;
    EXPECT_EQ(e.variance, 0.5);
  }
  const double prec0 = 1 / 4.0 + 3 / 0.5, prec1 = 1 / 4.0 + 1 / 0.5;
  EXPECT_NEAR(s0, (1.0 / 4.0 + 7.5 / 0.5) / prec0, 3.0 / std::sqrt(prec0 * n));
  EXPECT_NEAR(s1, (1.0 / 4.0 - 1.0 / 0.5) / prec1, 3.0 / std::sqrt(prec1 * n));
}

TEST(Augmentation, MarginalizingColumnGivesAggregate) {
  Rng rng = make_rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = random_categorical(rng, 5, 2);
    for (int m = 0; m + 1 < 5; ++m)
      for (int k = 0; k <= m; ++k) {
        double tail = 0.0;
        for (int c = m + 1; c < 5; ++c) tail += p.q(k, c);
        EXPECT_NEAR(tail, ordered_transition(p.q, k, m, m + 1), 1e-12);
        double norm = 0.0;
        for (int c = m + 1; c < 5; ++c) norm += p.q(k, c) / tail;
        EXPECT_NEAR(norm, 1.0, 1e-12);
      }
  }
}

TEST(Augmentation, ColumnFrequencies) {
  ConjugatePrior prior = geweke::test_prior(3);
  OrderedGibbs g(prior, Symbols{0, 1, 0}, 8);
  const auto& q = g.params().q;
  const double want = q(0, 1) / (q(0, 1) + q(0, 2));
  const int n = 50000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const int c = g.augment_column(0, 0);
    ASSERT_TRUE(c == 1 || c == 2);
    hits += c == 1;
  }
  EXPECT_NEAR(hits / double(n), want, 3.0 * std::sqrt(want * (1 - want) / n));
  // One unseen label left: the column is forced.
  for (int i = 0; i < 100; ++i) EXPECT_EQ(g.augment_column(2, 1), 2);
}

// =============================================================================
// Runs
// =============================================================================

TEST(GibbsRun, ZeroIterationsKeepsOnlyInitialization) {
  GibbsConfig cfg;
  cfg.iterations = 0;
  const auto a = gibbs_standard(flat_k2(), Symbols{0, 1}, cfg);
  ASSERT_EQ(a.draws.size(), 1u);
  EXPECT_EQ(a.draws[0].iteration, 0u);
  EXPECT_EQ(gibbs_ordered(flat_k2(), Symbols{0, 1}, cfg).draws.size(), 1u);
}

TEST(GibbsRun, BurninAndThinning) {
  GibbsConfig cfg;
  cfg.iterations = 10;
  cfg.burnin = 4;
  cfg.thin = 3;
  const auto t = gibbs_standard(flat_k2(), Symbols{0, 1}, cfg);
  ASSERT_EQ(t.draws.size(), 3u);
  EXPECT_EQ(t.draws[1].iteration, 7u);
  EXPECT_EQ(t.draws[2].iteration, 10u);
  cfg.thin = 0;
  EXPECT_THROW(gibbs_standard(flat_k2(), Symbols{0}, cfg), ConfigError);
  cfg.thin = 1;
  cfg.burnin = 11;
  EXPECT_THROW(gibbs_ordered(flat_k2(), Symbols{0}, cfg), ConfigError);
}

TEST(GibbsRun, RejectsMismatchedData) {
  GibbsConfig cfg;
  EXPECT_THROW(gibbs_standard(flat_k2(), Reals{0.5}, cfg), DimensionMismatch);
  ConjugatePrior bad = flat_k2();
  bad.dirichlet_rows(0, 1) = 0.0;
  EXPECT_THROW(gibbs_standard(bad, Symbols{0}, cfg), ValidationError);
}

TEST(GibbsRun, SingleObservationReproducesPrior) {
  ConjugatePrior prior = flat_k2();
  prior.dirichlet_rows << 2.0, 1.0, 1.0, 3.0;
  GibbsConfig cfg;
  cfg.iterations = 20000;
  cfg.seed = 9;
  for (const auto& trace : {gibbs_standard(prior, Symbols{0}, cfg), gibbs_ordered(prior, Symbols{0}, cfg)}) {
    const auto s = summarize(trace);
    ASSERT_EQ(s.columns[0].first, "q_1_1");
    ASSERT_EQ(s.columns[2].first, "q_2_1");
    EXPECT_NEAR(s.columns[0].second.mean, 2.0 / 3.0, 3.0 * s.columns[0].second.mcse);
    EXPECT_NEAR(s.columns[2].second.mean, 0.25, 3.0 * s.columns[2].second.mcse);
  }
}

TEST(GibbsRun, SingleStateUpdatesEmissionsOnly) {
  ConjugatePrior prior{Eigen::MatrixXd::Ones(1, 1), DirichletEmissionPrior{{{1.0, 1.0}}}};
  GibbsConfig cfg;
  cfg.iterations = 20000;
  const Symbols y{0, 0, 0, 1};
  for (const auto& trace : {gibbs_standard(prior, y, cfg), gibbs_ordered(prior, y, cfg)}) {
    const auto s = summarize(trace);
    EXPECT_EQ(s.columns[0].second.mean, 1.0);
    // Beta(4, 2) mean.
    EXPECT_NEAR(s.columns[1].second.mean, 4.0 / 6.0, 3.0 * s.columns[1].second.mcse);
  }
}

TEST(GibbsRun, Deterministic) {
  GibbsConfig cfg;
  cfg.iterations = 200;
  cfg.seed = 77;
  const Symbols y{0, 1, 1, 0, 0, 1};
  expect_same_trace(gibbs_standard(geweke::test_prior(2), y, cfg), gibbs_standard(geweke::test_prior(2), y, cfg));
  expect_same_trace(gibbs_ordered(geweke::test_prior(3), y, cfg), gibbs_ordered(geweke::test_prior(3), y, cfg));
  cfg.row_update = OrderedRowUpdate::Metropolis;
  expect_same_trace(gibbs_ordered(geweke::test_prior(3), y, cfg), gibbs_ordered(geweke::test_prior(3), y, cfg));
  GibbsConfig other = cfg;
  other.seed = 78;
  EXPECT_NE(gibbs_ordered(geweke::test_prior(3), y, cfg).draws.back().q,
            gibbs_ordered(geweke::test_prior(3), y, other).draws.back().q);
}

TEST(GibbsRun, StationaryInitialUsesCorrection) {
  GibbsConfig cfg;
  cfg.iterations = 500;
  const auto t = gibbs_standard(geweke::test_prior(2), Symbols{0, 1, 1}, cfg);
  EXPECT_EQ(t.mh_proposals, 500u);
  EXPECT_GT(t.mh_accepts, 0u);
  EXPECT_LT(t.mh_accepts, 500u);
  const auto f = gibbs_standard(flat_k2(), Symbols{0, 1, 1}, cfg);
  EXPECT_EQ(f.mh_proposals, 0u);
}

// =============================================================================
// Successive-conditional checks
// =============================================================================

namespace {

void expect_geweke(const geweke::Result& r) {
  for (std::size_t j = 0; j < r.z.size(); ++j) EXPECT_LT(std::abs(r.z[j]), 3.0) << r.names[j] << " z=" << r.z[j];
}

}  // namespace

TEST(Geweke, StandardStationaryK2) { expect_geweke(geweke::standard(geweke::test_prior(2), {.seed = 101})); }

TEST(Geweke, StandardFixedK2) {
  expect_geweke(geweke::standard(make_uniform_fixed_prior(geweke::test_prior(2)), {.seed = 102}));
}

TEST(Geweke, OrderedAugmentedK2) {
  expect_geweke(geweke::ordered(geweke::test_prior(2), {.seed = 103}, OrderedRowUpdate::Augmented));
}

TEST(Geweke, OrderedAugmentedK3) {
  expect_geweke(geweke::ordered(geweke::test_prior(3), {.horizon = 6, .seed = 104}, OrderedRowUpdate::Augmented));
}

TEST(Geweke, OrderedMetropolisK3) {
  expect_geweke(geweke::ordered(geweke::test_prior(3), {.horizon = 6, .seed = 105}, OrderedRowUpdate::Metropolis));
}

// =============================================================================
// Relabeling a standard trace
// =============================================================================

TEST(RelabelTrace, SwapsWhenStateTwoAppearsFirst) {
  const auto p = asymmetric_k2();
  GibbsTrace t;
  t.draws.push_back(GibbsDraw{0, p.q, p.emission, {1, 0, 1}, {}, 0.0});
  const auto r = relabel_trace(t, 1);
  EXPECT_EQ(r.coordinates, Coordinates::Ordered);
  const auto& d = r.draws[0];
  EXPECT_EQ(d.q(0, 0), p.q(1, 1));
  EXPECT_EQ(d.q(0, 1), p.q(1, 0));
  EXPECT_EQ(std::get<CategoricalEmission>(d.emission).probs[0], std::get<CategoricalEmission>(p.emission).probs[1]);
  EXPECT_EQ(d.path, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(d.m, (std::vector<int>{0, 1, 1}));
  EXPECT_THROW(relabel_trace(r, 1), Error);
}

TEST(RelabelTrace, SingleStateIsIdentity) {
  const auto p = categorical_standard({{1.0}}, {{0.3, 0.7}});
  GibbsTrace t;
  t.draws.push_back(GibbsDraw{0, p.q, p.emission, {0, 0}, {}, 0.0});
  const auto r = relabel_trace(t, 1);
  EXPECT_EQ(r.draws[0].q, p.q);
  EXPECT_EQ(r.draws[0].path, (std::vector<int>{0, 0}));
}

TEST(RelabelTrace, CompletesUnseenOrderFromItsLaw) {
  const auto p = categorical_standard({{0.5, 0.3, 0.2}, {0.2, 0.6, 0.2}, {0.3, 0.1, 0.6}}, {{1.0}, {1.0}, {1.0}});
  GibbsTrace t;
  for (int i = 0; i < 20000; ++i) t.draws.push_back(GibbsDraw{0, p.q, p.emission, {0, 0}, {}, 0.0});
  const auto r = relabel_trace(t, 5);
  // The second label is state 2 exactly when q_bar_12 = q_12 (0.3, against q_13 = 0.2).
  const double want = p.q(0, 1) / (p.q(0, 1) + p.q(0, 2));
  double hits = 0.0;
  for (const auto& d : r.draws) {
    EXPECT_EQ(d.q(0, 0), p.q(0, 0));
    hits += d.q(0, 1) == p.q(0, 1);
  }
  const double n = static_cast<double>(r.draws.size());
  EXPECT_NEAR(hits / n, want, 3.0 * std::sqrt(want * (1 - want) / n));
}

// =============================================================================
// Sampler against quadrature
// =============================================================================

TEST(Quadrature, FixtureMatchesOracle) {
  const auto y = std::get<Symbols>(io::read_observations_file(fixture("k2_ordered_T50.csv"), true));
  const auto ref = io::read_json_file(fixture("quadrature_k2_T50.json")).at("posterior_mean");
  const auto m = oracle::ordered_k2_posterior_means<40>(y);
  EXPECT_NEAR(m.p1, ref.at("xi_1_1").get<double>(), 1e-9);
  EXPECT_NEAR(m.q11, ref.at("q_1_1").get<double>(), 1e-9);
}

TEST(Quadrature, OrderedSamplerPosteriorMean) {
  const auto y = io::read_observations_file(fixture("k2_ordered_T50.csv"), true);
  const auto prior = io::conjugate_prior_from_json(io::read_json_file(fixture("conjugate_k2_flat.json")));
  const auto ref = io::read_json_file(fixture("quadrature_k2_T50.json")).at("posterior_mean");
  GibbsConfig cfg;
  cfg.iterations = 40000;
  cfg.burnin = 1000;
  cfg.seed = 2025;
  const auto s = summarize(gibbs_ordered(prior, y, cfg));
  for (const auto& [name, c] : s.columns)
    if (ref.contains(name)) { EXPECT_NEAR(c.mean, ref.at(name).get<double>(), 3.0 * c.mcse) << name; }
}
