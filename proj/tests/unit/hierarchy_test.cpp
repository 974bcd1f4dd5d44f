#include <gtest/gtest.h>

#include <filesystem>

#include "hierfolio/errors.hpp"
#include "hierfolio/hierarchy.hpp"
#include "hierfolio/synthetic.hpp"
#include "oracles.hpp"

using namespace hierfolio;
using V = std::vector<double>;

namespace {

Contributor fixed(std::string id, PortfolioWeights w) {
  return {{id, "sum-" + id}, [w](std::size_t) { return w; }};
}

std::vector<ContributorRef> refs_of(const std::vector<Contributor>& cs) {
  std::vector<ContributorRef> r;
  for (const auto& c : cs) r.push_back(c.ref);
  return r;
}

AggregatorConfig quick(int epochs = 50) {
  AggregatorConfig c;
  c.epochs = epochs;
  c.hidden = 16;
  c.batch_size = 8;
  c.learning_rate = 1e-2;
  c.seed = 3;
  return c;
}

std::shared_ptr<const MarketData> trend() {
  static const auto m = oracle::market_of(drift_market(V{0.02, -0.01}, {2003, 1}, 36));
  return m;
}

}  // namespace

TEST(Level, Names) {
  EXPECT_EQ(to_string(meta_level_for(ObservationMode::metrics)), "meta_metrics");
  EXPECT_EQ(to_string(meta_level_for(ObservationMode::nlp)), "meta_nlp");
  EXPECT_EQ(parse_level("super"), AggregatorLevel::super);
  EXPECT_THROW(parse_level("mega"), DomainError);
}

TEST(Panel, ConcatenationLengths) {
  const auto market = oracle::market_of(random_walk_market(14, {2003, 1}, 6, 0.01, 1));
  std::vector<Contributor> bases, metas;
  for (int i = 0; i < 20; ++i) bases.push_back(fixed("b" + std::to_string(i), PortfolioWeights::uniform(14)));
  for (int i = 0; i < 2; ++i) metas.push_back(fixed("m" + std::to_string(i), PortfolioWeights::unit(14, i)));
  EXPECT_EQ(build_panel(bases, *market, 2).concatenated().size(), 280);
  const auto p = build_panel(metas, *market, 2);
  ASSERT_EQ(p.concatenated().size(), 28);
  EXPECT_EQ(p.concatenated()(0), 1.0);
  EXPECT_EQ(p.concatenated()(15), 1.0);
}

TEST(Panel, NamesTheBadContributor) {
  const auto market = trend();
  std::vector<Contributor> cs{fixed("good", PortfolioWeights::uniform(2)), fixed("wide", PortfolioWeights::uniform(3))};
  try {
    build_panel(cs, *market, 2);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("wide"), std::string::npos);
  }
}

TEST(Lookahead, SingleContributorIsAlwaysChosen) {
  const auto market = trend();
  std::vector<Contributor> cs{fixed("only", PortfolioWeights(V{0.3, 0.7}))};
  const auto panels = build_panels(cs, *market, decision_range(*market, Window::parse("2003-01:2004-12")));
  const auto samples = collect_imitation_dataset(panels, *market, {}, 3, 23);
  ASSERT_EQ(samples.size(), 21u);
  for (const auto& s : samples) {
    EXPECT_EQ(s.w_star, (V{0.3, 0.7}));
    EXPECT_EQ(s.chosen, "only");
  }
}

TEST(Lookahead, DominantAssetWinsAndTiesGoLow) {
  const auto market = trend();
  std::vector<Contributor> cs{fixed("b", PortfolioWeights::unit(2, 1)), fixed("a", PortfolioWeights::unit(2, 0)),
                              fixed("a2", PortfolioWeights::unit(2, 0))};
  const auto panels = build_panels(cs, *market, decision_range(*market, Window::parse("2003-01:2004-12")));
  const auto samples = collect_imitation_dataset(panels, *market, {}, 3, 35);
  ASSERT_EQ(samples.size(), 23u);
  for (const auto& s : samples) {
    EXPECT_EQ(s.chosen_index, 1u);
    EXPECT_EQ(s.chosen, "a");
    double expect = 0;
    for (std::size_t j = s.month_index; j < s.month_index + 3; ++j) {
      expect += reward_of({}, month_outcome(market->slices[j], V{1, 0}));
    }
    EXPECT_EQ(s.lookahead_reward, expect);
  }
  EXPECT_THROW(collect_imitation_dataset(panels, *market, {}, 0, 35), DomainError);
}

TEST(Aggregator, ZeroEpochsEqualsInit) {
  std::vector<ContributorRef> refs{{"x", "1"}, {"y", "2"}};
  const auto init = init_aggregator(AggregatorLevel::super, refs, 3, quick());
  std::vector<LookaheadSample> one(1);
  one[0].x = Vec::Constant(6, 1.0 / 3);
  one[0].w_star = V{1, 0, 0};
  const auto trained = train_aggregator(one, AggregatorLevel::super, refs, 3, quick(0));
  EXPECT_EQ(trained.net, init.net);
  EXPECT_THROW(train_aggregator({}, AggregatorLevel::super, refs, 3, quick()), DomainError);
}

TEST(Aggregator, InitIsPermutationInvariant) {
  std::vector<ContributorRef> refs{{"x", "1"}, {"y", "2"}, {"z", "3"}};
  std::vector<ContributorRef> perm{refs[2], refs[0], refs[1]};
  const auto a = init_aggregator(AggregatorLevel::meta_metrics, refs, 4, quick());
  const auto b = init_aggregator(AggregatorLevel::meta_metrics, perm, 4, quick());
  oracle::Gen g(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec> blocks(3);
    for (auto& blk : blocks) {
      V raw(4);
      for (auto& v : raw) v = g.uniform();
      const auto w = project_to_simplex(raw);
      blk = Eigen::Map<const Vec>(w.vector().data(), 4);
    }
    Vec x(12), y(12);
    x << blocks[0], blocks[1], blocks[2];
    y << blocks[2], blocks[0], blocks[1];
    const auto wa = a.act(x), wb = b.act(y);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(wa[i], wb[i], 1e-12);
  }
}

TEST(Aggregator, LearnsAConstantTarget) {
  oracle::Gen g(2);
  std::vector<LookaheadSample> samples(64);
  for (auto& s : samples) {
    s.x = Vec(6);
    for (Eigen::Index i = 0; i < 6; ++i) s.x(i) = g.uniform();
    s.w_star = V{1.0 / 3, 1.0 / 3, 1.0 / 3};
  }
  AggregatorTrainLog log;
  const auto m = train_aggregator(samples, AggregatorLevel::super, {{"p", "1"}, {"q", "2"}}, 3, quick(200), &log);
  EXPECT_LT(m.final_loss, 1e-4);
  EXPECT_EQ(log.epoch_loss.size(), 200u);
  const auto again = train_aggregator(samples, AggregatorLevel::super, {{"p", "1"}, {"q", "2"}}, 3, quick(200));
  EXPECT_EQ(again, m);
}

TEST(Aggregator, ManifestMismatchNamesTheLevel) {
  const auto market = trend();
  std::vector<Contributor> cs{fixed("a", PortfolioWeights::uniform(2)), fixed("b", PortfolioWeights::uniform(2))};
  const auto m = init_aggregator(AggregatorLevel::meta_nlp, refs_of(cs), 2, quick());
  auto swapped = cs;
  std::swap(swapped[0], swapped[1]);
  for (auto* bad : {&swapped}) {
    try {
      aggregator_contributor(m, *bad, *market);
      FAIL();
    } catch (const DomainError& e) {
      EXPECT_NE(std::string(e.what()).find("meta_nlp"), std::string::npos);
    }
  }
  auto tampered = cs;
  tampered[1].ref.checksum = "other";
  EXPECT_THROW(aggregator_contributor(m, tampered, *market), DomainError);
  EXPECT_THROW(m.act(build_panel(swapped, *market, 3)), DomainError);
  EXPECT_TRUE(on_simplex(aggregator_contributor(m, cs, *market).act(3).values()));
}

TEST(Aggregator, CheckpointRoundTrip) {
  oracle::Gen g(4);
  std::vector<LookaheadSample> samples(10);
  for (auto& s : samples) {
    s.x = Vec::Constant(4, g.uniform());
    s.w_star = V{0.5, 0.5};
  }
  const auto m = train_aggregator(samples, AggregatorLevel::meta_metrics, {{"a", "1"}, {"b", "2"}}, 2, quick(5));
  const auto path = std::filesystem::temp_directory_path() / "hierfolio_aggregator_test.json";
  save_aggregator(path, m);
  EXPECT_EQ(load_aggregator(path), m);
  std::filesystem::remove(path);
  auto j = to_json(m);
  j["manifest"][0]["checksum"] = "forged";
  EXPECT_THROW(aggregator_from_json(j), Error);
}

TEST(Hierarchy, StackedActIsOnTheSimplex) {
  const auto market = oracle::market_of(random_walk_market(3, {2003, 1}, 12, 0.01, 2));
  AgentSpec spec;
  spec.hyper.hidden = 8;
  Rng rng(1);
  Hierarchy h;
  for (auto mode : {ObservationMode::metrics, ObservationMode::nlp}) {
    spec.mode = mode;
    Policy p{spec, Mlp3::initialized(observation_length(mode, 3), 8, 8, 3, OutputHead::linear, rng), 3, "x"};
    h.bases.push_back(p);
  }
  std::vector<ContributorRef> meta_refs;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto mode = h.bases[i].spec.mode;
    auto meta = init_aggregator(meta_level_for(mode), {{h.bases[i].spec.id(), h.bases[i].checksum()}}, 3, quick());
    meta_refs.push_back({meta.id(), meta.checksum()});
    h.metas.push_back(meta);
  }
  h.super = init_aggregator(AggregatorLevel::super, meta_refs, 3, quick());
  for (std::size_t k = 1; k < 12; ++k) EXPECT_TRUE(on_simplex(hierarchy_act(h, *market, k).values()));
}
