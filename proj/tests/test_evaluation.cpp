#include "support.hpp"

#include "vcfusion/closed_loop.hpp"
#include "vcfusion/corpus.hpp"
#include "vcfusion/evaluation.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace vcfusion;
using vcfusion::testing::car;
using vcfusion::testing::Gen;

namespace
{

ScoredIdentification scored(MatchMethod m, std::optional<Box2D> chosen, Box2D truth)
{
  ScoredIdentification s;
  s.result.method = m;
  if (chosen) s.result.chosen = Detection{*chosen, 1};
  s.truth = truth;
  return s;
}

// ego (id 0) in lane 2 at constant speed; id 1 cuts in from lane 1 at t_in
TrajectoryLog cut_in_log(double ego_v, double other_v, double gap0, double t_in, double t_last)
{
  TrajectoryLog log;
  log.dt = 0.1;
  const int n = static_cast<int>(std::lround(t_last / 0.1));
  for (int k = 0; k <= n; ++k) {
    const double t = 0.1 * k;
    auto ego = car(0, ego_v * t, 8.75, ego_v);
    ego.kind = VehicleKind::ego;
    const double y = t < t_in ? 5.25 : 8.75;
    auto other = car(1, 4.5 + gap0 + other_v * t, y, other_v);
    log.times.push_back(t);
    log.frames.push_back({ego, other});
  }
  return log;
}

}  // namespace

TEST(Accuracy, CountsChosenBoxesAboveThreshold)
{
  const Box2D truth{0, 0, 10, 10};
  const std::vector<ScoredIdentification> rs{
    scored(MatchMethod::fused, Box2D{0, 0, 10, 10}, truth),   // iou 1
    scored(MatchMethod::fused, Box2D{0, 0, 10, 6}, truth),    // iou 0.6
    scored(MatchMethod::fused, std::nullopt, truth),          // nothing chosen
    scored(MatchMethod::baseline, Box2D{5, 0, 15, 10}, truth),  // iou 1/3
  };
  const std::vector<double> th{0.3, 0.5, 0.6, 0.7};
  const auto c = identification_accuracy(rs, th);
  EXPECT_EQ(c.accuracy.at(MatchMethod::fused), (std::vector<double>{2.0 / 3, 2.0 / 3, 2.0 / 3, 1.0 / 3}));
  EXPECT_EQ(c.accuracy.at(MatchMethod::baseline), (std::vector<double>{1.0, 0.0, 0.0, 0.0}));
  EXPECT_DOUBLE_EQ(c.at(MatchMethod::fused, 0.7), 1.0 / 3);
  EXPECT_THROW(c.at(MatchMethod::fused, 0.8), Error);
  EXPECT_THROW(identification_accuracy({}, th), Error);
  EXPECT_THROW(identification_accuracy(rs, std::vector<double>{0.5, 0.4}), Error);
}

TEST(Accuracy, NonIncreasingInThreshold)
{
  for (std::uint64_t i = 0; i < 50; ++i) {
    Gen g(i);
    std::vector<ScoredIdentification> rs;
    for (int k = 0; k < 30; ++k) {
      rs.push_back(scored(MatchMethod::fused, g.coin(0.9) ? std::optional<Box2D>(g.box(20)) : std::nullopt, g.box(20)));
    }
    std::vector<double> th;
    for (int k = 0; k <= 10; ++k) th.push_back(0.1 * k);
    const auto acc = identification_accuracy(rs, th).accuracy.at(MatchMethod::fused);
    for (std::size_t k = 1; k < acc.size(); ++k) EXPECT_LE(acc[k], acc[k - 1]);
  }
}

TEST(Ttc, StartsAtLaneEntryAndUsesClosingSamples)
{
  // ego 20 m/s, other 15 m/s, 30 m bumper gap at t=0, enters at t=1
  const auto log = cut_in_log(20.0, 15.0, 30.0, 1.0, 3.0);
  const auto series = ttc_series(log, 0, 1);
  ASSERT_FALSE(series.values.empty());
  EXPECT_NEAR(series.times.front(), 1.0, 1e-9);
  double sum = 0.0;
  for (std::size_t k = 0; k < series.values.size(); ++k) {
    const double t = series.times[k];
    const double gap = 30.0 - 5.0 * t;
    EXPECT_NEAR(series.values[k], gap / 5.0, 1e-9);
    sum += gap / 5.0;
  }
  EXPECT_NEAR(*series.average, sum / static_cast<double>(series.values.size()), 1e-12);
  EXPECT_EQ(series.values.size(), 21U);
}

TEST(Ttc, UndefinedWhenNeverClosing)
{
  const auto log = cut_in_log(15.0, 20.0, 30.0, 1.0, 3.0);
  EXPECT_FALSE(ttc_series(log, 0, 1).average);
}

TEST(Comfort, AccelAndJerkOracle)
{
  TrajectoryLog log;
  log.dt = 0.1;
  const std::vector<double> accel{0.0, -1.0, -3.0, -3.0, 0.5};
  for (std::size_t k = 0; k < accel.size(); ++k) {
    auto v = car(0, 0.0, 8.75);
    v.a = accel[k];
    log.times.push_back(0.1 * static_cast<double>(k));
    log.frames.push_back({v});
  }
  const auto aj = accel_jerk_metrics(log, 0);
  EXPECT_DOUBLE_EQ(aj.mean_abs_accel, 7.5 / 5.0);
  EXPECT_NEAR(aj.max_jerk, 35.0, 1e-9);
  const auto head = accel_jerk_metrics(log, 0, 0, 2);
  EXPECT_DOUBLE_EQ(head.mean_abs_accel, 0.5);
  EXPECT_NEAR(head.max_jerk, 10.0, 1e-9);
  EXPECT_DOUBLE_EQ(accel_jerk_metrics(log, 0, 3, 3).max_jerk, 0.0);
}

TEST(Safety, FirstCutInAndReport)
{
  const auto log = cut_in_log(20.0, 15.0, 30.0, 1.0, 3.0);
  EXPECT_EQ(first_cut_in(log, 0), 1);
  const auto r = safety_report(log, 0, 9, DriverPolicy::guided);
  EXPECT_EQ(r.seed, 9U);
  EXPECT_EQ(r.target_id, 1);
  EXPECT_TRUE(r.avg_ttc.has_value());
  EXPECT_FALSE(r.collision);
  EXPECT_FALSE(r.deceleration_onset);
  EXPECT_NEAR(r.trip_duration, 3.1, 1e-9);

  const auto none = cut_in_log(20.0, 15.0, 30.0, 99.0, 3.0);
  EXPECT_FALSE(first_cut_in(none, 0));
  EXPECT_FALSE(safety_report(none, 0, 9, DriverPolicy::guided).avg_ttc);
}

TEST(Classification, MatchesCountingOracle)
{
  for (std::uint64_t i = 0; i < 200; ++i) {
    Gen g(100 + i);
    const auto pred = g.bits(50);
    const auto truth = g.bits(50);
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t k = 0; k < 50; ++k) {
      if (pred[k] && truth[k]) ++tp;
      if (pred[k] && !truth[k]) ++fp;
      if (!pred[k] && !truth[k]) ++tn;
      if (!pred[k] && truth[k]) ++fn;
    }
    const auto m = classification_metrics(pred, truth);
    EXPECT_DOUBLE_EQ(m.accuracy, (tp + tn) / 50.0);
    EXPECT_DOUBLE_EQ(*m.true_positive_rate, tp / (tp + fn));
    EXPECT_DOUBLE_EQ(*m.false_positive_rate, fp / (fp + tn));
  }
  const std::vector<int> ones{1, 1};
  EXPECT_FALSE(classification_metrics(ones, ones).false_positive_rate);
  EXPECT_THROW(classification_metrics(ones, std::vector<int>{1}), Error);
}

TEST(Paired, MediansAndImprovedFractions)
{
  std::vector<SafetyReport> g(3), b(3);
  for (std::uint64_t i = 0; i < 3; ++i) g[i].seed = b[i].seed = i;
  g[0].avg_ttc = 3.0; b[0].avg_ttc = 2.0;
  g[1].avg_ttc = 1.0; b[1].avg_ttc = 2.0;
  g[2].avg_ttc = 5.0; b[2].avg_ttc = std::nullopt;
  g[0].mean_abs_accel = 0.5; b[0].mean_abs_accel = 1.0;
  g[1].mean_abs_accel = 0.7; b[1].mean_abs_accel = 1.0;
  g[2].mean_abs_accel = 1.2; b[2].mean_abs_accel = 1.0;
  g[0].max_jerk = 1.0; b[0].max_jerk = 4.0;
  g[1].max_jerk = 2.0; b[1].max_jerk = 4.0;
  g[2].max_jerk = 3.0; b[2].max_jerk = 4.0;
  g[1].collision = true;
  const auto pc = compare_paired_runs(g, b);
  EXPECT_EQ(pc.pairs, 3U);
  EXPECT_EQ(pc.ttc.pairs_used, 2U);
  EXPECT_DOUBLE_EQ(pc.ttc.improved_fraction, 0.5);
  EXPECT_DOUBLE_EQ(pc.ttc.median_difference, 0.0);
  EXPECT_NEAR(pc.mean_abs_accel.improved_fraction, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(pc.mean_abs_accel.median_improvement, 0.3, 1e-12);
  EXPECT_DOUBLE_EQ(pc.max_jerk.improved_fraction, 1.0);
  EXPECT_DOUBLE_EQ(pc.max_jerk.median_improvement, 2.0);
  EXPECT_DOUBLE_EQ(pc.max_jerk.median_relative_change, -0.5);
  EXPECT_EQ(pc.guided_collisions, 1U);
  b[1].seed = 7;
  EXPECT_THROW(compare_paired_runs(g, b), Error);
  EXPECT_THROW(compare_paired_runs(g, std::vector<SafetyReport>(2)), Error);
}

TEST(Paired, MedianOracle)
{
  EXPECT_DOUBLE_EQ(median({}), 0.0);
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
}

TEST(Corpus, PairFramesShareTheTargetAnchor)
{
  CorpusConfig cfg;
  cfg.frames = 40;
  cfg.seed = 3;
  const auto corpus = build_corpus(cfg);
  ASSERT_EQ(corpus.size(), 40U);
  for (const auto & f : corpus) {
    EXPECT_TRUE(f.overlap_pair);
    EXPECT_TRUE(f.target_id == 1 || f.target_id == 2);
    const auto & target = f.vehicles[static_cast<std::size_t>(f.target_id)];
    const auto & cam = f.sensor.camera;
    const PixelPoint a = project_anchor(reference_point(target, cfg.reference), cam.extrinsics, cam.intrinsics);
    EXPECT_TRUE(f.truth.contains(a.u, a.v));
    EXPECT_NEAR(f.d_g, gnss_distance(cam.extrinsics.optical_center(), f.twin), 1e-12);
  }
  const auto again = build_corpus(cfg);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(corpus[i].truth, again[i].truth);
    EXPECT_EQ(corpus[i].twin.position.x, again[i].twin.position.x);
  }
}

TEST(Corpus, ClutterFramesHaveSeparatedBoxes)
{
  CorpusConfig cfg;
  cfg.frames = 20;
  cfg.overlap_fraction = 0.0;
  for (const auto & f : build_corpus(cfg)) {
    EXPECT_FALSE(f.overlap_pair);
    const std::vector<VehicleState> others(f.vehicles.begin() + 1, f.vehicles.end());
    const auto truth = render_truth(others, f.sensor.camera);
    for (std::size_t i = 0; i < truth.size(); ++i) {
      for (std::size_t j = i + 1; j < truth.size(); ++j) {
        EXPECT_DOUBLE_EQ(intersection_area(truth[i].box, truth[j].box), 0.0);
      }
    }
  }
}

TEST(Corpus, FusedIsAccurateOnNoiselessPairs)
{
  CorpusConfig cfg;
  cfg.frames = 60;
  cfg.gnss_sigma = 0.0;
  cfg.sensing.depth_noise_sigma = 0.0;
  const auto corpus = build_corpus(cfg);
  const auto rs = evaluate_corpus(corpus, cfg.fusion);
  const std::vector<double> th{0.5};
  const auto curve = identification_accuracy(rs, th);
  // misses come only from occluder pixels inside the far box's sampling region
  EXPECT_GE(curve.accuracy.at(MatchMethod::fused)[0], 0.9);
}

TEST(ClosedLoop, RunsAreReproducible)
{
  ClosedLoopConfig cfg;
  cfg.scenario.duration = 8.0;
  // a fixed model that warns about every car
  MlpModel model = make_zero_model({static_cast<int>(feature_count), 4, 1});
  model.feature_mean = Eigen::VectorXd::Zero(feature_count);
  model.feature_scale = Eigen::VectorXd::Ones(feature_count);
  model.layers[1].bias(0) = 1.0;
  const auto a = run_closed_loop(cfg, model, DriverPolicy::guided, 4);
  const auto b = run_closed_loop(cfg, model, DriverPolicy::guided, 4);
  EXPECT_EQ(to_json(a.report).dump(), to_json(b.report).dump());
  EXPECT_FALSE(a.advisories.empty());
  EXPECT_GT(a.frames_rendered, 0U);
  const auto base = run_closed_loop(cfg, model, DriverPolicy::baseline, 4);
  EXPECT_EQ(base.frames_rendered, 0U);
  EXPECT_TRUE(base.identifications.empty());
}
