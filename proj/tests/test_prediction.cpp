#include "support.hpp"

#include "vcfusion/closed_loop.hpp"
#include "vcfusion/dataset.hpp"
#include "vcfusion/prediction.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace vcfusion;
using vcfusion::testing::car;
using vcfusion::testing::Gen;

namespace
{

std::vector<int> aggressive_oracle(const std::vector<int> & raw, int tau_a)
{
  std::vector<int> out(raw.size(), 0);
  for (std::size_t t = 0; t < raw.size(); ++t) {
    for (int k = 0; k <= tau_a && static_cast<std::size_t>(k) <= t; ++k) {
      if (raw[t - static_cast<std::size_t>(k)] == 1) out[t] = 1;
    }
  }
  return out;
}

std::vector<int> conservative_oracle(const std::vector<int> & raw, int tau_c, double thres)
{
  std::vector<int> out(raw.size(), 0);
  for (std::size_t t = static_cast<std::size_t>(tau_c); t < raw.size(); ++t) {
    int sum = 0;
    for (int k = 0; k <= tau_c; ++k) sum += raw[t - static_cast<std::size_t>(k)];
    out[t] = static_cast<double>(sum) / (tau_c + 1) > thres ? 1 : 0;
  }
  return out;
}

// one vehicle cruising in lane 1 on a 0.1 s grid, with a lead in its lane
TrajectoryLog straight_log(double t_last)
{
  TrajectoryLog log;
  log.dt = 0.1;
  const int n = static_cast<int>(std::lround(t_last / 0.1));
  for (int k = 0; k <= n; ++k) {
    const double t = 0.1 * k;
    log.times.push_back(t);
    log.frames.push_back({car(1, 10.0 * t, 5.25, 10.0), car(2, 10.0 * t + 30.0, 5.25, 10.0)});
  }
  return log;
}

}  // namespace

TEST(Features, HandcraftedSnapshot)
{
  const LaneSpec lanes;
  // subject in lane 1 at s=50
  const std::vector<VehicleState> snap{
    car(1, 50.0, 5.25, 15.0),   // subject
    car(2, 70.0, 5.0, 12.0),    // own lead
    car(3, 90.0, 4.0, 11.0),    // farther own lead, ignored
    car(4, 35.0, 6.0, 16.0),    // own lag
    car(5, 60.0, 8.75, 20.0),   // left lead
    car(6, 55.0, 1.75, 14.0),   // right lead
  };
  const FeatureVector f = extract_features(snap, 1, lanes);
  EXPECT_DOUBLE_EQ(f[0], 15.0);
  EXPECT_DOUBLE_EQ(f[1], -3.0);
  EXPECT_DOUBLE_EQ(f[2], 15.5);
  EXPECT_DOUBLE_EQ(f[3], 1.0);
  EXPECT_DOUBLE_EQ(f[4], 10.5);
  EXPECT_DOUBLE_EQ(f[5], 5.0);
  EXPECT_DOUBLE_EQ(f[6], 5.5);
  // no left lag
  EXPECT_DOUBLE_EQ(f[7], 0.0);
  EXPECT_DOUBLE_EQ(f[8], absent_gap);
  EXPECT_DOUBLE_EQ(f[9], -1.0);
  EXPECT_DOUBLE_EQ(f[10], 0.5);
  EXPECT_DOUBLE_EQ(f[11], 0.0);
  EXPECT_DOUBLE_EQ(f[12], absent_gap);
  EXPECT_THROW(extract_features(snap, 42, lanes), Error);
}

TEST(Features, EdgeLanesHaveNoOuterNeighbors)
{
  const LaneSpec lanes;
  const std::vector<VehicleState> snap{car(1, 50.0, 1.75, 15.0), car(2, 60.0, 5.25, 15.0)};
  const FeatureVector f = extract_features(snap, 1, lanes);
  EXPECT_DOUBLE_EQ(f[5], 0.0);
  EXPECT_DOUBLE_EQ(f[6], 5.5);
  EXPECT_DOUBLE_EQ(f[10], absent_gap);
  EXPECT_DOUBLE_EQ(f[12], absent_gap);
}

TEST(Windows, LabelingAroundLaneChangeEnd)
{
  const TrajectoryLog log = straight_log(110.0);
  const std::vector<ManeuverPlan> events{{1, 96.0, 100.0, 1, 2}};
  const WindowParams w{5.0, 3.0, 1.0};
  const auto samples = label_windows(events, log, w);
  std::vector<double> pos, neg;
  for (const auto & s : samples) {
    EXPECT_EQ(s.vehicle_id, 1);
    (s.label == 1 ? pos : neg).push_back(s.t);
  }
  EXPECT_EQ(pos, (std::vector<double>{95, 96, 97, 98, 99, 100}));
  EXPECT_EQ(neg, (std::vector<double>{87, 88, 89, 90, 91, 92}));
  // features come from the sampled instant
  EXPECT_DOUBLE_EQ(samples.front().features[0], 10.0);
}

TEST(Windows, ClippedAtLogStart)
{
  const TrajectoryLog log = straight_log(20.0);
  const std::vector<ManeuverPlan> events{{1, 6.0, 10.0, 1, 2}};
  const auto samples = label_windows(events, log, WindowParams{5.0, 3.0, 1.0});
  int pos = 0, neg = 0;
  for (const auto & s : samples) (s.label == 1 ? pos : neg)++;
  EXPECT_EQ(pos, 6);
  EXPECT_EQ(neg, 3);  // 0, 1, 2 survive of -3..2
  EXPECT_THROW(label_windows(events, log, WindowParams{0.0, 3.0, 1.0}), Error);
}

TEST(Windows, GroundTruthMatchesPositiveWindow)
{
  const std::vector<ManeuverPlan> events{{1, 96.0, 100.0, 1, 2}};
  const WindowParams w;
  EXPECT_EQ(ground_truth_label(events, 1, 94.9, w), 0);
  EXPECT_EQ(ground_truth_label(events, 1, 95.0, w), 1);
  EXPECT_EQ(ground_truth_label(events, 1, 100.0, w), 1);
  EXPECT_EQ(ground_truth_label(events, 1, 100.1, w), 0);
  EXPECT_EQ(ground_truth_label(events, 2, 98.0, w), 0);
}

TEST(Filters, TableExample)
{
  const std::vector<int> raw{0, 0, 0, 1, 0, 0, 0, 1};
  const auto tr = make_trace(1, raw);
  EXPECT_EQ(aggressive_filter(tr, 3).predictions(), (std::vector<int>{0, 0, 0, 1, 1, 1, 1, 1}));
  EXPECT_EQ(conservative_filter(tr, 3, 0.5).predictions(), (std::vector<int>(8, 0)));
}

TEST(Filters, MatchBruteForceOracles)
{
  for (std::uint64_t i = 0; i < 500; ++i) {
    Gen g(i);
    const auto raw = g.bits(static_cast<std::size_t>(g.integer(0, 40)), g.uniform(0.1, 0.9));
    const int tau_a = g.integer(0, 6);
    const int tau_c = g.integer(0, 6);
    const double thres = g.uniform(0.0, 1.0);
    const auto tr = make_trace(3, raw);
    EXPECT_EQ(aggressive_filter(tr, tau_a).predictions(), aggressive_oracle(raw, tau_a)) << "case " << i;
    EXPECT_EQ(conservative_filter(tr, tau_c, thres).predictions(), conservative_oracle(raw, tau_c, thres)) << "case " << i;
  }
}

TEST(Filters, Properties)
{
  for (std::uint64_t i = 0; i < 300; ++i) {
    Gen g(1000 + i);
    const auto raw = g.bits(30, g.uniform(0.1, 0.9));
    const auto tr = make_trace(1, raw);
    const auto aggr = aggressive_filter(tr, g.integer(0, 5)).predictions();
    const auto cons = conservative_filter(tr, g.integer(0, 5), 0.5).predictions();
    std::vector<int> cons_zero_window = conservative_filter(tr, 0, 0.5).predictions();
    for (std::size_t t = 0; t < raw.size(); ++t) {
      EXPECT_GE(aggr[t], raw[t]);  // never removes a positive
      EXPECT_EQ(cons_zero_window[t], raw[t]);
      if (cons[t] == 1) {
        EXPECT_GE(std::count(raw.begin(), raw.begin() + static_cast<long>(t) + 1, 1), 1);
      }
    }
    EXPECT_EQ(aggressive_filter(tr, 0).predictions(), raw);
  }
  EXPECT_THROW(aggressive_filter(make_trace(1, std::vector<int>{1}), -1), Error);
  EXPECT_THROW(conservative_filter(make_trace(1, std::vector<int>{1}), 1, 1.5), Error);
}

TEST(Filters, OnlineMatchesBatch)
{
  for (std::uint64_t i = 0; i < 300; ++i) {
    Gen g(2000 + i);
    const auto raw = g.bits(static_cast<std::size_t>(g.integer(1, 40)));
    const FilterParams fp{g.integer(0, 5), g.integer(0, 5), g.uniform(0.0, 1.0)};
    const auto tr = make_trace(1, raw);
    OnlinePredictionFilter online_a(OnlineFilter::aggressive, fp);
    OnlinePredictionFilter online_c(OnlineFilter::conservative, fp);
    OnlinePredictionFilter online_r(OnlineFilter::raw, fp);
    std::vector<int> a, c, r;
    for (int bit : raw) {
      const double p = bit == 1 ? 0.9 : 0.1;
      a.push_back(online_a.push(p));
      c.push_back(online_c.push(p));
      r.push_back(online_r.push(p));
    }
    EXPECT_EQ(a, aggressive_filter(tr, fp.tau_a).predictions()) << "case " << i;
    EXPECT_EQ(c, conservative_filter(tr, fp.tau_c, fp.thres).predictions()) << "case " << i;
    EXPECT_EQ(r, raw);
  }
}

TEST(Filters, AdvisoryCarriesLastPositiveProbability)
{
  OnlinePredictionFilter f(OnlineFilter::aggressive, FilterParams{});
  f.push(0.8);
  EXPECT_EQ(f.push(0.2), 1);
  EXPECT_DOUBLE_EQ(f.advisory_probability(0.2), 0.8);
  EXPECT_DOUBLE_EQ(f.advisory_probability(0.7), 0.7);
}

TEST(Dataset, SimulatedRunsGiveBalancedWindows)
{
  ScenarioConfig sc;
  const std::vector<std::uint64_t> seeds{11, 12, 13};
  DatasetOptions opt;
  const auto samples = build_training_samples(sc, seeds, opt);
  ASSERT_FALSE(samples.empty());
  std::size_t pos = 0;
  for (const auto & s : samples) pos += s.label == 1 ? 1 : 0;
  EXPECT_GT(pos, 0U);
  EXPECT_GE(pos, samples.size() - pos);  // negatives can be clipped at the log start
  const Dataset d = to_dataset(samples);
  EXPECT_EQ(d.dims, feature_count);
  EXPECT_EQ(d.size(), samples.size());

  opt.include_non_changers = true;
  EXPECT_GT(build_training_samples(sc, seeds, opt).size(), samples.size());
}
