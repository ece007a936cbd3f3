#include "support.hpp"

#include "vcfusion/closed_loop.hpp"
#include "vcfusion/commands.hpp"
#include "vcfusion/config.hpp"
#include "vcfusion/corpus.hpp"
#include "vcfusion/dataset.hpp"
#include "vcfusion/fusion.hpp"
#include "vcfusion/geometry.hpp"
#include "vcfusion/io.hpp"
#include "vcfusion/mlp.hpp"
#include "vcfusion/prediction.hpp"

#include <fmt/format.h>

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <string>

using namespace vcfusion;
using vcfusion::testing::Gen;
namespace fs = std::filesystem;

namespace
{

struct Outcome
{
  bool pass{false};
  std::string detail;
};

class Stopwatch
{
public:
  double seconds() const
  {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_{std::chrono::steady_clock::now()};
};

std::string pct(double x) { return fmt::format("{:.1f}%", 100.0 * x); }

// 1 -------------------------------------------------------------------------

Outcome table_filters()
{
  const auto trace = make_trace(1, std::vector<int>{0, 0, 0, 1, 0, 0, 0, 1});
  const auto aggr = aggressive_filter(trace, 3).predictions();
  const auto cons = conservative_filter(trace, 3, 0.5).predictions();
  const bool ok = aggr == std::vector<int>{0, 0, 0, 1, 1, 1, 1, 1} && cons == std::vector<int>(8, 0);
  return {ok, fmt::format("aggressive {} conservative {}", fmt::join(aggr, ""), fmt::join(cons, ""))};
}

// 2 -------------------------------------------------------------------------

Outcome overlap_case()
{
  // the nearer car's box encloses the farther one's; the anchor lies in both
  const std::vector<Box2D> boxes{{380, 230, 620, 400}, {430, 250, 530, 330}};
  const PixelPoint anchor{480, 300, 18.7};
  const std::vector<DepthEstimate> depths{{0, 8.46}, {1, 18.69}};
  const auto fused = match_target(anchor, boxes, depths, 18.7);
  const auto base = match_target_baseline(anchor, boxes);
  const auto name = [&](std::size_t i) { return fmt::format("{:.2f} m box", depths[i].distance); };
  return {
    fused.chosen_index == 1U && fused.candidate_count == 2,
    fmt::format("fused picks the {}, baseline picks the {}", name(*fused.chosen_index), name(*base.chosen_index))};
}

// 3 -------------------------------------------------------------------------

Outcome corpus_curve()
{
  const Stopwatch clock;
  CorpusConfig cfg;
  cfg.frames = 500;
  cfg.seed = 1;
  cfg.sensing.edge_jitter_sigma = 2.0;
  cfg.sensing.depth_noise_sigma = 0.1;
  const auto corpus = build_corpus(cfg);
  std::size_t pairs = 0;
  for (const auto & f : corpus) pairs += f.overlap_pair ? 1 : 0;
  const std::vector<double> th{0.5, 0.6, 0.7, 0.8, 0.9};
  const auto curve = identification_accuracy(evaluate_corpus(corpus, cfg.fusion), th);
  const double secs = clock.seconds();

  bool ordered = true;
  std::string points;
  for (std::size_t k = 0; k < th.size(); ++k) {
    const double f = curve.accuracy.at(MatchMethod::fused)[k];
    const double b = curve.accuracy.at(MatchMethod::baseline)[k];
    ordered = ordered && f >= b;
    points += fmt::format(" {:.1f}:{}/{}", th[k], pct(f), pct(b));
  }
  const double gap = curve.at(MatchMethod::fused, 0.7) - curve.at(MatchMethod::baseline, 0.7);
  const double share = static_cast<double>(pairs) / static_cast<double>(corpus.size());
  const bool ok = corpus.size() == 500 && share >= 0.3 && ordered && gap >= 0.05 && secs < 60.0;
  return {ok, fmt::format(
                "{} frames, {} pairs, fused/baseline{}, gap@0.7 {:.1f} pp, {:.1f} s", corpus.size(), pct(share),
                points, 100.0 * gap, secs)};
}

// 4 -------------------------------------------------------------------------

Eigen::Vector2d matrix_projection(const WorldPoint & p, const CameraExtrinsics & e, const CameraIntrinsics & in)
{
  Eigen::Matrix3d k;
  k << in.fx(), 0.0, in.principal_u, 0.0, in.fy(), in.principal_v, 0.0, 0.0, 1.0;
  Eigen::Matrix<double, 3, 4> rt;
  rt.leftCols<3>() = e.rotation;
  rt.col(3) = e.translation;
  const Eigen::Vector3d h = k * rt * Eigen::Vector4d(p.x, p.y, p.z, 1.0);
  return {h.x() / h.z(), h.y() / h.z()};
}

Outcome projection_oracle()
{
  const Stopwatch clock;
  const CameraIntrinsics in;
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    Gen g(i);
    const auto e = g.pose();
    const double z = g.uniform(in.near_plane + 0.1, 200.0);
    const Eigen::Vector3d pc(g.uniform(-z, z), g.uniform(-z, z), z);
    const Eigen::Vector3d pw = e.rotation.transpose() * (pc - e.translation);
    const WorldPoint p{pw.x(), pw.y(), pw.z()};
    const PixelPoint px = project_anchor(p, e, in);
    const Eigen::Vector2d ref = matrix_projection(p, e, in);
    worst = std::max(worst, (Eigen::Vector2d(px.u, px.v) - ref).norm() / ref.norm());
  }
  const double secs = clock.seconds();
  return {worst < 1e-9 && secs < 1.0, fmt::format("1000 pairs, max relative error {:.2e}, {:.3f} s", worst, secs)};
}

// 5 -------------------------------------------------------------------------

Outcome depth_statistics()
{
  const Stopwatch clock;
  const FusionParams params;

  // a fronto-parallel plane fills the depth map at one distance
  bool exact = true;
  for (std::uint64_t i = 0; i < 200; ++i) {
    Gen g(7000 + i);
    const float depth = static_cast<float>(g.uniform(1.0, 120.0));
    DepthMap map(960, 540);
    std::fill(map.values.begin(), map.values.end(), depth);
    std::vector<Box2D> boxes;
    for (int b = 0; b < 3; ++b) {
      const double u = g.uniform(0.0, 700.0);
      const double v = g.uniform(0.0, 400.0);
      boxes.push_back({u, v, u + g.uniform(40.0, 260.0), v + g.uniform(40.0, 140.0)});
    }
    for (const auto & d : depth_evaluate(map, boxes, params.shrink, params.samples, i)) {
      exact = exact && d.distance == static_cast<double>(depth);
    }
  }

  const double sigma = 0.1;
  const int n = 64;
  const double bound = 4.0 * sigma / std::sqrt(static_cast<double>(n));
  const double truth = 20.0;
  const int trials = 1000;
  int inside = 0;
  for (int trial = 0; trial < trials; ++trial) {
    Gen g(1000 + static_cast<std::uint64_t>(trial));
    DepthMap map(200, 160);
    for (auto & v : map.values) v = static_cast<float>(truth + g.normal(0.0, sigma));
    const std::vector<Box2D> box{{0, 0, 200, 160}};
    const double d = depth_evaluate(map, box, params.shrink, n, static_cast<std::uint64_t>(trial))[0].distance;
    inside += std::abs(d - truth) <= bound ? 1 : 0;
  }
  const double share = static_cast<double>(inside) / trials;
  const double secs = clock.seconds();
  return {exact && share >= 0.99 && secs < 30.0,
          fmt::format("planar exact {}, within 4σ/√n in {} of {} trials, {:.2f} s", exact ? "yes" : "no", pct(share), trials, secs)};
}

// 6 -------------------------------------------------------------------------

Dataset blobs(std::size_t n, std::size_t dims, std::uint64_t seed)
{
  Gen g(seed);
  Dataset d;
  std::vector<double> row(dims);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = g.coin() ? 1 : 0;
    for (std::size_t k = 0; k < dims; ++k) {
      row[k] = (label == 1 ? 3.0 : -3.0) / std::sqrt(static_cast<double>(dims)) + g.normal(0.0, 1.0);
      row[k] = row[k] * (1.0 + static_cast<double>(k)) + 10.0 * static_cast<double>(k);
    }
    d.add(row, label);
  }
  return d;
}

Outcome mlp_checks()
{
  const Stopwatch clock;
  const Dataset small = blobs(40, feature_count, 5);
  Gen init(17);
  MlpModel m = make_zero_model({static_cast<int>(feature_count), 8, 1});
  m.feature_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(feature_count));
  m.feature_scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(feature_count));
  for (std::size_t p = 0; p < m.parameter_count(); ++p) m.parameter(p) = init.normal(0.0, 0.5);
  const auto analytic = loss_and_gradient(m, small);
  Gen pick(23);
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = static_cast<std::size_t>(pick.integer(0, static_cast<int>(m.parameter_count()) - 1));
    const double saved = m.parameter(p);
    m.parameter(p) = saved + h;
    const double up = loss_and_gradient(m, small).loss;
    m.parameter(p) = saved - h;
    const double down = loss_and_gradient(m, small).loss;
    m.parameter(p) = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double g = analytic.gradient[p];
    worst = std::max(worst, std::abs(g - numeric) / std::max({std::abs(g), std::abs(numeric), 1e-7}));
  }

  const Dataset train_set = blobs(600, feature_count, 1);
  const Dataset test_set = blobs(400, feature_count, 2);
  TrainingConfig cfg;
  cfg.epochs = 50;
  const MlpModel a = train(train_set, cfg);
  int correct = 0;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    correct += predict_label(a, test_set.row(i)) == test_set.y[i] ? 1 : 0;
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(test_set.size());
  const MlpModel b = train(train_set, cfg);
  const bool identical = a == b && to_json(a).dump() == to_json(b).dump();
  const double secs = clock.seconds();
  return {worst < 1e-4 && acc >= 0.95 && identical && secs < 60.0,
          fmt::format(
            "max gradient relative error {:.2e}, held-out accuracy {}, bit-identical {}, {:.2f} s", worst, pct(acc),
            identical ? "yes" : "no", secs)};
}

// 7 -------------------------------------------------------------------------

Outcome labeling_geometry()
{
  TrajectoryLog log;
  log.dt = 0.1;
  for (int k = 0; k <= 1100; ++k) {
    const double t = 0.1 * k;
    log.times.push_back(t);
    log.frames.push_back({vcfusion::testing::car(1, 10.0 * t, 5.25, 10.0)});
  }
  const std::vector<ManeuverPlan> events{{1, 96.0, 100.0, 1, 2}};
  std::vector<double> pos, neg;
  for (const auto & s : label_windows(events, log, WindowParams{5.0, 3.0, 1.0})) {
    (s.label == 1 ? pos : neg).push_back(s.t);
  }
  const bool ok = pos == std::vector<double>{95, 96, 97, 98, 99, 100} &&
                  neg == std::vector<double>{87, 88, 89, 90, 91, 92};
  return {ok, fmt::format("positives [{}] negatives [{}]", fmt::join(pos, ","), fmt::join(neg, ","))};
}

// 8 -------------------------------------------------------------------------

Outcome closed_loop_claims()
{
  const RunConfig cfg;
  const Stopwatch train_clock;
  const auto samples = build_training_samples(cfg.scenario, cfg.training_seeds, cfg.dataset_options());
  const MlpModel model = train(to_dataset(samples), cfg.training);
  const double train_secs = train_clock.seconds();

  const Stopwatch clock;
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 50; ++s) seeds.push_back(s);
  const auto runs = run_paired(cfg.closed_loop(), model, seeds);
  const double secs = clock.seconds();
  const auto & c = runs.comparison;

  const bool ttc = c.ttc.improved_fraction >= 0.8 && c.ttc.median_difference > 0.0;
  const bool accel = c.mean_abs_accel.improved_fraction >= 0.8 && c.mean_abs_accel.median_improvement > 0.0;
  const bool jerk = c.max_jerk.improved_fraction >= 0.8 && c.max_jerk.median_improvement > 0.0;
  return {ttc && accel && jerk && secs < 300.0,
          fmt::format(
            "{} pairs; TTC improved in {} of {} (median +{:.3f} s); mean |a| in {} (median -{:.3f} m/s²); "
            "max jerk in {} (median -{:.3f} m/s³); guided collisions {}, baseline {}; {:.1f} s (+{:.1f} s training)",
            c.pairs, pct(c.ttc.improved_fraction), c.ttc.pairs_used, c.ttc.median_difference,
            pct(c.mean_abs_accel.improved_fraction), c.mean_abs_accel.median_improvement,
            pct(c.max_jerk.improved_fraction), c.max_jerk.median_improvement, c.guided_collisions,
            c.baseline_collisions, secs, train_secs)};
}

// 9 -------------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path & dir)
{
  std::map<std::string, std::string> files;
  for (const auto & e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return files;
}

Outcome cli_determinism()
{
  const Stopwatch clock;
  const fs::path root = fs::temp_directory_path() / fmt::format("vcfusion_acceptance_{}", ::getpid());
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path model = root / "train_a" / "model.json";
  write_file(root / "base.json", R"({
  "seeds": [1],
  "scenario": {"duration": 30.0},
  "corpus": {"frames": 60},
  "training": {"seeds": [100000, 100001, 100002, 100003, 100004, 100005, 100006, 100007], "epochs": 30}
})");
  write_file(
    root / "with_model.json",
    fmt::format(R"({{"seeds": [1, 2], "model_path": "{}"}})", model.string()));
  const std::vector<std::pair<std::string, std::string>> commands{
    {"simulate", "base.json"}, {"fuse-eval", "base.json"}, {"train", "base.json"},
    {"predict-eval", "with_model.json"}, {"closed-loop", "with_model.json"}};

  std::vector<std::string> notes;
  bool ok = true;
  for (const auto & [command, config] : commands) {
    const std::string tag = command == "train" ? "train" : command;
    std::map<std::string, std::string> first;
    for (const char * copy : {"_a", "_b"}) {
      const fs::path out = root / (tag + copy);
      const std::string cmd =
        fmt::format("{} {} --config {} --out {} > /dev/null 2>&1", VCFUSION_CLI_PATH, command, (root / config).string(), out.string());
      const int status = std::system(cmd.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        ok = false;
        notes.push_back(fmt::format("{} exited abnormally", command));
        break;
      }
      const auto files = snapshot(out);
      if (first.empty()) {
        first = files;
      } else {
        const bool same = files == first;
        ok = ok && same;
        notes.push_back(fmt::format("{} {} files {}", command, files.size(), same ? "identical" : "DIFFER"));
      }
    }
  }
  fs::remove_all(root);
  return {ok, fmt::format("{}; {:.1f} s", fmt::join(notes, ", "), clock.seconds())};
}

}  // namespace

int main()
{
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
    {"table filters", table_filters},
    {"overlap case", overlap_case},
    {"corpus accuracy curve", corpus_curve},
    {"projection oracle", projection_oracle},
    {"depth evaluation statistics", depth_statistics},
    {"mlp verification", mlp_checks},
    {"labeling geometry", labeling_geometry},
    {"closed-loop directional claims", closed_loop_claims},
    {"cli determinism", cli_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception & e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    fmt::print("{} {} {}: {}\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
