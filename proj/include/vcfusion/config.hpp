#pragma once

#include "vcfusion/closed_loop.hpp"
#include "vcfusion/corpus.hpp"
#include "vcfusion/dataset.hpp"
#include "vcfusion/error.hpp"
#include "vcfusion/fusion.hpp"
#include "vcfusion/mlp.hpp"
#include "vcfusion/prediction.hpp"
#include "vcfusion/scene.hpp"
#include "vcfusion/sensing.hpp"
#include "vcfusion/twinlink.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace vcfusion
{

/// Everything a command needs. JSON keys mirror the field names below; see
/// `to_json(const RunConfig &)` for the full document with defaults.
struct RunConfig
{
  std::vector<std::uint64_t> seeds{1};
  std::optional<std::string> output_dir;
  std::optional<std::string> model_path;  // trained in-run when absent

  ScenarioConfig scenario;
  SensingConfig sensing;
  ChannelConfig channel;
  ReferencePoint reference{ReferencePoint::rear_center};
  double gnss_sigma{0.75};
  FusionParams fusion;

  CorpusConfig corpus;  // lanes, sensing, fusion and positions come from above
  std::vector<double> thresholds{0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};

  WindowParams window;
  ExtractionParams extraction;
  bool include_non_changers{false};
  FilterParams filters;
  OnlineFilter online_filter{OnlineFilter::aggressive};

  std::vector<std::uint64_t> training_seeds = default_training_seeds();
  TrainingConfig training;

  double inference_period{1.0};
  double guidance_period{0.1};
  double identify_range{80.0};

  int depth_every{10};  // guidance ticks between depth map dumps

  static std::vector<std::uint64_t> default_training_seeds()
  {
    std::vector<std::uint64_t> s;
    for (std::uint64_t i = 100000; i < 100200; ++i) s.push_back(i);
    return s;
  }

  CorpusConfig corpus_for(std::uint64_t seed) const
  {
    CorpusConfig c = corpus;
    c.seed = seed;
    c.lanes = scenario.lanes;
    c.sensing = sensing;
    c.fusion = fusion;
    c.reference = reference;
    c.gnss_sigma = gnss_sigma;
    return c;
  }

  DatasetOptions dataset_options() const { return {window, extraction, include_non_changers}; }

  ClosedLoopConfig closed_loop() const
  {
    ClosedLoopConfig c;
    c.scenario = scenario;
    c.sensing = sensing;
    c.channel = channel;
    c.positions = PositionSource{reference, gnss_sigma, 0};
    c.fusion = fusion;
    c.filter = online_filter;
    c.filters = filters;
    c.inference_period = inference_period;
    c.guidance_period = guidance_period;
    c.identify_range = identify_range;
    return c;
  }
};

// ---------------------------------------------------------------------------
// source locations

/// Line of every key and array element in a JSON text, by JSON pointer.
class SourceMap
{
public:
  explicit SourceMap(std::string_view text)
  {
    line_starts_.push_back(0);
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '\n') line_starts_.push_back(i + 1);
    }
  }

  int line_of_offset(std::size_t offset) const
  {
    const auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), offset);
    return static_cast<int>(it - line_starts_.begin());
  }

  void record(const std::string & pointer, int line) { lines_.emplace(pointer, line); }

  /// Line of `pointer`, or of its nearest recorded ancestor, or 1.
  int line(std::string pointer) const
  {
    while (true) {
      if (auto it = lines_.find(pointer); it != lines_.end()) return it->second;
      const auto slash = pointer.rfind('/');
      if (slash == std::string::npos || pointer.empty()) return 1;
      pointer.resize(slash);
    }
  }

private:
  std::vector<std::size_t> line_starts_;
  std::map<std::string, int> lines_;
};

namespace detail
{

// Reports how far the parser has read so the SAX handler can locate tokens.
struct TrackingIterator
{
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char *;
  using reference = const char &;

  const char * p{nullptr};
  const char ** sink{nullptr};

  reference operator*() const { return *p; }
  TrackingIterator & operator++()
  {
    ++p;
    *sink = p;
    return *this;
  }
  TrackingIterator operator++(int)
  {
    auto old = *this;
    ++*this;
    return old;
  }
  bool operator==(const TrackingIterator & o) const { return p == o.p; }
  bool operator!=(const TrackingIterator & o) const { return p != o.p; }
};

class LocatingSax : public nlohmann::json::json_sax_t
{
public:
  using json = nlohmann::json;

  LocatingSax(std::string_view text, const char ** read_pos, SourceMap & map)
  : text_(text), read_pos_(read_pos), map_(map)
  {
  }

  json result;
  std::optional<std::string> error;

  bool null() override { return put(nullptr); }
  bool boolean(bool v) override { return put(v); }
  bool number_integer(number_integer_t v) override { return put(v); }
  bool number_unsigned(number_unsigned_t v) override { return put(v); }
  bool number_float(number_float_t v, const string_t &) override { return put(v); }
  bool string(string_t & v) override { return put(v); }
  bool binary(binary_t & v) override { return put(json::binary(v)); }

  bool start_object(std::size_t) override
  {
    json * slot = place(json::object());
    if (slot == nullptr) return false;
    stack_.push_back({slot, false, 0, {}});
    return true;
  }
  bool key(string_t & k) override
  {
    auto & top = stack_.back();
    const std::string ptr = path() + "/" + escape(k);
    if (top.node->contains(k)) {
      error = fmt::format("{}: duplicate key '{}'", current_line(), k);
      return false;
    }
    top.key = k;
    map_.record(ptr, current_line());
    return true;
  }
  bool end_object() override
  {
    stack_.pop_back();
    return true;
  }
  bool start_array(std::size_t) override
  {
    json * slot = place(json::array());
    if (slot == nullptr) return false;
    stack_.push_back({slot, true, 0, {}});
    return true;
  }
  bool end_array() override
  {
    stack_.pop_back();
    return true;
  }
  bool parse_error(std::size_t position, const std::string &, const nlohmann::detail::exception & ex) override
  {
    std::string what = ex.what();
    // drop the library prefix and its own location
    if (const auto colon = what.find(": "); colon != std::string::npos) what = what.substr(colon + 2);
    const std::size_t at = position == 0 ? 0 : std::min(position - 1, text_.size());
    error = fmt::format("{}: {}", map_.line_of_offset(at), what);
    return false;
  }

private:
  struct Frame
  {
    json * node;
    bool array;
    std::size_t index;
    std::string key;
  };

  static std::string escape(const std::string & k)
  {
    std::string out;
    for (char c : k) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  }

  std::string path() const
  {
    std::string p;
    for (std::size_t i = 0; i + 1 < stack_.size(); ++i) {
      const auto & f = stack_[i];
      p += "/" + (f.array ? std::to_string(f.index - 1) : escape(f.key));
    }
    return p;
  }

  // line of the last significant character the parser consumed
  int current_line() const
  {
    std::size_t off = static_cast<std::size_t>(*read_pos_ - text_.data());
    while (off > 0) {
      const char c = text_[off - 1];
      if (c != ' ' && c != '\t' && c != '\n' && c != '\r' && c != ',') break;
      --off;
    }
    return map_.line_of_offset(off == 0 ? 0 : off - 1);
  }

  json * place(json value)
  {
    if (stack_.empty()) {
      result = std::move(value);
      return &result;
    }
    auto & top = stack_.back();
    if (top.array) {
      const std::string ptr = path() + "/" + std::to_string(top.index);
      top.node->push_back(std::move(value));
      ++top.index;
      map_.record(ptr, current_line());
      return &top.node->back();
    }
    json & slot = (*top.node)[top.key];
    slot = std::move(value);
    return &slot;
  }

  bool put(json value) { return place(std::move(value)) != nullptr; }

  std::string_view text_;
  const char ** read_pos_;
  SourceMap & map_;
  std::vector<Frame> stack_;
};

}  // namespace detail

/// Parses JSON text, recording the line of every key. Syntax errors and
/// duplicate keys throw ErrorCode::config with "<name>:<line>: ..." text.
inline nlohmann::json parse_located(std::string_view text, SourceMap & map, const std::string & name)
{
  const char * read_pos = text.data();
  detail::LocatingSax sax(text, &read_pos, map);
  detail::TrackingIterator first{text.data(), &read_pos};
  detail::TrackingIterator last{text.data() + text.size(), &read_pos};
  const bool ok = nlohmann::json::sax_parse(first, last, &sax);
  if (!ok || sax.error) {
    throw Error(ErrorCode::config, name + ":" + sax.error.value_or("1: unreadable document"));
  }
  return sax.result;
}

// ---------------------------------------------------------------------------
// schema

namespace detail
{

using Check = std::function<std::optional<std::string>(double)>;

inline Check positive()
{
  return [](double v) -> std::optional<std::string> {
    if (v > 0.0) return std::nullopt;
    return "must be positive";
  };
}
inline Check non_negative()
{
  return [](double v) -> std::optional<std::string> {
    if (v >= 0.0) return std::nullopt;
    return "must not be negative";
  };
}
inline Check non_positive()
{
  return [](double v) -> std::optional<std::string> {
    if (v <= 0.0) return std::nullopt;
    return "must not be positive";
  };
}
inline Check within(double lo, double hi)
{
  return [lo, hi](double v) -> std::optional<std::string> {
    if (v >= lo && v <= hi) return std::nullopt;
    return fmt::format("must lie in [{}, {}]", lo, hi);
  };
}
inline Check above_within(double lo, double hi)
{
  return [lo, hi](double v) -> std::optional<std::string> {
    if (v > lo && v <= hi) return std::nullopt;
    return fmt::format("must lie in ({}, {}]", lo, hi);
  };
}

struct SchemaContext
{
  const SourceMap & map;
  std::string name;

  [[noreturn]] void fail(const std::string & pointer, const std::string & message) const
  {
    throw Error(
      ErrorCode::config,
      fmt::format("{}:{}: {}: {}", name, map.line(pointer), pointer.empty() ? "/" : pointer, message));
  }
};

/// Reads one JSON object; every key must be consumed before finish().
class Section
{
public:
  Section(const SchemaContext & ctx, const nlohmann::json * obj, std::string pointer)
  : ctx_(ctx), obj_(obj), pointer_(std::move(pointer))
  {
    if (obj_ != nullptr && !obj_->is_object()) {
      ctx_.fail(pointer_, "expected an object");
    }
  }

  Section section(const std::string & key)
  {
    used_.insert(key);
    return Section(ctx_, find(key), pointer_ + "/" + key);
  }

  void number(const std::string & key, double & field, const Check & check = {})
  {
    const auto * v = take(key);
    if (v == nullptr) return;
    if (!v->is_number()) fail(key, "expected a number");
    validate(key, v->get<double>(), check);
    field = v->get<double>();
  }

  void number(const std::string & key, float & field, const Check & check = {})
  {
    double d = field;
    number(key, d, check);
    field = static_cast<float>(d);
  }

  void integer(const std::string & key, int & field, const Check & check = {})
  {
    const auto * v = take(key);
    if (v == nullptr) return;
    if (!v->is_number_integer()) fail(key, "expected an integer");
    const auto x = v->get<std::int64_t>();
    if (x < -1000000000 || x > 1000000000) fail(key, "integer out of range");
    validate(key, static_cast<double>(x), check);
    field = static_cast<int>(x);
  }

  void unsigned_integer(const std::string & key, std::uint64_t & field)
  {
    const auto * v = take(key);
    if (v == nullptr) return;
    if (!v->is_number_unsigned()) fail(key, "expected a non-negative integer");
    field = v->get<std::uint64_t>();
  }

  void boolean(const std::string & key, bool & field)
  {
    const auto * v = take(key);
    if (v == nullptr) return;
    if (!v->is_boolean()) fail(key, "expected true or false");
    field = v->get<bool>();
  }

  void optional_string(const std::string & key, std::optional<std::string> & field)
  {
    const auto * v = take(key);
    if (v == nullptr) return;
    if (v->is_null()) {
      field.reset();
      return;
    }
    if (!v->is_string() || v->get<std::string>().empty()) fail(key, "expected a non-empty string or null");
    field = v->get<std::string>();
  }

  template <typename Enum>
  void choice(const std::string & key, Enum & field, const std::vector<std::pair<std::string, Enum>> & options)
  {
    const auto * v = take(key);
    if (v == nullptr) return;
    std::string names;
    for (const auto & [name, value] : options) {
      if (v->is_string() && v->get<std::string>() == name) {
        field = value;
        return;
      }
      names += (names.empty() ? "" : ", ") + name;
    }
    fail(key, "expected one of: " + names);
  }

  void seed_list(const std::string & key, std::vector<std::uint64_t> & field)
  {
    const auto * v = take(key);
    if (v == nullptr) return;
    if (!v->is_array() || v->empty()) fail(key, "expected a non-empty array of seeds");
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number_unsigned()) fail(key + "/" + std::to_string(i), "expected a non-negative integer");
      out.push_back((*v)[i].get<std::uint64_t>());
    }
    field = std::move(out);
  }

  void number_list(const std::string & key, std::vector<double> & field, const Check & check = {})
  {
    const auto * v = take(key);
    if (v == nullptr) return;
    if (!v->is_array() || v->empty()) fail(key, "expected a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string item = key + "/" + std::to_string(i);
      if (!(*v)[i].is_number()) fail(item, "expected a number");
      validate(item, (*v)[i].get<double>(), check);
      out.push_back((*v)[i].get<double>());
    }
    field = std::move(out);
  }

  [[noreturn]] void fail(const std::string & key, const std::string & message) const
  {
    ctx_.fail(pointer_ + "/" + key, message);
  }

  void finish() const
  {
    if (obj_ == nullptr) return;
    for (const auto & item : obj_->items()) {
      if (!used_.count(item.key())) fail(item.key(), "unknown key");
    }
  }

private:
  const nlohmann::json * find(const std::string & key) const
  {
    if (obj_ == nullptr) return nullptr;
    const auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }

  const nlohmann::json * take(const std::string & key)
  {
    used_.insert(key);
    return find(key);
  }

  void validate(const std::string & key, double value, const Check & check) const
  {
    if (!std::isfinite(value)) fail(key, "must be finite");
    if (check) {
      if (auto problem = check(value)) fail(key, *problem);
    }
  }

  const SchemaContext & ctx_;
  const nlohmann::json * obj_;
  std::string pointer_;
  std::set<std::string> used_;
};

inline void read_dims(Section s, VehicleDims & d)
{
  s.number("length", d.length, positive());
  s.number("width", d.width, positive());
  s.number("height", d.height, positive());
  s.finish();
}

inline const std::vector<std::pair<std::string, ReferencePoint>> & reference_names()
{
  static const std::vector<std::pair<std::string, ReferencePoint>> names{
    {"rear_center", ReferencePoint::rear_center}, {"centroid", ReferencePoint::centroid}};
  return names;
}

}  // namespace detail

/// Validates a parsed document against the schema and resolves defaults.
inline RunConfig config_from_json(const nlohmann::json & doc, const SourceMap & map, const std::string & name)
{
  using namespace detail;
  const SchemaContext ctx{map, name};
  RunConfig c;
  Section root(ctx, &doc, "");
  root.seed_list("seeds", c.seeds);
  root.optional_string("output_dir", c.output_dir);
  root.optional_string("model_path", c.model_path);

  {
    auto s = root.section("scenario");
    auto & sc = c.scenario;
    s.number("dt_sim", sc.dt_sim, above_within(0.0, 0.1));
    s.number("duration", sc.duration, within(0.0, 3600.0));
    s.integer("neighbor_count", sc.neighbor_count, within(0, 100));
    s.integer("potential_changer_count", sc.potential_changer_count, within(0, 100));
    if (sc.potential_changer_count > sc.neighbor_count) {
      s.fail("potential_changer_count", "must not exceed neighbor_count");
    }
    s.number("ego_v0", sc.ego_v0, non_negative());
    s.number("neighbor_v0", sc.neighbor_v0, non_negative());
    s.number("accident_s", sc.accident_s);
    s.number("spawn_min", sc.spawn_min);
    s.number("spawn_max", sc.spawn_max);
    if (sc.spawn_max < sc.spawn_min) s.fail("spawn_max", "must not be below spawn_min");
    s.number("min_spawn_gap", sc.min_spawn_gap, non_negative());
    {
      auto l = s.section("lanes");
      l.integer("count", sc.lanes.lane_count, within(2, 10));
      l.number("width", sc.lanes.lane_width, positive());
      l.number("length", sc.lanes.length, positive());
      l.finish();
    }
    read_dims(s.section("car_dims"), sc.car_dims);
    read_dims(s.section("truck_dims"), sc.truck_dims);
    {
      auto i = s.section("idm");
      i.number("time_headway", sc.idm.time_headway, non_negative());
      i.number("max_accel", sc.idm.max_accel, positive());
      i.number("comfortable_decel", sc.idm.comfortable_decel, positive());
      i.number("min_accel", sc.idm.min_accel, non_positive());
      i.number("jam_gap", sc.idm.jam_gap, non_negative());
      i.number("exponent", sc.idm.exponent, positive());
      i.finish();
    }
    {
      auto l = s.section("lane_change");
      l.number("duration", sc.lane_change.duration, positive());
      l.number("trigger_distance", sc.lane_change.trigger_distance, non_negative());
      l.number("lead_gap", sc.lane_change.lead_gap, non_negative());
      l.number("lag_gap", sc.lane_change.lag_gap, non_negative());
      l.number("lag_anticipation", sc.lane_change.lag_anticipation, non_negative());
      l.finish();
    }
    {
      auto d = s.section("driver");
      d.choice("policy", sc.driver.policy, {{"baseline", DriverPolicy::baseline}, {"guided", DriverPolicy::guided}});
      d.number("p_trigger", sc.driver.p_trigger, within(0.0, 1.0));
      d.number("react_range", sc.driver.react_range, non_negative());
      d.number("guided_decel", sc.driver.guided_decel, non_positive());
      d.number("baseline_decel", sc.driver.baseline_decel, non_positive());
      d.number("reaction_time", sc.driver.reaction_time, non_negative());
      d.boolean("anticipate_warned", sc.driver.anticipate_warned);
      d.finish();
    }
    s.finish();
  }
  {
    auto s = root.section("camera");
    auto & in = c.sensing.intrinsics;
    s.number("focal_length", in.focal_length, positive());
    s.number("pixel_size_x", in.pixel_size_x, positive());
    s.number("pixel_size_y", in.pixel_size_y, positive());
    s.number("principal_u", in.principal_u);
    s.number("principal_v", in.principal_v);
    s.integer("width", in.width, within(1, 16384));
    s.integer("height", in.height, within(1, 16384));
    s.number("near_plane", in.near_plane, positive());
    s.number("mount_forward", c.sensing.mount.forward);
    s.number("mount_height", c.sensing.mount.height, positive());
    s.finish();
  }
  {
    auto s = root.section("sensing");
    s.number("edge_jitter_sigma", c.sensing.edge_jitter_sigma, non_negative());
    s.number("miss_prob", c.sensing.miss_prob, within(0.0, 1.0));
    s.number("false_positive_rate", c.sensing.false_positive_rate, non_negative());
    s.number("depth_noise_sigma", c.sensing.depth_noise_sigma, non_negative());
    s.number("far_value", c.sensing.far_value, positive());
    s.finish();
  }
  {
    auto s = root.section("channel");
    s.number("publish_period", c.channel.publish_period, positive());
    s.number("latency", c.channel.latency, non_negative());
    s.choice("reference", c.reference, reference_names());
    s.number("gnss_sigma", c.gnss_sigma, non_negative());
    s.finish();
  }
  {
    auto s = root.section("fusion");
    s.number("shrink", c.fusion.shrink, above_within(0.0, 1.0));
    s.integer("samples", c.fusion.samples, within(1, 1000000));
    s.choice("shrink_mode", c.fusion.shrink_mode, {{"per_dimension", ShrinkMode::per_dimension}, {"area", ShrinkMode::area}});
    s.finish();
  }
  {
    auto s = root.section("corpus");
    auto & k = c.corpus;
    s.integer("frames", k.frames, within(0, 1000000));
    s.number("overlap_fraction", k.overlap_fraction, within(0.0, 1.0));
    s.number("near_min", k.near_min, positive());
    s.number("near_max", k.near_max, positive());
    if (k.near_max < k.near_min) s.fail("near_max", "must not be below near_min");
    s.number("pair_gap_min", k.pair_gap_min, non_negative());
    s.number("pair_gap_max", k.pair_gap_max, non_negative());
    if (k.pair_gap_max < k.pair_gap_min) s.fail("pair_gap_max", "must not be below pair_gap_min");
    s.number("lateral_spread", k.lateral_spread, non_negative());
    s.integer("max_distractors", k.max_distractors, within(0, 100));
    s.number("generic_min", k.generic_min, positive());
    s.number("generic_max", k.generic_max, positive());
    if (k.generic_max < k.generic_min) s.fail("generic_max", "must not be below generic_min");
    s.integer("generic_max_vehicles", k.generic_max_vehicles, within(1, 100));
    s.number("min_visible", k.min_visible, within(0.0, 1.0));
    s.boolean("require_shared_anchor", k.require_shared_anchor);
    s.number_list("thresholds", c.thresholds, within(0.0, 1.0));
    for (std::size_t i = 1; i < c.thresholds.size(); ++i) {
      if (c.thresholds[i] <= c.thresholds[i - 1]) {
        s.fail("thresholds/" + std::to_string(i), "thresholds must be strictly increasing");
      }
    }
    s.finish();
  }
  {
    auto s = root.section("window");
    s.number("tau", c.window.tau, positive());
    s.number("tau_gap", c.window.tau_gap, non_negative());
    s.number("sample_rate", c.window.sample_rate, positive());
    s.finish();
  }
  {
    auto s = root.section("extraction");
    s.number("settle_offset", c.extraction.settle_offset, positive());
    s.number("settle_speed", c.extraction.settle_speed, positive());
    s.finish();
  }
  {
    auto s = root.section("dataset");
    s.boolean("include_non_changers", c.include_non_changers);
    s.finish();
  }
  {
    auto s = root.section("filters");
    s.integer("tau_a", c.filters.tau_a, within(0, 1000));
    s.integer("tau_c", c.filters.tau_c, within(0, 1000));
    s.number("thres", c.filters.thres, within(0.0, 1.0));
    s.choice(
      "online", c.online_filter,
      {{"raw", OnlineFilter::raw}, {"aggressive", OnlineFilter::aggressive}, {"conservative", OnlineFilter::conservative}});
    s.finish();
  }
  {
    auto s = root.section("training");
    s.seed_list("seeds", c.training_seeds);
    s.integer("hidden", c.training.hidden, within(1, 4096));
    s.number("learning_rate", c.training.learning_rate, positive());
    s.integer("epochs", c.training.epochs, within(0, 100000));
    s.integer("batch_size", c.training.batch_size, within(1, 1000000));
    s.unsigned_integer("seed", c.training.seed);
    s.finish();
  }
  {
    auto s = root.section("closed_loop");
    s.number("inference_period", c.inference_period, positive());
    s.number("guidance_period", c.guidance_period, positive());
    s.number("identify_range", c.identify_range, positive());
    s.finish();
  }
  {
    auto s = root.section("simulate");
    s.integer("depth_every", c.depth_every, within(0, 1000000));
    s.finish();
  }
  root.finish();
  return c;
}

/// Reads and validates a config document. Errors carry the file name and
/// the line of the offending key.
inline RunConfig parse_config(std::string_view text, const std::string & name = "config")
{
  SourceMap map(text);
  const auto doc = parse_located(text, map, name);
  return config_from_json(doc, map, name);
}

/// The effective configuration: every key, defaults resolved.
inline nlohmann::json to_json(const RunConfig & c)
{
  using nlohmann::json;
  const auto & sc = c.scenario;
  const auto dims = [](const VehicleDims & d) {
    return json{{"length", d.length}, {"width", d.width}, {"height", d.height}};
  };
  const auto opt = [](const std::optional<std::string> & s) { return s ? json(*s) : json(nullptr); };
  const auto & in = c.sensing.intrinsics;
  const auto & k = c.corpus;
  return json{
    {"seeds", c.seeds},
    {"output_dir", opt(c.output_dir)},
    {"model_path", opt(c.model_path)},
    {"scenario",
     {{"dt_sim", sc.dt_sim},
      {"duration", sc.duration},
      {"neighbor_count", sc.neighbor_count},
      {"potential_changer_count", sc.potential_changer_count},
      {"ego_v0", sc.ego_v0},
      {"neighbor_v0", sc.neighbor_v0},
      {"accident_s", sc.accident_s},
      {"spawn_min", sc.spawn_min},
      {"spawn_max", sc.spawn_max},
      {"min_spawn_gap", sc.min_spawn_gap},
      {"lanes", {{"count", sc.lanes.lane_count}, {"width", sc.lanes.lane_width}, {"length", sc.lanes.length}}},
      {"car_dims", dims(sc.car_dims)},
      {"truck_dims", dims(sc.truck_dims)},
      {"idm",
       {{"time_headway", sc.idm.time_headway},
        {"max_accel", sc.idm.max_accel},
        {"comfortable_decel", sc.idm.comfortable_decel},
        {"min_accel", sc.idm.min_accel},
        {"jam_gap", sc.idm.jam_gap},
        {"exponent", sc.idm.exponent}}},
      {"lane_change",
       {{"duration", sc.lane_change.duration},
        {"trigger_distance", sc.lane_change.trigger_distance},
        {"lead_gap", sc.lane_change.lead_gap},
        {"lag_gap", sc.lane_change.lag_gap},
        {"lag_anticipation", sc.lane_change.lag_anticipation}}},
      {"driver",
       {{"policy", std::string(to_string(sc.driver.policy))},
        {"p_trigger", sc.driver.p_trigger},
        {"react_range", sc.driver.react_range},
        {"guided_decel", sc.driver.guided_decel},
        {"baseline_decel", sc.driver.baseline_decel},
        {"reaction_time", sc.driver.reaction_time},
        {"anticipate_warned", sc.driver.anticipate_warned}}}}},
    {"camera",
     {{"focal_length", in.focal_length},
      {"pixel_size_x", in.pixel_size_x},
      {"pixel_size_y", in.pixel_size_y},
      {"principal_u", in.principal_u},
      {"principal_v", in.principal_v},
      {"width", in.width},
      {"height", in.height},
      {"near_plane", in.near_plane},
      {"mount_forward", c.sensing.mount.forward},
      {"mount_height", c.sensing.mount.height}}},
    {"sensing",
     {{"edge_jitter_sigma", c.sensing.edge_jitter_sigma},
      {"miss_prob", c.sensing.miss_prob},
      {"false_positive_rate", c.sensing.false_positive_rate},
      {"depth_noise_sigma", c.sensing.depth_noise_sigma},
      {"far_value", static_cast<double>(c.sensing.far_value)}}},
    {"channel",
     {{"publish_period", c.channel.publish_period},
      {"latency", c.channel.latency},
      {"reference", std::string(to_string(c.reference))},
      {"gnss_sigma", c.gnss_sigma}}},
    {"fusion",
     {{"shrink", c.fusion.shrink},
      {"samples", c.fusion.samples},
      {"shrink_mode", c.fusion.shrink_mode == ShrinkMode::area ? "area" : "per_dimension"}}},
    {"corpus",
     {{"frames", k.frames},
      {"overlap_fraction", k.overlap_fraction},
      {"near_min", k.near_min},
      {"near_max", k.near_max},
      {"pair_gap_min", k.pair_gap_min},
      {"pair_gap_max", k.pair_gap_max},
      {"lateral_spread", k.lateral_spread},
      {"max_distractors", k.max_distractors},
      {"generic_min", k.generic_min},
      {"generic_max", k.generic_max},
      {"generic_max_vehicles", k.generic_max_vehicles},
      {"min_visible", k.min_visible},
      {"require_shared_anchor", k.require_shared_anchor},
      {"thresholds", c.thresholds}}},
    {"window", {{"tau", c.window.tau}, {"tau_gap", c.window.tau_gap}, {"sample_rate", c.window.sample_rate}}},
    {"extraction", {{"settle_offset", c.extraction.settle_offset}, {"settle_speed", c.extraction.settle_speed}}},
    {"dataset", {{"include_non_changers", c.include_non_changers}}},
    {"filters",
     {{"tau_a", c.filters.tau_a},
      {"tau_c", c.filters.tau_c},
      {"thres", c.filters.thres},
      {"online", std::string(to_string(c.online_filter))}}},
    {"training",
     {{"seeds", c.training_seeds},
      {"hidden", c.training.hidden},
      {"learning_rate", c.training.learning_rate},
      {"epochs", c.training.epochs},
      {"batch_size", c.training.batch_size},
      {"seed", c.training.seed}}},
    {"closed_loop",
     {{"inference_period", c.inference_period},
      {"guidance_period", c.guidance_period},
      {"identify_range", c.identify_range}}},
    {"simulate", {{"depth_every", c.depth_every}}}};
}

/// Parses a seed override such as "1,2,10-14".
inline std::vector<std::uint64_t> parse_seed_list(std::string_view text)
{
  std::vector<std::uint64_t> out;
  auto number = [&](std::string_view part) {
    std::uint64_t v = 0;
    const auto * end = part.data() + part.size();
    const auto [ptr, ec] = std::from_chars(part.data(), end, v);
    if (part.empty() || ec != std::errc{} || ptr != end) {
      throw Error(ErrorCode::config, "--seeds: '" + std::string(part) + "' is not a seed");
    }
    return v;
  };
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    const auto item = text.substr(pos, comma - pos);
    if (const auto dash = item.find('-'); dash != std::string_view::npos) {
      const auto lo = number(item.substr(0, dash));
      const auto hi = number(item.substr(dash + 1));
      if (hi < lo || hi - lo >= 1000000) {
        throw Error(ErrorCode::config, "--seeds: bad range '" + std::string(item) + "'");
      }
      for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    } else {
      out.push_back(number(item));
    }
    pos = comma + 1;
  }
  return out;
}

}  // namespace vcfusion
