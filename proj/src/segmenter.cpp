#include "simulpipe/segmenter.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "simulpipe/error.hpp"
#include "simulpipe/eval.hpp"

namespace simulpipe {

namespace {

constexpr std::string_view kPad = "<s>";

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::MalformedRecord, "bad number '" + std::string(s) + "'");
  }
  return v;
}

long parse_long(std::string_view s) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::MalformedRecord, "bad integer '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

void SegmenterConfig::validate() const {
  if (max_delay < 0) throw Error(ErrorCode::InvalidConfig, "max_delay must be >= 0");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "threshold must lie in [0,1]");
  }
  if (feature_window < 1) throw Error(ErrorCode::InvalidConfig, "feature_window must be >= 1");
}

std::vector<std::string> extract_features(std::span<const std::string> tokens,
                                          std::int64_t position, int shift,
                                          int feature_window) {
  auto at = [&](std::int64_t i) -> std::string_view {
    return i < 0 ? kPad : std::string_view(tokens[static_cast<std::size_t>(i)]);
  };
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(2 * feature_window + shift + 2));
  out.emplace_back("bias");
  out.push_back("shift=" + std::to_string(shift));
  const auto scope = "s" + std::to_string(shift) + "|";
  for (int k = 0; k < feature_window; ++k) {
    const auto i = position - k;
    if (i < -1) break;
    const auto offset = std::to_string(-k);
    out.push_back(scope + "w" + offset + "=" + std::string(at(i)));
    out.push_back(scope + "b" + offset + "=" + std::string(at(i - 1)) + "_" + std::string(at(i)));
  }
  for (int k = 1; k <= shift; ++k) {
    out.push_back("r" + std::to_string(k) + "=" + tokens[static_cast<std::size_t>(position + k)]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SegmenterModel::SegmenterModel(SegmenterConfig config,
                               std::unordered_map<std::string, double> weights)
    : config_(config), weights_(std::move(weights)) {
  config_.validate();
}

double SegmenterModel::score(const std::vector<std::string>& features) const {
  double z = 0.0;
  for (const auto& f : features) {
    if (auto it = weights_.find(f); it != weights_.end()) z += it->second;
  }
  return sigmoid(z);
}

void SegmenterModel::save(std::ostream& out) const {
  std::vector<std::pair<std::string, double>> sorted(weights_.begin(), weights_.end());
  std::sort(sorted.begin(), sorted.end());
  out << kVersionTag << '\n';
  out << "level " << to_string(config_.level) << '\n';
  out << "max_delay " << config_.max_delay << '\n';
  out << "threshold " << format_double(config_.threshold) << '\n';
  out << "feature_window " << config_.feature_window << '\n';
  out << "weights " << sorted.size() << '\n';
  for (const auto& [name, w] : sorted) out << name << '\t' << format_double(w) << '\n';
}

SegmenterModel SegmenterModel::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kVersionTag) {
    throw Error(ErrorCode::VersionMismatch,
                "expected '" + std::string(kVersionTag) + "', found '" + line + "'");
  }
  auto field = [&](std::string_view key) {
    if (!std::getline(in, line) || line.rfind(std::string(key) + " ", 0) != 0) {
      throw Error(ErrorCode::MalformedRecord, "model file: expected '" + std::string(key) + "'");
    }
    return line.substr(key.size() + 1);
  };
  SegmenterConfig config;
  config.level = parse_segment_kind(field("level"));
  config.max_delay = static_cast<int>(parse_long(field("max_delay")));
  config.threshold = parse_double(field("threshold"));
  config.feature_window = static_cast<int>(parse_long(field("feature_window")));
  const auto count = parse_long(field("weights"));
  std::unordered_map<std::string, double> weights;
  weights.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedRecord, "model file truncated");
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw Error(ErrorCode::MalformedRecord, "bad weight line");
    weights.emplace(line.substr(0, tab), parse_double(std::string_view(line).substr(tab + 1)));
  }
  return SegmenterModel(config, std::move(weights));
}

void SegmenterModel::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  save(out);
}

SegmenterModel SegmenterModel::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read model " + path);
  return load(in);
}

StreamingSegmenter::StreamingSegmenter(std::shared_ptr<const SegmenterModel> model)
    : model_(std::move(model)) {}

std::vector<BoundaryDecision> StreamingSegmenter::feed(const TokenEvent& token) {
  if (token.index != next_index_) {
    throw Error(ErrorCode::OutOfOrderToken, "expected index " + std::to_string(next_index_) +
                                                ", got " + std::to_string(token.index));
  }
  return feed(std::string_view(token.surface));
}

std::vector<BoundaryDecision> StreamingSegmenter::feed(std::string_view surface) {
  if (flushed_) throw Error(ErrorCode::OutOfOrderToken, "segmenter already flushed");
  buffer_.emplace_back(surface);
  pending_.push_back(next_index_);
  ++next_index_;
  return decide(false);
}

std::vector<BoundaryDecision> StreamingSegmenter::feed_batch(std::span<const TokenEvent> tokens) {
  std::vector<BoundaryDecision> out;
  for (const auto& tok : tokens) {
    auto part = feed(tok);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<BoundaryDecision> StreamingSegmenter::flush() {
  if (flushed_) return {};
  flushed_ = true;
  return decide(true);
}

std::vector<BoundaryDecision> StreamingSegmenter::decide(bool at_flush) {
  std::vector<BoundaryDecision> out;
  if (pending_.empty()) return out;
  const auto& cfg = model_->config();
  const auto head = next_index_ - 1;

  scratch_.assign(buffer_.begin(), buffer_.end());
  std::vector<std::int64_t> still_pending;
  for (const auto position : pending_) {
    const int shift = static_cast<int>(head - position);
    const auto local = position - buffer_base_;
    const double score =
        model_->score(extract_features(scratch_, local, shift, cfg.feature_window));
    if (score > cfg.threshold) {
      out.push_back({position, true, head, score});
    } else if (at_flush) {
      out.push_back({position, position == head, head, score});
    } else if (shift >= cfg.max_delay) {
      out.push_back({position, false, head, score});
    } else {
      still_pending.push_back(position);
    }
  }
  pending_ = std::move(still_pending);

  // Keep enough left context for the oldest undecided position.
  const auto oldest = pending_.empty() ? next_index_ : pending_.front();
  const auto keep_from = oldest - cfg.feature_window;
  while (buffer_base_ < keep_from && !buffer_.empty()) {
    buffer_.pop_front();
    ++buffer_base_;
  }
  return out;
}

std::vector<BoundaryDecision> segment_stream(std::shared_ptr<const SegmenterModel> model,
                                             std::span<const std::string> tokens) {
  StreamingSegmenter seg(std::move(model));
  std::vector<BoundaryDecision> out;
  for (const auto& t : tokens) {
    auto part = seg.feed(std::string_view(t));
    out.insert(out.end(), part.begin(), part.end());
  }
  auto tail = seg.flush();
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

std::vector<Segment> decisions_to_segments(const std::vector<BoundaryDecision>& decisions,
                                           std::span<const std::string> tokens,
                                           SegmentKind kind) {
  const auto n = tokens.size();
  std::vector<int> verdict(n, -1);
  for (const auto& d : decisions) {
    if (d.position < 0 || static_cast<std::size_t>(d.position) >= n) {
      throw Error(ErrorCode::IncompleteDecisions,
                  "decision for position " + std::to_string(d.position) + " outside stream");
    }
    auto& v = verdict[static_cast<std::size_t>(d.position)];
    if (v != -1) {
      throw Error(ErrorCode::IncompleteDecisions,
                  "position " + std::to_string(d.position) + " decided twice");
    }
    v = d.boundary ? 1 : 0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (verdict[i] == -1) {
      throw Error(ErrorCode::IncompleteDecisions, "position " + std::to_string(i) + " undecided");
    }
  }
  std::vector<Segment> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (verdict[i] == 1 || i + 1 == n) {
      Segment seg;
      seg.kind = kind;
      seg.start = static_cast<std::int64_t>(start);
      seg.end = static_cast<std::int64_t>(i);
      seg.tokens.assign(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                        tokens.begin() + static_cast<std::ptrdiff_t>(i + 1));
      out.push_back(std::move(seg));
      start = i + 1;
    }
  }
  return out;
}

SegmenterModel train_segmenter(const std::vector<BoundaryStream>& corpus,
                               const SegmenterConfig& config, const TrainOptions& options) {
  config.validate();
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "no training streams");

  std::unordered_map<std::string, std::uint32_t> ids;
  std::vector<std::string> names;
  struct Instance {
    std::vector<std::uint32_t> features;
    double label;
  };
  std::vector<Instance> instances;

  for (const auto& stream : corpus) {
    const auto n = static_cast<std::int64_t>(stream.tokens.size());
    std::vector<bool> gold(stream.tokens.size(), false);
    for (const auto b : stream.boundaries) {
      if (b < 0 || b >= n) throw Error(ErrorCode::MalformedRecord, "boundary outside stream");
      gold[static_cast<std::size_t>(b)] = true;
    }
    for (std::int64_t p = 0; p + 1 < n; ++p) {
      for (int s = 0; s <= config.max_delay && p + s < n; ++s) {
        Instance inst;
        inst.label = gold[static_cast<std::size_t>(p)] ? 1.0 : 0.0;
        for (auto& f : extract_features(stream.tokens, p, s, config.feature_window)) {
          auto [it, inserted] = ids.try_emplace(f, static_cast<std::uint32_t>(names.size()));
          if (inserted) names.push_back(std::move(f));
          inst.features.push_back(it->second);
        }
        instances.push_back(std::move(inst));
      }
    }
  }

  // L2 decay is applied lazily: true weights are scale * v.
  std::vector<double> v(names.size(), 0.0);
  double scale = 1.0;
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(options.seed);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = options.learning_rate / (1.0 + epoch);
    for (const auto idx : order) {
      const auto& inst = instances[idx];
      double z = 0.0;
      for (const auto f : inst.features) z += v[f];
      const double g = sigmoid(scale * z) - inst.label;
      scale *= 1.0 - lr * options.l2;
      for (const auto f : inst.features) v[f] -= lr * g / scale;
      if (scale < 1e-9) {
        for (auto& x : v) x *= scale;
        scale = 1.0;
      }
    }
  }
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = scale * v[i];

  std::unordered_map<std::string, double> weights;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (w[i] != 0.0) weights.emplace(names[i], w[i]);
  }
  return SegmenterModel(config, std::move(weights));
}

TuneResult tune_max_delay(const std::vector<BoundaryStream>& train,
                          const std::vector<BoundaryStream>& dev,
                          const std::vector<int>& candidates, const SegmenterConfig& base,
                          const TrainOptions& options) {
  if (candidates.empty()) throw Error(ErrorCode::EmptyCandidates, "no N candidates");
  if (dev.empty()) throw Error(ErrorCode::EmptyCorpus, "no development streams");
  TuneResult result;
  bool have_best = false;
  double best_f1 = 0.0;
  for (const int n : candidates) {
    auto config = base;
    config.max_delay = n;
    auto model = std::make_shared<const SegmenterModel>(train_segmenter(train, config, options));
    BoundaryCounts counts;
    for (const auto& stream : dev) {
      counts += boundary_counts(stream.boundaries, segment_stream(model, stream.tokens));
    }
    TuneRow row;
    row.max_delay = n;
    row.precision = counts.precision();
    row.recall = counts.recall();
    row.f1 = counts.f1();
    row.mean_delay = counts.mean_delay();
    result.rows.push_back(row);
    if (!have_best || row.f1 > best_f1 || (row.f1 == best_f1 && n < result.selected)) {
      have_best = true;
      best_f1 = row.f1;
      result.selected = n;
    }
  }
  return result;
}

}  // namespace simulpipe
