#include "simulpipe/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "json.hpp"
#include "simulpipe/corpus.hpp"
#include "simulpipe/engines.hpp"
#include "simulpipe/error.hpp"

namespace simulpipe {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::int64_t>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, int n) {
  NgramCounts out;
  const auto len = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + len <= tokens.size(); ++i) {
    ++out[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(i + len))];
  }
  return out;
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

double BleuStats::precision(int n) const {
  const auto i = static_cast<std::size_t>(n - 1);
  if (totals.at(i) == 0) return 0.0;
  return static_cast<double>(matches[i]) / static_cast<double>(totals[i]);
}

double BleuStats::score(const BleuConfig& config) const {
  double log_sum = 0.0;
  for (int n = 1; n <= config.max_n; ++n) {
    const auto i = static_cast<std::size_t>(n - 1);
    double m = static_cast<double>(matches[i]);
    double t = static_cast<double>(totals[i]);
    if (config.smoothing == BleuSmoothing::AddOneForNGe2 && n >= 2) {
      m += 1.0;
      t += 1.0;
    }
    if (m == 0.0 || t == 0.0) return 0.0;
    log_sum += std::log(m / t);
  }
  return brevity_penalty(candidate_length, reference_length) *
         std::exp(log_sum / config.max_n);
}

double brevity_penalty(std::int64_t candidate_length, std::int64_t reference_length) {
  if (candidate_length <= 0) return 0.0;
  if (candidate_length >= reference_length) return 1.0;
  return std::exp(1.0 - static_cast<double>(reference_length) /
                            static_cast<double>(candidate_length));
}

BleuStats bleu_stats(const std::vector<std::string>& candidates,
                     const std::vector<std::string>& references, int max_n,
                     const LanguageCode& lang) {
  if (max_n < 1) throw Error(ErrorCode::InvalidConfig, "max_n must be >= 1");
  if (candidates.size() != references.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(candidates.size()) +
                                               " candidates vs " +
                                               std::to_string(references.size()) + " references");
  }
  if (candidates.empty()) throw Error(ErrorCode::EmptyInput, "no sentences to score");
  BleuStats stats;
  stats.matches.assign(static_cast<std::size_t>(max_n), 0);
  stats.totals.assign(static_cast<std::size_t>(max_n), 0);
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    const auto cand = tokenize(candidates[s], lang);
    const auto ref = tokenize(references[s], lang);
    stats.candidate_length += static_cast<std::int64_t>(cand.size());
    stats.reference_length += static_cast<std::int64_t>(ref.size());
    for (int n = 1; n <= max_n; ++n) {
      const auto ref_counts = count_ngrams(ref, n);
      std::int64_t total = 0;
      std::int64_t clipped = 0;
      for (const auto& [gram, count] : count_ngrams(cand, n)) {
        total += count;
        if (auto it = ref_counts.find(gram); it != ref_counts.end()) {
          clipped += std::min(count, it->second);
        }
      }
      stats.matches[static_cast<std::size_t>(n - 1)] += clipped;
      stats.totals[static_cast<std::size_t>(n - 1)] += total;
    }
  }
  return stats;
}

double bleu(const std::vector<std::string>& candidates,
            const std::vector<std::string>& references, const BleuConfig& config,
            const LanguageCode& lang) {
  return bleu_stats(candidates, references, config.max_n, lang).score(config);
}

LengthStats LengthStats::from_means(double utterance, double sentence, double chunk) {
  return {utterance, sentence, chunk, length_reduction(sentence, chunk)};
}

double length_reduction(double mean_sentence_len, double mean_chunk_len) {
  if (mean_sentence_len <= 0.0 || mean_chunk_len <= 0.0) return 0.0;
  return (mean_sentence_len - mean_chunk_len) / mean_sentence_len;
}

double mean_segment_length(const std::vector<std::vector<Segment>>& segments) {
  std::int64_t tokens = 0;
  std::int64_t count = 0;
  for (const auto& list : segments) {
    for (const auto& s : list) {
      tokens += s.length();
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::EmptyInput, "no segments");
  return static_cast<double>(tokens) / static_cast<double>(count);
}

LengthStats length_stats(const std::vector<std::vector<std::string>>& utterances,
                         const std::vector<std::vector<Segment>>& sentence_segments,
                         const std::vector<std::vector<Segment>>& chunk_segments) {
  if (utterances.empty()) throw Error(ErrorCode::EmptyInput, "no utterances");
  std::int64_t tokens = 0;
  for (const auto& u : utterances) tokens += static_cast<std::int64_t>(u.size());
  const double utterance = static_cast<double>(tokens) / static_cast<double>(utterances.size());
  return LengthStats::from_means(utterance, mean_segment_length(sentence_segments),
                                 mean_segment_length(chunk_segments));
}

std::vector<Segment> fixed_length_segment(std::span<const std::string> tokens, int length) {
  if (length < 1) throw Error(ErrorCode::InvalidLength, "segment length must be >= 1");
  std::vector<Segment> out;
  const auto step = static_cast<std::size_t>(length);
  for (std::size_t start = 0; start < tokens.size(); start += step) {
    const auto end = std::min(tokens.size(), start + step);
    Segment seg;
    seg.kind = SegmentKind::Chunk;
    seg.start = static_cast<std::int64_t>(start);
    seg.end = static_cast<std::int64_t>(end - 1);
    seg.tokens.assign(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                      tokens.begin() + static_cast<std::ptrdiff_t>(end));
    out.push_back(std::move(seg));
  }
  return out;
}

BoundaryCounts& BoundaryCounts::operator+=(const BoundaryCounts& other) {
  true_positives += other.true_positives;
  false_positives += other.false_positives;
  false_negatives += other.false_negatives;
  delay_sum += other.delay_sum;
  return *this;
}

double BoundaryCounts::precision() const {
  const auto predicted = true_positives + false_positives;
  return predicted == 0 ? 1.0
                        : static_cast<double>(true_positives) / static_cast<double>(predicted);
}

double BoundaryCounts::recall() const {
  const auto gold = true_positives + false_negatives;
  return gold == 0 ? 1.0 : static_cast<double>(true_positives) / static_cast<double>(gold);
}

double BoundaryCounts::f1() const {
  const double p = precision();
  const double r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

double BoundaryCounts::mean_delay() const {
  return true_positives == 0
             ? 0.0
             : static_cast<double>(delay_sum) / static_cast<double>(true_positives);
}

BoundaryCounts boundary_counts(const std::vector<std::int64_t>& gold,
                               const std::vector<BoundaryDecision>& predicted) {
  const auto n = predicted.size();
  std::vector<const BoundaryDecision*> by_position(n, nullptr);
  for (const auto& d : predicted) {
    if (d.position < 0 || static_cast<std::size_t>(d.position) >= n ||
        by_position[static_cast<std::size_t>(d.position)] != nullptr) {
      throw Error(ErrorCode::IncompleteDecisions,
                  "decisions must cover positions 0.." + std::to_string(n) + " exactly once");
    }
    by_position[static_cast<std::size_t>(d.position)] = &d;
  }
  std::vector<bool> is_gold(n, false);
  for (const auto g : gold) {
    if (g < 0 || static_cast<std::size_t>(g) >= n) {
      throw Error(ErrorCode::IncompleteDecisions,
                  "gold boundary " + std::to_string(g) + " has no decision");
    }
    is_gold[static_cast<std::size_t>(g)] = true;
  }
  BoundaryCounts c;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& d = *by_position[i];
    if (d.boundary && is_gold[i]) {
      ++c.true_positives;
      c.delay_sum += d.decided_at - d.position;
    } else if (d.boundary) {
      ++c.false_positives;
    } else if (is_gold[i]) {
      ++c.false_negatives;
    }
  }
  return c;
}

BoundaryScore boundary_f1(const std::vector<std::int64_t>& gold,
                          const std::vector<BoundaryDecision>& predicted) {
  const auto c = boundary_counts(gold, predicted);
  return {c.precision(), c.recall(), c.f1(), c.mean_delay()};
}

std::string_view to_string(SegmentationMode mode) {
  switch (mode) {
    case SegmentationMode::ChunkModel: return "chunk";
    case SegmentationMode::SentenceModel: return "sentence";
    case SegmentationMode::FixedLength: return "fixed";
  }
  return "";
}

std::vector<TestPair> to_test_pairs(const std::vector<ChunkAlignedPair>& pairs) {
  std::vector<TestPair> out;
  for (const auto& p : pairs) {
    std::vector<std::string> tokens;
    for (const auto& chunk : p.src_chunks) {
      for (auto& t : tokenize(chunk, p.src_lang)) tokens.push_back(std::move(t));
    }
    out.push_back({p.src_lang, p.tgt_lang, std::move(tokens), join_tokens(p.tgt_chunks, p.tgt_lang)});
  }
  return out;
}

bool CompareReport::any_failed() const {
  return std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.failed; });
}

void CompareReport::write_tsv(std::ostream& out) const {
  out << "config\tdirection\tmode\tbleu\tsegments\tstatus\n";
  for (const auto& r : rows) {
    out << r.config << '\t' << r.direction << '\t' << r.mode << '\t'
        << (r.failed ? std::string("-") : format_fixed(r.bleu, 4)) << '\t' << r.segments << '\t'
        << (r.failed ? "failed: " + r.error : std::string("ok")) << '\n';
  }
  out << "\nconfig_a\tconfig_b\tdirection\tdelta_points\n";
  for (const auto& d : deltas) {
    out << d.config_a << '\t' << d.config_b << '\t' << d.direction << '\t'
        << (d.delta_points >= 0 ? "+" : "") << format_fixed(d.delta_points, 2) << '\n';
  }
}

void CompareReport::write_jsonl(std::ostream& out) const {
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["record"] = "row";
    j["config"] = r.config;
    j["direction"] = r.direction;
    j["mode"] = r.mode;
    j["bleu"] = r.failed ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.bleu);
    j["segments"] = r.segments;
    j["failed"] = r.failed;
    j["error"] = r.error;
    out << j.dump() << '\n';
  }
  for (const auto& d : deltas) {
    nlohmann::ordered_json j;
    j["record"] = "delta";
    j["config_a"] = d.config_a;
    j["config_b"] = d.config_b;
    j["direction"] = d.direction;
    j["delta_points"] = d.delta_points;
    out << j.dump() << '\n';
  }
}

namespace {

std::vector<Segment> segment_for(const CompareConfig& config,
                                 const std::vector<std::string>& tokens) {
  if (config.mode == SegmentationMode::FixedLength) {
    return fixed_length_segment(tokens, config.fixed_length);
  }
  if (!config.model) {
    throw Error(ErrorCode::InvalidConfig, "configuration '" + config.name + "' has no model");
  }
  const auto kind =
      config.mode == SegmentationMode::ChunkModel ? SegmentKind::Chunk : SegmentKind::Sentence;
  return decisions_to_segments(segment_stream(config.model, tokens), tokens, kind);
}

}  // namespace

CompareReport compare_engines(const std::vector<TestPair>& pairs,
                              const std::vector<CompareConfig>& configs,
                              const CompareOptions& options) {
  if (configs.size() < 2) {
    throw Error(ErrorCode::InvalidConfig, "comparison needs at least two configurations");
  }
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "no test pairs");
  const auto concat = static_cast<std::size_t>(std::max(1, options.concat));

  // Evaluation streams per direction: `concat` consecutive utterances joined.
  struct Stream {
    std::vector<std::string> tokens;
    std::string reference;
  };
  std::map<std::string, std::vector<std::vector<const TestPair*>>> groups;
  for (const auto& p : pairs) {
    auto& list = groups[p.src.code() + "-" + p.tgt.code()];
    if (list.empty() || list.back().size() == concat) list.emplace_back();
    list.back().push_back(&p);
  }

  std::vector<const CompareConfig*> sorted;
  for (const auto& c : configs) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->name < b->name; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->name == sorted[i - 1]->name) {
      throw Error(ErrorCode::InvalidConfig, "duplicate configuration '" + sorted[i]->name + "'");
    }
  }

  CompareReport report;
  for (const auto* config : sorted) {
    if (!config->broker) {
      throw Error(ErrorCode::InvalidConfig, "configuration '" + config->name + "' has no engines");
    }
    for (const auto& [direction, list] : groups) {
      CompareRow row;
      row.config = config->name;
      row.direction = direction;
      row.mode = std::string(to_string(config->mode));
      const auto& src = list.front().front()->src;
      const auto& tgt = list.front().front()->tgt;
      std::vector<std::string> hypotheses;
      std::vector<std::string> references;
      try {
        for (const auto& group : list) {
          Stream stream;
          std::vector<std::string> refs;
          for (const auto* p : group) {
            stream.tokens.insert(stream.tokens.end(), p->source_tokens.begin(),
                                 p->source_tokens.end());
            refs.push_back(p->reference);
          }
          stream.reference = join_tokens(refs, tgt);
          std::vector<std::string> outputs;
          for (const auto& seg : segment_for(*config, stream.tokens)) {
            const auto original = join_tokens(seg.tokens, src);
            TranslationRequest req{src, tgt, serialize_tags(config->tags) + original, {},
                                   config->mode == SegmentationMode::SentenceModel
                                       ? SegmentKind::Sentence
                                       : SegmentKind::Chunk};
            outputs.push_back(select_best(original, req, *config->broker).winner.forward);
            ++row.segments;
          }
          hypotheses.push_back(outputs.empty() ? std::string() : join_tokens(outputs, tgt));
          references.push_back(std::move(stream.reference));
        }
        row.bleu = bleu(hypotheses, references, options.bleu, tgt);
      } catch (const Error& e) {
        row.failed = true;
        row.error = e.what();
      }
      report.rows.push_back(std::move(row));
    }
  }

  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    for (std::size_t j = 0; j < report.rows.size(); ++j) {
      const auto& a = report.rows[i];
      const auto& b = report.rows[j];
      if (a.direction != b.direction || a.config >= b.config || a.failed || b.failed) continue;
      report.deltas.push_back({a.config, b.config, a.direction, 100.0 * (a.bleu - b.bleu)});
    }
  }
  return report;
}

}  // namespace simulpipe
