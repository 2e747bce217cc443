#include "simulpipe/cli.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "simulpipe/config.hpp"
#include "simulpipe/corpus.hpp"
#include "simulpipe/error.hpp"
#include "simulpipe/eval.hpp"
#include "simulpipe/pipeline.hpp"
#include "simulpipe/segmenter.hpp"

namespace simulpipe {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Io {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

class Input {
 public:
  Input(const std::string& path, std::istream& standard) {
    if (path == "-") {
      stream_ = &standard;
      return;
    }
    file_.open(path, std::ios::binary);
    if (!file_) throw Error(ErrorCode::IoError, "cannot read " + path);
    stream_ = &file_;
  }
  std::istream& get() { return *stream_; }

 private:
  std::ifstream file_;
  std::istream* stream_ = nullptr;
};

class Output {
 public:
  Output(std::string path, std::ostream& standard) : path_(std::move(path)) {
    if (path_ == "-") {
      stream_ = &standard;
      return;
    }
    file_.open(path_, std::ios::binary | std::ios::trunc);
    if (!file_) throw Error(ErrorCode::IoError, "cannot write " + path_);
    stream_ = &file_;
  }
  std::ostream& get() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw Error(ErrorCode::IoError, "write failed for " + path_);
  }

 private:
  std::string path_;
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

// Reads one accepted TCP connection.
class SocketBuf : public std::streambuf {
 public:
  explicit SocketBuf(int fd) : fd_(fd) {}
  ~SocketBuf() override { ::close(fd_); }

 protected:
  int_type underflow() override {
    const auto n = ::read(fd_, buffer_, sizeof buffer_);
    if (n <= 0) return traits_type::eof();
    setg(buffer_, buffer_, buffer_ + n);
    return traits_type::to_int_type(buffer_[0]);
  }

 private:
  int fd_;
  char buffer_[4096];
};

std::unique_ptr<SocketBuf> accept_one(int port, std::ostream& err) {
  const int server = ::socket(AF_INET, SOCK_STREAM, 0);
  if (server < 0) throw Error(ErrorCode::IoError, "cannot open socket");
  const int yes = 1;
  ::setsockopt(server, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(server, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(server, 1) != 0) {
    ::close(server);
    throw Error(ErrorCode::IoError, "cannot listen on port " + std::to_string(port));
  }
  err << "listening on 127.0.0.1:" << port << "\n";
  const int client = ::accept(server, nullptr, nullptr);
  ::close(server);
  if (client < 0) throw Error(ErrorCode::IoError, "accept failed");
  return std::make_unique<SocketBuf>(client);
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// ---- options shared by every command -------------------------------------------

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> flags;

  Config load() const {
    ConfigSources sources;
    if (!config.empty()) sources.file = config;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
      sources.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    sources.overrides.insert(sources.overrides.end(), flags.begin(), flags.end());
    return load_config(sources);
  }
};

// A flag that overrides one config key.
void key_flag(CLI::App* app, Common& common, const std::string& name, std::string key,
              const std::string& help) {
  app->add_option_function<std::string>(
      name, [&common, key](const std::string& v) { common.flags.emplace_back(key, v); }, help);
}

void add_common(CLI::App* app, Common& common) {
  app->add_option("-c,--config", common.config, "Config file");
  app->add_option("--set", common.sets, "Override a config key (key=value)");
  key_flag(app, common, "--seed", "seed", "Random seed");
}

// ---- artifacts -------------------------------------------------------------------

void write_segments(std::ostream& out, const std::vector<Segment>& chunks,
                    const std::vector<Segment>& sentences) {
  for (const auto* list : {&chunks, &sentences}) {
    for (const auto& seg : *list) {
      nlohmann::ordered_json j;
      j["kind"] = to_string(seg.kind);
      j["start"] = seg.start;
      j["end"] = seg.end;
      j["tokens"] = seg.tokens;
      out << j.dump() << '\n';
    }
  }
}

struct SegmentFile {
  std::vector<Segment> chunks;
  std::vector<Segment> sentences;
};

SegmentFile read_segments(std::istream& in) {
  SegmentFile file;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Segment seg;
      seg.kind = parse_segment_kind(j.at("kind").get<std::string>());
      seg.start = j.at("start").get<std::int64_t>();
      seg.end = j.at("end").get<std::int64_t>();
      seg.tokens = j.at("tokens").get<std::vector<std::string>>();
      if (seg.end < seg.start || static_cast<std::int64_t>(seg.tokens.size()) != seg.length()) {
        throw Error(ErrorCode::MalformedRecord, "segment span and tokens disagree");
      }
      (seg.kind == SegmentKind::Chunk ? file.chunks : file.sentences).push_back(std::move(seg));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, std::string("bad segment record: ") + e.what(), number);
    } catch (const Error& e) {
      if (e.line()) throw;
      throw Error(e.code(), e.what(), number);
    }
  }
  return file;
}

std::vector<LabeledStream> load_streams(const std::string& path, int concat) {
  if (ends_with(path, ".jsonl")) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
    return read_labeled_streams(in);
  }
  return concatenate_streams(derive_labels(parse_chunk_corpus_file(path)),
                             static_cast<std::size_t>(concat));
}

struct TrainDev {
  std::vector<LabeledStream> train;
  std::vector<LabeledStream> dev;
};

TrainDev load_train_dev(const Config& cfg, std::ostream& err) {
  if (!cfg.corpus_train) throw UsageError("no training corpus (--corpus or corpus.train)");
  auto streams = load_streams(*cfg.corpus_train, cfg.concat);
  TrainDev out;
  if (cfg.corpus_dev) {
    out.train = std::move(streams);
    out.dev = load_streams(*cfg.corpus_dev, cfg.concat);
  } else {
    auto parts = split(streams, {cfg.split.train, cfg.split.dev, 1.0 - cfg.split.train - cfg.split.dev},
                       cfg.seed);
    out.train = std::move(parts.train);
    out.dev = std::move(parts.dev);
  }
  if (out.dev.empty()) {
    err << "warning: no dev streams; scoring on the training streams\n";
    out.dev = out.train;
  }
  return out;
}

SegmentKind parse_level(const std::string& level) {
  if (level == "chunk") return SegmentKind::Chunk;
  if (level == "sentence") return SegmentKind::Sentence;
  throw UsageError("--level must be chunk or sentence");
}

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

// ---- commands ---------------------------------------------------------------------

struct RunArgs {
  std::string input = "-";
  std::string output = "-";
  std::string segments;
  int listen = 0;
};

int cmd_run(const RunArgs& args, const Common& common, Io io) {
  const auto cfg = common.load();
  auto sc = session_config(cfg);
  sc.sentence_model = load_model(cfg.sentence_model, "sentence");
  if (cfg.mode == PipelineMode::ChunkAndSentence) sc.chunk_model = load_model(cfg.chunk_model, "chunk");
  sc.broker = build_broker(cfg);
  Session session(std::move(sc));

  Output output(args.output, io.out);
  std::unique_ptr<SocketBuf> socket;
  std::unique_ptr<std::istream> socket_stream;
  std::optional<Input> file_input;
  std::istream* in = nullptr;
  if (args.listen > 0) {
    socket = accept_one(args.listen, io.err);
    socket_stream = std::make_unique<std::istream>(socket.get());
    in = socket_stream.get();
  } else {
    file_input.emplace(args.input, io.in);
    in = &file_input->get();
  }

  std::vector<CaptionEvent> log;
  auto emit = [&](const std::vector<CaptionEvent>& events) {
    for (const auto& e : events) output.get() << encode_event(e) << '\n';
    if (!events.empty()) output.get().flush();
    log.insert(log.end(), events.begin(), events.end());
  };

  std::string line;
  std::size_t number = 0;
  std::int64_t index = 0;
  while (std::getline(*in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    TokenEvent tok;
    try {
      if (cfg.input_format == TokenInputFormat::Jsonl) {
        tok = decode_token(line, cfg.session_id);
      } else {
        tok.session_id = cfg.session_id;
        tok.index = index;
        tok.surface = normalize_token(line);
        tok.t_ms = index * cfg.token_gap_ms;
      }
      ++index;
      emit(session.feed_token(tok));
    } catch (const Error& e) {
      if (e.line()) throw;
      throw Error(e.code(), e.what(), number);
    }
  }
  emit(session.flush());
  output.finish();

  if (!args.segments.empty()) {
    Output seg(args.segments, io.out);
    write_segments(seg.get(), session.chunk_segments(), session.sentence_segments());
    seg.finish();
  }
  const auto report = latency_report(log, session.tokens(), session.sentence_segments());
  io.err << "sentences=" << report.sentences.size() << " events=" << log.size()
         << " first_caption_ms(mean=" << fixed(report.mean_time_to_first_caption, 1)
         << ", max=" << report.max_time_to_first_caption << ")"
         << " final_ms(mean=" << fixed(report.mean_time_to_final, 1)
         << ", max=" << report.max_time_to_final << ")\n";
  return kExitOk;
}

struct TrainArgs {
  std::string level;
  std::string out;
};

int cmd_train(const TrainArgs& args, const Common& common, Io io) {
  const auto cfg = common.load();
  const auto level = parse_level(args.level);
  const auto data = load_train_dev(cfg, io.err);
  auto seg_cfg = cfg.segmenter;
  seg_cfg.level = level;
  if (cfg.train.epochs == 0) io.err << "warning: epochs=0, the model has zero weights\n";
  const auto model = std::make_shared<const SegmenterModel>(
      train_segmenter(for_level(data.train, level), seg_cfg, cfg.train));

  BoundaryCounts counts;
  for (const auto& stream : for_level(data.dev, level)) {
    counts += boundary_counts(stream.boundaries, segment_stream(model, stream.tokens));
  }
  Output out(args.out, io.out);
  model->save(out.get());
  out.finish();
  io.err << "trained " << to_string(level) << " model on " << data.train.size() << " streams\n";
  io.err << "dev F1=" << fixed(counts.f1(), 4) << " precision=" << fixed(counts.precision(), 4)
         << " recall=" << fixed(counts.recall(), 4) << " mean_delay=" << fixed(counts.mean_delay(), 3)
         << "\n";
  return kExitOk;
}

struct TuneArgs {
  std::optional<std::string> candidates;
  std::string level = "chunk";
  std::string output = "-";
};

std::vector<int> parse_candidates(const std::string& text) {
  std::vector<int> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b == std::string::npos) throw UsageError("empty entry in candidate list");
    item = item.substr(b, e - b + 1);
    int n = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), n);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw UsageError("candidate '" + item + "' is not an integer");
    }
    out.push_back(n);
  }
  return out;
}

int cmd_tune(const TuneArgs& args, const Common& common, Io io) {
  const auto cfg = common.load();
  const auto candidates = args.candidates ? parse_candidates(*args.candidates) : cfg.tune_candidates;
  if (candidates.empty()) throw UsageError("the candidate list is empty");
  const auto level = parse_level(args.level);
  const auto data = load_train_dev(cfg, io.err);
  auto base = cfg.segmenter;
  base.level = level;
  const auto result = tune_max_delay(for_level(data.train, level), for_level(data.dev, level),
                                     candidates, base, cfg.train);
  Output out(args.output, io.out);
  out.get() << "max_delay\tprecision\trecall\tf1\tmean_delay\n";
  for (const auto& row : result.rows) {
    out.get() << row.max_delay << '\t' << fixed(row.precision, 4) << '\t' << fixed(row.recall, 4)
              << '\t' << fixed(row.f1, 4) << '\t' << fixed(row.mean_delay, 3) << '\n';
  }
  out.finish();
  io.err << "selected N=" << result.selected << "\n";
  return kExitOk;
}

struct GenArgs {
  std::string output = "-";
  std::string format = "labeled";
  std::string phrase_table;
  std::string split_prefix;
};

int cmd_gen(const GenArgs& args, const Common& common, Io io) {
  const auto cfg = common.load();
  if (args.format != "labeled" && args.format != "tsv") throw UsageError("--format must be labeled or tsv");
  const bool parallel = args.format == "tsv" || !args.phrase_table.empty();
  if (parallel && cfg.src.spaceless()) {
    throw UsageError("synthetic parallel data needs a source language written with spaces");
  }
  const auto streams = generate_synthetic(cfg.generator, cfg.generator_count, cfg.seed);
  auto write = [&](std::ostream& out, const std::vector<LabeledStream>& part) {
    if (args.format == "tsv") {
      write_chunk_corpus(out, synthetic_parallel(part, cfg.src, cfg.tgt));
    } else {
      write_labeled_streams(out, part);
    }
  };
  if (args.split_prefix.empty()) {
    Output out(args.output, io.out);
    write(out.get(), streams);
    out.finish();
  } else {
    const auto parts = split(streams, cfg.split, cfg.seed);
    for (const auto& w : parts.warnings) io.err << "warning: " << w << "\n";
    const std::string ext = args.format == "tsv" ? ".tsv" : ".jsonl";
    for (const auto& [name, part] : {std::pair{"train", &parts.train}, std::pair{"dev", &parts.dev},
                                     std::pair{"test", &parts.test}}) {
      Output out(args.split_prefix + "." + name + ext, io.out);
      write(out.get(), *part);
      out.finish();
    }
  }
  if (!args.phrase_table.empty()) {
    const auto table = synthetic_phrase_table(synthetic_parallel(streams, cfg.src, cfg.tgt));
    Output out(args.phrase_table, io.out);
    for (const auto& [source, target] : table.entries()) out.get() << source << '\t' << target << '\n';
    out.finish();
  }
  io.err << "generated " << streams.size() << " streams\n";
  return kExitOk;
}

struct BleuArgs {
  std::string hyp;
  std::string ref;
};

int cmd_bleu(const BleuArgs& args, const Common& common, Io io) {
  const auto cfg = common.load();
  Input hyp(args.hyp, io.in);
  Input ref(args.ref, io.in);
  const auto score = bleu(read_lines(hyp.get()), read_lines(ref.get()), cfg.bleu, cfg.tgt);
  io.out << fixed(score, 4) << "\n";
  return kExitOk;
}

struct LengthsArgs {
  std::vector<std::string> segments;
  std::string output = "-";
};

int cmd_lengths(const LengthsArgs& args, const Common& common, Io io) {
  const auto cfg = common.load();
  std::vector<std::vector<std::string>> utterances;
  std::vector<std::vector<Segment>> sentence_segments;
  std::vector<std::vector<Segment>> chunk_segments;
  if (!args.segments.empty()) {
    for (const auto& path : args.segments) {
      Input in(path, io.in);
      auto file = read_segments(in.get());
      std::vector<std::string> tokens;
      for (const auto& s : file.sentences) tokens.insert(tokens.end(), s.tokens.begin(), s.tokens.end());
      utterances.push_back(std::move(tokens));
      sentence_segments.push_back(std::move(file.sentences));
      chunk_segments.push_back(std::move(file.chunks));
    }
  } else {
    const auto corpus = cfg.corpus_test ? cfg.corpus_test : cfg.corpus_train;
    if (!corpus) throw UsageError("eval lengths needs --segments files or a corpus");
    const auto chunk_model = load_model(cfg.chunk_model, "chunk");
    const auto sentence_model = load_model(cfg.sentence_model, "sentence");
    for (const auto& stream : load_streams(*corpus, cfg.concat)) {
      utterances.push_back(stream.tokens);
      sentence_segments.push_back(decisions_to_segments(
          segment_stream(sentence_model, stream.tokens), stream.tokens, SegmentKind::Sentence));
      chunk_segments.push_back(decisions_to_segments(segment_stream(chunk_model, stream.tokens),
                                                     stream.tokens, SegmentKind::Chunk));
    }
  }
  const auto stats = length_stats(utterances, sentence_segments, chunk_segments);
  Output out(args.output, io.out);
  if (cfg.report_format == "jsonl") {
    nlohmann::ordered_json j;
    j["mean_utterance_len"] = stats.mean_utterance_len;
    j["mean_sentence_segment_len"] = stats.mean_sentence_seg_len;
    j["mean_chunk_segment_len"] = stats.mean_chunk_seg_len;
    j["reduction"] = stats.reduction;
    out.get() << j.dump() << '\n';
  } else {
    out.get() << "metric\tvalue\n"
              << "mean_utterance_len\t" << fixed(stats.mean_utterance_len, 4) << '\n'
              << "mean_sentence_segment_len\t" << fixed(stats.mean_sentence_seg_len, 4) << '\n'
              << "mean_chunk_segment_len\t" << fixed(stats.mean_chunk_seg_len, 4) << '\n'
              << "reduction\t" << fixed(stats.reduction, 4) << '\n'
              << "reduction_percent\t" << fixed(100.0 * stats.reduction, 0) << "%\n";
  }
  out.finish();
  return kExitOk;
}

struct CompareArgs {
  std::string output = "-";
};

int cmd_compare(const CompareArgs& args, const Common& common, Io io) {
  const auto cfg = common.load();
  if (cfg.compare.size() < 2) {
    throw UsageError("eval compare needs at least two [[compare]] configurations");
  }
  if (!cfg.corpus_test) throw UsageError("eval compare needs a test corpus (--corpus or corpus.test)");
  const auto pairs = to_test_pairs(parse_chunk_corpus_file(*cfg.corpus_test));
  std::shared_ptr<const SegmenterModel> chunk_model;
  std::shared_ptr<const SegmenterModel> sentence_model;
  std::vector<CompareConfig> configs;
  for (const auto& spec : cfg.compare) {
    CompareConfig c;
    c.name = spec.name;
    c.mode = spec.mode;
    c.fixed_length = spec.fixed_length;
    c.broker = build_broker(cfg, spec.engines);
    if (spec.use_tags) c.tags = cfg.tags;
    if (spec.mode == SegmentationMode::ChunkModel) {
      if (!chunk_model) chunk_model = load_model(cfg.chunk_model, "chunk");
      c.model = chunk_model;
    } else if (spec.mode == SegmentationMode::SentenceModel) {
      if (!sentence_model) sentence_model = load_model(cfg.sentence_model, "sentence");
      c.model = sentence_model;
    }
    configs.push_back(std::move(c));
  }
  CompareOptions options;
  options.concat = cfg.concat;
  options.bleu = cfg.bleu;
  const auto report = compare_engines(pairs, configs, options);
  Output out(args.output, io.out);
  if (cfg.report_format == "jsonl") {
    report.write_jsonl(out.get());
  } else {
    report.write_tsv(out.get());
  }
  out.finish();
  if (report.any_failed()) {
    for (const auto& row : report.rows) {
      if (row.failed) io.err << "error: " << row.config << " " << row.direction << ": " << row.error << "\n";
    }
    return kExitFailure;
  }
  return kExitOk;
}

struct LatencyArgs {
  std::string log;
  std::string input;
  std::string segments;
  std::string output = "-";
};

int cmd_latency(const LatencyArgs& args, const Common& common, Io io) {
  const auto cfg = common.load();
  Input log_in(args.log, io.in);
  const auto events = read_caption_log(log_in.get());
  Input tok_in(args.input, io.in);
  const auto tokens = read_token_stream(tok_in.get(), cfg.input_format, cfg.token_gap_ms, cfg.session_id);
  Input seg_in(args.segments, io.in);
  const auto segments = read_segments(seg_in.get());
  const auto report = latency_report(events, tokens, segments.sentences);
  Output out(args.output, io.out);
  out.get() << "sentence_id\tfirst_token_ms\ttime_to_first_caption_ms\ttime_to_final_ms\n";
  for (const auto& s : report.sentences) {
    out.get() << s.sentence_id << '\t' << s.first_token_ms << '\t' << s.time_to_first_caption << '\t'
              << s.time_to_final << '\n';
  }
  if (!report.sentences.empty()) {
    out.get() << "mean\t-\t" << fixed(report.mean_time_to_first_caption, 1) << '\t'
              << fixed(report.mean_time_to_final, 1) << '\n'
              << "max\t-\t" << report.max_time_to_first_caption << '\t' << report.max_time_to_final
              << '\n';
  }
  out.finish();
  return kExitOk;
}

struct SimulateArgs {
  std::size_t sessions = 100;
  std::string output = "-";
};

int cmd_simulate(const SimulateArgs& args, const Common& common, Io io) {
  auto cfg = common.load();
  cfg.clock = ClockMode::Simulated;
  const auto chunk_model = load_model(cfg.chunk_model, "chunk");
  const auto sentence_model = load_model(cfg.sentence_model, "sentence");
  const auto broker = build_broker(cfg);
  const auto streams = generate_synthetic(cfg.generator, args.sessions, cfg.seed);

  Output out(args.output, io.out);
  out.get() << "session\ttokens\tsentences\tchunks\tviolations\tfirst_caption_ms\t"
               "sentence_only_first_caption_ms\n";
  std::size_t violations = 0;
  std::size_t faster = 0;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    std::vector<TokenEvent> tokens;
    for (std::size_t k = 0; k < streams[i].tokens.size(); ++k) {
      const auto idx = static_cast<std::int64_t>(k);
      tokens.push_back({cfg.session_id, idx, streams[i].tokens[k], idx * cfg.token_gap_ms});
    }
    auto simulate = [&](PipelineMode mode, std::vector<CaptionEvent>& log) {
      auto sc = session_config(cfg);
      sc.mode = mode;
      sc.seed = cfg.seed + i;
      sc.chunk_model = chunk_model;
      sc.sentence_model = sentence_model;
      sc.broker = broker;
      Session session(std::move(sc));
      for (const auto& t : tokens) {
        auto ev = session.feed_token(t);
        log.insert(log.end(), ev.begin(), ev.end());
      }
      auto ev = session.flush();
      log.insert(log.end(), ev.begin(), ev.end());
      return latency_report(log, session.tokens(), session.sentence_segments());
    };
    std::vector<CaptionEvent> chunk_log;
    std::vector<CaptionEvent> sentence_log;
    const auto chunked = simulate(PipelineMode::ChunkAndSentence, chunk_log);
    const auto baseline = simulate(PipelineMode::SentenceOnly, sentence_log);
    const auto problems = verify_caption_log(chunk_log);
    const auto baseline_problems = verify_caption_log(sentence_log);
    const auto bad = problems.size() + baseline_problems.size();
    for (const auto& p : problems) io.err << "session " << i << ": " << p << "\n";
    for (const auto& p : baseline_problems) io.err << "session " << i << " (sentence-only): " << p << "\n";
    violations += bad;
    if (chunked.mean_time_to_first_caption < baseline.mean_time_to_first_caption) ++faster;
    const auto chunks = std::count_if(chunk_log.begin(), chunk_log.end(),
                                      [](const CaptionEvent& e) { return !e.terminal(); });
    out.get() << i << '\t' << tokens.size() << '\t' << chunked.sentences.size() << '\t' << chunks
              << '\t' << bad << '\t' << fixed(chunked.mean_time_to_first_caption, 1) << '\t'
              << fixed(baseline.mean_time_to_first_caption, 1) << '\n';
  }
  out.finish();
  io.err << "sessions=" << streams.size() << " violations=" << violations
         << " chunk_pipeline_faster=" << faster << "/" << streams.size() << "\n";
  return violations == 0 ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Chunk-based simultaneous interpretation pipeline", "simulpipe"};
  app.require_subcommand(1);
  Common common;
  std::function<int()> action;
  const Io io{in, out, err};

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Stream tokens through a session and write the caption log");
  add_common(run, common);
  run->add_option("-i,--input", run_args.input, "Token stream (- for stdin)");
  run->add_option("-o,--output", run_args.output, "Caption log (- for stdout)");
  run->add_option("--segments", run_args.segments, "Write chunk and sentence segments here");
  run->add_option("--listen", run_args.listen, "Read tokens from one TCP connection on this port");
  key_flag(run, common, "--chunk-model", "models.chunk", "Chunk segmenter model");
  key_flag(run, common, "--sentence-model", "models.sentence", "Sentence segmenter model");
  key_flag(run, common, "--clock", "clock", "simulated | real");
  key_flag(run, common, "--mode", "mode", "chunk+sentence | sentence-only");
  key_flag(run, common, "--src", "session.src", "Source language");
  key_flag(run, common, "--tgt", "session.tgt", "Target language");
  key_flag(run, common, "--format", "session.input_format", "jsonl | text");
  key_flag(run, common, "--gap-ms", "session.token_gap_ms", "Token spacing for text input");
  run->callback([&] { action = [&] { return cmd_run(run_args, common, io); }; });

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a boundary segmenter");
  add_common(train, common);
  train->add_option("--level", train_args.level, "chunk | sentence")->required();
  train->add_option("-o,--out", train_args.out, "Model file (- for stdout)")->required();
  key_flag(train, common, "--corpus", "corpus.train", "Training corpus (TSV or labeled JSONL)");
  key_flag(train, common, "--dev", "corpus.dev", "Dev corpus");
  key_flag(train, common, "--epochs", "segmenter.epochs", "Training epochs");
  key_flag(train, common, "--max-delay", "segmenter.max_delay", "Lookahead N");
  key_flag(train, common, "--threshold", "segmenter.threshold", "Decision threshold");
  key_flag(train, common, "--feature-window", "segmenter.feature_window", "Left context width");
  key_flag(train, common, "--learning-rate", "segmenter.learning_rate", "Initial step size");
  key_flag(train, common, "--concat", "corpus.concat", "Records joined per TSV stream");
  train->callback([&] { action = [&] { return cmd_train(train_args, common, io); }; });

  TuneArgs tune_args;
  auto* tune = app.add_subcommand("tune-n", "Select the lookahead N on dev data");
  add_common(tune, common);
  tune->add_option("--candidates", tune_args.candidates, "Comma-separated N values");
  tune->add_option("--level", tune_args.level, "chunk | sentence");
  tune->add_option("-o,--output", tune_args.output, "Per-N report (- for stdout)");
  key_flag(tune, common, "--corpus", "corpus.train", "Training corpus");
  key_flag(tune, common, "--dev", "corpus.dev", "Dev corpus");
  key_flag(tune, common, "--epochs", "segmenter.epochs", "Training epochs");
  tune->callback([&] { action = [&] { return cmd_tune(tune_args, common, io); }; });

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic labeled corpus");
  add_common(gen, common);
  gen->add_option("-o,--output", gen_args.output, "Corpus file (- for stdout)");
  gen->add_option("--format", gen_args.format, "labeled | tsv");
  gen->add_option("--phrase-table", gen_args.phrase_table, "Also write a matching dictionary");
  gen->add_option("--split-prefix", gen_args.split_prefix, "Write PREFIX.{train,dev,test} instead");
  key_flag(gen, common, "--count", "generator.count", "Number of streams");
  key_flag(gen, common, "--policy", "generator.policy", "marker | follower | distributional | none");
  key_flag(gen, common, "--src", "session.src", "Source language (tsv)");
  key_flag(gen, common, "--tgt", "session.tgt", "Target language (tsv)");
  gen->callback([&] { action = [&] { return cmd_gen(gen_args, common, io); }; });

  auto* eval = app.add_subcommand("eval", "Evaluation reports");
  eval->require_subcommand(1);

  BleuArgs bleu_args;
  auto* bleu_cmd = eval->add_subcommand("bleu", "Corpus BLEU of a hypothesis file");
  add_common(bleu_cmd, common);
  bleu_cmd->add_option("--hyp", bleu_args.hyp, "Hypotheses, one per line")->required();
  bleu_cmd->add_option("--ref", bleu_args.ref, "References, one per line")->required();
  key_flag(bleu_cmd, common, "--lang", "session.tgt", "Language of the texts");
  key_flag(bleu_cmd, common, "--max-n", "eval.max_n", "Highest n-gram order");
  key_flag(bleu_cmd, common, "--smoothing", "eval.smoothing", "none | add-one");
  bleu_cmd->callback([&] { action = [&] { return cmd_bleu(bleu_args, common, io); }; });

  LengthsArgs lengths_args;
  auto* lengths = eval->add_subcommand("lengths", "Mean segment lengths and chunk reduction");
  add_common(lengths, common);
  lengths->add_option("--segments", lengths_args.segments, "Segment files written by run");
  lengths->add_option("-o,--output", lengths_args.output, "Report (- for stdout)");
  key_flag(lengths, common, "--corpus", "corpus.test", "Corpus to segment with the configured models");
  key_flag(lengths, common, "--format", "eval.format", "tsv | jsonl");
  lengths->callback([&] { action = [&] { return cmd_lengths(lengths_args, common, io); }; });

  CompareArgs compare_args;
  auto* compare = eval->add_subcommand("compare", "BLEU per configuration and direction");
  add_common(compare, common);
  compare->add_option("-o,--output", compare_args.output, "Report (- for stdout)");
  key_flag(compare, common, "--corpus", "corpus.test", "Chunk-aligned test corpus");
  key_flag(compare, common, "--format", "eval.format", "tsv | jsonl");
  key_flag(compare, common, "--concat", "corpus.concat", "Utterances per evaluation stream");
  compare->callback([&] { action = [&] { return cmd_compare(compare_args, common, io); }; });

  LatencyArgs latency_args;
  auto* latency = eval->add_subcommand("latency", "Per-sentence caption latency of a run");
  add_common(latency, common);
  latency->add_option("--log", latency_args.log, "Caption log")->required();
  latency->add_option("-i,--input", latency_args.input, "Token stream of the run")->required();
  latency->add_option("--segments", latency_args.segments, "Segment file of the run")->required();
  latency->add_option("-o,--output", latency_args.output, "Report (- for stdout)");
  key_flag(latency, common, "--format", "session.input_format", "jsonl | text");
  latency->callback([&] { action = [&] { return cmd_latency(latency_args, common, io); }; });

  SimulateArgs simulate_args;
  auto* simulate = app.add_subcommand("simulate", "Randomized simulated sessions with protocol checks");
  add_common(simulate, common);
  simulate->add_option("--sessions", simulate_args.sessions, "Number of sessions");
  simulate->add_option("-o,--output", simulate_args.output, "Per-session report (- for stdout)");
  simulate->callback([&] { action = [&] { return cmd_simulate(simulate_args, common, io); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }
  try {
    return action();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace simulpipe
