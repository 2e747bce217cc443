#include <gtest/gtest.h>

#include <sstream>

#include "simulpipe/cli.hpp"
#include "simulpipe/core.hpp"
#include "simulpipe/eval.hpp"
#include "simulpipe/pipeline.hpp"
#include "simulpipe/segmenter.hpp"
#include "support.hpp"

using namespace simulpipe;
using simulpipe::testing::fixture;
using simulpipe::testing::slurp;
using simulpipe::testing::spit;
using simulpipe::testing::TempDir;

namespace {

struct Result {
  int status = 0;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args, const std::string& input = "") {
  args.insert(args.begin(), "simulpipe");
  std::istringstream in(input);
  std::ostringstream out;
  std::ostringstream err;
  const int status = run_cli(args, in, out, err);
  return {status, out.str(), err.str()};
}

double metric(const std::string& tsv, const std::string& name) {
  std::istringstream in(tsv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(name + "\t", 0) == 0) return std::stod(line.substr(name.size() + 1));
  }
  ADD_FAILURE() << "no metric " << name;
  return 0.0;
}

}  // namespace

TEST(CliRun, GoldenCaptionLog) {
  TempDir dir;
  const auto captions = dir.file("captions.jsonl");
  const auto segments = dir.file("segments.jsonl");
  const auto r = cli({"run", "-c", fixture("golden/config.toml"), "-i", fixture("golden/stream.jsonl"),
                      "-o", captions, "--segments", segments});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  EXPECT_EQ(slurp(captions), slurp(fixture("golden/captions.jsonl")));
  EXPECT_EQ(slurp(segments), slurp(fixture("golden/segments.jsonl")));
  EXPECT_NE(r.err.find("first_caption_ms"), std::string::npos);

  std::istringstream log(slurp(captions));
  EXPECT_TRUE(verify_caption_log(read_caption_log(log)).empty());
}

TEST(CliRun, StdinToStdout) {
  const auto r = cli({"run", "-c", fixture("golden/config.toml")}, slurp(fixture("golden/stream.jsonl")));
  ASSERT_EQ(r.status, kExitOk) << r.err;
  EXPECT_EQ(r.out, slurp(fixture("golden/captions.jsonl")));
}

TEST(CliRun, EmptyInput) {
  const auto r = cli({"run", "-c", fixture("golden/config.toml"), "-i", "-"}, "");
  EXPECT_EQ(r.status, kExitOk) << r.err;
  EXPECT_EQ(r.out, "");
}

TEST(CliRun, MissingModelNamesPath) {
  const auto r = cli({"run", "-c", fixture("golden/config.toml"), "--chunk-model", "/no/such/chunk.model"},
                     "");
  EXPECT_NE(r.status, kExitOk);
  EXPECT_NE(r.err.find("/no/such/chunk.model"), std::string::npos) << r.err;
  EXPECT_EQ(r.err.find('\n'), r.err.size() - 1);
}

TEST(CliRun, BadTokenLineReportsLine) {
  const auto r = cli({"run", "-c", fixture("golden/config.toml")},
                     "{\"index\": 0, \"surface\": \"a\", \"t_ms\": 0}\nnot json\n");
  EXPECT_EQ(r.status, kExitFailure);
  EXPECT_NE(r.err.find("2"), std::string::npos) << r.err;
}

TEST(CliRun, UnknownFlagIsUsageError) {
  EXPECT_EQ(cli({"run", "--bogus"}).status, kExitUsage);
  EXPECT_EQ(cli({}).status, kExitUsage);
}

class CliCorpus : public ::testing::Test {
 protected:
  void SetUp() override {
    corpus_ = dir_.file("marker.jsonl");
    const auto r = cli({"gen-corpus", "--count", "400", "--seed", "5", "-o", corpus_, "--set",
                        "generator.mean_chunk_len=3"});
    ASSERT_EQ(r.status, kExitOk) << r.err;
  }
  TempDir dir_;
  std::string corpus_;
};

TEST_F(CliCorpus, TrainReportsHighF1) {
  const auto model = dir_.file("chunk.model");
  const auto r = cli({"train", "--corpus", corpus_, "--level", "chunk", "-o", model, "--max-delay", "1"});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  const auto at = r.err.find("dev F1=");
  ASSERT_NE(at, std::string::npos);
  EXPECT_GE(std::stod(r.err.substr(at + 7)), 0.95) << r.err;
  EXPECT_EQ(SegmenterModel::load_file(model).config().max_delay, 1);
}

TEST_F(CliCorpus, SentenceModelSegmentsAreLonger) {
  const auto chunk = dir_.file("chunk.model");
  const auto sentence = dir_.file("sentence.model");
  ASSERT_EQ(cli({"train", "--corpus", corpus_, "--level", "chunk", "-o", chunk}).status, kExitOk);
  ASSERT_EQ(cli({"train", "--corpus", corpus_, "--level", "sentence", "-o", sentence}).status, kExitOk);
  const auto r = cli({"eval", "lengths", "--corpus", corpus_, "--set", "models.chunk=" + chunk, "--set",
                      "models.sentence=" + sentence});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  EXPECT_GT(metric(r.out, "mean_sentence_segment_len"), metric(r.out, "mean_chunk_segment_len"));
  const double expected = length_reduction(metric(r.out, "mean_sentence_segment_len"),
                                           metric(r.out, "mean_chunk_segment_len"));
  EXPECT_NEAR(metric(r.out, "reduction"), expected, 1e-3);
  EXPECT_NE(r.out.find("reduction_percent\t"), std::string::npos);
}

TEST_F(CliCorpus, ZeroEpochsWarns) {
  const auto model = dir_.file("zero.model");
  const auto r = cli({"train", "--corpus", corpus_, "--level", "chunk", "-o", model, "--epochs", "0"});
  EXPECT_EQ(r.status, kExitOk) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_FALSE(slurp(model).empty());
}

TEST_F(CliCorpus, TuneCandidates) {
  auto r = cli({"tune-n", "--corpus", corpus_, "--candidates", "2"});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  EXPECT_NE(r.err.find("selected N=2"), std::string::npos);
  EXPECT_EQ(r.out.rfind("max_delay\t", 0), 0u);
  EXPECT_EQ(cli({"tune-n", "--corpus", corpus_, "--candidates", ""}).status, kExitUsage);
  EXPECT_EQ(cli({"tune-n", "--corpus", corpus_, "--candidates", "1,x"}).status, kExitUsage);
}

TEST(CliTune, FollowerLanguageSelectsOne) {
  TempDir dir;
  const auto corpus = dir.file("follower.jsonl");
  ASSERT_EQ(cli({"gen-corpus", "--count", "1000", "--policy", "follower", "--seed", "3", "-o", corpus})
                .status,
            kExitOk);
  const auto r = cli({"tune-n", "--corpus", corpus, "--candidates", "0,1,2,3"});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  EXPECT_NE(r.err.find("selected N=1"), std::string::npos) << r.err << r.out;
}

TEST(CliTrain, CorpusErrors) {
  TempDir dir;
  const auto bad = dir.file("bad.tsv");
  spit(bad, "ja\ten\ta / b\tA\n");
  const auto r = cli({"train", "--corpus", bad, "--level", "chunk", "-o", dir.file("m")});
  EXPECT_EQ(r.status, kExitFailure);
  EXPECT_EQ(cli({"train", "--corpus", bad, "--level", "word", "-o", dir.file("m")}).status, kExitUsage);
  EXPECT_EQ(cli({"train", "--level", "chunk", "-o", dir.file("m")}).status, kExitUsage);
}

TEST(CliTrain, InterpretationTsv) {
  TempDir dir;
  const auto r = cli({"train", "--corpus", fixture("corpus/interpretation.tsv"), "--level", "chunk",
                      "--dev", fixture("corpus/interpretation.tsv"), "-o", dir.file("m"), "--concat", "1"});
  EXPECT_EQ(r.status, kExitOk) << r.err;
}

TEST(CliEval, BleuOfIdenticalFiles) {
  TempDir dir;
  const auto f = dir.file("x.txt");
  spit(f, "the cat is on the mat\nthere is a cat on the mat\n");
  auto r = cli({"eval", "bleu", "--hyp", f, "--ref", f});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  EXPECT_EQ(std::stod(r.out), 1.0);
  const auto g = dir.file("y.txt");
  spit(g, "only one line\n");
  EXPECT_EQ(cli({"eval", "bleu", "--hyp", f, "--ref", g}).status, kExitFailure);
}

TEST(CliEval, CompareNeedsTwoConfigurations) {
  TempDir dir;
  const auto cfg = dir.file("c.toml");
  spit(cfg, "[[engines]]\nid = \"echo\"\nkind = \"identity\"\n[[compare]]\nname = \"BASE\"\nmode = \"fixed\"\n");
  const auto r = cli({"eval", "compare", "-c", cfg, "--corpus", fixture("corpus/interpretation.tsv")});
  EXPECT_EQ(r.status, kExitUsage);
  EXPECT_NE(r.err.find("two"), std::string::npos);
}

TEST(CliEval, CompareReport) {
  TempDir dir;
  const auto corpus = dir.file("par.tsv");
  const auto table = dir.file("par.dict");
  ASSERT_EQ(cli({"gen-corpus", "--count", "30", "--format", "tsv", "--src", "en", "--tgt", "fr",
                 "--phrase-table", table, "-o", corpus})
                .status,
            kExitOk);
  const auto cfg = dir.file("c.toml");
  spit(cfg,
       "[session]\nsrc = \"en\"\ntgt = \"fr\"\n"
       "[[engines]]\nid = \"dict\"\nkind = \"dictionary\"\ndictionary = \"par.dict\"\n"
       "[[compare]]\nname = \"BASE\"\nmode = \"fixed\"\n"
       "[[compare]]\nname = \"ONE\"\nmode = \"fixed\"\nfixed_length = 1\n");
  const auto r = cli({"eval", "compare", "-c", cfg, "--corpus", corpus});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  EXPECT_EQ(r.out.rfind("config\tdirection\tmode\tbleu\tsegments\tstatus\n", 0), 0u);
  EXPECT_NE(r.out.find("BASE\tONE\ten-fr\t"), std::string::npos) << r.out;
}

TEST(CliEval, LengthsAndLatencyFromRunArtifacts) {
  TempDir dir;
  const auto captions = dir.file("captions.jsonl");
  const auto segments = dir.file("segments.jsonl");
  ASSERT_EQ(cli({"run", "-c", fixture("golden/config.toml"), "-i", fixture("golden/stream.jsonl"), "-o",
                 captions, "--segments", segments})
                .status,
            kExitOk);
  auto r = cli({"eval", "lengths", "--segments", segments});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  EXPECT_NE(r.out.find("reduction\t"), std::string::npos);
  EXPECT_LE(metric(r.out, "mean_chunk_segment_len"), metric(r.out, "mean_sentence_segment_len"));
  r = cli({"eval", "latency", "--log", captions, "-i", fixture("golden/stream.jsonl"), "--segments",
           segments});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  EXPECT_EQ(r.out.rfind("sentence_id\t", 0), 0u);
}

TEST(CliSimulate, NoViolations) {
  const auto r = cli({"simulate", "-c", fixture("golden/config.toml"), "--sessions", "20", "--seed", "9"});
  EXPECT_EQ(r.status, kExitOk) << r.err;
  EXPECT_NE(r.err.find("violations=0"), std::string::npos) << r.err;
}
