#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "simulpipe/corpus.hpp"
#include "simulpipe/error.hpp"
#include "support.hpp"

using namespace simulpipe;
using simulpipe::testing::fixture;
using simulpipe::testing::Gen;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

std::vector<ChunkAlignedPair> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_chunk_corpus(in);
}

}  // namespace

TEST(ChunkCorpus, InterpretationRecord) {
  const auto pairs = parse_chunk_corpus_file(fixture("corpus/interpretation.tsv"));
  ASSERT_EQ(pairs.size(), 1u);
  const auto& p = pairs[0];
  EXPECT_EQ(p.src_lang.code(), "ja");
  EXPECT_EQ(p.tgt_lang.code(), "en");
  ASSERT_EQ(p.src_chunks.size(), 4u);
  ASSERT_EQ(p.tgt_chunks.size(), 4u);
  EXPECT_EQ(p.tgt_chunks[0], "Same as the product I introduced the other day,");
  EXPECT_EQ(p.src_chunks[2], "途中解約した場合、");
  ASSERT_TRUE(p.sentence_translation);
  EXPECT_EQ(p.sentence_translation->rfind("If you cancel your plan", 0), 0u);

  const auto labels = derive_labels(pairs);
  ASSERT_EQ(labels.size(), 1u);
  EXPECT_EQ(labels[0].chunk_ends.size(), 4u);
  EXPECT_EQ(labels[0].sentence_ends.size(), 1u);
  EXPECT_NO_THROW(labels[0].validate());
}

TEST(ChunkCorpus, SingleChunkAndMismatch) {
  const auto pairs = parse("en\tja\thello there\tこんにちは\n");
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].src_chunks.size(), 1u);
  EXPECT_FALSE(pairs[0].sentence_translation);
  try {
    parse("# header\nja\ten\ta / b / c\tA / B / C / D\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ChunkCountMismatch);
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ChunkCorpus, Errors) {
  EXPECT_EQ(code_of([] { parse("# nothing\n\n"); }), ErrorCode::EmptyFile);
  EXPECT_EQ(code_of([] { parse("ja\ten\tonly three\n"); }), ErrorCode::MalformedRecord);
  EXPECT_EQ(code_of([] { parse("xx\ten\ta\tb\n"); }), ErrorCode::MalformedRecord);
  EXPECT_EQ(code_of([] { parse("ja\ten\ta / / b\tA / B / C\n"); }), ErrorCode::MalformedRecord);
  EXPECT_EQ(code_of([] { parse_chunk_corpus_file("/nonexistent/corpus.tsv"); }),
            ErrorCode::IoError);
}

TEST(ChunkCorpus, WriteParseRoundTrip) {
  Gen g(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ChunkAlignedPair> pairs;
    const auto n = g.range(1, 5);
    for (std::int64_t i = 0; i < n; ++i) {
      ChunkAlignedPair p{LanguageCode::parse("en"), LanguageCode::parse("fr"), {}, {}, std::nullopt};
      const auto chunks = g.range(1, 4);
      for (std::int64_t c = 0; c < chunks; ++c) {
        p.src_chunks.push_back(g.word() + " " + g.word());
        p.tgt_chunks.push_back(g.word());
      }
      if (g.coin()) p.sentence_translation = g.word() + " " + g.word();
      pairs.push_back(std::move(p));
    }
    std::stringstream ss;
    write_chunk_corpus(ss, pairs);
    const auto text = ss.str();
    const auto back = parse(text);
    EXPECT_EQ(back, pairs);
    std::stringstream again;
    write_chunk_corpus(again, back);
    EXPECT_EQ(again.str(), text);
  }
}

TEST(DialogCorpus, MedicalBlock) {
  const auto turns = parse_dialog_corpus_file(fixture("corpus/dialog_medical.tsv"));
  ASSERT_EQ(turns.size(), 7u);
  EXPECT_EQ(turns[0].speaker, DialogSpeaker::Foreigner);
  EXPECT_EQ(turns[0].domain, Scene::Medical);
  EXPECT_EQ(turns[0].tgt_text, "Is there a hospital nearby?");
  EXPECT_EQ(turns[1].speaker, DialogSpeaker::Japanese);
  EXPECT_EQ(turns[3].src_text, "めまいがします。");
}

TEST(DialogCorpus, EmptyBlockAndErrors) {
  std::istringstream empty("@domain\tshopping\n\n");
  EXPECT_TRUE(parse_dialog_corpus(empty).empty());
  std::istringstream speaker("@domain\tmedical\nX\tこんにちは\thello\n");
  EXPECT_EQ(code_of([&] { parse_dialog_corpus(speaker); }), ErrorCode::UnknownSpeaker);
  std::istringstream domain("@domain\tcooking\n");
  EXPECT_EQ(code_of([&] { parse_dialog_corpus(domain); }), ErrorCode::UnknownDomain);
  std::istringstream orphan("F\ta\tb\n");
  EXPECT_EQ(code_of([&] { parse_dialog_corpus(orphan); }), ErrorCode::MalformedRecord);
}

TEST(DeriveLabels, Examples) {
  ChunkAlignedPair p{LanguageCode::parse("en"), LanguageCode::parse("ja"), {"a b", "c"}, {"x", "y"},
                     std::nullopt};
  auto s = derive_labels({p})[0];
  EXPECT_EQ(s.tokens, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(s.chunk_ends, (std::vector<std::int64_t>{1, 2}));
  EXPECT_EQ(s.sentence_ends, (std::vector<std::int64_t>{2}));

  p.src_chunks = {"one two three"};
  p.tgt_chunks = {"x"};
  s = derive_labels({p})[0];
  EXPECT_EQ(s.chunk_ends, s.sentence_ends);
  EXPECT_EQ(s.chunk_ends, (std::vector<std::int64_t>{2}));
  EXPECT_THROW(derive_labels({}), Error);
}

TEST(LabeledStreams, ConcatenateKeepsOffsets) {
  LabeledStream a{{"a", "b"}, {0, 1}, {1}};
  LabeledStream b{{"c"}, {0}, {0}};
  const auto joined = concatenate_streams({a, b, a}, 2);
  ASSERT_EQ(joined.size(), 2u);
  EXPECT_EQ(joined[0].tokens, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(joined[0].chunk_ends, (std::vector<std::int64_t>{0, 1, 2}));
  EXPECT_EQ(joined[0].sentence_ends, (std::vector<std::int64_t>{1, 2}));
  EXPECT_EQ(joined[1], a);
  for (const auto& s : joined) EXPECT_NO_THROW(s.validate());
}

TEST(LabeledStreams, ValidateRejects) {
  EXPECT_THROW((LabeledStream{{}, {}, {}}.validate()), Error);
  EXPECT_THROW((LabeledStream{{"a", "b"}, {1}, {0}}.validate()), Error);
  EXPECT_THROW((LabeledStream{{"a", "b"}, {0}, {0}}.validate()), Error);
  EXPECT_THROW((LabeledStream{{"a", "b"}, {1, 0}, {1}}.validate()), Error);
}

TEST(LabeledStreams, JsonlRoundTrip) {
  GeneratorSpec spec;
  const auto streams = generate_synthetic(spec, 30, 2);
  std::stringstream ss;
  write_labeled_streams(ss, streams);
  EXPECT_EQ(read_labeled_streams(ss), streams);
  std::istringstream bad("{\"tokens\":[\"a\"],\"chunk_ends\":[],\"sentence_ends\":[]}\n");
  EXPECT_THROW(read_labeled_streams(bad), Error);
}

TEST(Generator, SeededRunsAreIdentical) {
  GeneratorSpec spec;
  spec.sentence_marker = ".";
  spec.chunk_marker = ",";
  spec.mean_chunk_len = 3;
  EXPECT_EQ(generate_synthetic(spec, 100, 7), generate_synthetic(spec, 100, 7));
  EXPECT_NE(generate_synthetic(spec, 100, 7), generate_synthetic(spec, 100, 8));
}

TEST(Generator, DegenerateLengthOneMakesEveryTokenAChunkEnd) {
  GeneratorSpec spec;
  spec.policy = BoundaryPolicy::Unmarked;
  spec.mean_chunk_len = 1;
  for (const auto& s : generate_synthetic(spec, 50, 3)) {
    ASSERT_EQ(s.chunk_ends.size(), s.tokens.size());
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      EXPECT_EQ(s.chunk_ends[i], static_cast<std::int64_t>(i));
    }
  }
}

TEST(Generator, MeanChunkContentLength) {
  GeneratorSpec spec;
  spec.mean_chunk_len = 7;
  spec.min_sentence_chunks = 1;
  spec.max_sentence_chunks = 3;
  const auto streams = generate_synthetic(spec, 1000, 11);
  std::int64_t content = 0;
  std::int64_t chunks = 0;
  std::int64_t sentences = 0;
  for (const auto& s : streams) {
    std::int64_t start = 0;
    for (const auto end : s.chunk_ends) {
      content += end - start;  // minus the marker
      ++chunks;
      start = end + 1;
    }
    sentences += static_cast<std::int64_t>(s.sentence_ends.size());
  }
  const double mean = static_cast<double>(content) / static_cast<double>(chunks);
  EXPECT_NEAR(mean, 7.0, 0.7);
  EXPECT_NEAR(static_cast<double>(chunks) / static_cast<double>(sentences), 2.0, 0.2);
}

TEST(Generator, PoliciesPlaceCuesAndValidate) {
  for (auto policy : {BoundaryPolicy::Marker, BoundaryPolicy::Follower,
                      BoundaryPolicy::Distributional, BoundaryPolicy::Unmarked}) {
    GeneratorSpec spec;
    spec.policy = policy;
    EXPECT_EQ(parse_boundary_policy(to_string(policy)), policy);
    for (const auto& s : generate_synthetic(spec, 200, 5)) {
      EXPECT_NO_THROW(s.validate());
      for (const auto e : s.chunk_ends) {
        const auto& end_tok = s.tokens[static_cast<std::size_t>(e)];
        const bool sentence_end =
            std::binary_search(s.sentence_ends.begin(), s.sentence_ends.end(), e);
        if (policy == BoundaryPolicy::Marker) {
          EXPECT_EQ(end_tok, sentence_end ? spec.sentence_marker : spec.chunk_marker);
        }
        if (policy == BoundaryPolicy::Follower &&
            static_cast<std::size_t>(e) + 1 < s.tokens.size()) {
          EXPECT_EQ(s.tokens[static_cast<std::size_t>(e) + 1],
                    sentence_end ? spec.sentence_follower : spec.chunk_follower);
        }
      }
    }
  }
}

TEST(Generator, SpecValidation) {
  GeneratorSpec spec;
  spec.mean_chunk_len = 0.5;
  EXPECT_THROW(spec.validate(), Error);
  spec = {};
  spec.chunk_marker = spec.sentence_marker;
  EXPECT_THROW(spec.validate(), Error);
  spec = {};
  spec.sentence_chunk_weights = {1.0};
  EXPECT_THROW(spec.validate(), Error);
  spec = {};
  spec.min_sentence_chunks = 0;
  EXPECT_THROW(spec.validate(), Error);
}

TEST(SyntheticParallel, OneRecordPerSentenceWithMatchingDictionary) {
  GeneratorSpec spec;
  const auto streams = generate_synthetic(spec, 20, 9);
  const auto en = LanguageCode::parse("en");
  const auto pairs = synthetic_parallel(streams, en, LanguageCode::parse("fr"));
  std::size_t sentences = 0;
  for (const auto& s : streams) sentences += s.sentence_ends.size();
  EXPECT_EQ(pairs.size(), sentences);
  const auto table = synthetic_phrase_table(pairs);
  for (const auto& p : pairs) {
    for (std::size_t i = 0; i < p.src_chunks.size(); ++i) {
      EXPECT_EQ(table.apply(p.src_chunks[i], en, en), p.tgt_chunks[i]);
    }
  }
  EXPECT_EQ(synthetic_chunk_translation({"w1", "ga"}), "GA W1");
}

TEST(Split, Examples) {
  std::vector<int> items(10);
  for (int i = 0; i < 10; ++i) items[static_cast<std::size_t>(i)] = i;
  const auto s = split(items, {0.8, 0.1, 0.1}, 3);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.dev.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
  EXPECT_TRUE(s.warnings.empty());
  const auto again = split(items, {0.8, 0.1, 0.1}, 3);
  EXPECT_EQ(again.train, s.train);
  EXPECT_EQ(again.dev, s.dev);

  const auto half = split(items, {0.5, 0.5, 0.0}, 3);
  EXPECT_EQ(half.train.size(), 5u);
  EXPECT_EQ(half.dev.size(), 5u);
  EXPECT_TRUE(half.test.empty());
  EXPECT_EQ(half.warnings.size(), 1u);

  EXPECT_EQ(code_of([] { plan_split(10, {0.5, 0.2, 0.2}); }), ErrorCode::InvalidRatios);
  EXPECT_EQ(code_of([] { plan_split(10, {0.0, 0.5, 0.5}); }), ErrorCode::InvalidRatios);
}

TEST(Split, PartitionProperty) {
  Gen g(23);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = static_cast<std::size_t>(g.range(0, 60));
    const double train = g.real(0.05, 0.95);
    const double dev = g.real(0.0, 1.0 - train);
    const SplitRatios r{train, dev, 1.0 - train - dev};
    std::vector<std::size_t> items(n);
    for (std::size_t i = 0; i < n; ++i) items[i] = i;
    const auto s = split(items, r, static_cast<std::uint64_t>(trial));
    EXPECT_EQ(s.train.size(), static_cast<std::size_t>(std::floor(train * static_cast<double>(n) + 1e-9)));
    std::vector<std::size_t> all;
    all.insert(all.end(), s.train.begin(), s.train.end());
    all.insert(all.end(), s.dev.begin(), s.dev.end());
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, items);
  }
}
