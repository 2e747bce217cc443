#include <gtest/gtest.h>

#include <set>

#include "simulpipe/context.hpp"
#include "simulpipe/error.hpp"
#include "support.hpp"

using namespace simulpipe;
using simulpipe::testing::Gen;

namespace {

const LanguageCode kJa = LanguageCode::parse("ja");
const LanguageCode kEn = LanguageCode::parse("en");
const LanguageCode kTh = LanguageCode::parse("th");

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

ContextTags random_tags(Gen& g) {
  ContextTags t;
  if (g.coin()) t.speaker = static_cast<Speaker>(g.range(0, 1));
  if (g.coin()) t.scene = static_cast<Scene>(g.range(0, 9));
  if (g.coin()) t.subject = static_cast<Subject>(g.range(0, 1));
  if (g.coin()) t.gender = static_cast<Gender>(g.range(0, 1));
  return t;
}

}  // namespace

TEST(ValidateTags, ForeignerMedical) {
  const auto t = validate_tags({{"speaker", "foreigner"}, {"scene", "medical"}}, kJa, kEn);
  EXPECT_EQ(t.speaker, Speaker::Foreigner);
  EXPECT_EQ(t.scene, Scene::Medical);
  EXPECT_FALSE(t.subject);
  EXPECT_FALSE(t.gender);
}

TEST(ValidateTags, EmptyAndUnknown) {
  EXPECT_TRUE(validate_tags({}, kJa, kEn).empty());
  EXPECT_EQ(code_of([] { validate_tags({{"scene", "cooking"}}, kJa, kEn); }),
            ErrorCode::UnknownValue);
  EXPECT_EQ(code_of([] { validate_tags({{"mood", "happy"}}, kJa, kEn); }),
            ErrorCode::UnknownCategory);
}

TEST(ValidateTags, LanguageRestrictions) {
  EXPECT_EQ(validate_tags({{"subject", "anata"}}, kJa, kEn).subject, Subject::Anata);
  EXPECT_EQ(code_of([] { validate_tags({{"subject", "watashi"}}, kEn, kJa); }),
            ErrorCode::LanguageRestriction);
  EXPECT_EQ(validate_tags({{"gender", "female"}}, kJa, kTh).gender, Gender::Female);
  EXPECT_EQ(code_of([] { validate_tags({{"gender", "male"}}, kJa, kEn); }),
            ErrorCode::LanguageRestriction);
}

TEST(ValidateTags, WholeVocabulary) {
  for (auto s : {"business", "disaster", "education", "medical", "municipality", "shopping",
                 "sightseeing", "sports", "transportation", "others"}) {
    const auto t = validate_tags({{"scene", s}}, kJa, kEn);
    EXPECT_EQ(to_string(*t.scene), s);
    EXPECT_EQ(parse_scene(s), *t.scene);
  }
  EXPECT_EQ(validate_tags({{"speaker", "japanese"}}, kJa, kEn).speaker, Speaker::Japanese);
}

TEST(SerializeTags, Examples) {
  ContextTags t;
  EXPECT_EQ(serialize_tags(t), "");
  t.scene = Scene::Disaster;
  EXPECT_EQ(serialize_tags(t), "<scn:disaster> ");
  t.speaker = Speaker::Foreigner;
  t.scene = Scene::Medical;
  EXPECT_EQ(serialize_tags(t), "<spk:foreigner> <scn:medical> ");
  t.subject = Subject::Watashi;
  t.gender = Gender::Male;
  EXPECT_EQ(serialize_tags(t), "<spk:foreigner> <scn:medical> <subj:watashi> <gen:male> ");
}

TEST(SerializeTags, RoundTripAndInjective) {
  Gen g(31);
  std::set<std::string> prefixes;
  std::vector<ContextTags> all;
  // Every combination: 3 * 11 * 3 * 3 values.
  for (int sp = -1; sp < 2; ++sp) {
    for (int sc = -1; sc < 10; ++sc) {
      for (int su = -1; su < 2; ++su) {
        for (int ge = -1; ge < 2; ++ge) {
          ContextTags t;
          if (sp >= 0) t.speaker = static_cast<Speaker>(sp);
          if (sc >= 0) t.scene = static_cast<Scene>(sc);
          if (su >= 0) t.subject = static_cast<Subject>(su);
          if (ge >= 0) t.gender = static_cast<Gender>(ge);
          all.push_back(t);
        }
      }
    }
  }
  for (const auto& t : all) {
    const auto prefix = serialize_tags(t);
    prefixes.insert(prefix);
    const auto body = g.word() + " " + g.word();
    const auto parsed = split_tag_prefix(prefix + body);
    EXPECT_EQ(parsed.tags, t);
    EXPECT_EQ(parsed.body, body);
  }
  EXPECT_EQ(prefixes.size(), all.size());
}

TEST(SplitTagPrefix, MalformedTagsStayInBody) {
  auto r = split_tag_prefix("<scn:cooking> hello");
  EXPECT_TRUE(r.tags.empty());
  EXPECT_EQ(r.body, "<scn:cooking> hello");
  r = split_tag_prefix("<spk:japanese> <oops> hi");
  EXPECT_EQ(r.tags.speaker, Speaker::Japanese);
  EXPECT_EQ(r.body, "<oops> hi");
  r = split_tag_prefix("plain");
  EXPECT_EQ(r.body, "plain");
}

TEST(HistoryBuffer, WindowExamples) {
  HistoryBuffer k3(3);
  for (int i = 1; i <= 5; ++i) k3.push("s" + std::to_string(i), "t" + std::to_string(i));
  const auto e = k3.entries();
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0].source, "s3");
  EXPECT_EQ(e[2].translation, "t5");

  HistoryBuffer k0(0);
  k0.push("a", "b");
  EXPECT_EQ(k0.size(), 0u);

  HistoryBuffer k2(2);
  k2.push("A", "a");
  k2.push("B", "b");
  EXPECT_EQ(k2.entries(), (std::vector<HistoryEntry>{{"A", "a"}, {"B", "b"}}));
}

TEST(HistoryBuffer, FifoProperty) {
  Gen g(8);
  for (int trial = 0; trial < 200; ++trial) {
    const auto k = static_cast<std::size_t>(g.range(0, 6));
    const auto m = static_cast<std::size_t>(g.range(0, 15));
    HistoryBuffer buf(k);
    for (std::size_t i = 0; i < m; ++i) buf.push(std::to_string(i), "x");
    const auto e = buf.entries();
    ASSERT_EQ(e.size(), std::min(m, k));
    for (std::size_t i = 0; i < e.size(); ++i) {
      EXPECT_EQ(e[i].source, std::to_string(m - e.size() + i));
    }
  }
}

TEST(RequestContext, Examples) {
  EXPECT_EQ(build_request_context({}, HistoryBuffer(3)), RequestContext{});

  ContextTags t;
  t.speaker = Speaker::Foreigner;
  t.scene = Scene::Medical;
  HistoryBuffer one(3);
  one.push("このあたりに病院はありませんか？", "Is there a hospital nearby?");
  const auto ctx = build_request_context(t, one);
  EXPECT_EQ(ctx.tag_prefix, "<spk:foreigner> <scn:medical> ");
  EXPECT_EQ(ctx.history.size(), 1u);

  HistoryBuffer full(3);
  for (auto s : {"a", "b", "c"}) full.push(s, s);
  const auto c3 = build_request_context({}, full);
  ASSERT_EQ(c3.history.size(), 3u);
  EXPECT_EQ(c3.history.front().source, "a");
}

TEST(RandomTags, SerializeIsStableUnderReparse) {
  Gen g(12);
  for (int i = 0; i < 100; ++i) {
    const auto t = random_tags(g);
    EXPECT_EQ(serialize_tags(split_tag_prefix(serialize_tags(t)).tags), serialize_tags(t));
  }
}
