#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "simulpipe/engines.hpp"
#include "simulpipe/error.hpp"
#include "support.hpp"

using namespace simulpipe;
using simulpipe::testing::descriptor;
using simulpipe::testing::fixture;
using simulpipe::testing::Gen;

namespace {

const LanguageCode kEn = LanguageCode::parse("en");
const LanguageCode kJa = LanguageCode::parse("ja");

TranslationRequest request(const std::string& text, LanguageCode src = kEn,
                           LanguageCode tgt = kJa) {
  TranslationRequest r{src, tgt, text, {}, SegmentKind::Sentence};
  return r;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

}  // namespace

TEST(Mocks, IdentityEchoesBody) {
  IdentityEngine e(descriptor("echo", 0));
  EXPECT_EQ(e.translate(request("any text here")), "any text here");
  EXPECT_EQ(e.translate(request("<spk:japanese> hello")), "hello");
  EXPECT_EQ(e.back_translate("y", request("x")), "y");
}

TEST(Mocks, CipherIsItsOwnInverse) {
  CipherEngine e(descriptor("rot", 0));
  const auto req = request("a b");
  const auto fwd = e.translate(req);
  EXPECT_EQ(fwd, "n o");
  EXPECT_EQ(e.translate(req), fwd);
  EXPECT_EQ(e.back_translate(fwd, req), "a b");
  Gen g(3);
  for (int i = 0; i < 100; ++i) {
    const auto text = g.word(8) + " " + g.word(8) + " Mixed-Case 42";
    const auto r = request(text);
    EXPECT_EQ(e.back_translate(e.translate(r), r), text);
  }
}

TEST(Mocks, DictionaryFixtureEntry) {
  DictionaryEngine e(descriptor("dict", 0), PhraseTable::load_file(fixture("dict/ja-en.dict")));
  const auto req = request("めまいがします。", kJa, kEn);
  EXPECT_EQ(e.translate(req), "I feel dizzy.");
  EXPECT_EQ(e.back_translate("I feel dizzy.", req), "めまいがします。");
}

TEST(Mocks, DictionaryAsymmetricReverseLowersSimilarity) {
  DictionaryEngine e(descriptor("dict", 0), PhraseTable::load_file(fixture("dict/ja-en.dict")),
                     PhraseTable::load_file(fixture("dict/en-ja-paraphrase.dict")));
  const auto req = request("めまいがします。", kJa, kEn);
  const auto back = e.back_translate(e.translate(req), req);
  EXPECT_EQ(back, "目が回ります。");
  EXPECT_LT(tf_cosine("めまいがします。", back, kJa), 1.0);
}

TEST(Mocks, DictionaryGreedyLongestMatch) {
  PhraseTable t;
  t.add("a", "A");
  t.add("a b", "AB");
  t.add("c", "C");
  EXPECT_EQ(t.apply("a b c a x", kEn, kEn), "AB C A x");
  PhraseTable dup;
  dup.add("x", "same");
  dup.add("y", "same");
  EXPECT_EQ(dup.inverted().apply("same", kEn, kEn), "x");
}

TEST(Mocks, NoisyIsDeterministicAndKeepsAToken) {
  NoisyEngine e(descriptor("noisy", 0), 0.9, 5);
  const auto req = request("one two three four five six");
  const auto out = e.translate(req);
  EXPECT_EQ(e.translate(req), out);
  EXPECT_FALSE(out.empty());
  EXPECT_THROW(NoisyEngine(descriptor("bad", 0), 1.0, 0), Error);
}

TEST(Mocks, FailingAndContractErrors) {
  FailingEngine f(descriptor("down", 0));
  EXPECT_EQ(code_of([&] { f.translate(request("x")); }), ErrorCode::EngineUnavailable);

  auto d = descriptor("one-way", 0);
  d.reverse_capable = false;
  IdentityEngine oneway(d);
  EXPECT_EQ(code_of([&] { oneway.back_translate("x", request("x")); }),
            ErrorCode::NotReverseCapable);

  auto p = descriptor("enja", 0);
  p.supports = {{"en", "ja"}};
  IdentityEngine pair_only(p);
  EXPECT_EQ(code_of([&] { pair_only.translate(request("x", kJa, kEn)); }),
            ErrorCode::UnsupportedPair);
  EXPECT_EQ(code_of([&] { pair_only.translate(request("")); }), ErrorCode::EmptyInput);
  EXPECT_EQ(code_of([&] { pair_only.translate(request("<scn:medical> ")); }),
            ErrorCode::EmptyResponse);
}

TEST(Vectorize, Examples) {
  EXPECT_EQ(vectorize("a b a", kEn), (TermVector{{"a", 2}, {"b", 1}}));
  EXPECT_TRUE(vectorize("", kEn).empty());
  EXPECT_EQ(vectorize("めまい", kJa), (TermVector{{"め", 1}, {"ま", 1}, {"い", 1}}));
}

TEST(Cosine, Examples) {
  const TermVector v{{"a", 2}, {"b", 1}};
  EXPECT_EQ(cosine(v, v), 1.0);
  EXPECT_EQ(cosine({{"a", 1}}, {{"b", 1}}), 0.0);
  EXPECT_EQ(cosine({{"a", 1}, {"b", 1}}, {{"a", 1}, {"c", 1}}), 0.5);
  EXPECT_EQ(cosine({}, v), 0.0);
}

TEST(Cosine, Properties) {
  Gen g(99);
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
  for (int i = 0; i < 500; ++i) {
    TermVector u;
    TermVector v;
    for (const auto& t : vocab) {
      if (g.coin()) u[t] = static_cast<double>(g.range(1, 5));
      if (g.coin()) v[t] = static_cast<double>(g.range(1, 5));
    }
    const auto uv = cosine(u, v);
    EXPECT_EQ(uv, cosine(v, u));
    EXPECT_GE(uv, 0.0);
    EXPECT_LE(uv, 1.0);
    if (!u.empty()) {
      EXPECT_NEAR(cosine(u, u), 1.0, 1e-12);
    }
  }
}

TEST(Broker, RejectsDuplicates) {
  EngineBroker b;
  b.add(std::make_shared<IdentityEngine>(descriptor("a", 0)));
  EXPECT_THROW(b.add(std::make_shared<IdentityEngine>(descriptor("a", 1))), Error);
  EXPECT_THROW(b.add(std::make_shared<IdentityEngine>(descriptor("b", 0))), Error);
}

TEST(Broker, EligibleFiltersAndOrders) {
  EngineBroker b;
  auto oneway = descriptor("oneway", 0);
  oneway.reverse_capable = false;
  auto chunk_only = descriptor("chunky", 3);
  chunk_only.granularities = {SegmentKind::Chunk};
  b.add(std::make_shared<IdentityEngine>(descriptor("late", 5)));
  b.add(std::make_shared<IdentityEngine>(oneway));
  b.add(std::make_shared<IdentityEngine>(chunk_only));
  b.add(std::make_shared<IdentityEngine>(descriptor("early", 1)));
  auto ids = [](const auto& engines) {
    std::vector<std::string> out;
    for (const auto& e : engines) out.push_back(e->id());
    return out;
  };
  EXPECT_EQ(ids(b.eligible(kJa, kEn, SegmentKind::Sentence)),
            (std::vector<std::string>{"early", "late"}));
  EXPECT_EQ(ids(b.eligible(kJa, kEn, SegmentKind::Chunk)),
            (std::vector<std::string>{"early", "chunky", "late"}));
}

TEST(SelectBest, SingleIdentityEngine) {
  EngineBroker b;
  b.add(std::make_shared<IdentityEngine>(descriptor("echo", 0)));
  const auto sel = select_best("hello there", request("<scn:others> hello there"), b);
  EXPECT_EQ(sel.winner.engine_id, "echo");
  EXPECT_DOUBLE_EQ(sel.winner.similarity, 1.0);
  EXPECT_EQ(sel.candidates.size(), 1u);
}

TEST(SelectBest, TieGoesToLowerPriorityNumber) {
  EngineBroker b;
  b.add(std::make_shared<CipherEngine>(descriptor("rot", 2)));
  b.add(std::make_shared<IdentityEngine>(descriptor("echo", 1)));
  const auto sel = select_best("a b", request("a b"), b);
  EXPECT_EQ(sel.winner.engine_id, "echo");
  EXPECT_DOUBLE_EQ(sel.candidates[1].similarity, 1.0);
}

TEST(SelectBest, InjectedScorerDecides) {
  auto dict = [](const std::string& id, int priority, const std::string& mid,
                 const std::string& back) {
    PhraseTable fwd;
    fwd.add("a b", mid);
    PhraseTable rev;
    rev.add(mid, back);
    return std::make_shared<DictionaryEngine>(descriptor(id, priority), fwd, rev);
  };
  EngineBroker b;
  b.add(dict("first", 0, "x", "p"));
  b.add(dict("second", 1, "y", "q"));
  const auto sel = select_best("a b", request("a b"), b,
                               [](std::string_view, std::string_view back, const LanguageCode&) {
                                 return back == "q" ? 0.9 : 0.1;
                               });
  EXPECT_EQ(sel.winner.engine_id, "second");
  EXPECT_EQ(sel.winner.forward, "y");
  EXPECT_DOUBLE_EQ(sel.candidates[0].similarity, 0.1);
}

TEST(SelectBest, FailuresDegradeGracefully) {
  EngineBroker b;
  b.add(std::make_shared<FailingEngine>(descriptor("down", 0)));
  b.add(std::make_shared<NoisyEngine>(descriptor("noisy", 1), 0.5, 1));
  const auto sel = select_best("one two three four", request("one two three four"), b);
  EXPECT_EQ(sel.winner.engine_id, "noisy");
  ASSERT_EQ(sel.candidates.size(), 2u);
  EXPECT_TRUE(sel.candidates[0].failed);
  EXPECT_FALSE(sel.candidates[0].error.empty());

  EngineBroker dead;
  dead.add(std::make_shared<FailingEngine>(descriptor("down", 0)));
  EXPECT_EQ(code_of([&] { select_best("x", request("x"), dead); }), ErrorCode::AllEnginesFailed);
  EXPECT_EQ(code_of([&] { select_best("x", request("x"), EngineBroker{}); }),
            ErrorCode::NoEngineAvailable);
}

TEST(SelectBest, ReversibleBeatsNoisy) {
  Gen g(4);
  for (int i = 0; i < 100; ++i) {
    EngineBroker b(g.coin());
    const auto p = static_cast<int>(g.range(0, 1));
    b.add(std::make_shared<CipherEngine>(descriptor("rot", p)));
    b.add(std::make_shared<NoisyEngine>(descriptor("noisy", 1 - p), 0.4,
                                        static_cast<std::uint64_t>(i)));
    std::string text = g.word();
    for (int k = 0; k < 6; ++k) text += " " + g.word();
    const auto sel = select_best(text, request(text), b);
    EXPECT_EQ(sel.winner.engine_id, "rot");
    EXPECT_DOUBLE_EQ(sel.winner.similarity, 1.0);
  }
}

TEST(PickWinner, OrderIndependentAndMaximal) {
  Gen g(61);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<TranslationCandidate> c;
    const auto n = g.range(1, 6);
    for (std::int64_t i = 0; i < n; ++i) {
      TranslationCandidate x;
      x.engine_id = "e" + std::to_string(i);
      x.priority = static_cast<int>(i);
      x.similarity = static_cast<double>(g.range(0, 4)) / 4.0;
      x.failed = g.coin(0.2);
      c.push_back(x);
    }
    const auto best = pick_winner(c);
    const bool any_ok = std::any_of(c.begin(), c.end(), [](auto& x) { return !x.failed; });
    ASSERT_EQ(best.has_value(), any_ok);
    if (!best) continue;
    const auto id = c[*best].engine_id;
    for (const auto& x : c) {
      if (!x.failed) {
        EXPECT_GE(c[*best].similarity, x.similarity);
      }
    }
    for (int k = 0; k < 5; ++k) {
      std::shuffle(c.begin(), c.end(), g.engine());
      EXPECT_EQ(c[*pick_winner(c)].engine_id, id);
    }
  }
}

TEST(MakeEngine, Kinds) {
  EngineSpec s;
  s.id = "x";
  for (auto kind : {"identity", "cipher", "noisy", "failing"}) {
    s.kind = kind;
    EXPECT_EQ(make_engine(s)->id(), "x");
  }
  s.kind = "dictionary";
  EXPECT_THROW(make_engine(s), Error);
  s.dictionary = fixture("dict/ja-en.dict");
  EXPECT_NO_THROW(make_engine(s));
  s.kind = "telepathy";
  EXPECT_THROW(make_engine(s), Error);
  s.kind = "identity";
  s.latency = {10, 5};
  EXPECT_THROW(make_engine(s), Error);
}

// ---- remote adapter against a local server ----

class RemoteEngineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/translate", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      last_body_ = req.body;
      std::string text = body.at("text");
      std::reverse(text.begin(), text.end());
      res.set_content(nlohmann::json{{"text", text}}.dump(), "application/json");
    });
    server_.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
      res.status = 503;
    });
    server_.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(400));
      res.set_content(R"({"text":"late"})", "application/json");
    });
    server_.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("not json", "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::string last_body_;
};

TEST_F(RemoteEngineTest, RoundTripAndWireFormat) {
  RemoteEngine e(descriptor("remote", 0), url("/translate"), 2000, 2);
  auto req = request("abc");
  req.context.history = {{"s1", "t1"}};
  req.granularity = SegmentKind::Chunk;
  EXPECT_EQ(e.translate(req), "cba");
  EXPECT_EQ(last_body_,
            R"({"src":"en","tgt":"ja","text":"abc","history":[["s1","t1"]],"granularity":"chunk"})");
  EXPECT_EQ(e.back_translate("cba", req), "abc");
  EXPECT_EQ(nlohmann::json::parse(last_body_).at("src"), "ja");
}

TEST_F(RemoteEngineTest, FailuresAreEngineUnavailable) {
  RemoteEngine broken(descriptor("b", 0), url("/broken"), 2000, 1);
  EXPECT_EQ(code_of([&] { broken.translate(request("x")); }), ErrorCode::EngineUnavailable);
  RemoteEngine slow(descriptor("s", 0), url("/slow"), 100, 1);
  EXPECT_EQ(code_of([&] { slow.translate(request("x")); }), ErrorCode::EngineUnavailable);
  RemoteEngine garbage(descriptor("g", 0), url("/garbage"), 2000, 1);
  EXPECT_EQ(code_of([&] { garbage.translate(request("x")); }), ErrorCode::EngineUnavailable);
  EXPECT_THROW(RemoteEngine(descriptor("u", 0), "127.0.0.1/x", 100, 1), Error);
}

TEST_F(RemoteEngineTest, ParallelBrokerSelection) {
  EngineBroker b(true);
  b.add(std::make_shared<RemoteEngine>(descriptor("remote", 0), url("/translate"), 2000, 4));
  b.add(std::make_shared<RemoteEngine>(descriptor("down", 1), url("/broken"), 2000, 4));
  b.add(std::make_shared<IdentityEngine>(descriptor("echo", 2)));
  const auto sel = select_best("a b", request("a b"), b);
  EXPECT_EQ(sel.winner.engine_id, "remote");
  EXPECT_TRUE(sel.candidates[1].failed);
}
