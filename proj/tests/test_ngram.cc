// test_ngram.cc
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <map>

#include "cmdlm/grammar.h"
#include "cmdlm/ngram.h"
#include "cmdlm/rng.h"
#include "doctest.h"

using namespace cmdlm;

namespace {

Automaton ToyGrammar() {
  const std::string source = R"(
    command = ("watch"|"follow") ("the"|"that"|"this"|"one")
              ("truck"|"boat"|"car"|"buoy")
              ["now"|"slowly"|"quickly"|"later"] ;
  )";
  return CompileGrammar(ParseGrammar(source));
}

// Independent n-gram tally over word strings, for checking CountNGrams.
std::map<std::vector<std::string>, uint64_t> NaiveTally(
    const std::vector<Command>& corpus, int order) {
  std::map<std::vector<std::string>, uint64_t> counts;
  for (const Command& sentence : corpus) {
    std::vector<std::string> padded;
    padded.push_back("<s>");
    padded.insert(padded.end(), sentence.begin(), sentence.end());
    padded.push_back("</s>");
    for (int n = 1; n <= order; ++n) {
      for (size_t start = 0; start + n <= padded.size(); ++start) {
        std::vector<std::string> gram(padded.begin() + start,
                                      padded.begin() + start + n);
        if (n == 1 && gram[0] == "<s>") continue;
        ++counts[gram];
      }
    }
  }
  return counts;
}

// A picked-by-hand conditional model: order 1 with explicit unigram
// probabilities, bypassing estimation.
NGramModel HandUnigramModel(const std::vector<std::string>& words,
                            const std::map<std::string, double>& probs,
                            double default_prob) {
  NGramModel m(1, Vocab::FromWords(words));
  auto& table = m.mutable_table(1);
  for (int32_t id = 0; id < m.vocab().size(); ++id) {
    if (id == Vocab::kBos) continue;
    auto it = probs.find(m.vocab().Word(id));
    NGramModel::Entry e;
    e.logp = std::log10(it == probs.end() ? default_prob : it->second);
    table[PackGram(&id, 1)] = e;
  }
  NGramModel::Entry bos;
  bos.logp = -99.0;
  table[PackGram(&Vocab::kBos, 1)] = bos;
  return m;
}

std::vector<std::string> RandomContext(const Vocab& v, Rng* rng, int max_len) {
  std::vector<std::string> ctx;
  const int len = static_cast<int>(rng->Below(max_len + 1));
  if (len > 0 && rng->Below(3) == 0) ctx.push_back(Vocab::kBosWord);
  while (static_cast<int>(ctx.size()) < len) {
    ctx.push_back(v.Word(static_cast<int32_t>(rng->Below(v.size()))));
  }
  return ctx;
}

}  // namespace

TEST_SUITE_BEGIN("ngram");

TEST_CASE("vocab: reserved ids and OOV") {
  Vocab v = Vocab::Build({{"b", "a"}, {"a"}}, 100);
  CHECK(v.Id("<unk>") == Vocab::kUnk);
  CHECK(v.Id("<s>") == Vocab::kBos);
  CHECK(v.Id("</s>") == Vocab::kEos);
  CHECK(v.Id("a") == 3);  // more frequent than b
  CHECK(v.Id("b") == 4);
  CHECK(v.Id("zebra") == Vocab::kUnk);
  CHECK(v.size() == 5);
  CHECK(v.predictable_size() == 4);
}

TEST_CASE("vocab: frequency cap") {
  std::vector<Command> corpus = {{"a", "a", "a", "b", "b", "c"}};
  Vocab v = Vocab::Build(corpus, 5);
  CHECK(v.size() == 5);
  CHECK(v.Contains("a"));
  CHECK(v.Contains("b"));
  CHECK_FALSE(v.Contains("c"));
}

TEST_CASE("vocab: save and load round trip") {
  Vocab v = Vocab::Build({{"go", "left"}, {"go"}}, 100);
  const std::string path = "/tmp/cmdlm_vocab_test.txt";
  v.SaveFile(path);
  Vocab loaded = Vocab::LoadFile(path);
  std::remove(path.c_str());
  CHECK(loaded == v);
}

TEST_CASE("count: single sentence hand counts") {
  Vocab v = Vocab::Build({{"a", "b"}}, 100);
  NGramCounts c = CountNGrams({{"a", "b"}}, 2, v);
  REQUIRE(c.per_order.size() == 2);
  CHECK(c.per_order[0].size() == 3);  // a, b, </s>; no <s> unigram
  const int32_t a = v.Id("a"), b = v.Id("b");
  CHECK(c.per_order[0].at(PackGram(&a, 1)) == 1);
  CHECK(c.per_order[1].size() == 3);  // (<s>,a), (a,b), (b,</s>)
  const std::vector<int32_t> start_a = {Vocab::kBos, a};
  const std::vector<int32_t> ab = {a, b};
  CHECK(c.per_order[1].at(PackGram(start_a)) == 1);
  CHECK(c.per_order[1].at(PackGram(ab)) == 1);
}

TEST_CASE("count: duplicated sentence doubles counts") {
  Vocab v = Vocab::Build({{"a", "b"}}, 100);
  NGramCounts once = CountNGrams({{"a", "b"}}, 2, v);
  NGramCounts twice = CountNGrams({{"a", "b"}, {"a", "b"}}, 2, v);
  for (int n = 0; n < 2; ++n) {
    REQUIRE(once.per_order[n].size() == twice.per_order[n].size());
    for (const auto& [key, c] : once.per_order[n]) {
      CHECK(twice.per_order[n].at(key) == 2 * c);
    }
  }
}

TEST_CASE("count: matches a naive sliding-window tally") {
  std::vector<Command> corpus =
      Sample(ToyGrammar(), 50, 21, SampleMode::kProductionUniform);
  Vocab v = Vocab::Build(corpus, 1000);
  NGramCounts c = CountNGrams(corpus, 4, v);
  auto oracle = NaiveTally(corpus, 4);

  uint64_t oracle_total[4] = {0, 0, 0, 0};
  for (const auto& [gram, count] : oracle) {
    std::vector<int32_t> ids;
    for (const std::string& w : gram) ids.push_back(v.Id(w));
    const auto& table = c.per_order[gram.size() - 1];
    REQUIRE(table.count(PackGram(ids)) == 1);
    CHECK(table.at(PackGram(ids)) == count);
    ++oracle_total[gram.size() - 1];
  }
  for (int n = 0; n < 4; ++n) CHECK(c.per_order[n].size() == oracle_total[n]);
}

TEST_CASE("count: errors") {
  Vocab v;
  CHECK_THROWS_AS(CountNGrams({}, 2, v), DataError);
  CHECK_THROWS_AS(CountNGrams({{"a"}}, 0, v), DataError);
  CHECK_THROWS_AS(CountNGrams({{"a"}}, 5, v), DataError);
}

TEST_CASE("witten-bell: hand-derived single-sentence fixture") {
  // Corpus {"a b"}, order 2.  Event space {a, b, </s>, <unk>}.
  // Unigrams: T=3 tokens, k=3 types, held-out mass k/(T+k)=1/2 spread
  // uniformly over 4 events:
  //   p(a) = 1/6 + (1/2)(1/4) = 7/24, same for b and </s>
  //   p(<unk>) = (1/2)(1/4) = 3/24
  // Bigrams after "a": T=1, k=1:
  //   p(b|a) = 1/2 + (1/2)(7/24) = 31/48
  //   bow(a) = (1 - 31/48) / (1 - 7/24) = 1/2
  NGramModel m = TrainNGram({{"a", "b"}}, 2, Vocab::Build({{"a", "b"}}, 100),
                            Smoothing::kWittenBell);
  const double eps = 1e-9;
  CHECK(std::pow(10.0, m.CondLogProb({}, "a")) == doctest::Approx(7.0 / 24).epsilon(eps));
  CHECK(std::pow(10.0, m.CondLogProb({}, "b")) == doctest::Approx(7.0 / 24).epsilon(eps));
  CHECK(std::pow(10.0, m.CondLogProb({}, "</s>")) == doctest::Approx(7.0 / 24).epsilon(eps));
  CHECK(std::pow(10.0, m.CondLogProb({}, "<unk>")) == doctest::Approx(3.0 / 24).epsilon(eps));
  CHECK(std::pow(10.0, m.CondLogProb({"a"}, "b")) == doctest::Approx(31.0 / 48).epsilon(eps));
  CHECK(std::pow(10.0, m.CondLogProb({"<s>"}, "a")) == doctest::Approx(31.0 / 48).epsilon(eps));
  // Unseen bigram backs off through bow(a) = 1/2.
  CHECK(std::pow(10.0, m.CondLogProb({"a"}, "a")) ==
        doctest::Approx(0.5 * 7.0 / 24).epsilon(eps));
}

TEST_CASE("kneser-ney: hand-derived single-sentence fixture") {
  // Corpus {"a b"}, order 2.  All continuation and raw counts are 1, so
  // D=1 at both orders and all stored mass comes from the base
  // distribution: every unigram is 1/4 and p(b|a) = p1(b) = 1/4.
  NGramModel m = TrainNGram({{"a", "b"}}, 2, Vocab::Build({{"a", "b"}}, 100),
                            Smoothing::kKneserNey);
  const double eps = 1e-9;
  for (const std::string& w : {"a", "b", "</s>", "<unk>"}) {
    CHECK(std::pow(10.0, m.CondLogProb({}, w)) == doctest::Approx(0.25).epsilon(eps));
  }
  CHECK(std::pow(10.0, m.CondLogProb({"a"}, "b")) == doctest::Approx(0.25).epsilon(eps));
}

TEST_CASE("kneser-ney: degenerate counts are rejected") {
  // Every n-gram count equals 2: no singletons to estimate a discount.
  std::vector<Command> corpus = {{"a", "b"}, {"a", "b"}};
  Vocab v = Vocab::Build(corpus, 100);
  CHECK_THROWS_WITH_AS(TrainNGram(corpus, 2, v, Smoothing::kKneserNey),
                       doctest::Contains("witten-bell"), DataError);
  CHECK_NOTHROW(TrainNGram(corpus, 2, v, Smoothing::kWittenBell));
}

TEST_CASE("estimate: near-uniform corpus gives near-uniform unigrams") {
  Command sentence;
  for (int i = 0; i < 50; ++i) sentence.push_back("w" + std::to_string(i));
  Vocab v = Vocab::Build({sentence}, 1000);
  NGramModel m = TrainNGram({sentence}, 1, v, Smoothing::kWittenBell);
  for (int i = 0; i < 50; ++i) {
    const double p = std::pow(10.0, m.CondLogProb({}, "w" + std::to_string(i)));
    CHECK(p == doctest::Approx(1.0 / 50).epsilon(0.05));
  }
}

TEST_CASE("normalization: every context sums to one") {
  std::vector<Command> corpus =
      Sample(ToyGrammar(), 300, 77, SampleMode::kProductionUniform);
  Vocab v = Vocab::Build(corpus, 1000);
  for (Smoothing s : {Smoothing::kWittenBell, Smoothing::kKneserNey}) {
    NGramModel m = TrainNGram(corpus, 4, v, s);
    Rng rng(50);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<std::string> ctx = RandomContext(v, &rng, 4);
      CHECK(NextWordProbSum(m, ctx) == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("mixture: hand arithmetic") {
  auto dom = std::make_shared<const NGramModel>(
      HandUnigramModel({"x", "y"}, {{"x", 0.2}}, 0.05));
  auto gen = std::make_shared<const NGramModel>(
      HandUnigramModel({"x", "y"}, {{"x", 0.1}}, 0.05));
  MixtureModel mix = Interpolate(dom, gen, 0.9);
  CHECK(std::pow(10.0, mix.CondLogProb({}, "x")) ==
        doctest::Approx(0.19).epsilon(1e-12));
}

TEST_CASE("mixture: endpoint weights reproduce the components") {
  std::vector<Command> corpus_a =
      Sample(ToyGrammar(), 120, 1, SampleMode::kProductionUniform);
  std::vector<Command> corpus_b =
      Sample(ToyGrammar(), 120, 2, SampleMode::kProductionUniform);
  Vocab v = Vocab::Build(corpus_a, 1000);
  auto dom = std::make_shared<const NGramModel>(
      TrainNGram(corpus_a, 3, v, Smoothing::kWittenBell));
  auto gen = std::make_shared<const NGramModel>(
      TrainNGram(corpus_b, 3, v, Smoothing::kWittenBell));
  MixtureModel only_dom = Interpolate(dom, gen, 1.0);
  MixtureModel only_gen = Interpolate(dom, gen, 0.0);
  for (const Command& c : Sample(ToyGrammar(), 20, 3, SampleMode::kLanguageUniform)) {
    CHECK(SentenceLogProb10(only_dom, c) ==
          doctest::Approx(SentenceLogProb10(*dom, c)).epsilon(1e-9));
    CHECK(SentenceLogProb10(only_gen, c) ==
          doctest::Approx(SentenceLogProb10(*gen, c)).epsilon(1e-9));
  }
}

TEST_CASE("mixture: token linearity against components") {
  std::vector<Command> corpus =
      Sample(ToyGrammar(), 200, 4, SampleMode::kProductionUniform);
  Vocab v = Vocab::Build(corpus, 1000);
  auto dom = std::make_shared<const NGramModel>(
      TrainNGram(corpus, 4, v, Smoothing::kWittenBell));
  auto gen = std::make_shared<const NGramModel>(
      TrainNGram({corpus.begin(), corpus.begin() + 40}, 2, v,
                 Smoothing::kWittenBell));
  MixtureModel mix = Interpolate(dom, gen, 0.9);
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> ctx = RandomContext(v, &rng, 3);
    const std::string w = v.Word(static_cast<int32_t>(rng.Below(v.size())));
    const double expected = std::log10(
        0.9 * std::pow(10.0, dom->CondLogProb(ctx, w)) +
        0.1 * std::pow(10.0, gen->CondLogProb(ctx, w)));
    CHECK(mix.CondLogProb(ctx, w) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("mixture: normalization and validation") {
  std::vector<Command> corpus =
      Sample(ToyGrammar(), 150, 9, SampleMode::kProductionUniform);
  Vocab v = Vocab::Build(corpus, 1000);
  auto dom = std::make_shared<const NGramModel>(
      TrainNGram(corpus, 4, v, Smoothing::kWittenBell));
  auto gen = std::make_shared<const NGramModel>(
      TrainNGram(corpus, 2, v, Smoothing::kWittenBell));
  MixtureModel mix = Interpolate(dom, gen, 0.9);
  Rng rng(51);
  for (int trial = 0; trial < 50; ++trial) {
    CHECK(NextWordProbSum(mix, RandomContext(v, &rng, 3)) ==
          doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK_THROWS_AS(Interpolate(dom, gen, -0.1), DataError);
  CHECK_THROWS_AS(Interpolate(dom, gen, 1.1), DataError);
}

TEST_CASE("prune: identity when the budget is loose") {
  std::vector<Command> corpus =
      Sample(ToyGrammar(), 100, 13, SampleMode::kProductionUniform);
  Vocab v = Vocab::Build(corpus, 1000);
  NGramModel m = TrainNGram(corpus, 3, v, Smoothing::kWittenBell);
  NGramModel pruned = Prune(m, m.TotalNGrams());
  CHECK(ArpaWrite(pruned) == ArpaWrite(m));
}

TEST_CASE("prune: down to unigrams") {
  std::vector<Command> corpus =
      Sample(ToyGrammar(), 100, 14, SampleMode::kProductionUniform);
  Vocab v = Vocab::Build(corpus, 1000);
  NGramModel m = TrainNGram(corpus, 3, v, Smoothing::kWittenBell);
  const uint64_t unigrams = m.table(1).size();
  NGramModel pruned = Prune(m, unigrams);
  CHECK(pruned.TotalNGrams() == unigrams);
  CHECK(pruned.table(2).empty());
  CHECK(pruned.table(3).empty());
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    CHECK(NextWordProbSum(pruned, RandomContext(v, &rng, 3)) ==
          doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK_THROWS_AS(Prune(m, unigrams - 1), DataError);
}

TEST_CASE("prune: lowest-count entries go first and sums survive") {
  // "a b" dominates; "a c" is the rare bigram and must be dropped first.
  std::vector<Command> corpus;
  for (int i = 0; i < 6; ++i) corpus.push_back({"a", "b"});
  corpus.push_back({"a", "c"});
  Vocab v = Vocab::Build(corpus, 100);
  NGramModel m = TrainNGram(corpus, 2, v, Smoothing::kWittenBell);
  NGramModel pruned = Prune(m, m.TotalNGrams() - 1);

  const std::vector<int32_t> ac = {v.Id("a"), v.Id("c")};
  const std::vector<int32_t> ab = {v.Id("a"), v.Id("b")};
  CHECK(pruned.table(2).count(PackGram(ac)) == 0);
  CHECK(pruned.table(2).count(PackGram(ab)) == 1);

  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    CHECK(NextWordProbSum(pruned, RandomContext(v, &rng, 2)) ==
          doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("prune: budgeted size on a 4-gram model, still normalized") {
  std::vector<Command> corpus =
      Sample(ToyGrammar(), 400, 15, SampleMode::kProductionUniform);
  Vocab v = Vocab::Build(corpus, 1000);
  NGramModel m = TrainNGram(corpus, 4, v, Smoothing::kWittenBell);
  const uint64_t budget = m.table(1).size() + 25;
  NGramModel pruned = Prune(m, budget);
  CHECK(pruned.TotalNGrams() <= budget);
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    CHECK(NextWordProbSum(pruned, RandomContext(v, &rng, 4)) ==
          doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("perplexity: uniform model scores the event-space size") {
  NGramModel uniform = HandUnigramModel({"a", "b", "c"}, {}, 1.0 / 5.0);
  CHECK(Perplexity(uniform, {{"a", "b"}}) == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(Perplexity(uniform, {{"c"}, {"a", "a", "b"}}) ==
        doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("perplexity: training beats the uniform baseline") {
  std::vector<Command> corpus =
      Sample(ToyGrammar(), 200, 16, SampleMode::kProductionUniform);
  Vocab v = Vocab::Build(corpus, 1000);
  NGramModel m = TrainNGram(corpus, 4, v, Smoothing::kWittenBell);
  CHECK(Perplexity(m, corpus) < static_cast<double>(v.predictable_size()));
}

TEST_CASE("perplexity: single-token sentence") {
  NGramModel uniform = HandUnigramModel({"a"}, {}, 1.0 / 3.0);
  // One word plus </s>: ppl = (p(a)p(</s>))^(-1/2) = 3.
  CHECK(Perplexity(uniform, {{"a"}}) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("perplexity: monotone data benefit across seeded folds") {
  Automaton g = ToyGrammar();
  std::vector<Command> eval = Sample(g, 300, 999, SampleMode::kProductionUniform);
  double prev_mean = 1e18;
  for (uint64_t size : {64, 128, 256, 512}) {
    double sum = 0.0;
    for (int fold = 0; fold < 5; ++fold) {
      std::vector<Command> train =
          Sample(g, size, DeriveSeed(1234, {size, static_cast<uint64_t>(fold)}),
                 SampleMode::kProductionUniform);
      Vocab v = Vocab::Build(train, 1000);
      NGramModel m = TrainNGram(train, 4, v, Smoothing::kWittenBell);
      sum += Perplexity(m, eval);
    }
    const double mean = sum / 5.0;
    CHECK(mean <= prev_mean);
    prev_mean = mean;
  }
}

TEST_CASE("scoring: OOV words fall back to the unknown token") {
  std::vector<Command> corpus =
      Sample(ToyGrammar(), 100, 17, SampleMode::kProductionUniform);
  Vocab v = Vocab::Build(corpus, 1000);
  NGramModel m = TrainNGram(corpus, 3, v, Smoothing::kWittenBell);
  const double oov = SentenceLogProb10(m, {"watch", "the", "zeppelin"});
  const double unk = SentenceLogProb10(m, {"watch", "the", "<unk>"});
  CHECK(oov == doctest::Approx(unk).epsilon(1e-12));
  CHECK(std::isfinite(oov));
}

TEST_CASE("arpa: write-read-write is byte identical") {
  std::vector<Command> corpus =
      Sample(ToyGrammar(), 250, 18, SampleMode::kProductionUniform);
  Vocab v = Vocab::Build(corpus, 1000);
  for (Smoothing s : {Smoothing::kWittenBell, Smoothing::kKneserNey}) {
    NGramModel m = TrainNGram(corpus, 4, v, s);
    const std::string once = ArpaWrite(m);
    NGramModel loaded = ArpaRead(once);
    CHECK(ArpaWrite(loaded) == once);
  }
}

TEST_CASE("arpa: round trip preserves scores") {
  std::vector<Command> corpus =
      Sample(ToyGrammar(), 250, 19, SampleMode::kProductionUniform);
  Vocab v = Vocab::Build(corpus, 1000);
  NGramModel m = TrainNGram(corpus, 4, v, Smoothing::kWittenBell);
  NGramModel loaded = ArpaRead(ArpaWrite(m));

  std::vector<Command> eval = Sample(ToyGrammar(), 40, 20, SampleMode::kLanguageUniform);
  for (const Command& c : eval) {
    CHECK(SentenceLogProb10(loaded, c) ==
          doctest::Approx(SentenceLogProb10(m, c)).epsilon(1e-3));
  }
  const double p1 = Perplexity(m, eval);
  const double p2 = Perplexity(loaded, eval);
  CHECK(std::abs(p1 - p2) / p1 < 1e-3);
}

TEST_CASE("arpa: minimal hand-written fixture loads and scores") {
  const std::string fixture =
      "\\data\\\n"
      "ngram 1=5\n"
      "\n"
      "\\1-grams:\n"
      "-0.698970\t</s>\n"
      "-99.000000\t<s>\n"
      "-0.698970\t<unk>\n"
      "-0.698970\ta\n"
      "-0.698970\tb\n"
      "\n"
      "\\end\\\n";
  NGramModel m = ArpaRead(fixture);
  CHECK(m.order() == 1);
  CHECK(m.vocab().size() == 5);
  CHECK(SentenceLogProb10(m, {"a"}) == doctest::Approx(2 * -0.698970).epsilon(1e-9));
  CHECK(Perplexity(m, {{"a", "b"}}) == doctest::Approx(5.0).epsilon(1e-4));
}

TEST_CASE("arpa: malformed inputs carry diagnostics") {
  CHECK_THROWS_WITH_AS(ArpaRead("\\1-grams:\n-0.5 a\n\\end\\\n"),
                       doctest::Contains("\\data\\"), DataError);
  CHECK_THROWS_AS(ArpaRead(""), DataError);
  // Truncated: no end marker.
  CHECK_THROWS_AS(
      ArpaRead("\\data\\\nngram 1=1\n\\1-grams:\n-0.5\ta\n"), DataError);
  CHECK_THROWS_AS(
      ArpaRead("\\data\\\nngram 1=2\n\\1-grams:\n-0.5\ta\n\\end\\\n"),
      DataError);  // declared 2, found 1
  CHECK_THROWS_AS(
      ArpaRead("\\data\\\nngram 1=1\n\\1-grams:\nnotanumber\ta\n\\end\\\n"),
      DataError);
  CHECK_THROWS_AS(
      ArpaRead("\\data\\\nngram 1=1\nngram 2=1\n\\1-grams:\n-0.5\ta\n"
               "\\2-grams:\n-0.5\ta q\n\\end\\\n"),
      DataError);  // q missing from unigrams
}

TEST_CASE("model files: mixture spec round trip") {
  std::vector<Command> corpus =
      Sample(ToyGrammar(), 150, 22, SampleMode::kProductionUniform);
  Vocab v = Vocab::Build(corpus, 1000);
  auto dom = std::make_shared<const NGramModel>(
      TrainNGram(corpus, 3, v, Smoothing::kWittenBell));
  auto gen = std::make_shared<const NGramModel>(
      TrainNGram({corpus.begin(), corpus.begin() + 30}, 2, v,
                 Smoothing::kWittenBell));

  ArpaWriteFile("/tmp/cmdlm_dom.arpa", *dom);
  ArpaWriteFile("/tmp/cmdlm_gen.arpa", *gen);
  WriteMixtureFile("/tmp/cmdlm_mix.json", "cmdlm_dom.arpa", "cmdlm_gen.arpa", 0.9);

  auto loaded = LoadModelFile("/tmp/cmdlm_mix.json");
  MixtureModel direct = Interpolate(dom, gen, 0.9);
  for (const Command& c : Sample(ToyGrammar(), 15, 23, SampleMode::kLanguageUniform)) {
    CHECK(SentenceLogProb10(*loaded, c) ==
          doctest::Approx(SentenceLogProb10(direct, c)).epsilon(1e-4));
  }

  auto plain = LoadModelFile("/tmp/cmdlm_dom.arpa");
  CHECK(SentenceLogProb10(*plain, {"watch", "the", "truck"}) ==
        doctest::Approx(SentenceLogProb10(*dom, {"watch", "the", "truck"}))
            .epsilon(1e-4));
  std::remove("/tmp/cmdlm_dom.arpa");
  std::remove("/tmp/cmdlm_gen.arpa");
  std::remove("/tmp/cmdlm_mix.json");
}

TEST_CASE("determinism: identical corpora give identical models") {
  std::vector<Command> corpus =
      Sample(ToyGrammar(), 200, 24, SampleMode::kProductionUniform);
  Vocab v = Vocab::Build(corpus, 1000);
  const std::string a = ArpaWrite(TrainNGram(corpus, 4, v, Smoothing::kWittenBell));
  const std::string b = ArpaWrite(TrainNGram(corpus, 4, v, Smoothing::kWittenBell));
  CHECK(a == b);
}

TEST_SUITE_END();
