#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "lossgate/data.hpp"
#include "lossgate/error.hpp"

using namespace lossgate;

TEST_CASE("fnv-1a golden values") {
  CHECK(hash64("good") == 0x9ce4d6720e9c9118ULL);
  CHECK(hash64("movie") == 0x2703fa92fbc5c30fULL);
  CHECK(hash64("") == 0xcbf29ce484222325ULL);

  auto bucket = [](const char* t) {
    const std::vector<std::string> toks{t};
    return vectorize(toks).buckets.at(0);
  };
  CHECK(bucket("good") == 37144);
  CHECK(bucket("movie") == 115471);
  CHECK(bucket("a") == 126092);
}

TEST_CASE("tokenize lowercases and splits on punctuation") {
  CHECK(tokenize("Good movie!") == std::vector<std::string>{"good", "movie"});
  CHECK(tokenize("  a,b;;C9 ") == std::vector<std::string>{"a", "b", "c9"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("...").empty());
  // UTF-8 bytes stay inside the token.
  CHECK(tokenize("caf\xc3\xa9 ok") == std::vector<std::string>{"caf\xc3\xa9", "ok"});
}

TEST_CASE("vectorize gives sorted unique presence buckets") {
  const std::vector<std::string> toks{"movie", "good", "good"};
  const BowVector v = vectorize(toks);
  REQUIRE(v.size() == 2);
  CHECK(v.buckets[0] == 37144);
  CHECK(v.buckets[1] == 115471);
  CHECK(v.contains(37144));
  CHECK_FALSE(v.contains(1));
  CHECK(std::is_sorted(v.buckets.begin(), v.buckets.end()));
}

TEST_CASE("jsonl parsing") {
  const auto ex = parse_dataset("{\"text\":\"good movie\",\"label\":1}\n\n{\"sentence\":\"Bad\",\"label\":0}\n");
  REQUIRE(ex.size() == 2);
  CHECK(ex[0].tokens == std::vector<std::string>{"good", "movie"});
  CHECK(ex[0].label == 1);
  CHECK(ex[1].label == 0);
  CHECK(ex[0].features == vectorize(ex[0].tokens));

  const auto pair = parse_dataset("{\"text\":\"a\",\"text_b\":\"b\",\"label\":0}\n");
  CHECK(pair[0].tokens == std::vector<std::string>{"a", "sep", "b"});
}

TEST_CASE("jsonl errors carry the line number") {
  CHECK_THROWS_WITH_AS(parse_dataset("{\"text\":\"a\",\"label\":1}\n{\"text\":\"b\",\"label\":2}\n"),
                       doctest::Contains("line 2"), Error);
  CHECK_THROWS_WITH_AS(parse_dataset("{\"text\":\"a\",\"label\":2}\n"),
                       doctest::Contains("label out of range"), Error);
  CHECK_THROWS_AS(parse_dataset("not json\n"), Error);
  CHECK_THROWS_AS(parse_dataset("{\"label\":1}\n"), Error);
}

TEST_CASE("tsv parsing") {
  LoadOptions tsv{DataFormat::kTsv, false};
  const auto ex = parse_dataset("good movie\t1\nbad\t0\n", tsv);
  REQUIRE(ex.size() == 2);
  CHECK(ex[0].label == 1);

  LoadOptions header{DataFormat::kTsv, true};
  CHECK(parse_dataset("text\tlabel\nx\t0\n", header).size() == 1);
  CHECK(parse_dataset("a\tb\t1\n", tsv)[0].tokens.size() == 3);
  CHECK_THROWS_AS(parse_dataset("just text\n", tsv), Error);
  CHECK_THROWS_AS(parse_dataset("x\tyes\n", tsv), Error);
}

TEST_CASE("missing file is a usage error") {
  CHECK_THROWS_WITH_AS(load_dataset("/nonexistent/file.jsonl"),
                       doctest::Contains("dataset not found"), UsageError);
  CHECK(parse_format("tsv") == DataFormat::kTsv);
  CHECK_THROWS_AS(parse_format("csv"), UsageError);
}

TEST_CASE("permutation is a deterministic bijection") {
  const auto p = permutation(1000, 42);
  auto sorted = p;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> iota(1000);
  std::iota(iota.begin(), iota.end(), 0);
  CHECK(sorted == iota);
  CHECK(permutation(1000, 42) == p);
  CHECK(permutation(1000, 43) != p);
  CHECK(permutation(0, 1).empty());
}

TEST_CASE("batching covers every example once") {
  std::vector<Example> data;
  for (int i = 0; i < 23; ++i) data.push_back(make_example("t" + std::to_string(i), i % 2));
  CHECK(batch_count(23, 5) == 5);

  const auto batches = make_batches(data, 5, 9, true);
  REQUIRE(batches.size() == 5);
  std::set<const Example*> seen;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    CHECK(batches[i].index == i);
    CHECK(batches[i].size() >= 1);
    CHECK(batches[i].size() <= 5);
    for (auto* e : batches[i].examples) seen.insert(e);
  }
  CHECK(batches.back().size() == 3);
  CHECK(seen.size() == 23);

  const auto plain = make_batches(data, 5, 9, false);
  CHECK(plain[0].examples[0] == &data[0]);
  CHECK_THROWS_AS(make_batches(data, 0, 1, true), Error);
}

TEST_CASE("holdout split partitions the data") {
  std::vector<Example> data;
  for (int i = 0; i < 100; ++i) data.push_back(make_example("t" + std::to_string(i), i % 2));
  const auto split = holdout_split(data, 0.2, 3);
  CHECK(split.test.size() == 20);
  CHECK(split.train.size() == 80);
  std::set<std::string> texts;
  for (const auto& e : split.train) texts.insert(e.text);
  for (const auto& e : split.test) texts.insert(e.text);
  CHECK(texts.size() == 100);
}
