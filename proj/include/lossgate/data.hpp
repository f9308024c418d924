#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lossgate {

inline constexpr std::uint32_t kHashBits = 18;
inline constexpr std::uint32_t kHashDimension = 1u << kHashBits;

// Presence-only bag of words over the hashed bucket space. Buckets are kept
// sorted and unique.
struct BowVector {
  std::vector<std::uint32_t> buckets;

  static constexpr std::uint32_t dimension() { return kHashDimension; }
  std::size_t size() const { return buckets.size(); }
  bool empty() const { return buckets.empty(); }
  bool contains(std::uint32_t bucket) const;

  friend bool operator==(const BowVector&, const BowVector&) = default;
};

struct Example {
  std::string text;
  std::vector<std::string> tokens;
  int label = 0;
  // Cached vectorize(tokens); filled by make_example().
  BowVector features;
};

// A batch borrows its examples from the dataset it was cut from; the dataset
// must outlive it.
struct MiniBatch {
  std::size_t index = 0;
  std::vector<const Example*> examples;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
  const Example& operator[](std::size_t i) const { return *examples[i]; }
};

enum class DataFormat { kJsonl, kTsv };

DataFormat parse_format(std::string_view name);

// FNV-1a, 64 bit. Stable across runs and platforms.
std::uint64_t hash64(std::string_view token);

// Lowercase, split on anything that is not an ASCII letter or digit, drop the
// separators. Bytes >= 0x80 are kept as part of tokens so UTF-8 words survive.
std::vector<std::string> tokenize(std::string_view text);

BowVector vectorize(std::span<const std::string> tokens);

Example make_example(std::string text, int label);

struct LoadOptions {
  DataFormat format = DataFormat::kJsonl;
  bool tsv_header = false;
};

// Records in file order. Sentence pairs (`text_b` / `sentence2` in JSONL, a
// third TSV column) are joined to the first text with a " [SEP] " token.
std::vector<Example> load_dataset(const std::filesystem::path& path,
                                  const LoadOptions& options = {});

std::vector<Example> parse_dataset(std::string_view contents,
                                   const LoadOptions& options = {});

// Deterministic Fisher-Yates permutation of [0, n) driven by a fixed 64-bit
// generator, so the order is the same on every standard library.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed);

std::vector<MiniBatch> make_batches(std::span<const Example> examples,
                                    std::size_t batch_size,
                                    std::uint64_t seed, bool shuffle);

std::size_t batch_count(std::size_t examples, std::size_t batch_size);

// Splits off the last `fraction` of a seeded permutation as a held-out set.
struct Split {
  std::vector<Example> train;
  std::vector<Example> test;
};
Split holdout_split(std::vector<Example> examples, double fraction,
                    std::uint64_t seed);

}  // namespace lossgate
