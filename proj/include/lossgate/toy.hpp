#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lossgate/data.hpp"

namespace lossgate {

// Synthetic redundant two-class text corpus built from two tiers of
// prototypes. Easy prototypes draw their class-indicative tokens from the
// `head_vocab` most frequent words of their class; hard prototypes (a
// `hard_fraction` of all) draw them uniformly from the remaining tail and
// carry fewer of them. Every other token comes from a shared Zipf-shaped
// neutral vocabulary. Training prototypes are repeated `duplication` times
// and a fraction `label_noise` of prototypes get their label flipped (all
// copies alike). The test set is freshly drawn with clean labels.
struct ToyCorpusSpec {
  std::size_t train_examples = 20000;
  std::size_t test_examples = 5000;
  std::size_t duplication = 5;
  double label_noise = 0.05;
  std::size_t neutral_vocab = 2000;
  std::size_t class_vocab = 400;
  std::size_t head_vocab = 20;
  double hard_fraction = 0.4;
  std::size_t min_length = 8;
  std::size_t max_length = 24;
  // Probability that a token is class-indicative, per tier.
  double easy_signal = 0.35;
  double hard_signal = 0.15;
  double zipf_exponent = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct ToyCorpus {
  std::vector<Example> train;
  std::vector<Example> test;
};

ToyCorpus generate_toy(const ToyCorpusSpec& spec);

void write_jsonl(const std::filesystem::path& path, const std::vector<Example>& examples);

}  // namespace lossgate
