#include "lossgate/toy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "lossgate/error.hpp"
#include "lossgate/rng.hpp"

namespace lossgate {

namespace {

class ZipfTable {
 public:
  ZipfTable(std::size_t n, double exponent) : cdf_(n) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += 1.0 / std::pow(static_cast<double>(i + 1), exponent);
      cdf_[i] = total;
    }
    for (auto& c : cdf_) c /= total;
  }

  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

struct Prototype {
  std::string text;
  int label = 0;
};

class Generator {
 public:
  explicit Generator(const ToyCorpusSpec& spec)
      : spec_(spec),
        neutral_(spec.neutral_vocab, spec.zipf_exponent),
        head_(spec.head_vocab, spec.zipf_exponent) {}

  Prototype draw(Rng& rng) const {
    Prototype p;
    p.label = rng.bernoulli(0.5) ? 1 : 0;
    const bool hard = rng.bernoulli(spec_.hard_fraction);
    const std::size_t length =
        spec_.min_length + rng.below(spec_.max_length - spec_.min_length + 1);
    const double signal = hard ? spec_.hard_signal : spec_.easy_signal;
    const std::size_t tail = spec_.class_vocab - spec_.head_vocab;
    for (std::size_t i = 0; i < length; ++i) {
      if (i > 0) p.text.push_back(' ');
      if (rng.bernoulli(signal)) {
        const std::size_t word =
            hard ? spec_.head_vocab + rng.below(tail) : head_.draw(rng);
        p.text += (p.label == 1 ? "pos" : "neg") + std::to_string(word);
      } else {
        p.text += "w" + std::to_string(neutral_.draw(rng));
      }
    }
    return p;
  }

 private:
  const ToyCorpusSpec& spec_;
  ZipfTable neutral_;
  ZipfTable head_;
};

}  // namespace

void ToyCorpusSpec::validate() const {
  if (train_examples == 0) throw UsageError("toy corpus needs at least one example");
  if (duplication == 0) throw UsageError("duplication factor must be positive");
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) {
    throw UsageError("label noise must lie in [0, 1]");
  }
  if (neutral_vocab == 0 || class_vocab == 0) throw UsageError("vocabulary must be non-empty");
  if (min_length == 0 || max_length < min_length) throw UsageError("bad length range");
  if (head_vocab == 0 || head_vocab >= class_vocab) {
    throw UsageError("head vocabulary must be non-empty and smaller than the class vocabulary");
  }
  if (!(hard_fraction >= 0.0 && hard_fraction <= 1.0)) {
    throw UsageError("hard fraction must lie in [0, 1]");
  }
  if (!(easy_signal >= 0.0 && easy_signal <= 1.0 && hard_signal >= 0.0 &&
        hard_signal <= 1.0)) {
    throw UsageError("signal probabilities must lie in [0, 1]");
  }
}

ToyCorpus generate_toy(const ToyCorpusSpec& spec) {
  spec.validate();
  const Generator gen(spec);
  Rng rng(derive_seed(spec.seed, 0x746f79));  // "toy"

  const std::size_t unique = (spec.train_examples + spec.duplication - 1) / spec.duplication;
  std::vector<Prototype> protos;
  protos.reserve(unique);
  for (std::size_t i = 0; i < unique; ++i) {
    Prototype p = gen.draw(rng);
    if (rng.bernoulli(spec.label_noise)) p.label = 1 - p.label;
    protos.push_back(std::move(p));
  }

  ToyCorpus corpus;
  corpus.train.reserve(spec.train_examples);
  for (std::size_t i = 0; i < spec.train_examples; ++i) {
    const Prototype& p = protos[i % unique];
    corpus.train.push_back(make_example(p.text, p.label));
  }
  // Spread the copies through the file.
  const auto order = permutation(corpus.train.size(), derive_seed(spec.seed, 0x6f7264));
  std::vector<Example> shuffled;
  shuffled.reserve(corpus.train.size());
  for (auto i : order) shuffled.push_back(std::move(corpus.train[i]));
  corpus.train = std::move(shuffled);

  corpus.test.reserve(spec.test_examples);
  for (std::size_t i = 0; i < spec.test_examples; ++i) {
    Prototype p = gen.draw(rng);
    corpus.test.push_back(make_example(std::move(p.text), p.label));
  }
  return corpus;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Example>& examples) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& ex : examples) {
    out << nlohmann::json{{"text", ex.text}, {"label", ex.label}}.dump() << '\n';
  }
}

}  // namespace lossgate
