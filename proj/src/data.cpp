#include "lossgate/data.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lossgate/error.hpp"
#include "lossgate/rng.hpp"

namespace lossgate {

namespace {

constexpr std::string_view kPairSeparator = " [SEP] ";

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}

int checked_label(long long value, std::size_t line) {
  if (value != 0 && value != 1) {
    throw Error("line " + std::to_string(line) + ": label out of range (" +
                std::to_string(value) + ")");
  }
  return static_cast<int>(value);
}

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\r';
  });
}

Example parse_jsonl_record(std::string_view line, std::size_t line_no) {
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("line " + std::to_string(line_no) + ": malformed JSON record");
  }
  if (!record.is_object()) {
    throw Error("line " + std::to_string(line_no) + ": record is not an object");
  }
  auto text_it = record.find("text");
  if (text_it == record.end()) text_it = record.find("sentence");
  if (text_it == record.end() || !text_it->is_string()) {
    throw Error("line " + std::to_string(line_no) + ": missing string field 'text'");
  }
  auto label_it = record.find("label");
  if (label_it == record.end() || !label_it->is_number_integer()) {
    throw Error("line " + std::to_string(line_no) + ": missing integer field 'label'");
  }
  std::string text = text_it->get<std::string>();
  for (const char* second : {"text_b", "sentence2"}) {
    auto it = record.find(second);
    if (it != record.end() && it->is_string()) {
      text.append(kPairSeparator);
      text.append(it->get<std::string>());
      break;
    }
  }
  return make_example(std::move(text),
                      checked_label(label_it->get<long long>(), line_no));
}

Example parse_tsv_record(std::string_view line, std::size_t line_no) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  if (cols.size() != 2 && cols.size() != 3) {
    throw Error("line " + std::to_string(line_no) +
                ": expected text<TAB>label columns");
  }
  const std::string_view label_col = cols.back();
  long long label = 0;
  std::size_t used = 0;
  try {
    label = std::stoll(std::string(label_col), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != label_col.size()) {
    throw Error("line " + std::to_string(line_no) + ": label is not an integer");
  }
  std::string text(cols[0]);
  if (cols.size() == 3) {
    text.append(kPairSeparator);
    text.append(cols[1]);
  }
  return make_example(std::move(text), checked_label(label, line_no));
}

}  // namespace

bool BowVector::contains(std::uint32_t bucket) const {
  return std::binary_search(buckets.begin(), buckets.end(), bucket);
}

DataFormat parse_format(std::string_view name) {
  if (name == "jsonl" || name == "json") return DataFormat::kJsonl;
  if (name == "tsv") return DataFormat::kTsv;
  throw UsageError("unknown data format '" + std::string(name) + "'");
}

std::uint64_t hash64(std::string_view token) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_token_byte(c)) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                             : static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

BowVector vectorize(std::span<const std::string> tokens) {
  BowVector v;
  v.buckets.reserve(tokens.size());
  for (const auto& t : tokens) {
    v.buckets.push_back(static_cast<std::uint32_t>(hash64(t) % kHashDimension));
  }
  std::sort(v.buckets.begin(), v.buckets.end());
  v.buckets.erase(std::unique(v.buckets.begin(), v.buckets.end()), v.buckets.end());
  return v;
}

Example make_example(std::string text, int label) {
  Example ex;
  ex.tokens = tokenize(text);
  ex.text = std::move(text);
  ex.label = label;
  ex.features = vectorize(ex.tokens);
  return ex;
}

std::vector<Example> parse_dataset(std::string_view contents,
                                   const LoadOptions& options) {
  std::vector<Example> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < contents.size()) {
    auto nl = contents.find('\n', pos);
    if (nl == std::string_view::npos) nl = contents.size();
    const std::string_view line = trim_cr(contents.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (options.format == DataFormat::kTsv && options.tsv_header && line_no == 1) {
      continue;
    }
    if (blank(line)) continue;
    out.push_back(options.format == DataFormat::kJsonl
                      ? parse_jsonl_record(line, line_no)
                      : parse_tsv_record(line, line_no));
  }
  return out;
}

std::vector<Example> load_dataset(const std::filesystem::path& path,
                                  const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("dataset not found: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), options);
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::size_t batch_count(std::size_t examples, std::size_t batch_size) {
  return batch_size == 0 ? 0 : (examples + batch_size - 1) / batch_size;
}

std::vector<MiniBatch> make_batches(std::span<const Example> examples,
                                    std::size_t batch_size, std::uint64_t seed,
                                    bool shuffle) {
  if (batch_size == 0) throw Error("batch_size must be positive");
  if (examples.empty()) throw Error("cannot batch an empty dataset");
  std::vector<std::size_t> order;
  if (shuffle) {
    order = permutation(examples.size(), seed);
  } else {
    order.resize(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  }
  std::vector<MiniBatch> batches(batch_count(examples.size(), batch_size));
  for (std::size_t b = 0; b < batches.size(); ++b) {
    batches[b].index = b;
    const std::size_t begin = b * batch_size;
    const std::size_t end = std::min(begin + batch_size, examples.size());
    batches[b].examples.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      batches[b].examples.push_back(&examples[order[i]]);
    }
  }
  return batches;
}

Split holdout_split(std::vector<Example> examples, double fraction,
                    std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw UsageError("holdout fraction must be in (0, 1)");
  }
  const auto order = permutation(examples.size(), seed);
  const auto n_test = static_cast<std::size_t>(
      static_cast<double>(examples.size()) * fraction);
  Split split;
  split.train.reserve(examples.size() - n_test);
  split.test.reserve(n_test);
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = i + n_test < order.size() ? split.train : split.test;
    dst.push_back(std::move(examples[order[i]]));
  }
  return split;
}

}  // namespace lossgate
