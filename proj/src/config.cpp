#include "lossgate/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "lossgate/error.hpp"

namespace lossgate {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw UsageError("invalid value '" + std::string(value) + "' for " + std::string(key));
}

double to_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    bad_value(key, value);
  }
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

struct Field {
  std::string name;
  std::function<void(TrainerConfig&, std::string_view key, std::string_view)> set;
  std::function<std::string(const TrainerConfig&)> get;
};

template <typename T>
Field real_field(std::string name, T TrainerConfig::*member) {
  return {std::move(name),
          [member](TrainerConfig& c, std::string_view k, std::string_view v) {
            c.*member = to_double(k, v);
          },
          [member](const TrainerConfig& c) { return format_double(c.*member); }};
}

Field size_field(std::string name, std::size_t TrainerConfig::*member) {
  return {std::move(name),
          [member](TrainerConfig& c, std::string_view k, std::string_view v) {
            c.*member = static_cast<std::size_t>(to_uint(k, v));
          },
          [member](const TrainerConfig& c) { return std::to_string(c.*member); }};
}

Field bool_field(std::string name, bool TrainerConfig::*member) {
  return {std::move(name),
          [member](TrainerConfig& c, std::string_view k, std::string_view v) {
            c.*member = to_bool(k, v);
          },
          [member](const TrainerConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

template <typename S, typename M>
Field nested_real(std::string name, S TrainerConfig::*outer, M S::*inner) {
  return {std::move(name),
          [outer, inner](TrainerConfig& c, std::string_view k, std::string_view v) {
            (c.*outer).*inner = to_double(k, v);
          },
          [outer, inner](const TrainerConfig& c) { return format_double((c.*outer).*inner); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"mode",
                 [](TrainerConfig& c, std::string_view, std::string_view v) {
                   c.mode = parse_mode(v);
                 },
                 [](const TrainerConfig& c) { return std::string(to_string(c.mode)); }});
    f.push_back(real_field("n0", &TrainerConfig::n0_fraction));
    f.push_back(size_field("K", &TrainerConfig::threshold_window));
    f.push_back(size_field("W", &TrainerConfig::predictor_window));
    f.push_back(real_field("alt", &TrainerConfig::alt));
    f.push_back(real_field("variance_tolerance", &TrainerConfig::variance_tolerance));
    f.push_back(real_field("skip_margin_gamma", &TrainerConfig::skip_margin));
    f.push_back(size_field("epochs", &TrainerConfig::epochs));
    f.push_back(size_field("batch_size", &TrainerConfig::batch_size));
    f.push_back({"seed",
                 [](TrainerConfig& c, std::string_view k, std::string_view v) {
                   c.seed = to_uint(k, v);
                 },
                 [](const TrainerConfig& c) { return std::to_string(c.seed); }});
    f.push_back(bool_field("shuffle", &TrainerConfig::shuffle));
    f.push_back(real_field("lr", &TrainerConfig::learning_rate));
    f.push_back(real_field("nb_alpha", &TrainerConfig::nb_alpha));
    f.push_back({"batch_policy",
                 [](TrainerConfig& c, std::string_view, std::string_view v) {
                   c.batch_policy = parse_batch_policy(v);
                 },
                 [](const TrainerConfig& c) { return std::string(to_string(c.batch_policy)); }});
    f.push_back(real_field("fixed_threshold", &TrainerConfig::fixed_threshold));
    f.push_back(real_field("random_ratio", &TrainerConfig::random_ratio));
    f.push_back(nested_real("t_forward", &TrainerConfig::timing, &TimingModel::t_forward));
    f.push_back(nested_real("t_backward", &TrainerConfig::timing, &TimingModel::t_backward));
    f.push_back(nested_real("cpu_watts", &TrainerConfig::energy, &EnergyParams::cpu_watts));
    f.push_back(nested_real("dram_watts", &TrainerConfig::energy, &EnergyParams::dram_watts));
    f.push_back(nested_real("gpu_watts", &TrainerConfig::energy, &EnergyParams::gpu_watts));
    f.push_back(nested_real("gpu_count", &TrainerConfig::energy, &EnergyParams::gpu_count));
    f.push_back(nested_real("pue", &TrainerConfig::energy, &EnergyParams::pue));
    f.push_back(
        nested_real("co2_lbs_per_kwh", &TrainerConfig::energy, &EnergyParams::co2_lbs_per_kwh));
    f.push_back(real_field("seconds_per_time_unit", &TrainerConfig::seconds_per_time_unit));
    f.push_back(real_field("epsilon", &TrainerConfig::agot_epsilon));
    f.push_back(bool_field("eval_every_epoch", &TrainerConfig::eval_every_epoch));
    return f;
  }();
  return table;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

ConfigPairs parse_config_text(std::string_view text) {
  ConfigPairs out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw UsageError("config line " + std::to_string(line_no) + ": empty key");
    }
    out.emplace_back(std::string(key), std::string(value));
  }
  return out;
}

ConfigPairs read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_config_value(TrainerConfig& config, std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (f.name == key) {
      f.set(config, key, value);
      return;
    }
  }
  throw UsageError("unknown config key '" + std::string(key) + "'");
}

void apply_config(TrainerConfig& config, const ConfigPairs& pairs) {
  for (const auto& [k, v] : pairs) apply_config_value(config, k, v);
}

ConfigPairs config_to_pairs(const TrainerConfig& config) {
  ConfigPairs out;
  for (const auto& f : fields()) out.emplace_back(f.name, f.get(config));
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.name);
    return k;
  }();
  return keys;
}

}  // namespace lossgate
