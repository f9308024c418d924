#include "lossgate/report.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "lossgate/config.hpp"
#include "lossgate/error.hpp"

namespace lossgate {

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json config_to_json(const TrainerConfig& config) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [k, v] : config_to_pairs(config)) {
    if (nlohmann::json::accept(v)) {
      out[k] = nlohmann::json::parse(v);
    } else {
      out[k] = v;
    }
  }
  return out;
}

nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json j;
  j["mode"] = r.mode;
  j["accuracy"] = r.accuracy;
  j["a_base"] = r.a_base;
  j["a_full"] = optional_json(r.a_full);
  j["epoch_accuracies"] = r.epoch_accuracies;
  j["batches_total"] = r.batches_total;
  j["full_steps"] = r.full_steps;
  j["backward_skipped"] = r.backward_skipped;
  j["forward_skipped"] = r.forward_skipped;
  j["alpha_b"] = r.alpha_b;
  j["alpha_fb"] = r.alpha_fb;
  j["T"] = r.time;
  j["T_all"] = r.time_all;
  j["T_norm"] = r.t_norm;
  j["t_norm_degenerate"] = r.t_norm == 0.0;
  j["agot"] = optional_json(r.agot);
  j["p_t"] = r.energy_kwh;
  j["co2e"] = r.co2e_lbs;

  nlohmann::json bounds = nlohmann::json::array();
  for (const auto& b : r.stage_boundaries) {
    bounds.push_back({{"from", static_cast<int>(b.from)},
                      {"to", static_cast<int>(b.to)},
                      {"epoch", b.epoch},
                      {"batch", b.batch},
                      {"global_batch", b.global_batch}});
  }
  j["stage_boundaries"] = std::move(bounds);
  j["final_stage"] = r.final_stage;
  j["l_low"] = optional_json(r.l_low);

  j["diagnostics"] = {{"freeze_variance", optional_json(r.freeze_variance)},
                      {"threshold_stable_at_freeze", r.threshold_stable_at_freeze},
                      {"overhead_seconds", r.overhead_seconds}};
  j["config"] = config_to_json(r.config);
  return j;
}

void write_report(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << report_to_json(report).dump(2) << '\n';
}

std::string summary_line(const RunReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%s accuracy=%.4f alpha_b=%.4f alpha_fb=%.4f T_norm=%.4f agot=%s stage=%d",
                r.mode.c_str(), r.accuracy, r.alpha_b, r.alpha_fb, r.t_norm,
                r.agot ? format_double(*r.agot).c_str() : "n/a", r.final_stage);
  return buf;
}

}  // namespace lossgate
