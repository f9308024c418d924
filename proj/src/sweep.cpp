#include "lossgate/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "lossgate/config.hpp"
#include "lossgate/error.hpp"

namespace lossgate {

namespace {

bool uses_grid(Mode m) { return m == Mode::kThreeStage; }

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

struct Job {
  std::size_t config = 0;
  std::size_t epochs_index = 0;
  std::size_t seed_index = 0;
};

}  // namespace

std::optional<double> sample_std(std::span<const double> values) {
  if (values.size() < 2) return std::nullopt;
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::size_t default_threads() {
  if (const char* env = std::getenv("LOSSGATE_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::size_t SweepSpec::run_count() const {
  const std::size_t configs = 1 + n0.size() * W.size() * alt.size() + fixed_thresholds.size();
  return configs * epochs.size() * seeds.size();
}

void SweepSpec::validate() const {
  if (n0.empty() || W.empty() || alt.empty() || epochs.empty() || seeds.empty()) {
    throw UsageError("sweep grid is empty");
  }
  if (run_count() > max_runs) {
    throw UsageError("sweep grid has " + std::to_string(run_count()) +
                     " runs, above the cap of " + std::to_string(max_runs));
  }
}

std::string config_key(const TrainerConfig& c) {
  std::string key(to_string(c.mode));
  if (uses_grid(c.mode)) {
    key += "|n0=" + format_double(c.n0_fraction) + "|W=" + std::to_string(c.predictor_window) +
           "|alt=" + format_double(c.alt);
  }
  if (c.mode == Mode::kFixedThreshold) key += "|threshold=" + format_double(c.fixed_threshold);
  key += "|epochs=" + std::to_string(c.epochs) + "|seed=" + std::to_string(c.seed);
  return key;
}

std::optional<std::size_t> agot_optimal(std::span<const SweepRow> rows) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    if (r.kind != "run" || !r.agot) continue;
    if (!best) {
      best = i;
      continue;
    }
    const SweepRow& b = rows[*best];
    if (*r.agot != *b.agot) {
      if (*r.agot > *b.agot) best = i;
    } else if (r.t_norm != b.t_norm) {
      if (r.t_norm < b.t_norm) best = i;
    } else if (config_key(r.config) < config_key(b.config)) {
      best = i;
    }
  }
  return best;
}

SweepResult run_sweep(const SweepSpec& spec, std::span<const Example> train,
                      std::span<const Example> test, std::size_t threads) {
  spec.validate();

  std::vector<TrainerConfig> configs;
  TrainerConfig all = spec.base;
  all.mode = Mode::kTrainAll;
  configs.push_back(all);
  for (double n0 : spec.n0) {
    for (std::size_t w : spec.W) {
      for (double a : spec.alt) {
        TrainerConfig c = spec.base;
        c.mode = Mode::kThreeStage;
        c.n0_fraction = n0;
        c.predictor_window = w;
        c.alt = a;
        configs.push_back(c);
      }
    }
  }
  for (double t : spec.fixed_thresholds) {
    TrainerConfig c = spec.base;
    c.mode = Mode::kFixedThreshold;
    c.fixed_threshold = t;
    configs.push_back(c);
  }

  std::vector<Job> jobs;
  for (std::size_t e = 0; e < spec.epochs.size(); ++e) {
    for (std::size_t c = 0; c < configs.size(); ++c) {
      for (std::size_t s = 0; s < spec.seeds.size(); ++s) jobs.push_back({c, e, s});
    }
  }
  auto job_config = [&](const Job& j) {
    TrainerConfig c = configs[j.config];
    c.epochs = spec.epochs[j.epochs_index];
    c.seed = spec.seeds[j.seed_index];
    return c;
  };

  std::vector<std::optional<RunReport>> reports(jobs.size());
  std::vector<std::size_t> reference, rest;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    (jobs[i].config == 0 ? reference : rest).push_back(i);
  }
  parallel_for(reference.size(), threads, [&](std::size_t k) {
    const std::size_t i = reference[k];
    reports[i] = run(job_config(jobs[i]), train, test);
  });
  auto reference_accuracy = [&](const Job& j) {
    const std::size_t i = (j.epochs_index * configs.size()) * spec.seeds.size() + j.seed_index;
    return reports[i]->accuracy;
  };
  parallel_for(rest.size(), threads, [&](std::size_t k) {
    const std::size_t i = rest[k];
    RunOptions options;
    options.a_full = reference_accuracy(jobs[i]);
    reports[i] = run(job_config(jobs[i]), train, test, options);
  });

  SweepResult result;
  const std::size_t n_seeds = spec.seeds.size();
  for (std::size_t start = 0; start < jobs.size(); start += n_seeds) {
    std::vector<double> acc, tn, ab, afb, time, agots;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const std::size_t i = start + s;
      const RunReport& r = *reports[i];
      SweepRow row;
      row.kind = "run";
      row.config = job_config(jobs[i]);
      row.accuracy = r.accuracy;
      row.alpha_b = r.alpha_b;
      row.alpha_fb = r.alpha_fb;
      row.time = r.time;
      row.t_norm = r.t_norm;
      row.agot = r.agot;
      row.final_stage = r.final_stage;
      result.rows.push_back(row);
      acc.push_back(r.accuracy);
      tn.push_back(r.t_norm);
      ab.push_back(r.alpha_b);
      afb.push_back(r.alpha_fb);
      time.push_back(r.time);
      if (r.agot) agots.push_back(*r.agot);
    }
    SweepRow mean;
    mean.kind = "mean";
    mean.config = job_config(jobs[start]);
    mean.seeds = n_seeds;
    mean.accuracy = mean_of(acc);
    mean.accuracy_std = sample_std(acc);
    mean.alpha_b = mean_of(ab);
    mean.alpha_fb = mean_of(afb);
    mean.time = mean_of(time);
    mean.t_norm = mean_of(tn);
    mean.t_norm_std = sample_std(tn);
    if (agots.size() == n_seeds) mean.agot = mean_of(agots);
    result.rows.push_back(mean);
  }
  result.optimal = agot_optimal(result.rows);
  if (result.optimal) result.rows[*result.optimal].agot_optimal = true;
  return result;
}

std::string sweep_csv_header() {
  return "kind,mode,n0,W,alt,fixed_threshold,epochs,seed,seeds,accuracy,accuracy_std,"
         "alpha_b,alpha_fb,T,T_norm,T_norm_std,agot,final_stage,agot_optimal";
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = sweep_csv_header() + '\n';
  for (const SweepRow& r : result.rows) {
    const TrainerConfig& c = r.config;
    const bool grid = uses_grid(c.mode);
    const bool is_run = r.kind == "run";
    out += r.kind + ',' + std::string(to_string(c.mode)) + ',' +
           (grid ? format_double(c.n0_fraction) : "") + ',' +
           (grid ? std::to_string(c.predictor_window) : "") + ',' +
           (grid ? format_double(c.alt) : "") + ',' +
           (c.mode == Mode::kFixedThreshold ? format_double(c.fixed_threshold) : "") + ',' +
           std::to_string(c.epochs) + ',' + (is_run ? std::to_string(c.seed) : "") + ',' +
           std::to_string(r.seeds) + ',' + format_double(r.accuracy) + ',' +
           opt(r.accuracy_std) + ',' + format_double(r.alpha_b) + ',' +
           format_double(r.alpha_fb) + ',' + format_double(r.time) + ',' +
           format_double(r.t_norm) + ',' + opt(r.t_norm_std) + ',' + opt(r.agot) + ',' +
           (is_run ? std::to_string(r.final_stage) : "") + ',' +
           (r.agot_optimal ? "1" : "0") + '\n';
  }
  return out;
}

std::vector<CompareRow> run_compare(const TrainerConfig& base,
                                    std::span<const std::uint64_t> seeds,
                                    std::span<const double> fixed_thresholds,
                                    std::span<const Example> train,
                                    std::span<const Example> test, std::size_t threads) {
  if (seeds.empty()) throw UsageError("compare needs at least one seed");

  struct Method {
    std::string name;
    TrainerConfig config;
  };
  std::vector<Method> methods;
  auto add = [&](std::string name, Mode mode, double threshold = 0.0) {
    TrainerConfig c = base;
    c.mode = mode;
    c.fixed_threshold = threshold;
    methods.push_back({std::move(name), c});
  };
  add("train-all", Mode::kTrainAll);
  add("three-stage", Mode::kThreeStage);
  add("auto-threshold", Mode::kAutoThresholdOnly);
  for (double t : fixed_thresholds) {
    add("fixed-threshold(" + format_double(t) + ")", Mode::kFixedThreshold, t);
  }

  const std::size_t n = seeds.size();
  auto seeded = [&](TrainerConfig c, std::size_t s) {
    c.seed = seeds[s];
    return c;
  };

  std::vector<std::optional<RunReport>> reference(n);
  parallel_for(n, threads, [&](std::size_t s) {
    reference[s] = run(seeded(methods[0].config, s), train, test);
  });

  // Filtering runs, then their matched random-skip partners.
  const std::size_t filters = methods.size() - 1;
  std::vector<std::optional<RunReport>> filtered(filters * n), random(filters * n);
  parallel_for(filters * n, threads, [&](std::size_t i) {
    const std::size_t m = 1 + i / n, s = i % n;
    filtered[i] = run(seeded(methods[m].config, s), train, test,
                      {.a_full = reference[s]->accuracy, .on_step = {}});
  });
  parallel_for(filters * n, threads, [&](std::size_t i) {
    const std::size_t m = 1 + i / n, s = i % n;
    const double ratio = filtered[i]->alpha_b + filtered[i]->alpha_fb;
    random[i] = run_random_skip(seeded(methods[m].config, s), train, test,
                                std::min(ratio, std::nextafter(1.0, 0.0)),
                                {.a_full = reference[s]->accuracy, .on_step = {}});
  });

  auto summarize = [&](std::string method, std::string matched,
                       std::span<const std::optional<RunReport>> runs,
                       std::optional<double> target) {
    CompareRow row;
    row.method = std::move(method);
    row.matched_to = std::move(matched);
    row.target_ratio = target;
    row.seeds = runs.size();
    std::vector<double> acc, tn, skip, agots;
    for (const auto& r : runs) {
      acc.push_back(r->accuracy);
      tn.push_back(r->t_norm);
      skip.push_back(r->alpha_b + r->alpha_fb);
      if (r->agot) agots.push_back(*r->agot);
    }
    row.accuracy_mean = mean_of(acc);
    row.accuracy_std = sample_std(acc);
    row.t_norm_mean = mean_of(tn);
    row.t_norm_std = sample_std(tn);
    row.skip_mean = mean_of(skip);
    if (agots.size() == runs.size()) row.agot_mean = mean_of(agots);
    return row;
  };

  std::vector<CompareRow> rows;
  rows.push_back(summarize("train-all", "", reference, std::nullopt));
  for (std::size_t m = 0; m < filters; ++m) {
    const std::span<const std::optional<RunReport>> f(filtered.data() + m * n, n);
    const std::span<const std::optional<RunReport>> r(random.data() + m * n, n);
    CompareRow own = summarize(methods[m + 1].name, "", f, std::nullopt);
    const double target = own.skip_mean;
    rows.push_back(std::move(own));
    rows.push_back(summarize("random-skip", methods[m + 1].name, r, target));
  }
  return rows;
}

std::string compare_csv_header() {
  return "method,matched_to,target_ratio,seeds,accuracy_mean,accuracy_std,T_norm_mean,"
         "T_norm_std,skip_mean,agot_mean";
}

std::string compare_csv(std::span<const CompareRow> rows) {
  std::string out = compare_csv_header() + '\n';
  for (const CompareRow& r : rows) {
    out += r.method + ',' + r.matched_to + ',' + opt(r.target_ratio) + ',' +
           std::to_string(r.seeds) + ',' + format_double(r.accuracy_mean) + ',' +
           opt(r.accuracy_std) + ',' + format_double(r.t_norm_mean) + ',' +
           opt(r.t_norm_std) + ',' + format_double(r.skip_mean) + ',' + opt(r.agot_mean) + '\n';
  }
  return out;
}

}  // namespace lossgate
