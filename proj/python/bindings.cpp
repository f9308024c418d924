#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lossgate/config.hpp"
#include "lossgate/data.hpp"
#include "lossgate/error.hpp"
#include "lossgate/metapredictor.hpp"
#include "lossgate/metrics.hpp"
#include "lossgate/model.hpp"
#include "lossgate/report.hpp"
#include "lossgate/sweep.hpp"
#include "lossgate/threshold.hpp"
#include "lossgate/toy.hpp"
#include "lossgate/trainer.hpp"

namespace py = pybind11;
using namespace lossgate;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

BowVector to_bow(std::vector<std::uint32_t> buckets) {
  std::sort(buckets.begin(), buckets.end());
  buckets.erase(std::unique(buckets.begin(), buckets.end()), buckets.end());
  return BowVector{std::move(buckets)};
}

std::vector<BowVector> to_bows(const std::vector<std::vector<std::uint32_t>>& rows) {
  std::vector<BowVector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(to_bow(r));
  return out;
}

MiniBatch batch_of(const std::vector<Example>& examples) {
  MiniBatch b;
  for (const auto& e : examples) b.examples.push_back(&e);
  return b;
}

TrainerConfig config_from_kwargs(const py::kwargs& kwargs) {
  TrainerConfig c;
  for (const auto& [k, v] : kwargs) {
    std::string value = py::isinstance<py::bool_>(v) ? (v.cast<bool>() ? "true" : "false")
                                                     : py::str(v).cast<std::string>();
    apply_config_value(c, k.cast<std::string>(), value);
  }
  return c;
}

py::dict config_dict(const TrainerConfig& c) { return to_python(config_to_json(c)); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Loss-gated training core";

  // Translators are tried newest first, so the subclass goes last.
  auto base = py::register_exception<Error>(m, "LossgateError", PyExc_RuntimeError);
  py::register_exception<UsageError>(m, "UsageError", base.ptr());

  // data
  m.def("hash64", &hash64);
  m.def("tokenize", &tokenize);
  m.def("vectorize", [](const std::vector<std::string>& tokens) { return vectorize(tokens).buckets; });

  py::class_<Example>(m, "Example")
      .def(py::init(&make_example), py::arg("text"), py::arg("label"))
      .def_readonly("text", &Example::text)
      .def_readonly("tokens", &Example::tokens)
      .def_readonly("label", &Example::label)
      .def_property_readonly("features", [](const Example& e) { return e.features.buckets; })
      .def("__repr__", [](const Example& e) {
        return "Example(" + py::repr(py::str(e.text)).cast<std::string>() + ", " +
               std::to_string(e.label) + ")";
      });

  m.def(
      "load_dataset",
      [](const std::string& path, const std::string& format, bool header) {
        return load_dataset(path, {parse_format(format), header});
      },
      py::arg("path"), py::arg("format") = "jsonl", py::arg("header") = false);
  m.def(
      "parse_dataset",
      [](const std::string& text, const std::string& format, bool header) {
        return parse_dataset(text, {parse_format(format), header});
      },
      py::arg("text"), py::arg("format") = "jsonl", py::arg("header") = false);

  // target model
  py::class_<ForwardResult>(m, "ForwardResult")
      .def_readonly("per_example_losses", &ForwardResult::per_example_losses)
      .def_readonly("per_example_probs", &ForwardResult::per_example_probs)
      .def_readonly("batch_loss", &ForwardResult::batch_loss);

  py::class_<TargetModel>(m, "TargetModel")
      .def(py::init<double>(), py::arg("learning_rate") = 0.5)
      .def_property_readonly("learning_rate", &TargetModel::learning_rate)
      .def_property_readonly("step_count", &TargetModel::step_count)
      .def_property_readonly("bias", &TargetModel::bias)
      .def("weight", &TargetModel::weight)
      .def("set_weight", &TargetModel::set_weight)
      .def("set_bias", &TargetModel::set_bias)
      .def("logit", [](const TargetModel& model, std::vector<std::uint32_t> buckets) {
        return model.logit(to_bow(std::move(buckets)));
      })
      .def("to_json", [](const TargetModel& model) { return to_python(model_to_json(model)); })
      .def_static("from_json", [](const py::object& obj) {
        const std::string text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
        return model_from_json(nlohmann::json::parse(text));
      })
      .def("__eq__", [](const TargetModel& a, const TargetModel& b) { return a == b; });

  m.def("forward", [](const TargetModel& model, const std::vector<Example>& batch) {
    return forward(model, batch_of(batch));
  });
  m.def("backward", [](TargetModel& model, const ForwardResult& fr,
                       const std::vector<Example>& batch) { backward(model, fr, batch_of(batch)); });
  m.def("gradient", [](const ForwardResult& fr, const std::vector<Example>& batch) {
    const Gradient g = gradient(fr, batch_of(batch));
    return py::make_tuple(g.weights, g.bias);
  });
  m.def("evaluate", [](const TargetModel& model, const std::vector<Example>& examples) {
    return evaluate(model, examples);
  });

  // threshold
  py::class_<ThresholdState>(m, "ThresholdState")
      .def(py::init<std::size_t, double>(), py::arg("window"), py::arg("skip_margin") = 1.0)
      .def("observe_loss", &ThresholdState::observe_loss)
      .def("freeze", &ThresholdState::freeze)
      .def("pin", &ThresholdState::pin)
      .def_property_readonly("low", &ThresholdState::low)
      .def_property_readonly("frozen", &ThresholdState::frozen)
      .def_property_readonly("window_full", &ThresholdState::window_full)
      .def("window_values", &ThresholdState::window_values)
      .def("effective_threshold", &ThresholdState::effective_threshold)
      .def("should_skip_backward", &ThresholdState::should_skip_backward)
      .def("variance", &ThresholdState::variance)
      .def("is_stable", &ThresholdState::is_stable);

  // meta-predictor
  m.def("make_label", &make_label);
  py::class_<NaiveBayesModel>(m, "NaiveBayesModel")
      .def(py::init<double>(), py::arg("alpha") = 1.0)
      .def_property_readonly("alpha", &NaiveBayesModel::alpha)
      .def("class_count", &NaiveBayesModel::class_count)
      .def("update",
           [](NaiveBayesModel& nb, const std::vector<std::vector<std::uint32_t>>& rows, int label) {
             nb.update(to_bows(rows), label);
           })
      .def("posterior", [](const NaiveBayesModel& nb, std::vector<std::uint32_t> x) {
        return nb.posterior(to_bow(std::move(x)));
      })
      .def("predict_batch",
           [](const NaiveBayesModel& nb, const std::vector<std::vector<std::uint32_t>>& rows,
              const std::string& policy) {
             const auto p = nb_predict_batch(nb, to_bows(rows), parse_batch_policy(policy));
             py::dict d;
             d["decision"] = p.decision;
             d["mean_p1"] = p.mean_p1;
             d["fail_open"] = p.fail_open;
             return d;
           },
           py::arg("rows"), py::arg("policy") = "mean")
      .def("loss",
           [](const NaiveBayesModel& nb, const std::vector<std::vector<std::uint32_t>>& rows,
              const std::vector<int>& labels) { return predictor_loss(nb, to_bows(rows), labels); })
      .def("to_json", [](const NaiveBayesModel& nb) { return to_python(predictor_to_json(nb)); });

  // metrics
  m.def(
      "total_time",
      [](double alpha_b, double alpha_fb, double t_forward, double t_backward,
         std::uint64_t batches) {
        return total_time({alpha_b, alpha_fb}, {t_forward, t_backward}, batches);
      },
      py::arg("alpha_b"), py::arg("alpha_fb"), py::arg("t_forward") = 1.0,
      py::arg("t_backward") = 2.0, py::arg("num_batches") = 1);
  m.def("t_norm", &t_norm);
  m.def(
      "agot",
      [](double accuracy, double tn, double a_base, double a_full, double epsilon) {
        return agot(accuracy, tn, {epsilon, a_base, a_full});
      },
      py::arg("accuracy"), py::arg("t_norm"), py::arg("a_base"), py::arg("a_full"),
      py::arg("epsilon") = 0.95);
  m.def(
      "energy_co2",
      [](double cpu, double dram, double gpu, double gpu_count, double hours, double pue,
         double k) {
        const auto e = energy_co2({cpu, dram, gpu, gpu_count, hours, pue, k});
        return py::make_tuple(e.kwh, e.co2e_lbs);
      },
      py::arg("cpu_watts"), py::arg("dram_watts"), py::arg("gpu_watts"), py::arg("gpu_count"),
      py::arg("hours"), py::arg("pue") = 1.58, py::arg("co2_lbs_per_kwh") = 0.954);

  // trainer
  py::class_<TrainerConfig>(m, "TrainerConfig")
      .def(py::init(&config_from_kwargs))
      .def("set",
           [](TrainerConfig& c, const std::string& key, const py::object& v) {
             apply_config_value(c, key, py::str(v).cast<std::string>());
           })
      .def("to_dict", &config_dict)
      .def("__repr__", [](const TrainerConfig& c) {
        return "TrainerConfig(" + py::repr(config_dict(c)).cast<std::string>() + ")";
      });
  m.def("config_keys", &config_keys);

  m.def(
      "run",
      [](const TrainerConfig& c, const std::vector<Example>& train,
         const std::optional<std::vector<Example>>& test, std::optional<double> a_full) {
        RunReport r;
        {
          py::gil_scoped_release release;
          c.validate();
          r = run(c, train, test ? std::span<const Example>(*test) : std::span<const Example>(),
                  {.a_full = a_full, .on_step = {}});
        }
        return to_python(report_to_json(r));
      },
      py::arg("config"), py::arg("train"), py::arg("test") = py::none(),
      py::arg("a_full") = py::none());
  m.def(
      "run_random_skip",
      [](const TrainerConfig& c, const std::vector<Example>& train,
         const std::optional<std::vector<Example>>& test, double ratio) {
        RunReport r;
        {
          py::gil_scoped_release release;
          r = run_random_skip(c, train,
                              test ? std::span<const Example>(*test) : std::span<const Example>(),
                              ratio);
        }
        return to_python(report_to_json(r));
      },
      py::arg("config"), py::arg("train"), py::arg("test") = py::none(),
      py::arg("target_ratio"));
  m.def(
      "sweep_csv",
      [](const TrainerConfig& base, const std::vector<Example>& train,
         const std::vector<Example>& test, std::vector<double> n0, std::vector<std::size_t> W,
         std::vector<double> alt, std::vector<double> thresholds,
         std::vector<std::size_t> epochs, std::vector<std::uint64_t> seeds, std::size_t threads) {
        SweepSpec s;
        s.base = base;
        s.n0 = std::move(n0);
        s.W = std::move(W);
        s.alt = std::move(alt);
        s.fixed_thresholds = std::move(thresholds);
        s.epochs = std::move(epochs);
        s.seeds = std::move(seeds);
        py::gil_scoped_release release;
        return sweep_csv(run_sweep(s, train, test, threads));
      },
      py::arg("config"), py::arg("train"), py::arg("test"), py::arg("n0"), py::arg("W"),
      py::arg("alt"), py::arg("thresholds"), py::arg("epochs") = std::vector<std::size_t>{1},
      py::arg("seeds") = std::vector<std::uint64_t>{0}, py::arg("threads") = 1);

  m.def(
      "generate_toy",
      [](std::size_t train_examples, std::size_t test_examples, std::size_t duplication,
         double label_noise, std::uint64_t seed) {
        ToyCorpusSpec s;
        s.train_examples = train_examples;
        s.test_examples = test_examples;
        s.duplication = duplication;
        s.label_noise = label_noise;
        s.seed = seed;
        ToyCorpus c = generate_toy(s);
        return py::make_tuple(std::move(c.train), std::move(c.test));
      },
      py::arg("train_examples") = 20000, py::arg("test_examples") = 5000,
      py::arg("duplication") = 5, py::arg("label_noise") = 0.05, py::arg("seed") = 1);
}
