// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "glycopipe/hyperopt/asha.hpp"
#include "glycopipe/hyperopt/smbo.hpp"
#include "glycopipe/hyperopt/space.hpp"
#include "glycopipe/model/config.hpp"
#include "glycopipe/model/train.hpp"

namespace glycopipe::hyperopt {

// One trial's training loop; each step() trains one more epoch and returns
// the metric observed after it.
class TrialRunner {
 public:
  virtual ~TrialRunner() = default;
  virtual double step() = 0;
};

using Objective = std::function<std::unique_ptr<TrialRunner>(const Config&, std::uint64_t seed)>;

enum class TrialStatus { running, stopped, completed, failed };

inline const char* status_name(TrialStatus s) {
  switch (s) {
    case TrialStatus::running: return "running";
    case TrialStatus::stopped: return "stopped";
    case TrialStatus::completed: return "completed";
    case TrialStatus::failed: return "failed";
  }
  return "?";
}

struct Trial {
  std::size_t id = 0;
  Config config;
  std::vector<double> history;               // metric after each epoch
  std::map<std::size_t, double> rung_metrics;  // rung index -> metric
  TrialStatus status = TrialStatus::running;
  std::string error;
  double start_time = 0.0, end_time = 0.0;   // virtual, one unit per epoch

  std::size_t epochs() const { return history.size(); }
  std::optional<double> last_metric() const {
    return history.empty() ? std::nullopt : std::optional<double>(history.back());
  }
};

enum class Proposer { random, smbo };

struct TuneConfig {
  std::size_t budget_trials = 100;
  std::size_t parallelism = 1;
  std::uint64_t seed = 0;
  Proposer proposer = Proposer::random;
  SchedulerConfig scheduler;
};

struct TuneResult {
  std::vector<Trial> trials;
  std::optional<std::size_t> best;  // index into trials
  std::size_t total_epochs = 0;

  const Trial& best_trial() const {
    require(best.has_value(), "no trial produced a metric");
    return trials[*best];
  }

  void write_jsonl(std::ostream& os) const {
    for (const auto& t : trials) {
      nlohmann::json j = {{"trial", t.id}, {"status", status_name(t.status)}, {"config", config_json(t.config)},
                          {"epochs", t.epochs()}, {"history", t.history}};
      if (t.last_metric()) j["final_metric"] = *t.last_metric();
      if (!t.error.empty()) j["error"] = t.error;
      os << j.dump() << '\n';
    }
  }
};

// Event-ordered simulation: `parallelism` slots, every epoch takes one unit
// of virtual time, events are processed in (time, sequence) order, and each
// rung decision sees exactly the rung metrics recorded by earlier events.
// A new trial is proposed whenever a slot frees, from the final metrics of
// the trials finished by then.
inline TuneResult tune(const Objective& objective, const SearchSpace& space, const TuneConfig& cfg) {
  space.validate();
  cfg.scheduler.validate();
  require(cfg.budget_trials >= 1, "budget must be at least one trial");
  require(cfg.parallelism >= 1, "parallelism must be at least 1");
  const auto& sched = cfg.scheduler;
  const auto rungs = rung_milestones(sched);

  TuneResult res;
  std::vector<std::unique_ptr<TrialRunner>> runners;
  std::map<std::size_t, std::vector<double>> rung_table;
  SurrogateState surrogate;
  surrogate.mode = sched.mode;
  Rng propose_rng = make_rng(cfg.seed, 0x7e);

  using Event = std::tuple<double, std::size_t, std::size_t>;  // time, seq, trial
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::size_t seq = 0;

  auto finish = [&](Trial& t, TrialStatus s, double now) {
    t.status = s;
    t.end_time = now;
    runners[t.id].reset();
    if (s != TrialStatus::failed && t.last_metric()) surrogate.observations.emplace_back(t.config, *t.last_metric());
  };

  auto start_trial = [&](double now) {
    Trial t;
    t.id = res.trials.size();
    t.start_time = now;
    t.config = cfg.proposer == Proposer::smbo ? smbo_propose(surrogate, space, propose_rng) : sample(space, propose_rng);
    res.trials.push_back(t);
    runners.emplace_back();
    try {
      runners.back() = objective(t.config, derive_seed(cfg.seed, t.id));
      require(runners.back() != nullptr, "objective returned no runner");
    } catch (const std::exception& e) {
      res.trials.back().error = e.what();
      finish(res.trials.back(), TrialStatus::failed, now);
      return false;
    }
    events.emplace(now + 1.0, seq++, t.id);
    return true;
  };

  // Fill free slots at `now`; failed starts free their slot immediately.
  std::size_t active = 0;
  auto fill = [&](double now) {
    while (active < cfg.parallelism && res.trials.size() < cfg.budget_trials)
      if (start_trial(now)) ++active;
  };

  fill(0.0);
  while (!events.empty()) {
    const auto [now, s, id] = events.top();
    events.pop();
    Trial& t = res.trials[id];
    double metric = 0.0;
    try {
      metric = runners[id]->step();
      require(std::isfinite(metric), "trial produced a non-finite metric");
    } catch (const std::exception& e) {
      t.error = e.what();
      finish(t, TrialStatus::failed, now);
      --active;
      fill(now);
      continue;
    }
    t.history.push_back(metric);
    ++res.total_epochs;
    const std::size_t epoch = t.epochs();
    bool stop = false;
    for (std::size_t k = 0; k < rungs.size(); ++k)
      if (rungs[k] == epoch) {
        auto& at_rung = rung_table[k];
        at_rung.push_back(metric);
        t.rung_metrics[k] = metric;
        stop = asha_decide(sched, epoch, metric, at_rung) == Decision::stop_trial;
      }
    if (stop || epoch >= sched.max_t) {
      finish(t, stop ? TrialStatus::stopped : TrialStatus::completed, now);
      --active;
      fill(now);
    } else {
      events.emplace(now + 1.0, seq++, id);
    }
  }

  for (std::size_t i = 0; i < res.trials.size(); ++i) {
    const auto m = res.trials[i].last_metric();
    if (!m || res.trials[i].status == TrialStatus::failed) continue;
    if (!res.best || sched.better(*m, *res.trials[*res.best].last_metric())) res.best = i;
  }
  return res;
}

// Maps tuner parameter names onto a training configuration.
inline model::TrainConfig apply_config(model::TrainConfig base, const Config& c) {
  for (const auto& [k, v] : c) {
    if (k == "learning_rate") base.learning_rate = v;
    else if (k == "batch_size") base.batch_size = static_cast<std::size_t>(v);
    else if (k == "lstm_layers") base.lstm_layers = static_cast<std::size_t>(v);
    else if (k == "dropout") base.dropout_rate = v;
    else if (k == "hidden_size") base.hidden_size = static_cast<std::size_t>(v);
    else fail("unknown tuning parameter \"", k, "\"");
  }
  base.validate();
  return base;
}

namespace detail {

class TrainingRunner : public TrialRunner {
 public:
  TrainingRunner(const model::Dataset& train, const model::Dataset& val, const model::TrainConfig& cfg)
      : trainer_(train, val, cfg) {}
  double step() override { return trainer_.run_epoch().val_auc; }

 private:
  model::Trainer trainer_;
};

}  // namespace detail

// Objective that trains the fusion model and reports validation AUC per epoch.
inline Objective training_objective(model::Dataset train, model::Dataset val, model::TrainConfig base) {
  require(!val.empty(), "tuning needs a validation set");
  auto tr = std::make_shared<model::Dataset>(std::move(train));
  auto va = std::make_shared<model::Dataset>(std::move(val));
  return [tr, va, base](const Config& c, std::uint64_t seed) -> std::unique_ptr<TrialRunner> {
    model::TrainConfig cfg = apply_config(base, c);
    cfg.seed = seed;
    return std::make_unique<detail::TrainingRunner>(*tr, *va, cfg);
  };
}

struct SummaryRow {
  std::string hyperparameter;
  std::string initial;
  std::string optimized;
};

// Rows for the initial-versus-optimized hyperparameter table.
inline std::vector<SummaryRow> summary_table(const model::TrainConfig& initial, const model::TrainConfig& optimized) {
  return {{"Learning Rate", format_double(initial.learning_rate), format_double(optimized.learning_rate)},
          {"Batch Size", std::to_string(initial.batch_size), std::to_string(optimized.batch_size)},
          {"LSTM Layers", std::to_string(initial.lstm_layers), std::to_string(optimized.lstm_layers)},
          {"Dropout Rate", format_double(initial.dropout_rate), format_double(optimized.dropout_rate)}};
}

}  // namespace glycopipe::hyperopt
