// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// File-in, file-out implementations of the CLI subcommands. Machine-readable
// results go to files; human-readable tables go to the given stream.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "glycopipe/app/config.hpp"
#include "glycopipe/checkpoint.hpp"
#include "glycopipe/data/cohort.hpp"
#include "glycopipe/data/table.hpp"
#include "glycopipe/distributed/federated.hpp"
#include "glycopipe/explain/heatmap.hpp"
#include "glycopipe/explain/robustness.hpp"
#include "glycopipe/explain/shapley.hpp"
#include "glycopipe/hyperopt/tune.hpp"
#include "glycopipe/model/metrics.hpp"
#include "glycopipe/model/quantize.hpp"
#include "glycopipe/model/serialize.hpp"
#include "glycopipe/model/train.hpp"
#include "glycopipe/preprocess/state.hpp"
#include "glycopipe/privacy/paillier.hpp"
#include "glycopipe/serve/pipeline.hpp"
#include "glycopipe/serve/simulator.hpp"

namespace glycopipe::app {

namespace fs = std::filesystem;

inline std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, "cannot create directory \"", dir, "\": ", ec.message());
}

// ---------------------------------------------------------------- tables

struct LoadedTable {
  data::RawTable table;
  data::RecordSchema schema;
  std::vector<data::PatientRecord> records;
};

// Statics are every numeric column other than the id, the label and the
// glucose_day_k columns; the series is glucose_day_1.. up to the first gap.
inline data::RecordSchema infer_schema(const data::RawTable& t) {
  data::RecordSchema s;
  s.series_length = 0;
  while (t.find_column(data::series_column(s.series_length))) ++s.series_length;
  require(s.series_length >= 1, "table has no glucose_day_1 column");
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    const auto& name = t.header[j];
    if (name == s.id_column || name == s.label_column || name.rfind("glucose_day_", 0) == 0) continue;
    require(t.types[j] != data::ColumnType::text, "column \"", name, "\" is not numeric");
    s.static_columns.push_back(name);
  }
  return s;
}

inline LoadedTable load_table(const std::string& path) {
  LoadedTable l;
  l.table = data::parse_table(io::read_file(path));
  l.schema = infer_schema(l.table);
  l.records = data::to_records(l.table, l.schema);
  return l;
}

inline data::RawTable subset_rows(const data::RawTable& t, const std::vector<std::size_t>& rows) {
  data::RawTable out;
  out.header = t.header;
  out.types = t.types;
  for (auto r : rows) out.rows.push_back(t.rows[r]);
  return out;
}

// Seeded shuffle; the first floor(test_fraction * n) shuffled rows form the
// test set. Both index lists are returned in ascending order.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(std::size_t n, double test_fraction,
                                                                                std::uint64_t seed) {
  require(test_fraction >= 0.0 && test_fraction < 1.0, "test_fraction must lie in [0, 1)");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_rng(seed, 0x7e57);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
  const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n)));
  std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {train, test};
}

inline void write_ranking_csv(const std::string& path, const preprocess::ImportanceRanking& r,
                              const std::string& score_name = "importance") {
  std::ostringstream os;
  os << "rank,feature," << score_name << '\n';
  for (std::size_t k = 0; k < r.entries.size(); ++k)
    os << k + 1 << ',' << r.entries[k].name << ',' << format_double(r.entries[k].score) << '\n';
  io::write_file(path, os.str());
}

inline std::string json_text(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- bundles

// A trained model together with the preprocessing needed to apply it to raw
// table rows. Preprocessing entries are stored under a "preprocess/" prefix.
struct ModelBundle {
  preprocess::PreprocessState prep;
  model::FusionModel model;
};

inline constexpr const char* kPrepPrefix = "preprocess/";

inline io::Checkpoint bundle_checkpoint(io::Checkpoint model_ck, const preprocess::PreprocessState& prep) {
  io::Checkpoint p = preprocess::to_checkpoint(prep);
  model_ck.config["preprocess"] = p.config;
  for (auto& e : p.entries) {
    e.name = kPrepPrefix + e.name;
    model_ck.entries.push_back(std::move(e));
  }
  return model_ck;
}

inline ModelBundle bundle_from_checkpoint(const io::Checkpoint& ck) {
  require(ck.config.contains("preprocess"), "model checkpoint carries no preprocessing state");
  io::Checkpoint m, p;
  m.config = ck.config;
  m.config.erase("preprocess");
  p.config = ck.config.at("preprocess");
  const std::string prefix = kPrepPrefix;
  for (const auto& e : ck.entries) {
    if (e.name.rfind(prefix, 0) == 0) {
      io::Entry c = e;
      c.name = e.name.substr(prefix.size());
      p.entries.push_back(std::move(c));
    } else {
      m.entries.push_back(e);
    }
  }
  return {preprocess::preprocess_from_checkpoint(p), model::model_from_checkpoint(m)};
}

inline void save_bundle(const ModelBundle& b, const std::string& path) {
  io::save(bundle_checkpoint(model::to_checkpoint(b.model), b.prep), path);
}

inline void save_quantized_bundle(const ModelBundle& b, const std::string& path) {
  io::save(bundle_checkpoint(model::to_checkpoint(model::quantize_int8(b.model)), b.prep), path);
}

inline ModelBundle load_bundle(const std::string& path) { return bundle_from_checkpoint(io::load(path)); }

// ---------------------------------------------------------------- metrics

inline json metrics_json(const model::EvalMetrics& m, std::size_t n) {
  return {{"n", n},
          {"auc", m.auc},
          {"accuracy", m.accuracy},
          {"sensitivity", m.sensitivity},
          {"specificity", m.specificity},
          {"confusion", {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"tn", m.counts.tn}, {"fn", m.counts.fn}}}};
}

inline void print_metrics(std::ostream& out, const model::EvalMetrics& m) {
  char line[96];
  std::snprintf(line, sizeof line, "%-12s %8s\n", "Metric", "Value");
  out << line;
  const std::pair<const char*, double> rows[] = {
      {"Accuracy", m.accuracy}, {"Sensitivity", m.sensitivity}, {"Specificity", m.specificity}, {"AUC", m.auc}};
  for (const auto& [name, v] : rows) {
    std::snprintf(line, sizeof line, "%-12s %8.4f\n", name, v);
    out << line;
  }
}

// ---------------------------------------------------------------- generate

inline void run_generate(const data::CohortSpec& spec, const std::string& out_path) {
  io::write_file(out_path, data::write_table(data::generate_cohort(spec)));
}

// ---------------------------------------------------------------- preprocess

inline preprocess::PreprocessState run_preprocess(const std::string& in, const std::string& out,
                                                  const preprocess::PreprocessConfig& cfg,
                                                  const std::string& ranking_path, std::ostream& log) {
  const LoadedTable t = load_table(in);
  const auto state = preprocess::fit_preprocess(t.records, cfg);
  io::save(preprocess::to_checkpoint(state), out);
  if (!ranking_path.empty()) write_ranking_csv(ranking_path, state.ranking);
  log << "static features: " << state.static_names.size() << " -> " << state.selected.size() << " selected";
  if (state.use_pca) log << " -> " << state.model_static_dim() << " principal components";
  log << '\n';
  return state;
}

// ---------------------------------------------------------------- train

inline void write_history(const std::string& path, const std::vector<model::EpochRecord>& history) {
  std::ostringstream os;
  for (const auto& h : history)
    os << json{{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"val_auc", h.val_auc}}.dump() << '\n';
  io::write_file(path, os.str());
}

struct TrainOptions {
  std::string data;
  std::string out;
  std::string preprocess;  // fitted state; refit from the data when empty
  std::string history;
  std::string quantized;
};

inline model::TrainResult run_train(const AppConfig& cfg, const TrainOptions& opt, std::ostream& log) {
  const LoadedTable t = load_table(opt.data);
  const auto prep = opt.preprocess.empty() ? preprocess::fit_preprocess(t.records, cfg.preprocess)
                                           : preprocess::preprocess_from_checkpoint(io::load(opt.preprocess));
  auto res = model::train(prep.transform(t.records), cfg.model);
  const ModelBundle b{prep, res.model};
  save_bundle(b, opt.out);
  if (!opt.history.empty()) write_history(opt.history, res.history);
  if (!opt.quantized.empty()) save_quantized_bundle(b, opt.quantized);
  log << "parameters: " << model::param_count(res.model.params) << '\n';
  log << "epochs run: " << res.history.size() << ", best epoch: " << res.best_epoch << '\n';
  if (!res.history.empty()) log << "validation AUC: " << format_double(res.history.back().val_auc) << '\n';
  return res;
}

// ---------------------------------------------------------------- evaluate

inline model::EvalMetrics run_evaluate(const std::string& model_path, const std::string& data_path,
                                       const std::string& out_path, double threshold, std::ostream& out) {
  const ModelBundle b = load_bundle(model_path);
  const LoadedTable t = load_table(data_path);
  for (const auto& r : t.records) require(r.label.has_value(), "record \"", r.patient_id, "\" has no label");
  const model::Dataset d = b.prep.transform(t.records);
  const auto m = model::evaluate(b.model, d, threshold);
  if (!out_path.empty()) io::write_file(out_path, json_text(metrics_json(m, d.size())));
  print_metrics(out, m);
  return m;
}

// ---------------------------------------------------------------- keygen

inline privacy::PaillierKeyPair run_keygen(std::size_t bits, std::uint64_t seed, const std::string& out_path,
                                           std::ostream& out) {
  auto kp = privacy::paillier_keygen(bits, seed);
  io::save(privacy::to_checkpoint(kp), out_path);
  out << "modulus bits: " << privacy::detail::bit_length(kp.pub.n) << '\n';
  return kp;
}

// ---------------------------------------------------------------- tune

struct TuneOptions {
  std::string data;
  std::string out_dir;
  std::uint64_t seed = 0;
};

inline hyperopt::TuneResult run_tune(const AppConfig& cfg, const TuneOptions& opt, std::ostream& out) {
  const LoadedTable t = load_table(opt.data);
  const auto prep = preprocess::fit_preprocess(t.records, cfg.preprocess);
  const auto split = model::split_dataset(prep.transform(t.records), cfg.model.validation_fraction, opt.seed);
  hyperopt::TuneConfig tc;
  tc.budget_trials = cfg.tuning.budget;
  tc.parallelism = cfg.tuning.parallelism;
  tc.seed = opt.seed;
  require(cfg.tuning.proposer == "random" || cfg.tuning.proposer == "smbo", "unknown proposer \"",
          cfg.tuning.proposer, "\"");
  tc.proposer = cfg.tuning.proposer == "smbo" ? hyperopt::Proposer::smbo : hyperopt::Proposer::random;
  tc.scheduler.max_t = cfg.tuning.max_t;
  tc.scheduler.grace_period = cfg.tuning.grace;
  tc.scheduler.reduction_factor = cfg.tuning.eta;
  const auto space = hyperopt::default_search_space();
  const auto res = hyperopt::tune(hyperopt::training_objective(split.train, split.validation, cfg.model), space, tc);

  ensure_dir(opt.out_dir);
  std::ostringstream trials;
  res.write_jsonl(trials);
  io::write_file(path_in(opt.out_dir, "trials.jsonl"), trials.str());

  const auto& best = res.best_trial();
  const auto tuned = hyperopt::apply_config(cfg.model, best.config);
  const auto rows = hyperopt::summary_table(model::TrainConfig::initial_preset(), tuned);
  std::ostringstream csv;
  csv << "hyperparameter,initial,optimized\n";
  char line[128];
  std::snprintf(line, sizeof line, "%-16s %14s %16s\n", "Hyperparameter", "Initial Value", "Optimized Value");
  out << line;
  for (const auto& r : rows) {
    csv << r.hyperparameter << ',' << r.initial << ',' << r.optimized << '\n';
    std::snprintf(line, sizeof line, "%-16s %14s %16s\n", r.hyperparameter.c_str(), r.initial.c_str(),
                  r.optimized.c_str());
    out << line;
  }
  io::write_file(path_in(opt.out_dir, "tuning_summary.csv"), csv.str());
  json best_j = {{"trial", best.id}, {"config", hyperopt::config_json(best.config)}, {"val_auc", *best.last_metric()},
                 {"total_epochs", res.total_epochs}, {"train_config", tuned}};
  io::write_file(path_in(opt.out_dir, "best_config.json"), json_text(best_j));
  out << "trials: " << res.trials.size() << ", epochs: " << res.total_epochs
      << ", best validation AUC: " << format_double(*best.last_metric()) << '\n';
  return res;
}

// ---------------------------------------------------------------- fedtrain

struct FedOptions {
  std::string data;
  std::string out;  // model bundle
  std::string log;  // per-round jsonl
  std::string key;
  std::size_t clients = 3;
  std::size_t rounds = 5;
  std::size_t local_epochs = 1;
  double learning_rate = 0.05;
  bool encrypted = false;
  std::uint64_t seed = 0;
};

inline model::FusionModel run_fedtrain(const AppConfig& cfg, const FedOptions& opt, std::ostream& out) {
  require(opt.clients >= 1, "--clients must be >= 1");
  const LoadedTable t = load_table(opt.data);
  const auto prep = preprocess::fit_preprocess(t.records, cfg.preprocess);
  const auto split = model::split_dataset(prep.transform(t.records), cfg.model.validation_fraction, opt.seed);
  std::vector<model::Dataset> shards(opt.clients);
  for (std::size_t i = 0; i < split.train.size(); ++i) shards[i % opt.clients].push_back(split.train[i]);

  std::optional<privacy::PaillierKeyPair> keys;
  std::optional<privacy::FixedPointCodec> codec;
  distributed::FederatedRoundConfig rc;
  rc.local_epochs = opt.local_epochs;
  rc.learning_rate = opt.learning_rate;
  if (opt.encrypted) {
    require(!opt.key.empty(), "encrypted mode needs --key");
    keys = privacy::keypair_from_checkpoint(io::load(opt.key));
    codec.emplace(keys->pub.n);
    rc.mode = distributed::AggregationMode::encrypted;
    rc.keys = &*keys;
    rc.codec = &*codec;
  }

  model::TrainConfig mc = cfg.model;
  mc.seed = opt.seed;
  auto global = model::FusionModel::initialize(
      model::Architecture::from(mc, prep.model_static_dim(), 1), mc);
  const model::Dataset& eval_set = split.validation.empty() ? split.train : split.validation;
  std::ostringstream rounds;
  char line[96];
  std::snprintf(line, sizeof line, "%-6s %10s %12s %12s\n", "Round", "AUC", "Encryptions", "Decryptions");
  out << line;
  for (std::size_t r = 1; r <= opt.rounds; ++r) {
    rc.seed = derive_seed(opt.seed, r);
    distributed::RoundReport rep;
    global = distributed::federated_round(shards, global, rc, {}, &rep);
    const double auc = model::evaluate(global, eval_set).auc;
    rounds << json{{"round", r}, {"auc", auc}, {"clients", rep.clients}, {"coordinates", rep.coordinates},
                   {"encryptions", rep.encryptions}, {"decryptions", rep.decryptions}}
                  .dump()
           << '\n';
    std::snprintf(line, sizeof line, "%-6zu %10.4f %12zu %12zu\n", r, auc, rep.encryptions, rep.decryptions);
    out << line;
  }
  if (!opt.log.empty()) io::write_file(opt.log, rounds.str());
  if (!opt.out.empty()) save_bundle({prep, global}, opt.out);
  return global;
}

// ---------------------------------------------------------------- explain

struct ExplainOptions {
  std::string model;
  std::string data;
  std::string out_dir;
  explain::ShapleyMode mode = explain::ShapleyMode::exact;
  std::size_t rows = 20;
  std::size_t background = 32;
  std::size_t permutations = 1000;
  double epsilon = 0.1;
  std::uint64_t seed = 0;
};

// Players are the raw static features plus the whole glucose series as one
// player; each is switched between the row and a background row as a unit.
inline preprocess::ImportanceRanking run_explain(const ExplainOptions& opt, std::ostream& out) {
  const ModelBundle b = load_bundle(opt.model);
  const LoadedTable t = load_table(opt.data);
  require(!t.records.empty(), "no rows to explain");
  const auto ns = static_cast<Eigen::Index>(b.prep.static_names.size());
  const auto T = static_cast<Eigen::Index>(b.prep.series_length);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(t.records.size()), ns + T);
  for (std::size_t i = 0; i < t.records.size(); ++i)
    X.row(static_cast<Eigen::Index>(i)) = b.prep.raw_vector(t.records[i]).transpose();

  explain::FeatureGroups groups;
  std::vector<std::string> names = b.prep.static_names;
  for (Eigen::Index j = 0; j < ns; ++j) groups.push_back({j});
  std::vector<Eigen::Index> series;
  for (Eigen::Index k = 0; k < T; ++k) series.push_back(ns + k);
  groups.push_back(series);
  names.emplace_back("glucose_series");

  const auto& prep = b.prep;
  const auto& mdl = b.model;
  const explain::PredictFn f = [&](const Eigen::VectorXd& raw) { return model::predict(mdl, prep.example_from_raw(raw)); };
  const Eigen::MatrixXd bg = explain::sample_background(X, opt.background, opt.seed);

  const std::size_t n_rows = std::min(opt.rows, t.records.size());
  require(n_rows >= 1, "--rows must be >= 1");
  std::ostringstream attr;
  attr << "patient_id,base_value,prediction";
  for (const auto& n : names) attr << ',' << n;
  attr << '\n';
  std::vector<double> mean_abs(groups.size(), 0.0);
  for (std::size_t i = 0; i < n_rows; ++i) {
    const Eigen::VectorXd x = X.row(static_cast<Eigen::Index>(i)).transpose();
    const auto a = opt.mode == explain::ShapleyMode::exact
                       ? explain::shapley_exact(f, x, bg, groups)
                       : explain::shapley_sample(f, x, bg, groups, opt.permutations, derive_seed(opt.seed, i));
    attr << t.records[i].patient_id << ',' << format_double(a.base_value) << ',' << format_double(a.prediction);
    for (Eigen::Index k = 0; k < a.phi.size(); ++k) {
      attr << ',' << format_double(a.phi(k));
      mean_abs[static_cast<std::size_t>(k)] += std::abs(a.phi(k)) / static_cast<double>(n_rows);
    }
    attr << '\n';
  }
  const auto ranking = preprocess::ImportanceRanking::from_scores(names, mean_abs);

  ensure_dir(opt.out_dir);
  io::write_file(path_in(opt.out_dir, "attributions.csv"), attr.str());
  write_ranking_csv(path_in(opt.out_dir, "importance.csv"), ranking, "mean_abs_shap");

  explain::HeatmapExport heat;
  for (std::size_t i = 0; i < n_rows; ++i) {
    const auto h = explain::export_heatmap(mdl, prep.transform(t.records[i]));
    if (i == 0) {
      heat.col_labels = h.col_labels;
      heat.values.resize(static_cast<Eigen::Index>(n_rows), h.values.cols());
    }
    heat.row_labels.push_back(t.records[i].patient_id);
    heat.values.row(static_cast<Eigen::Index>(i)) = h.values.row(0);
  }
  std::ostringstream csv, svg;
  heat.write_csv(csv);
  heat.write_svg(svg);
  io::write_file(path_in(opt.out_dir, "attention_heatmap.csv"), csv.str());
  io::write_file(path_in(opt.out_dir, "attention_heatmap.svg"), svg.str());

  model::Dataset labelled;
  for (const auto& r : t.records)
    if (r.label) labelled.push_back(prep.transform(r));
  json robust = json::array();
  if (!labelled.empty()) {
    for (double e : {0.0, opt.epsilon / 4.0, opt.epsilon / 2.0, opt.epsilon}) {
      const auto rr = explain::fgsm_robustness(mdl, labelled, e);
      robust.push_back({{"epsilon", rr.epsilon}, {"samples", rr.samples}, {"unchanged_fraction", rr.unchanged_fraction},
                        {"clean_accuracy", rr.clean_accuracy}, {"adversarial_accuracy", rr.adversarial_accuracy}});
    }
  }
  io::write_file(path_in(opt.out_dir, "robustness.json"), json_text(robust));

  char line[96];
  std::snprintf(line, sizeof line, "%-18s %14s\n", "Feature", "Mean |SHAP|");
  out << line;
  for (const auto& e : ranking.entries) {
    std::snprintf(line, sizeof line, "%-18s %14.6f\n", e.name.c_str(), e.score);
    out << line;
  }
  if (!robust.empty()) {
    const auto& last = robust.back();
    out << "FGSM epsilon " << format_double(last.at("epsilon").get<double>()) << ": "
        << format_double(last.at("unchanged_fraction").get<double>()) << " of " << labelled.size()
        << " predictions unchanged\n";
  }
  return ranking;
}

// ---------------------------------------------------------------- serve-sim

struct ServeComparison {
  serve::SimMetrics baseline;
  serve::SimMetrics optimized;
};

inline json sim_json(const serve::SimMetrics& m) {
  json trace = json::array();
  for (const auto& [t, r] : m.replica_trace) trace.push_back({t, r});
  return {{"arrivals", m.arrivals},     {"hits", m.hits},
          {"misses", m.misses},         {"served", m.served},
          {"queued_at_end", m.queued_at_end}, {"dropped", m.dropped},
          {"hit_rate", m.hit_rate},     {"mean_latency", m.mean_latency},
          {"p50", m.p50},               {"p99", m.p99},
          {"p999", m.p999},             {"mean_wait", m.mean_wait},
          {"end_time", m.end_time},     {"throughput", m.throughput},
          {"max_replicas", m.max_replicas}, {"scale_actions", m.scale_actions},
          {"replica_trace", trace}};
}

// Baseline: no cache and a fixed replica count. Optimized: the configured
// cache and autoscaling policy. Both see the same request stream.
inline ServeComparison run_serve_sim(const AppConfig& cfg, std::uint64_t seed, const std::string& out_path,
                                     const serve::Predictor& predict, std::ostream& out) {
  serve::WorkloadSpec base_w = cfg.workload;
  base_w.autoscale = false;
  serve::CacheConfig no_cache = cfg.cache;
  no_cache.capacity = 0;
  serve::WorkloadSpec opt_w = cfg.workload;
  opt_w.autoscale = true;
  ServeComparison c{serve::simulate_service(base_w, no_cache, cfg.scaling, seed, predict),
                    serve::simulate_service(opt_w, cfg.cache, cfg.scaling, seed, predict)};
  if (!out_path.empty())
    io::write_file(out_path, json_text({{"baseline", sim_json(c.baseline)}, {"optimized", sim_json(c.optimized)}}));

  char line[128];
  std::snprintf(line, sizeof line, "%-36s %14s %14s\n", "Performance Metric", "Baseline", "Optimized");
  out << line;
  auto row = [&](const char* name, double a, double b, const char* fmt) {
    char va[32], vb[32];
    std::snprintf(va, sizeof va, fmt, a);
    std::snprintf(vb, sizeof vb, fmt, b);
    std::snprintf(line, sizeof line, "%-36s %14s %14s\n", name, va, vb);
    out << line;
  };
  const auto& b = c.baseline;
  const auto& o = c.optimized;
  row("Processing Capacity (requests/s)", b.throughput, o.throughput, "%.2f");
  row("Median Response Time (s)", b.p50, o.p50, "%.4f");
  row("99% Request Response Time (s)", b.p99, o.p99, "%.4f");
  row("99.9% Request Response Time (s)", b.p999, o.p999, "%.4f");
  row("Cache Hit Rate", b.hit_rate, o.hit_rate, "%.4f");
  row("Peak Replicas", static_cast<double>(b.max_replicas), static_cast<double>(o.max_replicas), "%.0f");
  row("Scaling Actions", static_cast<double>(b.scale_actions), static_cast<double>(o.scale_actions), "%.0f");
  return c;
}

// ---------------------------------------------------------------- pipeline

// Modelled virtual cost of each stage's work, in seconds.
struct StageCosts {
  double acquisition_per_row = 0.6;
  double preprocessing_per_row = 0.25;
  double feature_per_row_tree = 0.002;
  double training_per_example_param = 1e-6;  // per example-epoch per parameter
  double evaluation_per_row = 0.05;
};

struct PipelineResult {
  std::vector<serve::StageReport> reports;
  json metrics;  // empty unless evaluation ran
  bool ok() const {
    for (const auto& r : reports)
      if (r.status != serve::StageStatus::success) return false;
    return !reports.empty();
  }
};

// Index encoded in generated patient ids ("P0000042" -> 42).
inline std::size_t generated_row_index(const std::string& id) {
  require(id.size() > 1 && id[0] == 'P', "\"", id, "\" is not a generated patient id");
  return static_cast<std::size_t>(std::stoull(id.substr(1)));
}

inline PipelineResult run_pipeline_command(const AppConfig& cfg, const std::string& out_dir, std::ostream& out) {
  ensure_dir(out_dir);
  const auto file = [&](const char* name) { return path_in(out_dir, name); };
  const StageCosts costs;
  const auto& pc = cfg.pipeline;
  PipelineResult result;

  auto stage = [&](const std::string& name, std::function<double()> work) {
    serve::Stage s;
    s.name = name;
    s.retry_limit = pc.retry_limit;
    s.timeout_seconds = pc.timeout_seconds;
    s.probe_interval = pc.probe_interval;
    s.task = [&, name, work](std::size_t attempt) -> serve::StageOutcome {
      const bool injected = attempt <= pc.inject_attempts;
      if (injected && pc.inject_hang == name) return {true, pc.timeout_seconds + 1.0, "injected hang"};
      if (injected && pc.inject_failure == name) return {false, 60.0, "injected failure"};
      return {true, work(), ""};
    };
    return s;
  };

  std::vector<serve::Stage> stages;
  stages.push_back(stage("data_acquisition", [&] {
    const data::RawTable table = data::generate_cohort(cfg.cohort);
    io::write_file(file("cohort.csv"), data::write_table(table));
    const auto [train, test] = split_rows(table.rows.size(), pc.test_fraction, cfg.cohort.seed);
    io::write_file(file("train.csv"), data::write_table(subset_rows(table, train)));
    io::write_file(file("test.csv"), data::write_table(subset_rows(table, test)));
    return costs.acquisition_per_row * static_cast<double>(table.rows.size());
  }));
  stages.push_back(stage("preprocessing", [&] {
    const LoadedTable t = load_table(file("train.csv"));
    io::save(preprocess::to_checkpoint(preprocess::fit_cleaning(t.records)), file("cleaning.ckpt"));
    return costs.preprocessing_per_row * static_cast<double>(t.records.size());
  }));
  stages.push_back(stage("feature_engineering", [&] {
    const LoadedTable t = load_table(file("train.csv"));
    const auto cleaned = preprocess::preprocess_from_checkpoint(io::load(file("cleaning.ckpt")));
    const auto state = preprocess::fit_feature_engineering(cleaned, t.records, cfg.preprocess);
    io::save(preprocess::to_checkpoint(state), file("preprocess.ckpt"));
    write_ranking_csv(file("feature_ranking.csv"), state.ranking);
    return costs.feature_per_row_tree * static_cast<double>(t.records.size() * cfg.preprocess.forest.n_trees);
  }));
  stages.push_back(stage("model_training", [&] {
    std::ostringstream log;
    TrainOptions o;
    o.data = file("train.csv");
    o.out = file("model.ckpt");
    o.preprocess = file("preprocess.ckpt");
    o.history = file("training_history.jsonl");
    o.quantized = file("model_int8.ckpt");
    const auto res = run_train(cfg, o, log);
    const auto n_train = static_cast<double>(load_table(o.data).records.size());
    const double example_epochs =
        n_train * (1.0 - cfg.model.validation_fraction) * static_cast<double>(res.history.size());
    return costs.training_per_example_param * example_epochs * static_cast<double>(model::param_count(res.model.params));
  }));
  stages.push_back(stage("model_evaluation", [&] {
    std::ostringstream table;
    const auto m = run_evaluate(file("model.ckpt"), file("test.csv"), "", 0.5, table);
    const LoadedTable t = load_table(file("test.csv"));
    json j = metrics_json(m, t.records.size());
    // Generator-side oracle: the analytic Bayes AUC of the cohort law and
    // the Bayes posterior's AUC on these same test rows.
    const auto scores = data::generate_bayes_scores(cfg.cohort);
    std::vector<double> s;
    std::vector<int> y;
    for (const auto& r : t.records) {
      s.push_back(scores.at(generated_row_index(r.patient_id)));
      y.push_back(*r.label);
    }
    j["bayes_auc"] = data::bayes_auc(cfg.cohort);
    j["bayes_auc_test_rows"] = model::roc_auc(s, y);
    j["auc_gap"] = j["bayes_auc"].get<double>() - m.auc;
    io::write_file(file("metrics.json"), json_text(j));
    result.metrics = j;
    return costs.evaluation_per_row * static_cast<double>(t.records.size());
  }));

  serve::PipelineOptions po;
  po.probe_jitter = pc.probe_jitter;
  po.seed = cfg.cohort.seed;
  result.reports = serve::run_pipeline(stages, po);

  std::ostringstream events;
  double clock = 0.0;
  json report = json::array();
  for (const auto& r : result.reports) {
    json fields = {{"stage", r.name}, {"status", serve::status_name(r.status)}, {"attempts", r.attempts}};
    if (r.status == serve::StageStatus::skipped) {
      events << json{{"timestamp", clock}, {"event", "stage_skipped"}, {"stage", r.name}}.dump() << '\n';
    } else {
      events << json{{"timestamp", clock}, {"event", "stage_started"}, {"stage", r.name}}.dump() << '\n';
      clock += r.virtual_seconds;
      json end = {{"timestamp", clock}, {"event", "stage_finished"}};
      end.update(fields);
      if (r.status == serve::StageStatus::failed) {
        end["event"] = "stage_failed";
        end["detection_latency"] = r.detection_latency;
        end["message"] = r.message;
      }
      events << end.dump() << '\n';
    }
    fields["virtual_seconds"] = r.virtual_seconds;
    if (r.status == serve::StageStatus::failed) {
      fields["detection_latency"] = r.detection_latency;
      fields["message"] = r.message;
    }
    report.push_back(fields);
  }
  io::write_file(file("events.jsonl"), events.str());
  io::write_file(file("pipeline_report.json"), json_text({{"stages", report}, {"total_virtual_seconds", clock}}));

  std::ostringstream table;
  serve::write_stage_table(table, result.reports);
  io::write_file(file("stage_times.txt"), table.str());
  out << table.str();
  if (!result.metrics.is_null())
    out << "test AUC " << format_double(result.metrics.at("auc").get<double>()) << ", Bayes AUC "
        << format_double(result.metrics.at("bayes_auc").get<double>()) << '\n';
  return result;
}

}  // namespace glycopipe::app
