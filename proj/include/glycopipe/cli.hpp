// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "glycopipe/app/commands.hpp"
#include "glycopipe/app/config.hpp"

namespace glycopipe {

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Diabetes risk pipeline: cohort synthesis, training, privacy, tuning, explanation and serving"};
  app.name("glycopipe");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config_path;
  auto config = [&]() { return config_path.empty() ? app::AppConfig{} : app::load_config(config_path); };
  auto add_config = [&](CLI::App* sub) { sub->add_option("--config", config_path, "JSON configuration document")->check(CLI::ExistingFile); };
  std::optional<std::uint64_t> seed;

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic cohort table");
  std::optional<std::size_t> gen_n, gen_noise;
  std::optional<double> gen_prev, gen_missing;
  std::string gen_out;
  add_config(gen);
  gen->add_option("--n", gen_n, "Number of patients");
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--prevalence", gen_prev, "Fraction of positive labels")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--missing-rate", gen_missing, "Per-cell missing probability")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--noise-features", gen_noise, "Label-independent columns");
  gen->add_option("--out", gen_out, "Output CSV")->required();

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "Fit imputation, scaling, feature selection and PCA");
  std::string pre_in, pre_out, pre_ranking;
  std::optional<std::size_t> pre_pca, pre_select;
  add_config(pre);
  pre->add_option("--in", pre_in, "Input CSV")->required()->check(CLI::ExistingFile);
  pre->add_option("--out", pre_out, "Output preprocessing checkpoint")->required();
  pre->add_option("--pca-k", pre_pca, "Principal components kept (0 disables PCA)");
  pre->add_option("--select-k", pre_select, "Static features kept by importance (0 keeps all)");
  pre->add_option("--ranking", pre_ranking, "Write the feature importance ranking CSV here");

  // train
  auto* trn = app.add_subcommand("train", "Train the fusion model");
  app::TrainOptions topt;
  std::optional<std::size_t> trn_epochs;
  add_config(trn);
  trn->add_option("--data", topt.data, "Training CSV")->required()->check(CLI::ExistingFile);
  trn->add_option("--out", topt.out, "Output model checkpoint")->required();
  trn->add_option("--preprocess", topt.preprocess, "Fitted preprocessing checkpoint")->check(CLI::ExistingFile);
  trn->add_option("--history", topt.history, "Per-epoch history (JSON lines)");
  trn->add_option("--quantized", topt.quantized, "Also write an 8-bit quantized checkpoint");
  trn->add_option("--epochs", trn_epochs, "Override the configured epoch count");
  trn->add_option("--seed", seed, "Random seed");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score a labelled table with a trained model");
  std::string ev_model, ev_data, ev_out;
  double ev_threshold = 0.5;
  ev->add_option("--model", ev_model, "Model checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", ev_data, "Labelled CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", ev_out, "Write metrics JSON here");
  ev->add_option("--threshold", ev_threshold, "Decision threshold")->check(CLI::Range(0.0, 1.0));

  // tune
  auto* tn = app.add_subcommand("tune", "Hyperparameter search with asynchronous successive halving");
  app::TuneOptions tnopt;
  std::optional<std::size_t> tn_budget, tn_grace, tn_max_t, tn_par;
  std::optional<double> tn_eta;
  std::optional<std::string> tn_proposer;
  add_config(tn);
  tn->add_option("--data", tnopt.data, "Labelled CSV")->required()->check(CLI::ExistingFile);
  tn->add_option("--out", tnopt.out_dir, "Output directory")->required();
  tn->add_option("--budget", tn_budget, "Number of trials");
  tn->add_option("--eta", tn_eta, "Reduction factor");
  tn->add_option("--grace", tn_grace, "Epochs before a trial may be stopped");
  tn->add_option("--max-t", tn_max_t, "Maximum epochs per trial");
  tn->add_option("--parallelism", tn_par, "Concurrent trials in virtual time");
  tn->add_option("--proposer", tn_proposer, "random or smbo")->check(CLI::IsMember({"random", "smbo"}));
  tn->add_option("--seed", seed, "Random seed");

  // fedtrain
  auto* fed = app.add_subcommand("fedtrain", "Federated training with optional Paillier aggregation");
  app::FedOptions fopt;
  std::string fed_mode = "plain";
  add_config(fed);
  fed->add_option("--data", fopt.data, "Labelled CSV")->required()->check(CLI::ExistingFile);
  fed->add_option("--clients", fopt.clients, "Number of clients");
  fed->add_option("--rounds", fopt.rounds, "Number of rounds");
  fed->add_option("--local-epochs", fopt.local_epochs, "Local gradient steps per round");
  fed->add_option("--lr", fopt.learning_rate, "Local learning rate");
  fed->add_option("--mode", fed_mode, "plain or encrypted")->check(CLI::IsMember({"plain", "encrypted"}));
  fed->add_option("--key", fopt.key, "Paillier key checkpoint")->check(CLI::ExistingFile);
  fed->add_option("--out", fopt.out, "Output model checkpoint");
  fed->add_option("--log", fopt.log, "Per-round log (JSON lines)");
  fed->add_option("--seed", seed, "Random seed");

  // keygen
  auto* kg = app.add_subcommand("keygen", "Generate a Paillier key pair");
  std::size_t kg_bits = 2048;
  std::string kg_out;
  kg->add_option("--bits", kg_bits, "Modulus size in bits");
  kg->add_option("--seed", seed, "Random seed");
  kg->add_option("--out", kg_out, "Output key checkpoint")->required();

  // explain
  auto* ex = app.add_subcommand("explain", "Shapley attributions, attention heatmap and FGSM robustness");
  app::ExplainOptions xopt;
  std::string ex_mode = "exact";
  ex->add_option("--model", xopt.model, "Model checkpoint")->required()->check(CLI::ExistingFile);
  ex->add_option("--data", xopt.data, "CSV to explain")->required()->check(CLI::ExistingFile);
  ex->add_option("--out", xopt.out_dir, "Output directory")->required();
  ex->add_option("--mode", ex_mode, "exact or sample")->check(CLI::IsMember({"exact", "sample"}));
  ex->add_option("--rows", xopt.rows, "Rows attributed");
  ex->add_option("--background", xopt.background, "Background rows");
  ex->add_option("--permutations", xopt.permutations, "Permutations per row in sample mode");
  ex->add_option("--epsilon", xopt.epsilon, "Largest FGSM perturbation")->check(CLI::NonNegativeNumber);
  ex->add_option("--seed", seed, "Random seed");

  // serve-sim
  auto* sv = app.add_subcommand("serve-sim", "Discrete-event serving simulation, baseline versus cache and autoscaling");
  std::string sv_out, sv_model, sv_data;
  add_config(sv);
  sv->add_option("--out", sv_out, "Write metrics JSON here");
  sv->add_option("--model", sv_model, "Model checkpoint answering cache misses")->check(CLI::ExistingFile);
  sv->add_option("--data", sv_data, "Rows the request keys index into")->check(CLI::ExistingFile);
  sv->add_option("--seed", seed, "Random seed");

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "Run the five-stage workflow end to end");
  std::string pl_out = "pipeline_out";
  add_config(pl);
  pl->add_option("--out", pl_out, "Output directory");
  pl->add_option("--seed", seed, "Seed for the cohort and the model");

  if (argc > 1 && argv[1][0] != '-') {
    bool known = false;
    for (const auto* sub : app.get_subcommands({})) known = known || sub->get_name() == argv[1];
    if (!known) {
      err << "unknown subcommand \"" << argv[1] << "\"\n" << app.help();
      return 2;
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    if (gen->parsed()) {
      auto c = config();
      if (gen_n) c.cohort.n = *gen_n;
      if (seed) c.cohort.seed = *seed;
      if (gen_prev) c.cohort.prevalence = *gen_prev;
      if (gen_missing) c.cohort.missing_rate = *gen_missing;
      if (gen_noise) c.cohort.n_noise_features = *gen_noise;
      c.cohort.validate();
      app::run_generate(c.cohort, gen_out);
      out << "wrote " << c.cohort.n << " rows to " << gen_out << '\n';
    } else if (pre->parsed()) {
      auto c = config();
      if (pre_pca) c.preprocess.pca_k = *pre_pca;
      if (pre_select) c.preprocess.select_k = *pre_select;
      app::run_preprocess(pre_in, pre_out, c.preprocess, pre_ranking, out);
    } else if (trn->parsed()) {
      auto c = config();
      if (trn_epochs) c.model.epochs = *trn_epochs;
      if (seed) c.model.seed = *seed;
      app::run_train(c, topt, out);
    } else if (ev->parsed()) {
      app::run_evaluate(ev_model, ev_data, ev_out, ev_threshold, out);
    } else if (tn->parsed()) {
      auto c = config();
      if (tn_budget) c.tuning.budget = *tn_budget;
      if (tn_eta) c.tuning.eta = *tn_eta;
      if (tn_grace) c.tuning.grace = *tn_grace;
      if (tn_max_t) c.tuning.max_t = *tn_max_t;
      if (tn_par) c.tuning.parallelism = *tn_par;
      if (tn_proposer) c.tuning.proposer = *tn_proposer;
      tnopt.seed = seed.value_or(c.model.seed);
      app::run_tune(c, tnopt, out);
    } else if (fed->parsed()) {
      auto c = config();
      fopt.encrypted = fed_mode == "encrypted";
      fopt.seed = seed.value_or(c.model.seed);
      app::run_fedtrain(c, fopt, out);
    } else if (kg->parsed()) {
      app::run_keygen(kg_bits, seed.value_or(0), kg_out, out);
    } else if (ex->parsed()) {
      xopt.mode = ex_mode == "exact" ? explain::ShapleyMode::exact : explain::ShapleyMode::sample;
      xopt.seed = seed.value_or(0);
      app::run_explain(xopt, out);
    } else if (sv->parsed()) {
      auto c = config();
      serve::Predictor predict;
      std::optional<app::ModelBundle> bundle;
      model::Dataset rows;
      if (!sv_model.empty()) {
        require(!sv_data.empty(), "--model needs --data");
        bundle = app::load_bundle(sv_model);
        rows = bundle->prep.transform(app::load_table(sv_data).records);
        require(!rows.empty(), "no rows in ", sv_data);
        predict = [&](std::size_t key) { return model::predict(bundle->model, rows[key % rows.size()]); };
      }
      app::run_serve_sim(c, seed.value_or(0), sv_out, predict, out);
    } else if (pl->parsed()) {
      auto c = config();
      if (seed) {
        c.cohort.seed = *seed;
        c.model.seed = *seed;
      }
      return app::run_pipeline_command(c, pl_out, out).ok() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace glycopipe
