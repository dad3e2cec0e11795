// Command-line surface for the session-length prediction pipeline:
// sessionize -> split -> features -> fit -> predict -> evaluate -> report,
// plus a synthetic-data generator for the property suites.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "slp/model_io.hpp"
#include "slp/pipeline.hpp"
#include "slp/simulate.hpp"

namespace fs = std::filesystem;
using namespace slp;

namespace {

SplitDataset load_split_dir(const std::string& dir) {
  SplitDataset split;
  split.train = read_sessions_csv(dir + "/train.csv");
  split.validation = read_sessions_csv(dir + "/validation.csv");
  split.test = read_sessions_csv(dir + "/test.csv");
  return split;
}

UserAttributes maybe_attrs(const std::string& path) {
  return path.empty() ? UserAttributes{} : read_user_attributes(path);
}

FeatureSchema schema_for(const UserAttributes& attrs) {
  std::vector<std::string> cats;
  for (const auto& [uid, kv] : attrs)
    for (const auto& [name, value] : kv)
      if (std::find(cats.begin(), cats.end(), name) == cats.end()) cats.push_back(name);
  std::sort(cats.begin(), cats.end());
  return FeatureSchema::standard(cats);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void write_grid_path_csv(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "lambda,alpha,delta,gbt_trees,gbt_depth,gbt_learning_rate,valid_mae,"
         "iterations,warm_started\n";
  out.precision(12);
  for (const auto& p : model.grid_path)
    out << p.lambda << ',' << p.alpha << ',' << p.delta << ',' << p.gbt.n_trees << ','
        << p.gbt.max_depth << ',' << p.gbt.learning_rate << ',' << p.valid_mae << ','
        << p.iterations << ',' << (p.warm_started ? 1 : 0) << '\n';
}

void write_trace_csv(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iteration,objective\n";
  out.precision(17);
  for (std::size_t t = 0; t < model.fit.objective_trace.size(); ++t)
    out << t + 1 << ',' << model.fit.objective_trace[t] << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical shrinkage models for user session-length prediction"};
  app.require_subcommand(1);
  app.set_config("--config")->configurable(false);

  // sessionize
  auto* sess = app.add_subcommand("sessionize", "Assemble sessions from an event log");
  std::string sess_input, sess_out = "sessions.csv";
  double gap_seconds = 1800.0, min_session_length = 1.0, malformed_tolerance = 0.5;
  sess->add_option("--input", sess_input, "tab-separated event log")->required();
  sess->add_option("--out", sess_out, "output sessions CSV");
  sess->add_option("--gap-seconds", gap_seconds, "inactivity gap starting a new session");
  sess->add_option("--min-session-length", min_session_length, "drop shorter sessions");
  sess->add_option("--malformed-tolerance", malformed_tolerance,
                   "max tolerated fraction of malformed lines");

  // split
  auto* split_cmd = app.add_subcommand("split", "Chronological train/validation/test split");
  std::string split_input, split_out = ".";
  double train_frac = 0.8, valid_frac = 0.1, test_frac = 0.1;
  split_cmd->add_option("--input", split_input, "sessions CSV")->required();
  split_cmd->add_option("--out", split_out, "output directory");
  split_cmd->add_option("--train-frac", train_frac);
  split_cmd->add_option("--valid-frac", valid_frac);
  split_cmd->add_option("--test-frac", test_frac);

  // features
  auto* feat = app.add_subcommand("features", "Export per-session feature tables");
  std::string feat_split_dir, feat_out = ".", feat_attrs;
  feat->add_option("--split-dir", feat_split_dir)->required();
  feat->add_option("--out", feat_out, "output directory");
  feat->add_option("--attrs", feat_attrs, "user attributes TSV (user\\tname\\tvalue)");

  // fit
  auto* fit = app.add_subcommand("fit", "Tune and train a model family");
  std::string fit_split_dir, fit_family_tag = "model1", fit_out = "model.json", fit_attrs;
  std::vector<double> fit_lambdas, fit_alphas, fit_deltas;
  std::vector<int> fit_gbt_trees;
  std::vector<int> fit_gbt_depth;
  std::vector<double> fit_gbt_lr;
  bool no_refit = false, no_warm = false, lognormal = false;
  fit->add_option("--split-dir", fit_split_dir)->required();
  fit->add_option("--family", fit_family_tag,
                  "baseline|model1|ridge|model2-l1|model2-l2|model2-gbt|model3-l2|model3-gbt");
  fit->add_option("--out", fit_out, "model file path");
  fit->add_option("--attrs", fit_attrs);
  fit->add_option("--lambda", fit_lambdas, "lambda grid override");
  fit->add_option("--alpha", fit_alphas, "alpha grid override");
  fit->add_option("--delta", fit_deltas, "delta grid override");
  fit->add_option("--gbt-trees", fit_gbt_trees, "GBT tree-count grid override");
  fit->add_option("--gbt-depth", fit_gbt_depth, "GBT depth grid override");
  fit->add_option("--gbt-learning-rate", fit_gbt_lr, "GBT learning-rate grid override");
  fit->add_flag("--no-refit", no_refit, "skip the train+validation refit");
  fit->add_flag("--no-warm-start", no_warm, "cold-start every grid point");
  fit->add_flag("--lognormal-correction", lognormal,
                "multiply predictions by exp(sigma1^2/2)");

  // predict
  auto* pred = app.add_subcommand("predict", "Predict test-session lengths");
  std::string pred_model, pred_split_dir, pred_out = "predictions.csv", pred_attrs;
  pred->add_option("--model", pred_model)->required();
  pred->add_option("--split-dir", pred_split_dir)->required();
  pred->add_option("--out", pred_out);
  pred->add_option("--attrs", pred_attrs);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Test-set MAE report");
  std::string eval_model, eval_split_dir, eval_out = ".", eval_attrs;
  eval->add_option("--model", eval_model)->required();
  eval->add_option("--split-dir", eval_split_dir)->required();
  eval->add_option("--out", eval_out, "output directory");
  eval->add_option("--attrs", eval_attrs);

  // report
  auto* rep = app.add_subcommand("report", "Print a saved evaluation report");
  std::string rep_eval;
  rep->add_option("--eval", rep_eval, "eval.txt path")->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate synthetic hierarchical data");
  std::string sim_kind = "model1", sim_out = ".";
  int sim_users = 100, sim_min_sessions = 2, sim_max_sessions = 5, sim_covariates = 5;
  double sim_sigma0 = 1.0, sim_sigma1 = 1.0, sim_corrupt_frac = 0.05,
         sim_corrupt_mag = 5.0, sim_global_mean = 6.0;
  std::uint64_t sim_seed = 1;
  sim->add_option("--kind", sim_kind, "model1|model2|model3");
  sim->add_option("--out", sim_out, "output directory");
  sim->add_option("--users", sim_users);
  sim->add_option("--min-sessions", sim_min_sessions);
  sim->add_option("--max-sessions", sim_max_sessions);
  sim->add_option("--covariates", sim_covariates);
  sim->add_option("--sigma0", sim_sigma0);
  sim->add_option("--sigma1", sim_sigma1);
  sim->add_option("--corrupt-fraction", sim_corrupt_frac);
  sim->add_option("--corrupt-magnitude", sim_corrupt_mag);
  sim->add_option("--global-mean", sim_global_mean);
  sim->add_option("--seed", sim_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sess) {
      ParseReport parse_report;
      auto events = parse_event_log(sess_input, malformed_tolerance, &parse_report);
      SessionizeReport sess_report;
      auto ds = sessionize(events, gap_seconds, min_session_length, &sess_report);
      write_sessions_csv(ds, sess_out);
      std::cout << "sessionize: " << sess_report.sessions << " sessions from "
                << parse_report.parsed << " events (" << parse_report.malformed
                << " malformed lines, " << sess_report.dropped_short
                << " short sessions dropped) -> " << sess_out << '\n';
    } else if (*split_cmd) {
      auto ds = read_sessions_csv(split_input);
      auto split = chronological_split(ds, train_frac, valid_frac, test_frac);
      fs::create_directories(split_out);
      write_sessions_csv(split.train, split_out + "/train.csv");
      write_sessions_csv(split.validation, split_out + "/validation.csv");
      write_sessions_csv(split.test, split_out + "/test.csv");
      std::ostringstream report;
      report << "train sessions: " << split.train.total_sessions() << '\n'
             << "validation sessions: " << split.validation.total_sessions() << '\n'
             << "test sessions: " << split.test.total_sessions() << '\n'
             << "validation sessions removed (user absent from train): "
             << split.removed_validation << '\n'
             << "test sessions removed (user absent from train): "
             << split.removed_test << '\n';
      write_text(split_out + "/split_report.txt", report.str());
      std::cout << "split: " << split.train.total_sessions() << '/'
                << split.validation.total_sessions() << '/'
                << split.test.total_sessions() << " -> " << split_out << '\n';
    } else if (*feat) {
      auto split = load_split_dir(feat_split_dir);
      auto attrs = maybe_attrs(feat_attrs);
      auto tables = build_features(split, schema_for(attrs), attrs);
      fs::create_directories(feat_out);
      write_feature_table_csv(tables.train, feat_out + "/features_train.csv");
      write_feature_table_csv(tables.validation, feat_out + "/features_validation.csv");
      write_feature_table_csv(tables.test, feat_out + "/features_test.csv");
      std::cout << "features: " << tables.train.rows.size() << '/'
                << tables.validation.rows.size() << '/' << tables.test.rows.size()
                << " rows -> " << feat_out << '\n';
    } else if (*fit) {
      auto split = load_split_dir(fit_split_dir);
      auto attrs = maybe_attrs(fit_attrs);
      Family family = family_from_string(fit_family_tag);
      FitOptions options;
      options.lambdas = fit_lambdas;
      options.alphas = fit_alphas;
      options.deltas = fit_deltas;
      options.refit_on_combined = !no_refit;
      options.warm_starts = !no_warm;
      options.lognormal_correction = lognormal;
      if (!fit_gbt_trees.empty() || !fit_gbt_depth.empty() || !fit_gbt_lr.empty()) {
        if (fit_gbt_trees.empty()) fit_gbt_trees = {50};
        if (fit_gbt_depth.empty()) fit_gbt_depth = {6};
        if (fit_gbt_lr.empty()) fit_gbt_lr = {0.1};
        for (int t : fit_gbt_trees)
          for (int d : fit_gbt_depth)
            for (double lr : fit_gbt_lr) {
              GbtParams p;
              p.n_trees = t;
              p.max_depth = d;
              p.learning_rate = lr;
              options.gbt.push_back(p);
            }
      }
      TrainedModel model = fit_family(family, split, schema_for(attrs), attrs, options);
      save_model(model, fit_out);
      if (!model.grid_path.empty()) {
        write_grid_path_csv(model, fit_out + ".grid_path.csv");
        write_trace_csv(model, fit_out + ".trace.csv");
      }
      std::cout << "fit: family=" << family_to_string(family)
                << " lambda_hat=" << model.vc.lambda();
      if (family_uses_covariates(family))
        std::cout << " chosen lambda=" << model.chosen.lambda
                  << " alpha=" << model.chosen.alpha
                  << " delta=" << model.chosen.delta
                  << " valid_mae=" << model.chosen.valid_mae;
      std::cout << " -> " << fit_out << '\n';
    } else if (*pred) {
      auto split = load_split_dir(pred_split_dir);
      auto model = load_model(pred_model);
      auto rows = predict_test(model, split, maybe_attrs(pred_attrs));
      std::ofstream out(pred_out);
      if (!out) throw std::runtime_error("cannot write " + pred_out);
      out << "user_id,session_index,predicted_seconds,actual_seconds\n";
      out.precision(12);
      for (const auto& r : rows)
        out << r.user_id << ',' << r.session_index << ',' << r.predicted_seconds << ','
            << r.actual_seconds << '\n';
      std::cout << "predict: " << rows.size() << " rows -> " << pred_out << '\n';
    } else if (*eval) {
      auto split = load_split_dir(eval_split_dir);
      auto model = load_model(eval_model);
      auto report = evaluate(model, split, maybe_attrs(eval_attrs));
      fs::create_directories(eval_out);
      write_text(eval_out + "/eval.txt", report.to_text());
      write_text(eval_out + "/eval.csv", report.to_csv());
      std::cout.precision(4);
      std::cout << std::fixed << "evaluate: family=" << family_to_string(model.family)
                << " normalized MAE=" << report.normalized_mae << " -> " << eval_out
                << '\n';
    } else if (*rep) {
      std::ifstream in(rep_eval);
      if (!in) throw std::runtime_error("cannot open " + rep_eval);
      std::cout << in.rdbuf();
    } else if (*sim) {
      SimConfig cfg;
      cfg.n_users = sim_users;
      cfg.min_sessions = sim_min_sessions;
      cfg.max_sessions = sim_max_sessions;
      cfg.sigma0 = sim_sigma0;
      cfg.sigma1 = sim_sigma1;
      cfg.global_mean = sim_global_mean;
      cfg.seed = sim_seed;
      if (sim_kind == "model2" || sim_kind == "model3") cfg.n_covariates = sim_covariates;
      if (sim_kind == "model3") {
        cfg.corrupt_fraction = sim_corrupt_frac;
        cfg.corrupt_magnitude = sim_corrupt_mag;
      } else if (sim_kind != "model1" && sim_kind != "model2") {
        throw std::runtime_error("unknown simulate kind: " + sim_kind);
      }
      auto data = simulate(cfg);
      fs::create_directories(sim_out);
      write_sessions_csv(data.sessions, sim_out + "/sessions.csv");
      if (cfg.n_covariates > 0) {
        std::ofstream out(sim_out + "/covariates.csv");
        out << "row,user_id";
        for (int c = 0; c < cfg.n_covariates; ++c) out << ",x" << c;
        out << '\n';
        out.precision(12);
        for (Eigen::Index r = 0; r < data.x.rows(); ++r) {
          out << r << ',' << data.user_ids[static_cast<std::size_t>(data.row_user[static_cast<std::size_t>(r)])];
          for (Eigen::Index c = 0; c < data.x.cols(); ++c) out << ',' << data.x(r, c);
          out << '\n';
        }
      }
      std::cout << "simulate: " << data.sessions.total_sessions() << " sessions for "
                << cfg.n_users << " users -> " << sim_out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
