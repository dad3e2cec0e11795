#pragma once

// End-to-end orchestration: features -> tuning -> final fit -> evaluation.
// The CLI is a thin wrapper over these calls.

#include <optional>
#include <string>
#include <vector>

#include "slp/features.hpp"
#include "slp/shrinkage.hpp"
#include "slp/tuning.hpp"

namespace slp {

struct TrainedModel {
  int format_version = 1;
  Family family = Family::Baseline;
  VarianceComponents vc;                   // holds global_mean
  FeatureSchema schema;
  Standardizer standardizer;               // covariate families only
  std::vector<std::string> feature_names;  // design-matrix columns
  std::vector<std::string> user_ids;       // index of fit.mu
  FittedModel fit;                         // covariate families and model1
  BaselinePredictor baseline;              // baseline family only
  GridPoint chosen;                        // winning hyperparameters
  std::vector<GridPoint> grid_path;
  bool lognormal_correction = false;
  bool trained_on_combined = true;  // final fit used train+validation

  bool uses_covariates() const { return family_uses_covariates(family); }
};

struct FitOptions {
  std::optional<Grid> grid;        // overrides the family defaults entirely
  // Per-axis overrides, applied on top of the defaults (or of `grid`).
  std::vector<double> lambdas, alphas, deltas;
  std::vector<GbtParams> gbt;
  bool refit_on_combined = true;   // retrain on train+validation after tuning
  bool warm_starts = true;
  bool lognormal_correction = false;
};

TrainedModel fit_family(Family family, const SplitDataset& split,
                        const FeatureSchema& schema = FeatureSchema::standard(),
                        const UserAttributes& attrs = {},
                        const FitOptions& options = {});

struct PredictionRow {
  std::string user_id;
  int session_index = 0;
  double predicted_seconds = 0.0;
  double actual_seconds = 0.0;
};

// Predictions for every test session of the split.
std::vector<PredictionRow> predict_test(const TrainedModel& model,
                                        const SplitDataset& split,
                                        const UserAttributes& attrs = {});

EvalReport evaluate(const TrainedModel& model, const SplitDataset& split,
                    const UserAttributes& attrs = {});

// Train and validation merged into one training set (used for the final
// refit and for the baseline normalization).
SessionDataset combined_train(const SplitDataset& split);

}  // namespace slp
