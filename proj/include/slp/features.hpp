#pragma once

// Per-session covariates and design-matrix standardization.
//
// Numeric features: absence_time, previous_duration, avg_user_duration and
// their log(1+x) variants.  Categorical: session_time (morning/afternoon)
// plus optional user-static attributes supplied via UserAttributes.

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "slp/dataset.hpp"

namespace slp {

// Optional per-user static categoricals (gender, device, ...); missing in
// public last.fm data, so absence is configuration, not an error.
using UserAttributes = std::map<std::string, std::map<std::string, std::string>>;

struct FeatureSchema {
  std::vector<std::string> numeric;      // fixed numeric feature names, in order
  std::vector<std::string> categorical;  // session_time + configured user attributes

  static FeatureSchema standard(const std::vector<std::string>& user_categoricals = {});
};

struct FeatureRow {
  std::string user_id;
  int session_index = 0;  // index within the split part the row belongs to
};

struct FeatureTable {
  FeatureSchema schema;
  std::vector<FeatureRow> rows;
  Eigen::MatrixXd numeric;                             // rows x schema.numeric
  std::vector<std::vector<std::string>> categorical;   // rows x schema.categorical
};

struct FeatureTables {
  FeatureTable train, validation, test;
  double median_absence_time = 0.0;      // training medians used for imputation
  double median_previous_duration = 0.0;
};

struct Standardizer {
  std::vector<std::string> numeric_names;
  // Per categorical: (name, sorted level set); the first level is the
  // dropped reference.
  std::vector<std::pair<std::string, std::vector<std::string>>> categorical_levels;
  std::vector<std::string> encoded_names;  // all one-hot-encoded columns, pre-drop
  Eigen::VectorXd mean;                    // per encoded column
  Eigen::VectorXd norm;                    // post-centering l2 norm, kept columns only valid
  std::vector<int> kept;                   // encoded column indices with nonzero variance
  std::vector<std::string> dropped;        // zero-variance encoded column names
};

struct DesignMatrix {
  Eigen::MatrixXd X;
  std::vector<FeatureRow> rows;
  std::vector<std::string> column_names;
};

// Builds the Table-2 style covariates for each split part.  Per-user
// chronology for absence_time / previous_duration uses the union of train
// with the part being built; avg_user_duration is a train-only statistic.
FeatureTables build_features(const SplitDataset& split,
                             const FeatureSchema& schema = FeatureSchema::standard(),
                             const UserAttributes& attrs = {});

// One-hot encodes (reference level dropped), centers by column means and
// scales retained columns to unit l2 norm; zero-variance columns dropped.
std::pair<Standardizer, DesignMatrix> fit_standardizer(const FeatureTable& table);

// Applies fit-time constants; unseen categorical levels encode as all-zero.
DesignMatrix apply_standardizer(const Standardizer& std, const FeatureTable& table);

void write_feature_table_csv(const FeatureTable& table, const std::string& path);

// user_id \t name \t value, one attribute per line.
UserAttributes read_user_attributes(const std::string& path);

}  // namespace slp
