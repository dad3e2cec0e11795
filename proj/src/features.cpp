#include "slp/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace slp {

FeatureSchema FeatureSchema::standard(const std::vector<std::string>& user_categoricals) {
  FeatureSchema s;
  s.numeric = {"absence_time", "previous_duration", "avg_user_duration",
               "log_absence_time", "log_previous_duration", "log_avg_user_duration"};
  s.categorical = {"session_time"};
  s.categorical.insert(s.categorical.end(), user_categoricals.begin(), user_categoricals.end());
  return s;
}

namespace {

std::string session_time_of(double start_time) {
  double secs_of_day = std::fmod(start_time, 86400.0);
  if (secs_of_day < 0) secs_of_day += 86400.0;
  return secs_of_day < 12 * 3600.0 ? "morning" : "afternoon";
}

struct UnionEntry {
  const Session* s;
  bool in_part;
  int part_index;
};

// Train sessions merged with the part's sessions, ordered by start time
// (train first on ties).  For the train part itself the union is just train.
std::vector<UnionEntry> union_with_train(const std::vector<Session>* train_sessions,
                                         const std::vector<Session>& part_sessions,
                                         bool part_is_train) {
  std::vector<UnionEntry> u;
  if (!part_is_train && train_sessions)
    for (const auto& s : *train_sessions) u.push_back({&s, false, 0});
  for (const auto& s : part_sessions) u.push_back({&s, true, s.session_index});
  std::stable_sort(u.begin(), u.end(), [](const UnionEntry& a, const UnionEntry& b) {
    if (a.s->start_time != b.s->start_time) return a.s->start_time < b.s->start_time;
    return a.in_part < b.in_part;
  });
  return u;
}

}  // namespace

FeatureTables build_features(const SplitDataset& split, const FeatureSchema& schema,
                             const UserAttributes& attrs) {
  if (split.train.empty()) throw std::invalid_argument("empty training split");

  for (const auto& cat : schema.categorical) {
    if (cat == "session_time") continue;
    bool present = false;
    for (const auto& [uid, kv] : attrs)
      if (kv.count(cat)) { present = true; break; }
    if (!present) throw std::runtime_error("categorical feature not derivable: " + cat);
  }

  // Train-only per-user mean raw length.
  std::map<std::string, double> avg_duration;
  double global_sum = 0.0;
  std::size_t global_n = 0;
  for (const auto& [uid, sessions] : split.train.by_user()) {
    double sum = 0.0;
    for (const auto& s : sessions) sum += s.raw_length;
    avg_duration[uid] = sum / static_cast<double>(sessions.size());
    global_sum += sum;
    global_n += sessions.size();
  }
  const double global_avg = global_sum / static_cast<double>(global_n);

  // Training medians for first-session imputation.
  std::vector<double> train_absences, train_prevs;
  for (const auto& [uid, sessions] : split.train.by_user()) {
    for (std::size_t j = 1; j < sessions.size(); ++j) {
      double prev_end = sessions[j - 1].start_time + sessions[j - 1].raw_length;
      train_absences.push_back(std::max(0.0, sessions[j].start_time - prev_end));
      train_prevs.push_back(sessions[j - 1].raw_length);
    }
  }
  const double med_absence = train_absences.empty() ? 0.0 : quantile(train_absences, 0.5);
  const double med_prev = train_prevs.empty() ? 0.0 : quantile(train_prevs, 0.5);

  auto build_part = [&](const SessionDataset& part, bool is_train) {
    FeatureTable table;
    table.schema = schema;
    std::size_t n = part.total_sessions();
    table.numeric.resize(static_cast<Eigen::Index>(n),
                         static_cast<Eigen::Index>(schema.numeric.size()));
    std::size_t r = 0;
    for (const auto& [uid, part_sessions] : part.by_user()) {
      auto u = union_with_train(split.train.find_user(uid), part_sessions, is_train);
      double user_avg = avg_duration.count(uid) ? avg_duration.at(uid) : global_avg;
      for (std::size_t k = 0; k < u.size(); ++k) {
        if (!u[k].in_part) continue;
        const Session& s = *u[k].s;
        double absence = med_absence, prev = med_prev;
        if (k > 0) {
          const Session& p = *u[k - 1].s;
          absence = std::max(0.0, s.start_time - (p.start_time + p.raw_length));
          prev = p.raw_length;
        }
        std::map<std::string, double> vals = {
            {"absence_time", absence},
            {"previous_duration", prev},
            {"avg_user_duration", user_avg},
            {"log_absence_time", std::log1p(absence)},
            {"log_previous_duration", std::log1p(prev)},
            {"log_avg_user_duration", std::log1p(user_avg)}};
        for (std::size_t c = 0; c < schema.numeric.size(); ++c) {
          auto it = vals.find(schema.numeric[c]);
          if (it == vals.end())
            throw std::runtime_error("numeric feature not derivable: " + schema.numeric[c]);
          table.numeric(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = it->second;
        }
        std::vector<std::string> cats;
        for (const auto& cat : schema.categorical) {
          if (cat == "session_time") {
            cats.push_back(session_time_of(s.start_time));
          } else {
            auto uit = attrs.find(uid);
            if (uit != attrs.end() && uit->second.count(cat))
              cats.push_back(uit->second.at(cat));
            else
              cats.push_back("unknown");
          }
        }
        table.categorical.push_back(std::move(cats));
        table.rows.push_back({uid, u[k].part_index});
        ++r;
      }
    }
    return table;
  };

  FeatureTables out;
  out.train = build_part(split.train, true);
  out.validation = build_part(split.validation, false);
  out.test = build_part(split.test, false);
  out.median_absence_time = med_absence;
  out.median_previous_duration = med_prev;
  return out;
}

namespace {

// Raw one-hot encoding into the standardizer's column layout.
Eigen::MatrixXd encode(const Standardizer& std_, const FeatureTable& table) {
  if (table.schema.numeric != std_.numeric_names)
    throw std::runtime_error("feature table numeric schema mismatch");
  if (table.schema.categorical.size() != std_.categorical_levels.size())
    throw std::runtime_error("feature table categorical schema mismatch");
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto d = static_cast<Eigen::Index>(std_.encoded_names.size());
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, d);
  E.leftCols(table.numeric.cols()) = table.numeric;
  Eigen::Index col = table.numeric.cols();
  for (std::size_t c = 0; c < std_.categorical_levels.size(); ++c) {
    const auto& [name, levels] = std_.categorical_levels[c];
    if (table.schema.categorical[c] != name)
      throw std::runtime_error("feature table categorical schema mismatch");
    for (Eigen::Index r = 0; r < n; ++r) {
      const std::string& v = table.categorical[static_cast<std::size_t>(r)][c];
      auto it = std::find(levels.begin(), levels.end(), v);
      // Reference level (first) and unseen levels both encode as all-zero.
      if (it != levels.end() && it != levels.begin())
        E(r, col + static_cast<Eigen::Index>(it - levels.begin()) - 1) = 1.0;
    }
    col += static_cast<Eigen::Index>(levels.size()) - 1;
  }
  return E;
}

}  // namespace

std::pair<Standardizer, DesignMatrix> fit_standardizer(const FeatureTable& table) {
  if (table.rows.empty()) throw std::invalid_argument("empty feature table");
  Standardizer std_;
  std_.numeric_names = table.schema.numeric;
  std_.encoded_names = table.schema.numeric;
  for (std::size_t c = 0; c < table.schema.categorical.size(); ++c) {
    std::vector<std::string> levels;
    for (const auto& row : table.categorical) levels.push_back(row[c]);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    for (std::size_t l = 1; l < levels.size(); ++l)
      std_.encoded_names.push_back(table.schema.categorical[c] + "=" + levels[l]);
    std_.categorical_levels.emplace_back(table.schema.categorical[c], std::move(levels));
  }

  Eigen::MatrixXd E = encode(std_, table);
  std_.mean = E.colwise().mean();
  E.rowwise() -= std_.mean.transpose();
  std_.norm = E.colwise().norm();
  for (Eigen::Index c = 0; c < E.cols(); ++c) {
    if (std_.norm(c) > 1e-12)
      std_.kept.push_back(static_cast<int>(c));
    else
      std_.dropped.push_back(std_.encoded_names[static_cast<std::size_t>(c)]);
  }
  if (std_.kept.empty()) throw std::runtime_error("all feature columns have zero variance");

  DesignMatrix dm;
  dm.rows = table.rows;
  dm.X.resize(E.rows(), static_cast<Eigen::Index>(std_.kept.size()));
  for (std::size_t k = 0; k < std_.kept.size(); ++k) {
    Eigen::Index c = std_.kept[k];
    dm.X.col(static_cast<Eigen::Index>(k)) = E.col(c) / std_.norm(c);
    dm.column_names.push_back(std_.encoded_names[static_cast<std::size_t>(c)]);
  }
  return {std_, dm};
}

DesignMatrix apply_standardizer(const Standardizer& std_, const FeatureTable& table) {
  Eigen::MatrixXd E = encode(std_, table);
  E.rowwise() -= std_.mean.transpose();
  DesignMatrix dm;
  dm.rows = table.rows;
  dm.X.resize(E.rows(), static_cast<Eigen::Index>(std_.kept.size()));
  for (std::size_t k = 0; k < std_.kept.size(); ++k) {
    Eigen::Index c = std_.kept[k];
    dm.X.col(static_cast<Eigen::Index>(k)) = E.col(c) / std_.norm(c);
    dm.column_names.push_back(std_.encoded_names[static_cast<std::size_t>(c)]);
  }
  return dm;
}

void write_feature_table_csv(const FeatureTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "user_id,session_index";
  for (const auto& n : table.schema.numeric) out << ',' << n;
  for (const auto& c : table.schema.categorical) out << ',' << c;
  out << '\n';
  out.precision(17);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out << table.rows[r].user_id << ',' << table.rows[r].session_index;
    for (Eigen::Index c = 0; c < table.numeric.cols(); ++c)
      out << ',' << table.numeric(static_cast<Eigen::Index>(r), c);
    for (const auto& v : table.categorical[r]) out << ',' << v;
    out << '\n';
  }
}

UserAttributes read_user_attributes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  UserAttributes attrs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string uid, name, value;
    if (std::getline(ss, uid, '\t') && std::getline(ss, name, '\t') && std::getline(ss, value))
      attrs[uid][name] = value;
  }
  return attrs;
}

}  // namespace slp
