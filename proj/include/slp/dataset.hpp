#pragma once

// Event-log ingestion, sessionization and chronological splitting.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace slp {

struct Event {
  std::string user_id;
  double timestamp = 0.0;  // seconds since epoch, UTC
  std::string item_id;
};

struct Session {
  std::string user_id;
  double start_time = 0.0;
  double raw_length = 0.0;   // seconds, > 0
  double log_length = 0.0;   // ln(raw_length)
  int session_index = 0;     // 1-based chronological position within the user
};

// Sessions grouped by user; groups are kept in user_id order and each
// group is sorted by start_time with 1-based contiguous session_index.
class SessionDataset {
 public:
  void add(Session s);  // appends; caller keeps per-user chronological order
  void renumber();      // sorts each group by start_time and rewrites indices

  const std::map<std::string, std::vector<Session>>& by_user() const { return users_; }
  const std::vector<Session>* find_user(const std::string& user_id) const;

  std::size_t user_count() const { return users_.size(); }
  std::size_t total_sessions() const;  // N0
  bool empty() const { return users_.empty(); }

  // All sessions sorted by (start_time, user_id, session_index).
  std::vector<Session> sorted_sessions() const;

 private:
  std::map<std::string, std::vector<Session>> users_;
};

struct ParseReport {
  std::size_t parsed = 0;
  std::size_t malformed = 0;
};

struct SessionizeReport {
  std::size_t sessions = 0;
  std::size_t dropped_short = 0;
};

struct SplitDataset {
  SessionDataset train, validation, test;
  double train_fraction = 0.8, validation_fraction = 0.1, test_fraction = 0.1;
  std::size_t removed_validation = 0;  // sessions of users absent from train
  std::size_t removed_test = 0;
};

struct SummaryStats {
  double raw_q25, raw_median, raw_mean, raw_q75;
  double log_q25, log_median, log_mean, log_q75;
};

// Tab-separated log, columns: user_id \t iso8601_timestamp [\t item_id ...].
// Extra columns are ignored.  Throws if the file is unreadable, if zero
// lines parse, or if more than max_malformed_fraction of lines fail.
std::map<std::string, std::vector<Event>> parse_event_log(
    const std::string& path, double max_malformed_fraction = 0.5,
    ParseReport* report = nullptr);

// "YYYY-MM-DDTHH:MM:SSZ" -> seconds since epoch; nullopt on failure.
std::optional<double> parse_iso8601(const std::string& text);

// A gap strictly greater than gap_threshold starts a new session; session
// length is the time extent (last event - first event).  Sessions shorter
// than min_session_length are dropped and counted.
SessionDataset sessionize(const std::map<std::string, std::vector<Event>>& events,
                          double gap_threshold = 1800.0,
                          double min_session_length = 1.0,
                          SessionizeReport* report = nullptr);

// Global chronological split with start-time ties broken by
// (user_id, session_index); validation/test sessions of users absent from
// train are removed and counted.
SplitDataset chronological_split(const SessionDataset& ds,
                                 double train_fraction = 0.8,
                                 double validation_fraction = 0.1,
                                 double test_fraction = 0.1);

// Quantiles (linear interpolation) and mean of lengths normalized by the
// dataset maximum, on the raw and log scales.
SummaryStats summarize(const SessionDataset& ds);

double quantile(std::vector<double> values, double q);  // linear interpolation

// CSV with header user_id,start_time,raw_length_s,log_length,session_index.
void write_sessions_csv(const SessionDataset& ds, const std::string& path);
SessionDataset read_sessions_csv(const std::string& path);

}  // namespace slp
