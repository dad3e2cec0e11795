#include "slp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace slp {

void SessionDataset::add(Session s) {
  users_[s.user_id].push_back(std::move(s));
}

void SessionDataset::renumber() {
  for (auto& [uid, sessions] : users_) {
    std::stable_sort(sessions.begin(), sessions.end(),
                     [](const Session& a, const Session& b) { return a.start_time < b.start_time; });
    int idx = 1;
    for (auto& s : sessions) s.session_index = idx++;
  }
}

const std::vector<Session>* SessionDataset::find_user(const std::string& user_id) const {
  auto it = users_.find(user_id);
  return it == users_.end() ? nullptr : &it->second;
}

std::size_t SessionDataset::total_sessions() const {
  std::size_t n = 0;
  for (const auto& [uid, sessions] : users_) n += sessions.size();
  return n;
}

std::vector<Session> SessionDataset::sorted_sessions() const {
  std::vector<Session> all;
  all.reserve(total_sessions());
  for (const auto& [uid, sessions] : users_)
    all.insert(all.end(), sessions.begin(), sessions.end());
  std::sort(all.begin(), all.end(), [](const Session& a, const Session& b) {
    return std::tie(a.start_time, a.user_id, a.session_index) <
           std::tie(b.start_time, b.user_id, b.session_index);
  });
  return all;
}

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static const int d[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return (m == 2 && is_leap(y)) ? 29 : d[m - 1];
}

// Days since 1970-01-01 for a Gregorian date.
long long days_from_epoch(int y, int m, int d) {
  long long days = 0;
  for (int yy = 1970; yy < y; ++yy) days += is_leap(yy) ? 366 : 365;
  for (int mm = 1; mm < m; ++mm) days += days_in_month(y, mm);
  return days + d - 1;
}

}  // namespace

std::optional<double> parse_iso8601(const std::string& text) {
  int y, mo, d, h, mi, s;
  char sep, tail = '\0';
  int n = std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%c",
                      &y, &mo, &d, &sep, &h, &mi, &s, &tail);
  if (n < 7 || (sep != 'T' && sep != ' ')) return std::nullopt;
  if (y < 1900 || mo < 1 || mo > 12 || d < 1 || d > days_in_month(y, mo)) return std::nullopt;
  if (h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) return std::nullopt;
  return static_cast<double>(days_from_epoch(y, mo, d) * 86400LL + h * 3600 + mi * 60 + s);
}

std::map<std::string, std::vector<Event>> parse_event_log(const std::string& path,
                                                          double max_malformed_fraction,
                                                          ParseReport* report) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open event log: " + path);

  std::map<std::string, std::vector<Event>> events;
  std::size_t parsed = 0, malformed = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab1 = line.find('\t');
    if (tab1 == std::string::npos || tab1 == 0) {
      ++malformed;
      continue;
    }
    auto tab2 = line.find('\t', tab1 + 1);
    std::string ts_text = line.substr(tab1 + 1, (tab2 == std::string::npos ? line.size() : tab2) - tab1 - 1);
    auto ts = parse_iso8601(ts_text);
    if (!ts || *ts < 0.0) {
      ++malformed;
      continue;
    }
    Event ev;
    ev.user_id = line.substr(0, tab1);
    ev.timestamp = *ts;
    if (tab2 != std::string::npos) {
      auto tab3 = line.find('\t', tab2 + 1);
      ev.item_id = line.substr(tab2 + 1, (tab3 == std::string::npos ? line.size() : tab3) - tab2 - 1);
    }
    events[ev.user_id].push_back(std::move(ev));
    ++parsed;
  }
  if (report) *report = {parsed, malformed};
  if (parsed == 0) throw std::runtime_error("zero parseable lines in " + path);
  double frac = static_cast<double>(malformed) / static_cast<double>(parsed + malformed);
  if (frac > max_malformed_fraction)
    throw std::runtime_error("too many malformed lines in " + path);

  for (auto& [uid, evs] : events)
    std::stable_sort(evs.begin(), evs.end(),
                     [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
  return events;
}

SessionDataset sessionize(const std::map<std::string, std::vector<Event>>& events,
                          double gap_threshold, double min_session_length,
                          SessionizeReport* report) {
  if (gap_threshold <= 0) throw std::invalid_argument("gap_threshold must be positive");
  SessionDataset ds;
  std::size_t kept = 0, dropped = 0;
  for (const auto& [uid, evs] : events) {
    std::size_t begin = 0;
    int index = 1;
    auto flush = [&](std::size_t end) {  // events [begin, end) form one session
      double length = evs[end - 1].timestamp - evs[begin].timestamp;
      if (length >= min_session_length) {
        Session s;
        s.user_id = uid;
        s.start_time = evs[begin].timestamp;
        s.raw_length = length;
        s.log_length = std::log(length);
        s.session_index = index++;
        ds.add(std::move(s));
        ++kept;
      } else {
        ++dropped;
      }
      begin = end;
    };
    for (std::size_t k = 1; k < evs.size(); ++k)
      if (evs[k].timestamp - evs[k - 1].timestamp > gap_threshold) flush(k);
    if (!evs.empty()) flush(evs.size());
  }
  if (report) *report = {kept, dropped};
  return ds;
}

SplitDataset chronological_split(const SessionDataset& ds, double train_fraction,
                                 double validation_fraction, double test_fraction) {
  if (ds.empty()) throw std::invalid_argument("empty dataset");
  double sum = train_fraction + validation_fraction + test_fraction;
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split fractions must sum to 1");

  auto all = ds.sorted_sessions();
  const std::size_t n0 = all.size();
  auto n_train = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n0)));
  auto n_valid = static_cast<std::size_t>(std::ceil(validation_fraction * static_cast<double>(n0)));
  n_train = std::min(n_train, n0);
  n_valid = std::min(n_valid, n0 - n_train);

  SplitDataset split;
  split.train_fraction = train_fraction;
  split.validation_fraction = validation_fraction;
  split.test_fraction = test_fraction;

  for (std::size_t k = 0; k < n0; ++k) {
    if (k < n_train) {
      split.train.add(all[k]);
    } else if (k < n_train + n_valid) {
      if (split.train.find_user(all[k].user_id))
        split.validation.add(all[k]);
      else
        ++split.removed_validation;
    } else {
      if (split.train.find_user(all[k].user_id))
        split.test.add(all[k]);
      else
        ++split.removed_test;
    }
  }
  split.train.renumber();
  split.validation.renumber();
  split.test.renumber();

  if (split.train.empty() || split.validation.empty() || split.test.empty())
    throw std::runtime_error("empty split after filtering");
  return split;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty vector");
  std::sort(values.begin(), values.end());
  double pos = q * static_cast<double>(values.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = static_cast<std::size_t>(std::ceil(pos));
  double w = pos - static_cast<double>(lo);
  return (1.0 - w) * values[lo] + w * values[hi];
}

SummaryStats summarize(const SessionDataset& ds) {
  if (ds.empty()) throw std::invalid_argument("empty dataset");
  std::vector<double> raw, lg;
  for (const auto& [uid, sessions] : ds.by_user())
    for (const auto& s : sessions) {
      raw.push_back(s.raw_length);
      lg.push_back(s.log_length);
    }
  double raw_max = *std::max_element(raw.begin(), raw.end());
  double log_max = *std::max_element(lg.begin(), lg.end());
  for (auto& v : raw) v /= raw_max;
  for (auto& v : lg) v /= log_max;
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  return SummaryStats{quantile(raw, 0.25), quantile(raw, 0.5), mean(raw), quantile(raw, 0.75),
                      quantile(lg, 0.25),  quantile(lg, 0.5),  mean(lg),  quantile(lg, 0.75)};
}

void write_sessions_csv(const SessionDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "user_id,start_time,raw_length_s,log_length,session_index\n";
  out.precision(17);
  for (const auto& [uid, sessions] : ds.by_user())
    for (const auto& s : sessions)
      out << s.user_id << ',' << s.start_time << ',' << s.raw_length << ','
          << s.log_length << ',' << s.session_index << '\n';
}

SessionDataset read_sessions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty sessions file " + path);
  SessionDataset ds;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    Session s;
    std::getline(ss, s.user_id, ',');
    std::getline(ss, field, ',');
    s.start_time = std::stod(field);
    std::getline(ss, field, ',');
    s.raw_length = std::stod(field);
    std::getline(ss, field, ',');
    s.log_length = std::stod(field);
    std::getline(ss, field, ',');
    s.session_index = std::stoi(field);
    ds.add(std::move(s));
  }
  ds.renumber();
  return ds;
}

}  // namespace slp
