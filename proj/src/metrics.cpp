#include "manac/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace manac {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_metrics_csv: cannot open " + path);
  os << kMetricsHeader << '\n';
  for (const MetricsRow& r : rows) {
    os << r.run_id << ',' << r.seed << ',' << r.algo << ',' << r.epoch << ',' << r.agent << ','
       << format_double(r.reward) << ',' << format_double(r.network_total) << ','
       << format_double(r.disagreement) << ',' << format_double(r.theta_dist) << '\n';
  }
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_metrics_csv: cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != kMetricsHeader)
    throw std::runtime_error("read_metrics_csv: unrecognized header in " + path);
  std::vector<MetricsRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    MetricsRow r;
    auto next = [&]() {
      if (!std::getline(ss, field, ',')) throw std::runtime_error("read_metrics_csv: short row");
      return field;
    };
    r.run_id = next();
    r.seed = std::stoull(next());
    r.algo = next();
    r.epoch = std::stol(next());
    r.agent = std::stoi(next());
    r.reward = std::stod(next());
    r.network_total = std::stod(next());
    r.disagreement = std::stod(next());
    r.theta_dist = std::stod(next());
    rows.push_back(std::move(r));
  }
  return rows;
}

double final_window_mean(const std::vector<MetricsRow>& run, long window) {
  if (run.empty()) throw std::invalid_argument("final_window_mean: empty run");
  long last_epoch = 0;
  for (const MetricsRow& r : run) last_epoch = std::max(last_epoch, r.epoch);
  const long first = std::max<long>(1, last_epoch - window + 1);
  // network_total repeats across agent rows; average one value per epoch
  std::map<long, double> per_epoch;
  for (const MetricsRow& r : run)
    if (r.epoch >= first) per_epoch[r.epoch] = r.network_total;
  double sum = 0.0;
  for (const auto& [epoch, value] : per_epoch) sum += value;
  return sum / static_cast<double>(per_epoch.size());
}

std::vector<SummaryRow> summarize(const std::vector<std::vector<MetricsRow>>& runs, long window) {
  if (window < 1) throw std::invalid_argument("summarize: window >= 1");
  std::map<std::string, std::vector<double>> samples;
  std::vector<std::string> order;
  for (const auto& run : runs) {
    if (run.empty()) continue;
    const std::string& algo = run.front().algo;
    if (!samples.count(algo)) order.push_back(algo);
    samples[algo].push_back(final_window_mean(run, window));
  }
  // canonical, rerun-stable ordering
  std::sort(order.begin(), order.end());

  std::vector<SummaryRow> out;
  for (const std::string& algo : order) {
    const std::vector<double>& xs = samples[algo];
    SummaryRow row;
    row.algo = algo;
    row.runs = static_cast<int>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= xs.size();  // population convention; CF formula divides by sqrt(runs)
    row.mean = mean;
    row.sd = std::sqrt(var);
    row.cf = 1.96 * row.sd / std::sqrt(static_cast<double>(xs.size()));
    row.ci_lo = mean - row.cf;
    row.ci_hi = mean + row.cf;
    out.push_back(row);
  }
  return out;
}

PlotKind plot_kind_from_name(const std::string& name) {
  if (name == "congestion_curve") return PlotKind::kCongestionCurve;
  if (name == "param_distance") return PlotKind::kParamDistance;
  if (name == "log_param_distance") return PlotKind::kLogParamDistance;
  throw std::invalid_argument("plot kind must be congestion_curve, param_distance or log_param_distance");
}

void emit_plot_data(PlotKind kind, const std::vector<std::vector<MetricsRow>>& runs,
                    std::ostream& os) {
  // column per algorithm, rows by epoch; values averaged over seeds (distance
  // kinds also average over agents)
  std::set<std::string> algos_set;
  std::set<long> epochs_set;
  for (const auto& run : runs)
    for (const MetricsRow& r : run) {
      algos_set.insert(r.algo);
      epochs_set.insert(r.epoch);
    }
  std::vector<std::string> algos(algos_set.begin(), algos_set.end());

  os << "epoch";
  for (const std::string& a : algos) os << '\t' << a;
  os << '\n';

  std::map<std::pair<long, std::string>, std::pair<double, long>> acc;  // sum, count
  for (const auto& run : runs)
    for (const MetricsRow& r : run) {
      auto& slot = acc[{r.epoch, r.algo}];
      if (kind == PlotKind::kCongestionCurve) {
        if (r.agent == 0) {
          slot.first += r.network_total;
          slot.second += 1;
        }
      } else {
        slot.first += r.theta_dist;
        slot.second += 1;
      }
    }

  for (long epoch : epochs_set) {
    os << epoch;
    for (const std::string& a : algos) {
      const auto it = acc.find({epoch, a});
      double v = it == acc.end() || it->second.second == 0
                     ? 0.0
                     : it->second.first / static_cast<double>(it->second.second);
      if (kind == PlotKind::kLogParamDistance) v = v > 0.0 ? std::log10(v) : -18.0;
      os << '\t' << format_double(v);
    }
    os << '\n';
  }
}

}  // namespace manac
