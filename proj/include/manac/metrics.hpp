#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace manac {

// One CSV row of the persisted metrics stream. Header is versioned by column
// set; network_total repeats on every agent row of an epoch.
struct MetricsRow {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string algo;
  long epoch = 0;
  int agent = 0;
  double reward = 0.0;
  double network_total = 0.0;
  double disagreement = 0.0;
  double theta_dist = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "run_id,seed,algo,epoch,agent,reward,network_total,disagreement,theta_dist";

std::string format_double(double x);

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

// Per-algorithm statistics over the final-window means of network_total, one
// sample per run. sd follows the population convention so the confidence
// half-width is exactly 1.96*sd/sqrt(runs).
struct SummaryRow {
  std::string algo;
  int runs = 0;
  double mean = 0.0;
  double sd = 0.0;
  double cf = 0.0;  // 1.96 * sd / sqrt(runs)
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

std::vector<SummaryRow> summarize(const std::vector<std::vector<MetricsRow>>& runs, long window);

// Mean of network_total over the last `window` epochs of one run.
double final_window_mean(const std::vector<MetricsRow>& run, long window);

enum class PlotKind { kCongestionCurve, kParamDistance, kLogParamDistance };
PlotKind plot_kind_from_name(const std::string& name);

// Columnar text: epoch column plus one column per algorithm, averaged over
// seeds (and agents, for the distance kinds).
void emit_plot_data(PlotKind kind, const std::vector<std::vector<MetricsRow>>& runs,
                    std::ostream& os);

}  // namespace manac
