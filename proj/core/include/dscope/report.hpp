#pragma once

#include <optional>
#include <string>

#include "dscope/ice.hpp"
#include "dscope/rse.hpp"
#include "dscope/store.hpp"

namespace dscope {

// Report rendering: fixed-width tables for terminals, CSV plot data for
// downstream charting, canonical JSON for machine diffing.

std::string render_ice_table(const IceReport& report);
std::string render_rse_table(const RseReport& report);

/// CSV: category,loose_positives,strict_positives plus a totals row.
std::string render_ice_plotdata(const IceReport& report);

/// CSV: dataset,mean_content,mean_logic,mean_style,mean_overview plus the
/// overall average row.
std::string render_rse_plotdata(const RseReport& report);

/// Replays a finished or partial log back into reports. Which reports come
/// out depends on which run parameter records the log holds.
struct ReplayResult {
  std::optional<IceReport> ice;
  std::optional<RseReport> rse;
  std::size_t record_count = 0;
};

ReplayResult replay_log(const std::string& log_path);

/// Writes <prefix>_report.json, <prefix>_table.txt and <prefix>_plot.csv
/// under out_dir for each present report; returns the written paths.
std::vector<std::string> write_report_files(const std::string& out_dir,
                                            const ReplayResult& reports);

}  // namespace dscope
