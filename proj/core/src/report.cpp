#include "dscope/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dscope {
namespace {

std::string fixed(double value, int places) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", places, value);
  return buffer;
}

std::string pad_left(const std::string& text, std::size_t width) {
  return text.size() >= width ? text
                              : std::string(width - text.size(), ' ') + text;
}

std::string pad_right(const std::string& text, std::size_t width) {
  return text.size() >= width ? text
                              : text + std::string(width - text.size(), ' ');
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCategory::internal, "cannot write report file: " + path);
  }
  out << content;
}

}  // namespace

std::string render_ice_table(const IceReport& report) {
  std::ostringstream out;
  out << "Identity consistency for " << report.model_id << "\n";
  out << "attempts: " << report.k
      << "  judge failures: " << report.judge_failures
      << "  skipped: " << report.skipped_attempts
      << "  log: " << (report.complete ? "complete" : "partial") << "\n\n";

  out << pad_right("category", 14) << pad_left("loose", 7)
      << pad_left("strict", 8) << "\n";
  for (int i = 0; i < kCategoryCount; ++i) {
    out << pad_right(to_string(static_cast<Category>(i)), 14)
        << pad_left(std::to_string(report.category_counts[i].loose), 7)
        << pad_left(std::to_string(report.category_counts[i].strict), 8) << "\n";
  }
  out << pad_right("total", 14)
      << pad_left(std::to_string(report.loose_positives()), 7)
      << pad_left(std::to_string(report.strict_positives()), 8) << "\n\n";

  out << "loose score  (LS): " << fixed(report.loose_score, 4) << "\n";
  out << "strict score (SS): " << fixed(report.strict_score, 4) << "\n";
  return out.str();
}

std::string render_rse_table(const RseReport& report) {
  std::ostringstream out;
  out << "Response similarity for " << report.model_id << "\n\n";
  out << pad_right("dataset", 16) << pad_left("pairs", 7) << pad_left("failed", 8)
      << pad_left("content", 9) << pad_left("logic", 8) << pad_left("style", 8)
      << pad_left("overview", 10) << "\n";
  for (const auto& [name, aggregate] : report.per_dataset) {
    out << pad_right(name, 16)
        << pad_left(std::to_string(aggregate.scored_pairs), 7)
        << pad_left(std::to_string(aggregate.judge_failures +
                                   aggregate.collection_failures),
                    8)
        << pad_left(fixed(aggregate.mean_content, 3), 9)
        << pad_left(fixed(aggregate.mean_logic, 3), 8)
        << pad_left(fixed(aggregate.mean_style, 3), 8)
        << pad_left(fixed(aggregate.mean_overview, 3), 10) << "\n";
  }
  out << "\n" << "weighted overview average: " << fixed(report.average, 3) << "\n";
  return out.str();
}

std::string render_ice_plotdata(const IceReport& report) {
  std::ostringstream out;
  out << "category,loose_positives,strict_positives\n";
  for (int i = 0; i < kCategoryCount; ++i) {
    out << to_string(static_cast<Category>(i)) << ","
        << report.category_counts[i].loose << ","
        << report.category_counts[i].strict << "\n";
  }
  out << "total," << report.loose_positives() << ","
      << report.strict_positives() << "\n";
  return out.str();
}

std::string render_rse_plotdata(const RseReport& report) {
  std::ostringstream out;
  out << "dataset,mean_content,mean_logic,mean_style,mean_overview\n";
  for (const auto& [name, aggregate] : report.per_dataset) {
    out << name << "," << fixed(aggregate.mean_content, 4) << ","
        << fixed(aggregate.mean_logic, 4) << ","
        << fixed(aggregate.mean_style, 4) << ","
        << fixed(aggregate.mean_overview, 4) << "\n";
  }
  out << "avg,,,," << fixed(report.average, 4) << "\n";
  return out.str();
}

ReplayResult replay_log(const std::string& log_path) {
  std::vector<Record> records = RunLog::read_all(log_path);
  ReplayResult result;
  result.record_count = records.size();

  bool has_ice = false;
  bool has_rse = false;
  for (const Record& record : records) {
    if (record.type != RecordType::meta) continue;
    const std::string kind = record.body.value("kind", "");
    if (kind == "ice_params") has_ice = true;
    if (kind == "rse_params") has_rse = true;
  }
  if (!has_ice && !has_rse) {
    throw SchemaViolationError("log holds no run parameter records: " + log_path);
  }
  if (has_ice) result.ice = aggregate_ice_records(records);
  if (has_rse) result.rse = aggregate_rse_records(records);
  return result;
}

std::vector<std::string> write_report_files(const std::string& out_dir,
                                            const ReplayResult& reports) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<std::string> written;

  if (reports.ice) {
    const std::string base = (fs::path(out_dir) / "ice").string();
    write_text_file(base + "_report.json", reports.ice->to_json().dump(2) + "\n");
    written.push_back(base + "_report.json");
    write_text_file(base + "_table.txt", render_ice_table(*reports.ice));
    written.push_back(base + "_table.txt");
    write_text_file(base + "_plot.csv", render_ice_plotdata(*reports.ice));
    written.push_back(base + "_plot.csv");
  }
  if (reports.rse) {
    const std::string base = (fs::path(out_dir) / "rse").string();
    write_text_file(base + "_report.json", reports.rse->to_json().dump(2) + "\n");
    written.push_back(base + "_report.json");
    write_text_file(base + "_table.txt", render_rse_table(*reports.rse));
    written.push_back(base + "_table.txt");
    write_text_file(base + "_plot.csv", render_rse_plotdata(*reports.rse));
    written.push_back(base + "_plot.csv");
  }
  return written;
}

}  // namespace dscope
