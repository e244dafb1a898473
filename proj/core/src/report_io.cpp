#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "freqdenoise/metrics.hpp"
#include "freqdenoise/training.hpp"

namespace freqdenoise {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void append_rows(std::string& csv, json& rows, const MetricsReport& report,
                 const std::string& label) {
  for (const auto& row : report.rows) {
    csv += label + "," + std::to_string(row.snr_db) + "," + fmt(row.rrmse_t) +
           "," + fmt(row.rrmse_f) + "," + fmt(row.cc) + "," +
           std::to_string(row.n_examples) + "\n";
    rows.push_back(json{{"artifact", label},
                        {"snr_db", row.snr_db},
                        {"rrmse_t", row.rrmse_t},
                        {"rrmse_f", row.rrmse_f},
                        {"cc", row.cc},
                        {"n", row.n_examples}});
  }
  std::size_t total = 0;
  for (const auto& row : report.rows) total += row.n_examples;
  csv += label + ",summary," + fmt(report.summary.rrmse_t) + "," +
         fmt(report.summary.rrmse_f) + "," + fmt(report.summary.cc) + "," +
         std::to_string(total) + "\n";
  rows.push_back(json{{"artifact", label},
                      {"snr_db", "summary"},
                      {"rrmse_t", report.summary.rrmse_t},
                      {"rrmse_f", report.summary.rrmse_f},
                      {"cc", report.summary.cc},
                      {"n", total}});
}

void append_reference(std::string& csv, json& rows, SegmentKind artifact) {
  const MetricsSummary& ref = artifact == SegmentKind::Emg
                                  ? kPublishedReferenceMa
                                  : kPublishedReferenceOa;
  const std::string label = std::string(to_string(artifact)) + "_reference";
  csv += label + ",summary," + fmt(ref.rrmse_t) + "," + fmt(ref.rrmse_f) +
         "," + fmt(ref.cc) + ",0\n";
  rows.push_back(json{{"artifact", label},
                      {"snr_db", "summary"},
                      {"rrmse_t", ref.rrmse_t},
                      {"rrmse_f", ref.rrmse_f},
                      {"cc", ref.cc},
                      {"n", 0}});
}

void build_report(const ReportBundle& bundle, std::string& csv, json& rows) {
  const std::string base = to_string(bundle.model.artifact);
  csv = "artifact,snr_db,rrmse_t,rrmse_f,cc,n\n";
  rows = json::array();
  append_rows(csv, rows, bundle.model, base);
  append_rows(csv, rows, bundle.identity, base + "_identity");
  append_rows(csv, rows, bundle.oracle, base + "_oracle");
  append_reference(csv, rows, bundle.model.artifact);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << text;
  if (!out) throw IoError("error writing file: " + path);
}

}  // namespace

void write_report_csv(const std::string& path, const ReportBundle& bundle) {
  std::string csv;
  json rows;
  build_report(bundle, csv, rows);
  write_text(path, csv);
}

void write_report_json(const std::string& path, const ReportBundle& bundle) {
  std::string csv;
  json rows;
  build_report(bundle, csv, rows);
  write_text(path, rows.dump(2) + "\n");
}

void write_history_csv(const std::string& path,
                       const std::vector<TrainRecord>& records, bool append) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path);
  if (!append) out << "epoch,train_loss,test_loss,seconds\n";
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.3f\n", r.epoch,
                  r.train_loss, r.test_loss, r.seconds);
    out << buf;
  }
  if (!out) throw IoError("error writing file: " + path);
}

}  // namespace freqdenoise
