/*
 * Copyright 2026 The UniRec Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <fstream>
#include <string>

#include "json.hpp"
#include "unirec/evaluation.hpp"

namespace unirec {

// Report files are canonical: identical run inputs produce identical bytes.
// Volatile fields (wall time) stay out of the serialized form.

inline nlohmann::json report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["task"] = report.task;
  j["label"] = report.label;
  nlohmann::json metrics = nlohmann::json::object();
  for (const std::string& name : report.metric_names) {
    nlohmann::json entry;
    entry["mean"] = report.mean(name);
    entry["std"] = report.stddev(name);
    entry["values"] = report.values.at(name);
    metrics[name] = entry;
  }
  j["metrics"] = metrics;
  j["meta"] = {{"config_hash", report.config_hash},
               {"seed", report.seed},
               {"dataset_id", report.dataset_id}};
  return j;
}

inline void write_report_json(const MetricsReport& report,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report: " + path);
  out << report_to_json(report).dump(2) << '\n';
  if (!out) throw IoError("failed writing report: " + path);
}

// RFC-4180-style, one row per metric.
inline std::string report_to_csv(const MetricsReport& report) {
  std::string csv = "task,label,metric,mean,std,reps\n";
  char buf[96];
  for (const std::string& name : report.metric_names) {
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%zu", report.mean(name),
                  report.stddev(name), report.values.at(name).size());
    csv += report.task + "," + report.label + "," + name + "," + buf + "\n";
  }
  return csv;
}

inline void write_report_csv(const MetricsReport& report,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report: " + path);
  out << report_to_csv(report);
  if (!out) throw IoError("failed writing report: " + path);
}

}  // namespace unirec
