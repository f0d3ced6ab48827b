/*
 * Copyright 2026 The perturbench Authors.
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

#ifndef PERTURBENCH_RECORDS_H_
#define PERTURBENCH_RECORDS_H_

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "perturbench/score.h"

namespace perturbench {

enum class RecordStatus {
  kOk,
  // The image could not be explained (attributor failure); deterministic,
  // so not retried on resume.
  kSkipped,
  // Any other failure of the cell; retried on resume.
  kFailed,
};

std::string ToString(RecordStatus status);
RecordStatus RecordStatusFromString(const std::string& s);

// One line of records.jsonl: the outcome of one (image, method, metric) cell.
struct ScoreRecord {
  std::string config_hash;
  std::string image_id;
  std::string method_id;
  std::string metric_id;
  RecordStatus status = RecordStatus::kOk;
  std::string reason;
  std::optional<ImageScore> score;  // present iff status is kOk
  nlohmann::json backends = nlohmann::json::object();

  std::tuple<std::string, std::string, std::string> key() const {
    return {image_id, method_id, metric_id};
  }
  bool operator==(const ScoreRecord&) const = default;
};

nlohmann::json ToJson(const ScoreRecord& record);
// Throws on anything that is not a well-formed record.
ScoreRecord ScoreRecordFromJson(const nlohmann::json& j);

struct RecordFile {
  std::vector<ScoreRecord> records;
  int malformed = 0;  // lines skipped with a warning
};

// Reads a JSON-lines file. A missing file reads as empty; a truncated last
// line (interrupted write) counts as malformed like any other bad line.
RecordFile ReadRecords(const std::filesystem::path& path);

// Replaces the file contents atomically (write to a temporary, rename).
void RewriteRecords(const std::filesystem::path& path, const std::vector<ScoreRecord>& records);

// Appends records one line at a time; safe to call from several threads.
class RecordWriter {
 public:
  explicit RecordWriter(const std::filesystem::path& path);
  void Write(const ScoreRecord& record);

 private:
  std::mutex mu_;
  std::ofstream out_;
};

}  // namespace perturbench

#endif  // PERTURBENCH_RECORDS_H_
