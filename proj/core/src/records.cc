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

#include "perturbench/records.h"

#include <spdlog/spdlog.h>

#include "perturbench/errors.h"

namespace perturbench {

using nlohmann::json;

std::string ToString(RecordStatus status) {
  switch (status) {
    case RecordStatus::kOk:
      return "ok";
    case RecordStatus::kSkipped:
      return "skipped";
    case RecordStatus::kFailed:
      return "failed";
  }
  return "failed";
}

RecordStatus RecordStatusFromString(const std::string& s) {
  if (s == "ok") return RecordStatus::kOk;
  if (s == "skipped") return RecordStatus::kSkipped;
  if (s == "failed") return RecordStatus::kFailed;
  throw ArgumentError("unknown record status '" + s + "'");
}

json ToJson(const ScoreRecord& r) {
  json j = {{"config_hash", r.config_hash},
            {"image_id", r.image_id},
            {"method_id", r.method_id},
            {"metric_id", r.metric_id},
            {"status", ToString(r.status)},
            {"backends", r.backends}};
  if (!r.reason.empty()) j["reason"] = r.reason;
  if (r.score) j["score"] = ToJson(*r.score);
  return j;
}

ScoreRecord ScoreRecordFromJson(const json& j) {
  ScoreRecord r;
  r.config_hash = j.at("config_hash").get<std::string>();
  r.image_id = j.at("image_id").get<std::string>();
  r.method_id = j.at("method_id").get<std::string>();
  r.metric_id = j.at("metric_id").get<std::string>();
  r.status = RecordStatusFromString(j.at("status").get<std::string>());
  r.reason = j.value("reason", "");
  r.backends = j.value("backends", json::object());
  if (r.status == RecordStatus::kOk) {
    r.score = ImageScoreFromJson(j.at("score"));
    if (r.score->image_id != r.image_id || r.score->method_id != r.method_id ||
        r.score->metric_id != r.metric_id) {
      throw ArgumentError("record key disagrees with its score");
    }
  }
  return r;
}

RecordFile ReadRecords(const std::filesystem::path& path) {
  RecordFile out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.records.push_back(ScoreRecordFromJson(json::parse(line)));
    } catch (const std::exception& e) {
      ++out.malformed;
      spdlog::warn("{}:{}: skipping malformed record: {}", path.string(), line_no, e.what());
    }
  }
  return out;
}

void RewriteRecords(const std::filesystem::path& path, const std::vector<ScoreRecord>& records) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    for (const auto& r : records) out << ToJson(r).dump() << '\n';
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RecordWriter::RecordWriter(const std::filesystem::path& path) : out_(path, std::ios::app) {
  if (!out_) throw Error("cannot open " + path.string() + " for appending");
}

void RecordWriter::Write(const ScoreRecord& record) {
  // Serialise outside the lock; the line goes out in one write.
  const std::string line = ToJson(record).dump() + '\n';
  std::lock_guard lock(mu_);
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.flush();
  if (!out_) throw Error("failed appending a record");
}

}  // namespace perturbench
