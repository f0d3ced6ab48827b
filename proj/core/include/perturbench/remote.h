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

#ifndef PERTURBENCH_REMOTE_H_
#define PERTURBENCH_REMOTE_H_

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "perturbench/backends.h"

// JSON-over-HTTP adapters for model services. Images travel as base64 PNG.
//
//   GET  /info      -> {"id", "version", "input_size", "class_names"}
//   POST /classify  {"image"} -> {"scores": [...]}
//   POST /explain   {"image", "method", "target_class"|null}
//                   -> {"height", "width", "relevance": [row-major floats]}
//   POST /inpaint   {"image", "mask", "prompt", "seed", "guidance_scale",
//                    "num_inference_steps"|null} -> {"image"}
//                   mask: white = repaint, black = keep
//   POST /generate  {"prompt", "seed", "guidance_scale",
//                    "num_inference_steps"|null} -> {"image"}
namespace perturbench {

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{250};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};
};

struct Endpoint {
  std::string url;    // scheme://host[:port][/base-path]
  std::string token;  // sent as "Authorization: Bearer <token>" when set
  std::chrono::seconds timeout{300};

  // Reads <prefix>_URL and <prefix>_TOKEN; nullopt when the URL is unset.
  static std::optional<Endpoint> FromEnvironment(const std::string& prefix);
};

inline constexpr char kInpaintEnvPrefix[] = "PERTURBENCH_INPAINT";

// Transport failures, 5xx and 429 responses are retried with exponential
// backoff; other 4xx responses fail immediately. Exhausted retries raise
// BackendError.
class JsonHttpClient {
 public:
  JsonHttpClient(Endpoint endpoint, RetryPolicy retry);

  nlohmann::json Get(const std::string& path) const;
  nlohmann::json Post(const std::string& path, const nlohmann::json& body) const;

  const Endpoint& endpoint() const { return endpoint_; }

 private:
  nlohmann::json Send(const std::string& method, const std::string& path,
                      const nlohmann::json* body) const;

  Endpoint endpoint_;
  RetryPolicy retry_;
  std::string origin_;     // scheme://host:port
  std::string base_path_;  // "" or "/prefix"
};

struct RemoteEngineOptions {
  std::string engine_id = "sd-inpainting";
  std::string engine_version = "1";
  double guidance_scale = 7.5;
  int working_size = 512;
  std::optional<int> num_inference_steps;  // engine default when absent
};

// Upscales image and mask to working_size, submits them with the prompt,
// and scales the result back to the input size. Wrap it in a
// CachingInpainter to persist results.
class RemoteInpainter final : public Inpainter {
 public:
  RemoteInpainter(Endpoint endpoint, RemoteEngineOptions options, RetryPolicy retry = {});

  std::string id() const override { return options_.engine_id; }
  std::string version() const override { return options_.engine_version; }
  nlohmann::json parameters() const override;
  InpaintResult Inpaint(const Image& image, const PixelMask& keep_mask,
                        const std::string& prompt, uint64_t seed) const override;

 private:
  JsonHttpClient client_;
  RemoteEngineOptions options_;
};

class RemoteGenerator final : public Generator {
 public:
  // Generated images are resized to output_size x output_size.
  RemoteGenerator(Endpoint endpoint, RemoteEngineOptions options, int output_size,
                  RetryPolicy retry = {});

  std::string id() const override { return options_.engine_id; }
  std::string version() const override { return options_.engine_version; }
  Image Generate(const std::string& prompt, uint64_t seed) const override;

 private:
  JsonHttpClient client_;
  RemoteEngineOptions options_;
  int output_size_;
};

class RemoteClassifier final : public Classifier {
 public:
  // Fetches /info once at construction.
  RemoteClassifier(Endpoint endpoint, RetryPolicy retry = {});

  std::string id() const override { return id_; }
  std::string version() const override { return version_; }
  int input_size() const override { return input_size_; }
  const std::vector<std::string>& class_names() const override { return class_names_; }
  std::vector<double> Classify(const Image& image) const override;

 private:
  JsonHttpClient client_;
  std::string id_;
  std::string version_;
  int input_size_ = 0;
  std::vector<std::string> class_names_;
};

class RemoteAttributor final : public Attributor {
 public:
  RemoteAttributor(Endpoint endpoint, std::string method, bool class_specific,
                   RetryPolicy retry = {});

  std::string id() const override { return method_; }
  bool class_specific() const override { return class_specific_; }
  RelevanceMap Explain(const Classifier& classifier, const Image& image,
                       std::optional<int> target_class) const override;

 private:
  JsonHttpClient client_;
  std::string method_;
  bool class_specific_;
};

}  // namespace perturbench

#endif  // PERTURBENCH_REMOTE_H_
