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

#include "perturbench/remote.h"

#include <algorithm>
#include <cstdlib>
#include <regex>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "perturbench/errors.h"
#include "perturbench/hashing.h"

#include <spdlog/spdlog.h>

namespace perturbench {
namespace {

using nlohmann::json;

bool Retryable(int status) { return status == 429 || status >= 500; }

Image ImageFromField(const json& response, const char* key) {
  if (!response.contains(key) || !response.at(key).is_string()) {
    throw BackendError(std::string("response lacks '") + key + "'");
  }
  return DecodePng(Base64Decode(response.at(key).get<std::string>()));
}

std::string ImageField(const Image& image) { return Base64Encode(EncodePng(image)); }

json OptionalSteps(const std::optional<int>& steps) {
  return steps ? json(*steps) : json(nullptr);
}

}  // namespace

std::optional<Endpoint> Endpoint::FromEnvironment(const std::string& prefix) {
  const char* url = std::getenv((prefix + "_URL").c_str());
  if (url == nullptr || *url == '\0') return std::nullopt;
  Endpoint endpoint;
  endpoint.url = url;
  if (const char* token = std::getenv((prefix + "_TOKEN").c_str())) endpoint.token = token;
  return endpoint;
}

JsonHttpClient::JsonHttpClient(Endpoint endpoint, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), retry_(retry) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint_.url, m, kUrl)) {
    throw ConfigError("endpoint URL must look like http(s)://host[:port][/path], got '" +
                      endpoint_.url + "'");
  }
  origin_ = m[1].str();
  base_path_ = m[2].matched ? m[2].str() : "";
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  if (retry_.max_attempts < 1) retry_.max_attempts = 1;
}

json JsonHttpClient::Get(const std::string& path) const { return Send("GET", path, nullptr); }

json JsonHttpClient::Post(const std::string& path, const json& body) const {
  return Send("POST", path, &body);
}

json JsonHttpClient::Send(const std::string& method, const std::string& path,
                          const json* body) const {
  httplib::Client client(origin_);
  const auto timeout = std::chrono::duration_cast<std::chrono::seconds>(endpoint_.timeout);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!endpoint_.token.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.token);
  const std::string target = base_path_ + path;
  const std::string payload = body != nullptr ? body->dump() : std::string();

  auto backoff = retry_.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    httplib::Result res = method == "GET"
                              ? client.Get(target, headers)
                              : client.Post(target, headers, payload, "application/json");
    if (res) {
      if (res->status >= 200 && res->status < 300) {
        try {
          return json::parse(res->body);
        } catch (const json::exception& e) {
          throw BackendError(origin_ + target + " returned invalid JSON: " + e.what());
        }
      }
      last_error = "HTTP " + std::to_string(res->status);
      if (!Retryable(res->status)) {
        throw BackendError(origin_ + target + " failed with " + last_error + ": " +
                           res->body.substr(0, 200));
      }
    } else {
      last_error = httplib::to_string(res.error());
    }
    if (attempt < retry_.max_attempts) {
      spdlog::warn("{} {}{} attempt {}/{} failed ({}); retrying in {} ms", method, origin_,
                   target, attempt, retry_.max_attempts, last_error, backoff.count());
      std::this_thread::sleep_for(backoff);
      backoff = std::min(retry_.max_backoff,
                         std::chrono::milliseconds(static_cast<int64_t>(
                             static_cast<double>(backoff.count()) * retry_.multiplier)));
    }
  }
  throw BackendError(origin_ + target + " failed after " +
                     std::to_string(retry_.max_attempts) + " attempts: " + last_error);
}

RemoteInpainter::RemoteInpainter(Endpoint endpoint, RemoteEngineOptions options,
                                 RetryPolicy retry)
    : client_(std::move(endpoint), retry), options_(std::move(options)) {
  if (options_.working_size <= 0) throw ConfigError("working_size must be positive");
}

json RemoteInpainter::parameters() const {
  return {{"guidance_scale", options_.guidance_scale},
          {"working_size", options_.working_size},
          {"num_inference_steps", OptionalSteps(options_.num_inference_steps)}};
}

InpaintResult RemoteInpainter::Inpaint(const Image& image, const PixelMask& keep_mask,
                                       const std::string& prompt, uint64_t seed) const {
  if (keep_mask.shape() != image.shape()) {
    throw ArgumentError("keep mask shape differs from the image shape");
  }
  const Shape working{options_.working_size, options_.working_size};
  const Image upscaled = ResizeBilinear(image, working);
  const PixelMask repaint = ResizeNearest(keep_mask.inverted(), working);
  const json response = client_.Post(
      "/inpaint", {{"image", ImageField(upscaled)},
                   {"mask", Base64Encode(EncodeMaskPng(repaint))},
                   {"prompt", prompt},
                   {"seed", seed},
                   {"guidance_scale", options_.guidance_scale},
                   {"num_inference_steps", OptionalSteps(options_.num_inference_steps)}});
  Image result = ImageFromField(response, "image");
  if (result.shape() != working) {
    throw BackendError("inpainting engine returned " + std::to_string(result.height()) + "x" +
                       std::to_string(result.width()) + ", expected " +
                       std::to_string(working.height) + "x" + std::to_string(working.width));
  }
  return {ResizeBilinear(result, image.shape()), "", false};
}

RemoteGenerator::RemoteGenerator(Endpoint endpoint, RemoteEngineOptions options,
                                 int output_size, RetryPolicy retry)
    : client_(std::move(endpoint), retry),
      options_(std::move(options)),
      output_size_(output_size) {
  if (output_size_ <= 0) throw ConfigError("output_size must be positive");
}

Image RemoteGenerator::Generate(const std::string& prompt, uint64_t seed) const {
  const json response = client_.Post(
      "/generate", {{"prompt", prompt},
                    {"seed", seed},
                    {"guidance_scale", options_.guidance_scale},
                    {"num_inference_steps", OptionalSteps(options_.num_inference_steps)}});
  return ResizeBilinear(ImageFromField(response, "image"), {output_size_, output_size_});
}

RemoteClassifier::RemoteClassifier(Endpoint endpoint, RetryPolicy retry)
    : client_(std::move(endpoint), retry) {
  const json info = client_.Get("/info");
  try {
    id_ = info.at("id").get<std::string>();
    version_ = info.value("version", "1");
    input_size_ = info.at("input_size").get<int>();
    class_names_ = info.at("class_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed classifier /info: ") + e.what());
  }
  if (input_size_ <= 0 || class_names_.empty()) {
    throw BackendError("classifier /info reports no classes or no input size");
  }
}

std::vector<double> RemoteClassifier::Classify(const Image& image) const {
  const json response = client_.Post("/classify", {{"image", ImageField(image)}});
  std::vector<double> scores;
  try {
    scores = response.at("scores").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed /classify response: ") + e.what());
  }
  if (scores.size() != class_names_.size()) {
    throw BackendError("classifier returned " + std::to_string(scores.size()) +
                       " scores for " + std::to_string(class_names_.size()) + " classes");
  }
  return scores;
}

RemoteAttributor::RemoteAttributor(Endpoint endpoint, std::string method,
                                   bool class_specific, RetryPolicy retry)
    : client_(std::move(endpoint), retry),
      method_(std::move(method)),
      class_specific_(class_specific) {}

RelevanceMap RemoteAttributor::Explain(const Classifier& classifier, const Image& image,
                                       std::optional<int> target_class) const {
  const int target = target_class ? *target_class : Top1(classifier.Classify(image));
  json response;
  try {
    response = client_.Post("/explain", {{"image", ImageField(image)},
                                         {"method", method_},
                                         {"target_class", target}});
  } catch (const BackendError& e) {
    throw AttributionError(e.what());
  }
  try {
    const int h = response.at("height").get<int>();
    const int w = response.at("width").get<int>();
    if (Shape{h, w} != image.shape()) {
      throw AttributionError("relevance map shape differs from the image shape");
    }
    return RelevanceMap::FromPixels({h, w}, response.at("relevance").get<std::vector<double>>(),
                                    target, method_);
  } catch (const json::exception& e) {
    throw AttributionError(std::string("malformed /explain response: ") + e.what());
  } catch (const ConstructionError& e) {
    throw AttributionError(e.what());
  }
}

}  // namespace perturbench
