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

#include <atomic>
#include <cstdlib>
#include <thread>

#include <gtest/gtest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "perturbench/errors.h"
#include "perturbench/hashing.h"
#include "perturbench/remote.h"

namespace perturbench {
namespace {

using nlohmann::json;

// Local stand-in for a model service.
class FakeService {
 public:
  FakeService() {
    server_.Get("/info", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth = req.get_header_value("Authorization");
      res.set_content(json{{"id", "fake-net"},
                           {"version", "3"},
                           {"input_size", 8},
                           {"class_names", {"a", "b", "c"}}}
                          .dump(),
                      "application/json");
    });
    server_.Post("/classify", [this](const httplib::Request& req, httplib::Response& res) {
      ++classify_calls;
      if (failures_left > 0) {
        --failures_left;
        res.status = fail_status;
        return;
      }
      const json body = json::parse(req.body);
      const Image img = DecodePng(Base64Decode(body.at("image").get<std::string>()));
      res.set_content(json{{"scores", {img.at(0, 0, 0) / 255.0, 0.5, 0.25}}}.dump(),
                      "application/json");
    });
    server_.Post("/inpaint", [this](const httplib::Request& req, httplib::Response& res) {
      const json body = json::parse(req.body);
      const Image img = DecodePng(Base64Decode(body.at("image").get<std::string>()));
      last_mask = DecodeMaskPng(Base64Decode(body.at("mask").get<std::string>()));
      last_inpaint = body;
      // Paints repaint pixels blue.
      Image out = img;
      for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
          if (!last_mask->get(y, x)) continue;
          out.at(y, x, 0) = 0;
          out.at(y, x, 1) = 0;
          out.at(y, x, 2) = 255;
        }
      }
      res.set_content(json{{"image", Base64Encode(EncodePng(out))}}.dump(), "application/json");
    });
    server_.Post("/explain", [this](const httplib::Request& req, httplib::Response& res) {
      const json body = json::parse(req.body);
      if (body.at("method") == "broken") {
        res.status = 400;
        return;
      }
      last_explain = body;
      std::vector<double> rel(64);
      for (int i = 0; i < 64; ++i) rel[static_cast<size_t>(i)] = i;
      res.set_content(json{{"height", 8}, {"width", 8}, {"relevance", rel}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeService() {
    server_.stop();
    thread_.join();
  }

  Endpoint endpoint(const std::string& token = "") const {
    return {"http://127.0.0.1:" + std::to_string(port_), token, std::chrono::seconds(10)};
  }

  std::atomic<int> classify_calls{0};
  std::atomic<int> failures_left{0};
  int fail_status = 503;
  std::string last_auth;
  std::optional<PixelMask> last_mask;
  json last_inpaint, last_explain;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

RetryPolicy Fast() {
  RetryPolicy r;
  r.max_attempts = 3;
  r.initial_backoff = std::chrono::milliseconds(1);
  r.max_backoff = std::chrono::milliseconds(2);
  return r;
}

TEST(RemoteClassifier, InfoAndClassify) {
  FakeService svc;
  const RemoteClassifier clf(svc.endpoint("secret"), Fast());
  EXPECT_EQ(clf.id(), "fake-net");
  EXPECT_EQ(clf.version(), "3");
  EXPECT_EQ(clf.input_size(), 8);
  EXPECT_EQ(clf.class_names().size(), 3u);
  EXPECT_EQ(svc.last_auth, "Bearer secret");
  const auto scores = clf.Classify(Image(8, 8, 255));
  EXPECT_EQ(scores, (std::vector<double>{1.0, 0.5, 0.25}));
}

TEST(RemoteClassifier, RetriesServerErrors) {
  FakeService svc;
  const RemoteClassifier clf(svc.endpoint(), Fast());
  svc.failures_left = 2;
  EXPECT_EQ(clf.Classify(Image(8, 8, 0))[1], 0.5);
  EXPECT_EQ(svc.classify_calls.load(), 3);

  svc.classify_calls = 0;
  svc.failures_left = 5;
  EXPECT_THROW(clf.Classify(Image(8, 8, 0)), BackendError);
  EXPECT_EQ(svc.classify_calls.load(), 3);
}

TEST(RemoteClassifier, ClientErrorsAreNotRetried) {
  FakeService svc;
  const RemoteClassifier clf(svc.endpoint(), Fast());
  svc.fail_status = 400;
  svc.failures_left = 1;
  EXPECT_THROW(clf.Classify(Image(8, 8, 0)), BackendError);
  EXPECT_EQ(svc.classify_calls.load(), 1);
}

TEST(RemoteClassifier, UnreachableEndpointFails) {
  Endpoint e{"http://127.0.0.1:1", "", std::chrono::seconds(2)};
  EXPECT_THROW(RemoteClassifier(e, Fast()), BackendError);
}

TEST(RemoteInpainter, SendsWhiteForRepaint) {
  FakeService svc;
  RemoteEngineOptions opts;
  opts.working_size = 16;
  opts.num_inference_steps = 30;
  const RemoteInpainter inp(svc.endpoint(), opts, Fast());
  PixelMask keep(8, 8, true);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 8; ++x) keep.set(y, x, false);
  }
  const InpaintResult r = inp.Inpaint(Image(8, 8, 100), keep, "a cat", 42);
  ASSERT_TRUE(svc.last_mask.has_value());
  EXPECT_EQ(svc.last_mask->shape(), (Shape{16, 16}));
  EXPECT_TRUE(svc.last_mask->get(0, 0));    // repaint
  EXPECT_FALSE(svc.last_mask->get(15, 0));  // keep
  EXPECT_EQ(svc.last_mask->count(), 128);
  EXPECT_EQ(svc.last_inpaint.at("prompt"), "a cat");
  EXPECT_EQ(svc.last_inpaint.at("seed"), 42);
  EXPECT_EQ(svc.last_inpaint.at("num_inference_steps"), 30);
  EXPECT_EQ(r.image.shape(), (Shape{8, 8}));
  EXPECT_EQ(r.image.at(0, 0, 2), 255);
  EXPECT_EQ(r.image.at(7, 7, 0), 100);
  EXPECT_EQ(inp.parameters().at("working_size"), 16);
}

TEST(RemoteAttributor, ExplainsAndWrapsFailures) {
  FakeService svc;
  const RemoteClassifier clf(svc.endpoint(), Fast());
  const RemoteAttributor attr(svc.endpoint(), "ig", true, Fast());
  const RelevanceMap map = attr.Explain(clf, Image(8, 8, 0), std::nullopt);
  // Top-1 of an all-black image is class b (0.5).
  EXPECT_EQ(map.target_class(), 1);
  EXPECT_EQ(svc.last_explain.at("target_class"), 1);
  EXPECT_EQ(map.values()[63], 63.0);
  EXPECT_EQ(attr.id(), "ig");

  const RemoteAttributor broken(svc.endpoint(), "broken", true, Fast());
  EXPECT_THROW(broken.Explain(clf, Image(8, 8, 0), 2), AttributionError);
  const RemoteAttributor wrong_size(svc.endpoint(), "ig", true, Fast());
  EXPECT_THROW(wrong_size.Explain(clf, Image(4, 4, 0), 2), AttributionError);
}

TEST(Endpoint, FromEnvironment) {
  ::unsetenv("PERTURBENCH_TEST_URL");
  ::unsetenv("PERTURBENCH_TEST_TOKEN");
  EXPECT_FALSE(Endpoint::FromEnvironment("PERTURBENCH_TEST").has_value());
  ::setenv("PERTURBENCH_TEST_URL", "https://example.invalid/v1", 1);
  ::setenv("PERTURBENCH_TEST_TOKEN", "tok", 1);
  const auto e = Endpoint::FromEnvironment("PERTURBENCH_TEST");
  ASSERT_TRUE(e.has_value());
  EXPECT_EQ(e->url, "https://example.invalid/v1");
  EXPECT_EQ(e->token, "tok");
  ::unsetenv("PERTURBENCH_TEST_URL");
  ::unsetenv("PERTURBENCH_TEST_TOKEN");
}

}  // namespace
}  // namespace perturbench
