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

#ifndef PERTURBENCH_CACHE_H_
#define PERTURBENCH_CACHE_H_

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "perturbench/backends.h"

namespace perturbench {

// Pure function of everything that determines an inpainting result.
std::string InpaintCacheKey(const Image& image, const PixelMask& keep_mask,
                            const std::string& prompt, uint64_t seed,
                            const std::string& engine_id,
                            const std::string& engine_version,
                            const nlohmann::json& engine_parameters);

// Content-addressed on-disk store: <dir>/<key[0:2]>/<key>.png plus a JSON
// sidecar describing the request. Writes go through a temporary file and a
// rename, so concurrent writers of one key leave a complete entry behind
// (last writer wins; the contents are identical anyway).
class InpaintCache {
 public:
  explicit InpaintCache(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path ImagePath(const std::string& key) const;
  std::filesystem::path SidecarPath(const std::string& key) const;

  bool Contains(const std::string& key) const;
  std::optional<Image> Lookup(const std::string& key) const;
  void Store(const std::string& key, const Image& image,
             const nlohmann::json& sidecar) const;

  int64_t hits() const { return hits_.load(); }
  int64_t misses() const { return misses_.load(); }

 private:
  std::filesystem::path dir_;
  mutable std::atomic<int64_t> hits_{0};
  mutable std::atomic<int64_t> misses_{0};
};

// Serves repeated requests from the cache and persists fresh results
// before returning them.
class CachingInpainter final : public Inpainter {
 public:
  CachingInpainter(std::shared_ptr<const Inpainter> inner,
                   std::shared_ptr<const InpaintCache> cache);

  std::string id() const override { return inner_->id(); }
  std::string version() const override { return inner_->version(); }
  nlohmann::json parameters() const override { return inner_->parameters(); }
  InpaintResult Inpaint(const Image& image, const PixelMask& keep_mask,
                        const std::string& prompt, uint64_t seed) const override;

  const InpaintCache& cache() const { return *cache_; }

 private:
  std::shared_ptr<const Inpainter> inner_;
  std::shared_ptr<const InpaintCache> cache_;
};

}  // namespace perturbench

#endif  // PERTURBENCH_CACHE_H_
