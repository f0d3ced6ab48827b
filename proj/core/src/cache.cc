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

#include "perturbench/cache.h"

#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <thread>

#include "perturbench/errors.h"
#include "perturbench/hashing.h"

namespace perturbench {
namespace fs = std::filesystem;

namespace {

void WriteAtomically(const fs::path& path, const std::string& bytes) {
  thread_local std::mt19937_64 rng(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(rng());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write cache file " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to cache file " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

std::string InpaintCacheKey(const Image& image, const PixelMask& keep_mask,
                            const std::string& prompt, uint64_t seed,
                            const std::string& engine_id,
                            const std::string& engine_version,
                            const nlohmann::json& engine_parameters) {
  Sha256 h;
  h.Field("inpaint-v1")
      .Field(static_cast<uint64_t>(image.height()))
      .Field(static_cast<uint64_t>(image.width()))
      .Field(image.bytes())
      .Field(static_cast<uint64_t>(keep_mask.height()))
      .Field(static_cast<uint64_t>(keep_mask.width()))
      .Field(keep_mask.bits())
      .Field(prompt)
      .Field(seed)
      .Field(engine_id)
      .Field(engine_version)
      .Field(engine_parameters.dump());
  return h.HexDigest();
}

InpaintCache::InpaintCache(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

fs::path InpaintCache::ImagePath(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".png");
}

fs::path InpaintCache::SidecarPath(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".json");
}

bool InpaintCache::Contains(const std::string& key) const {
  return fs::exists(ImagePath(key));
}

std::optional<Image> InpaintCache::Lookup(const std::string& key) const {
  std::ifstream in(ImagePath(key), std::ios::binary);
  if (!in) {
    ++misses_;
    return std::nullopt;
  }
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ++hits_;
  return DecodePng(bytes);
}

void InpaintCache::Store(const std::string& key, const Image& image,
                         const nlohmann::json& sidecar) const {
  fs::create_directories(ImagePath(key).parent_path());
  // Sidecar first: an image file is the commit marker for an entry.
  WriteAtomically(SidecarPath(key), sidecar.dump(2) + "\n");
  WriteAtomically(ImagePath(key), EncodePng(image));
}

CachingInpainter::CachingInpainter(std::shared_ptr<const Inpainter> inner,
                                   std::shared_ptr<const InpaintCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

InpaintResult CachingInpainter::Inpaint(const Image& image, const PixelMask& keep_mask,
                                        const std::string& prompt, uint64_t seed) const {
  const std::string key = InpaintCacheKey(image, keep_mask, prompt, seed, inner_->id(),
                                          inner_->version(), inner_->parameters());
  if (auto hit = cache_->Lookup(key)) {
    return {std::move(*hit), key, true};
  }
  InpaintResult result = inner_->Inpaint(image, keep_mask, prompt, seed);
  if (result.image.shape() != image.shape()) {
    throw BackendError("inpainter returned an image of a different size");
  }
  cache_->Store(key, result.image,
                {{"engine_id", inner_->id()},
                 {"engine_version", inner_->version()},
                 {"engine_parameters", inner_->parameters()},
                 {"prompt", prompt},
                 {"seed", seed},
                 {"height", image.height()},
                 {"width", image.width()},
                 {"masked_pixels", keep_mask.shape().area() - keep_mask.count()}});
  result.cache_key = key;
  result.cache_hit = false;
  return result;
}

}  // namespace perturbench
