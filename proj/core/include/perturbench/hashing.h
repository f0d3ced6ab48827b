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

#ifndef PERTURBENCH_HASHING_H_
#define PERTURBENCH_HASHING_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace perturbench {

// Incremental SHA-256. Fields are length-prefixed so that concatenation
// boundaries cannot collide ("ab"+"c" != "a"+"bc").
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& Field(std::string_view bytes);
  Sha256& Field(std::span<const uint8_t> bytes);
  Sha256& Field(uint64_t value);
  // Unframed bytes.
  Sha256& Bytes(std::string_view bytes);
  std::string HexDigest();

 private:
  void Raw(const void* data, size_t size);
  struct Impl;
  Impl* impl_;
};

// Plain SHA-256 of `bytes` (no length prefix).
std::string Sha256Hex(std::string_view bytes);

// 64-bit seed derived from a SHA-256 over the given parts.
uint64_t DeriveSeed(std::string_view label, uint64_t a, uint64_t b = 0,
                    uint64_t c = 0);
uint64_t DeriveSeed(std::string_view label, std::string_view id, uint64_t a,
                    uint64_t b = 0);

std::string Base64Encode(std::string_view bytes);
std::string Base64Decode(std::string_view text);

}  // namespace perturbench

#endif  // PERTURBENCH_HASHING_H_
