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

#include "perturbench/hashing.h"

#include <cstring>
#include <vector>

#include <openssl/evp.h>

#include "perturbench/errors.h"

namespace perturbench {

struct Sha256::Impl {
  EVP_MD_CTX* ctx = nullptr;
};

Sha256::Sha256() : impl_(new Impl) {
  impl_->ctx = EVP_MD_CTX_new();
  if (impl_->ctx == nullptr ||
      EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(impl_->ctx);
    delete impl_;
    throw Error("SHA-256 initialisation failed");
  }
}

Sha256::~Sha256() {
  EVP_MD_CTX_free(impl_->ctx);
  delete impl_;
}

void Sha256::Raw(const void* data, size_t size) {
  if (EVP_DigestUpdate(impl_->ctx, data, size) != 1) {
    throw Error("SHA-256 update failed");
  }
}

Sha256& Sha256::Field(std::string_view bytes) {
  const uint64_t n = bytes.size();
  Raw(&n, sizeof(n));
  Raw(bytes.data(), bytes.size());
  return *this;
}

Sha256& Sha256::Bytes(std::string_view bytes) {
  Raw(bytes.data(), bytes.size());
  return *this;
}

Sha256& Sha256::Field(std::span<const uint8_t> bytes) {
  return Field(std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                bytes.size()));
}

Sha256& Sha256::Field(uint64_t value) {
  uint8_t le[8];
  for (int i = 0; i < 8; ++i) le[i] = static_cast<uint8_t>(value >> (8 * i));
  Raw(le, sizeof(le));
  return *this;
}

std::string Sha256::HexDigest() {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(impl_->ctx, digest, &len) != 1) {
    throw Error("SHA-256 finalisation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string Sha256Hex(std::string_view bytes) {
  return Sha256().Bytes(bytes).HexDigest();
}

namespace {

uint64_t SeedFromHex(const std::string& hex) {
  return std::stoull(hex.substr(0, 16), nullptr, 16);
}

}  // namespace

uint64_t DeriveSeed(std::string_view label, uint64_t a, uint64_t b, uint64_t c) {
  Sha256 h;
  h.Field(label).Field(a).Field(b).Field(c);
  return SeedFromHex(h.HexDigest());
}

uint64_t DeriveSeed(std::string_view label, std::string_view id, uint64_t a,
                    uint64_t b) {
  Sha256 h;
  h.Field(label).Field(id).Field(a).Field(b);
  return SeedFromHex(h.HexDigest());
}

std::string Base64Encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<size_t>(n));
  return out;
}

std::string Base64Decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error("base64 input length not a multiple of 4");
  std::string out(3 * text.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw Error("invalid base64 input");
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  size_t padding = 0;
  if (!text.empty() && text.back() == '=') ++padding;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<size_t>(n) - padding);
  return out;
}

}  // namespace perturbench
