/*
 * Copyright 2026 The debias-forge Authors.
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

#ifndef DEBIAS_UTIL_HPP_
#define DEBIAS_UTIL_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace debias {

// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

// Raw 32-byte SHA-256 digest.
std::vector<std::uint8_t> sha256_bytes(std::string_view data);

std::string base64_encode(std::string_view data);
std::string base64_decode(std::string_view encoded);

std::string read_file(const std::filesystem::path& path);

// Writes through a sibling temp file and renames, so readers never observe
// a half-written artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

// Shortest-safe "%.9g" rendering used for every real number we serialize.
std::string format_real(double value);

std::string to_lower(std::string_view s);

// Seeded generator whose output sequence does not depend on the standard
// library implementation (std distributions are implementation-defined).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {}

  // splitmix64
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound); bound must be > 0. Rejection sampling, no bias.
  std::uint64_t uniform(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % bound;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace debias

#endif  // DEBIAS_UTIL_HPP_
