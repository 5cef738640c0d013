// Copyright 2026 The trajmode Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace trajmode {

/// Broad failure categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
  usage = 1,
  data = 2,
  diverged = 3,
  internal = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::usage, what);
}

/// Class ordering is fixed across every persisted artifact.
enum class Mode : std::uint8_t { walk = 0, bike = 1, transit = 2, car = 3 };

inline constexpr int kNumModes = 4;
inline constexpr std::array<std::string_view, kNumModes> kModeNames{"walk", "bike", "transit", "car"};

inline std::string_view mode_name(Mode m) { return kModeNames[static_cast<int>(m)]; }
inline int mode_index(Mode m) { return static_cast<int>(m); }

inline std::optional<Mode> parse_mode(std::string_view s) {
  for (int i = 0; i < kNumModes; ++i)
    if (s == kModeNames[i]) return static_cast<Mode>(i);
  return std::nullopt;
}

inline Mode mode_from_index(int i) {
  if (i < 0 || i >= kNumModes) fail(ErrorKind::data, "unknown class index " + std::to_string(i));
  return static_cast<Mode>(i);
}

}  // namespace trajmode
