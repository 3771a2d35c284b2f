// Copyright 2026 The dnes Authors. All Rights Reserved.
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

#include "dnes/format.hpp"

#include <array>
#include <charconv>

namespace dnes {

namespace {

template <typename T>
std::string format_shortest(T value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), end);
}

template <typename T>
std::optional<T> parse_exact(std::string_view text) {
  if (text.empty()) return std::nullopt;
  // from_chars rejects a leading '+'; accept it for hand-written configs.
  if (text.front() == '+') text.remove_prefix(1);
  T value{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) return std::nullopt;
  return value;
}

}  // namespace

std::string format_double(double value) { return format_shortest(value); }
std::string format_float(float value) { return format_shortest(value); }

std::optional<double> parse_double(std::string_view text) {
  return parse_exact<double>(text);
}

std::optional<float> parse_float(std::string_view text) {
  return parse_exact<float>(text);
}

}  // namespace dnes
