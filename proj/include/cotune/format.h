// Copyright 2026 The Cotune Authors
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

#ifndef COTUNE_FORMAT_H_
#define COTUNE_FORMAT_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace cotune {

// Shortest decimal string that parses back to exactly `v` ("nan", "inf" and
// "-inf" for non-finite values).
std::string FormatDouble(double v);

// Inverse of FormatDouble; nullopt unless the whole string is consumed.
std::optional<double> ParseDouble(std::string_view s);

// "[a, b, c]" with FormatDouble entries.
std::string FormatList(std::span<const double> values);

}  // namespace cotune

#endif  // COTUNE_FORMAT_H_
