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

// Experiment configs compiled into the binary, keyed by their path under
// configs/ without the extension ("fig5b", "fig8/mass_1.15").

#ifndef COTUNE_TOOLS_CANNED_H_
#define COTUNE_TOOLS_CANNED_H_

#include <span>
#include <string_view>
#include <vector>

namespace cotune::canned {

struct Entry {
  std::string_view name;
  std::string_view text;
};

std::span<const Entry> All();

// Configs of a reproduce target: an exact name, or every config under the
// directory of that name. Empty if nothing matches.
std::vector<Entry> Target(std::string_view target);

}  // namespace cotune::canned

#endif  // COTUNE_TOOLS_CANNED_H_
