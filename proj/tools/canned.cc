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

#include "canned.h"

#include <string>

namespace cotune::canned {

std::vector<Entry> Target(std::string_view target) {
  std::vector<Entry> out;
  const std::string prefix = std::string(target) + "/";
  for (const Entry& e : All()) {
    if (e.name == target || e.name.starts_with(prefix)) out.push_back(e);
  }
  return out;
}

}  // namespace cotune::canned
