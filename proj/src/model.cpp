// Copyright 2026 The vflsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vflsim/model.hpp"

#include <sstream>

#include "vflsim/error.hpp"

namespace vfl {
namespace {

void require_widths(const std::vector<std::size_t>& widths, const char* name) {
  if (widths.empty()) throw ConfigError(std::string(name) + " layer dims must be non-empty");
  for (std::size_t w : widths) {
    if (w == 0) throw ConfigError(std::string(name) + " layer dims must be positive");
  }
}

std::string join(const std::vector<std::size_t>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace

void ModelDims::validate() const {
  if (embedding_dim == 0) throw ConfigError("embedding_dim must be positive");
  require_widths(host_bottom, "host_bottom");
  require_widths(guest_bottom, "guest_bottom");
  require_widths(top, "top");
  require_widths(rep, "rep");
  if (rep.back() != guest_rep_dim()) {
    throw ConfigError("rep output width " + std::to_string(rep.back()) +
                      " must equal the guest representation width " +
                      std::to_string(guest_rep_dim()));
  }
}

std::string ModelDims::describe() const {
  return "emb=" + std::to_string(embedding_dim) + ";host_bottom=" + join(host_bottom) +
         ";guest_bottom=" + join(guest_bottom) + ";top=" + join(top) + ";rep=" + join(rep);
}

}  // namespace vfl
