// Copyright 2026 The agrl Authors. All Rights Reserved.
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

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "agrl/params.hpp"
#include "agrl/tensor.hpp"

namespace agrl {

// On disk: one line of JSON header
//   {"format":"agrl-ckpt","version":1,"kind":...,"config":...,"vocab":[...],
//    "tensors":[{"name","shape","offset"}],"payload_values":N}
// followed by N little-endian IEEE-754 doubles.
struct Checkpoint {
  std::string kind;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> vocab;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& tensor(const std::string& name) const;  // throws ValidationError if absent
  bool has(const std::string& name) const;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

template <ParamStruct P>
void append_params(Checkpoint& ckpt, const P& params, const std::string& prefix = "") {
  params.for_each([&](std::string_view name, const Tensor& t) { ckpt.tensors.emplace_back(prefix + std::string(name), t); });
}

// Fills every tensor of `params` (already shaped) from the checkpoint.
template <ParamStruct P>
void load_params(P& params, const Checkpoint& ckpt, const std::string& prefix = "") {
  params.for_each([&](std::string_view name, Tensor& t) {
    const std::string key = prefix + std::string(name);
    const Tensor& src = ckpt.tensor(key);
    if (!src.same_shape(t))
      throw ValidationError("checkpoint tensor '" + key + "' has shape " + src.shape_string() + ", expected " +
                            t.shape_string());
    t = src;
  });
}

}  // namespace agrl
