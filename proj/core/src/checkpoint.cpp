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

#include "agrl/checkpoint.hpp"

#include <bit>
#include <cstdint>

#include "agrl/dataset_io.hpp"
#include "agrl/error.hpp"

namespace agrl {

namespace {

constexpr const char* kFormat = "agrl-ckpt";
constexpr int kVersion = 1;

void put_le(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

const Tensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw ValidationError("checkpoint has no tensor '" + name + "'");
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& entry : tensors)
    if (entry.first == name) return true;
  return false;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json index = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    index.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += t.size();
  }
  const nlohmann::json header = {{"format", kFormat}, {"version", kVersion},   {"kind", ckpt.kind},
                                 {"config", ckpt.config}, {"vocab", ckpt.vocab}, {"tensors", index},
                                 {"payload_values", offset}};
  std::string out = header.dump();
  out.push_back('\n');
  out.reserve(out.size() + offset * 8);
  for (const auto& entry : ckpt.tensors)
    for (double v : entry.second.data()) put_le(out, v);
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw ValidationError("checkpoint: missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("checkpoint: bad header: ") + e.what());
  }
  if (header.value("format", "") != kFormat) throw ValidationError("checkpoint: not an agrl checkpoint");
  if (header.value("version", 0) != kVersion) throw ValidationError("checkpoint: unsupported version");

  const std::size_t n_values = header.at("payload_values").get<std::size_t>();
  const std::size_t payload = bytes.size() - nl - 1;
  if (payload != n_values * 8) throw ValidationError("checkpoint: payload size does not match header");
  const auto* base = reinterpret_cast<const unsigned char*>(bytes.data() + nl + 1);

  Checkpoint ckpt;
  ckpt.kind = header.at("kind").get<std::string>();
  ckpt.config = header.at("config");
  ckpt.vocab = header.at("vocab").get<std::vector<std::string>>();
  for (const auto& entry : header.at("tensors")) {
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    const std::size_t offset = entry.at("offset").get<std::size_t>();
    const std::size_t count = shape_product(shape);
    if (offset + count > n_values) throw ValidationError("checkpoint: tensor extends past payload");
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) data[i] = get_le(base + (offset + i) * 8);
    Tensor t(shape, std::move(data));
    if (!t.all_finite()) throw NumericError("checkpoint: non-finite values in '" + entry.at("name").get<std::string>() + "'");
    ckpt.tensors.emplace_back(entry.at("name").get<std::string>(), std::move(t));
  }
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_text(path, serialize_checkpoint(ckpt));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("checkpoint not found: " + path.string());
  return deserialize_checkpoint(read_text(path));
}

}  // namespace agrl
