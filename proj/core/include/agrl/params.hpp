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

#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "agrl/error.hpp"
#include "agrl/tensor.hpp"

namespace agrl {

// A parameter struct exposes its tensors in a fixed order through
// for_each(f) where f(std::string_view name, Tensor& t).
template <class P>
concept ParamStruct = requires(P& p, const P& cp) {
  p.for_each([](std::string_view, Tensor&) {});
  cp.for_each([](std::string_view, const Tensor&) {});
};

template <ParamStruct P>
std::vector<Tensor*> tensors_of(P& p) {
  std::vector<Tensor*> out;
  p.for_each([&](std::string_view, Tensor& t) { out.push_back(&t); });
  return out;
}

template <ParamStruct P>
std::vector<const Tensor*> tensors_of(const P& p) {
  std::vector<const Tensor*> out;
  p.for_each([&](std::string_view, const Tensor& t) { out.push_back(&t); });
  return out;
}

template <ParamStruct P>
std::vector<std::pair<std::string, const Tensor*>> named_tensors(const P& p) {
  std::vector<std::pair<std::string, const Tensor*>> out;
  p.for_each([&](std::string_view name, const Tensor& t) { out.emplace_back(name, &t); });
  return out;
}

template <ParamStruct P>
P zeros_like(const P& p) {
  P z = p;
  for (Tensor* t : tensors_of(z)) t->fill(0.0);
  return z;
}

template <ParamStruct P>
void add_into(P& dst, const P& src, double alpha = 1.0) {
  auto d = tensors_of(dst);
  auto s = tensors_of(src);
  if (d.size() != s.size()) throw DimensionError("add_into: parameter layouts differ");
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!d[i]->same_shape(*s[i])) throw DimensionError("add_into: tensor shapes differ");
    auto dd = d[i]->data();
    auto sd = s[i]->data();
    for (std::size_t k = 0; k < dd.size(); ++k) dd[k] += alpha * sd[k];
  }
}

template <ParamStruct P>
std::size_t parameter_count(const P& p) {
  std::size_t n = 0;
  for (const Tensor* t : tensors_of(p)) n += t->size();
  return n;
}

template <ParamStruct P>
bool all_finite(const P& p) {
  for (const Tensor* t : tensors_of(p))
    if (!t->all_finite()) return false;
  return true;
}

template <ParamStruct P>
std::vector<double> flatten(const P& p) {
  std::vector<double> out;
  out.reserve(parameter_count(p));
  for (const Tensor* t : tensors_of(p)) out.insert(out.end(), t->data().begin(), t->data().end());
  return out;
}

template <ParamStruct P>
void unflatten(P& p, std::span<const double> flat) {
  std::size_t off = 0;
  for (Tensor* t : tensors_of(p)) {
    if (off + t->size() > flat.size()) throw DimensionError("unflatten: payload too short");
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), t->size(), t->data().begin());
    off += t->size();
  }
  if (off != flat.size()) throw DimensionError("unflatten: payload too long");
}

// Decoupled-weight-decay Adam. Ascent mode maximizes the objective whose
// gradient is supplied.
template <ParamStruct P>
class AdamW {
 public:
  struct Hyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  explicit AdamW(const P& like, Hyper hyper = {})
      : m_(zeros_like(like)), v_(zeros_like(like)), hyper_(hyper) {}

  int steps() const noexcept { return t_; }

  void step(P& params, const P& grads, double lr, double weight_decay, bool ascent) {
    auto ps = tensors_of(params);
    auto gs = tensors_of(grads);
    auto ms = tensors_of(m_);
    auto vs = tensors_of(v_);
    if (ps.size() != gs.size()) throw DimensionError("AdamW: gradient layout mismatch");
    for (std::size_t i = 0; i < gs.size(); ++i) {
      if (!ps[i]->same_shape(*gs[i])) throw DimensionError("AdamW: gradient shape mismatch");
      if (!gs[i]->all_finite()) {
        throw NumericError("AdamW: non-finite gradient in tensor #" + std::to_string(i));
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(hyper_.beta1, t_);
    const double bc2 = 1.0 - std::pow(hyper_.beta2, t_);
    const double sign = ascent ? -1.0 : 1.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      auto p = ps[i]->data();
      auto g = gs[i]->data();
      auto m = ms[i]->data();
      auto v = vs[i]->data();
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double gk = sign * g[k];
        m[k] = hyper_.beta1 * m[k] + (1.0 - hyper_.beta1) * gk;
        v[k] = hyper_.beta2 * v[k] + (1.0 - hyper_.beta2) * gk * gk;
        const double mhat = m[k] / bc1;
        const double vhat = v[k] / bc2;
        p[k] -= lr * (mhat / (std::sqrt(vhat) + hyper_.eps) + weight_decay * p[k]);
      }
    }
  }

 private:
  P m_;
  P v_;
  Hyper hyper_;
  int t_ = 0;
};

}  // namespace agrl
