// Copyright 2026 The Negotiator Authors
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

#ifndef NEGOTIATOR_PARAMS_H_
#define NEGOTIATOR_PARAMS_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "negotiator/autodiff.h"

namespace negotiator {

// Named trainable tensors, iterated in insertion order. Each entry is a leaf
// node, so its gradient accumulator is the node's gradient.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  // Zero-initialized. Throws on a duplicate name.
  Var Add(const std::string& name, Shape shape);
  Var Get(const std::string& name) const;
  bool Has(const std::string& name) const { return index_.count(name) > 0; }

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Var>& params() const { return params_; }
  size_t NumElements() const;

  void ZeroGrad();
  double GradNorm() const;
  void InitUniform(double range, std::mt19937_64& rng);

  // Deep copy with fresh leaves.
  ParamStore Clone() const;
  // Requires identical names and shapes.
  void CopyValuesFrom(const ParamStore& other);

  // FNV-1a over names, shapes and value bytes.
  uint64_t Checksum() const;

 private:
  std::vector<std::string> names_;
  std::vector<Var> params_;
  std::unordered_map<std::string, size_t> index_;
};

// Rescales every gradient by c / g when the global L2 norm g exceeds c.
// Returns the norm before clipping. Throws std::invalid_argument if c <= 0.
double ClipGlobalNorm(ParamStore& store, double c);

// One record per tensor: "name ndims d1 .. dk" then a line of values printed
// with 17 significant digits, in store order.
void WriteParamRecords(std::ostream& out, const ParamStore& store);
// Fills an already-shaped store; names, order and shapes must match.
void ReadParamRecords(std::istream& in, ParamStore& store);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_param;
  size_t worst_index = 0;
  size_t checked = 0;
};

// Compares Backward() against central differences for every parameter
// element. Relative error is |a - n| / max(1e-8, |a| + |n|). Throws
// std::runtime_error if the loss is not finite.
GradCheckResult GradCheck(const std::function<Var(ParamStore&)>& loss_fn,
                          ParamStore& store, double epsilon = 1e-5);

}  // namespace negotiator

#endif  // NEGOTIATOR_PARAMS_H_
