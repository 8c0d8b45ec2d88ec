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

#include "negotiator/params.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace negotiator {

Var ParamStore::Add(const std::string& name, Shape shape) {
  if (Has(name)) {
    throw std::invalid_argument("param store: duplicate parameter '" + name +
                                "'");
  }
  Var v = Leaf(Tensor(std::move(shape)));
  index_.emplace(name, params_.size());
  names_.push_back(name);
  params_.push_back(v);
  return v;
}

Var ParamStore::Get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw std::out_of_range("param store: no parameter '" + name + "'");
  }
  return params_[it->second];
}

size_t ParamStore::NumElements() const {
  size_t n = 0;
  for (const Var& p : params_) n += p.size();
  return n;
}

void ParamStore::ZeroGrad() {
  for (const Var& p : params_) {
    Node* n = p.node();
    if (n->has_grad) n->grad.Fill(0.0);
  }
}

double ParamStore::GradNorm() const {
  double sq = 0.0;
  for (const Var& p : params_) {
    const Node* n = p.node();
    if (!n->has_grad) continue;
    for (double g : n->grad.values()) sq += g * g;
  }
  return std::sqrt(sq);
}

void ParamStore::InitUniform(double range, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-range, range);
  for (Var& p : params_) {
    for (double& v : p.mutable_value().values()) v = dist(rng);
  }
}

ParamStore ParamStore::Clone() const {
  ParamStore out;
  for (size_t i = 0; i < params_.size(); ++i) {
    Var v = out.Add(names_[i], params_[i].shape());
    v.mutable_value() = params_[i].value();
  }
  return out;
}

void ParamStore::CopyValuesFrom(const ParamStore& other) {
  if (other.names_ != names_) {
    throw std::invalid_argument("param store: parameter names differ");
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    if (other.params_[i].shape() != params_[i].shape()) {
      throw std::invalid_argument("param store: shape mismatch for '" +
                                  names_[i] + "'");
    }
    params_[i].mutable_value() = other.params_[i].value();
  }
}

uint64_t ParamStore::Checksum() const {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (size_t i = 0; i < params_.size(); ++i) {
    mix(names_[i].data(), names_[i].size());
    for (int d : params_[i].shape()) mix(&d, sizeof d);
    mix(params_[i].value().data(), params_[i].size() * sizeof(double));
  }
  return h;
}

double ClipGlobalNorm(ParamStore& store, double c) {
  if (!(c > 0.0)) {
    throw std::invalid_argument("clip threshold must be positive");
  }
  const double norm = store.GradNorm();
  if (norm > c) {
    const double scale = c / norm;
    for (const Var& p : store.params()) {
      Node* n = p.node();
      if (!n->has_grad) continue;
      for (double& g : n->grad.values()) g *= scale;
    }
  }
  return norm;
}

void WriteParamRecords(std::ostream& out, const ParamStore& store) {
  char buf[32];
  for (size_t i = 0; i < store.names().size(); ++i) {
    const Tensor& t = store.params()[i].value();
    out << store.names()[i] << ' ' << t.rank();
    for (int d : t.shape()) out << ' ' << d;
    out << '\n';
    for (size_t j = 0; j < t.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", t[j]);
      if (j) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

void ReadParamRecords(std::istream& in, ParamStore& store) {
  for (size_t i = 0; i < store.names().size(); ++i) {
    const std::string& expected = store.names()[i];
    std::string name;
    int rank = 0;
    if (!(in >> name >> rank)) {
      throw std::runtime_error("checkpoint: missing record for '" + expected +
                               "'");
    }
    if (name != expected) {
      throw std::runtime_error("checkpoint: expected '" + expected +
                               "' but found '" + name + "'");
    }
    Shape shape(rank);
    for (int& d : shape) in >> d;
    Var p = store.params()[i];
    if (!in || shape != p.shape()) {
      throw std::runtime_error("checkpoint: shape " + ShapeString(shape) +
                               " for '" + name + "' does not match " +
                               ShapeString(p.shape()));
    }
    Tensor& t = p.mutable_value();
    std::string token;
    for (size_t j = 0; j < t.size(); ++j) {
      if (!(in >> token)) {
        throw std::runtime_error("checkpoint: truncated values for '" + name +
                                 "'");
      }
      char* end = nullptr;
      t[j] = std::strtod(token.c_str(), &end);
      if (end != token.c_str() + token.size()) {
        throw std::runtime_error("checkpoint: bad number '" + token + "'");
      }
    }
  }
}

GradCheckResult GradCheck(const std::function<Var(ParamStore&)>& loss_fn,
                          ParamStore& store, double epsilon) {
  store.ZeroGrad();
  Var loss = loss_fn(store);
  if (!std::isfinite(loss.item())) {
    throw std::runtime_error("grad check: loss is not finite");
  }
  Backward(loss);

  GradCheckResult result;
  NoGradGuard no_grad;
  for (size_t i = 0; i < store.params().size(); ++i) {
    Var p = store.params()[i];
    const Tensor analytic = p.grad();
    Tensor& values = p.mutable_value();
    for (size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + epsilon;
      const double plus = loss_fn(store).item();
      values[j] = saved - epsilon;
      const double minus = loss_fn(store).item();
      values[j] = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw std::runtime_error("grad check: loss is not finite");
      }
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double a = analytic[j];
      const double err = std::abs(a - numeric) /
                         std::max(1e-8, std::abs(a) + std::abs(numeric));
      ++result.checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_param = store.names()[i];
        result.worst_index = j;
      }
    }
  }
  return result;
}

}  // namespace negotiator
