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

#include "negotiator/autodiff.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace negotiator {

namespace {

std::atomic<uint64_t> next_node_id{1};
thread_local bool grad_enabled = true;

using NodePtr = std::shared_ptr<Node>;

void Require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

std::string Describe(const char* op, const Var& a) {
  return std::string(op) + ": shape " + ShapeString(a.shape());
}

std::string Describe(const char* op, const Var& a, const Var& b) {
  return std::string(op) + ": shapes " + ShapeString(a.shape()) + " and " +
         ShapeString(b.shape());
}

NodePtr NewNode(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->id = next_node_id.fetch_add(1, std::memory_order_relaxed);
  return n;
}

bool AnyRequiresGrad(std::initializer_list<const Var*> inputs) {
  if (!grad_enabled) return false;
  for (const Var* v : inputs) {
    if (v->requires_grad()) return true;
  }
  return false;
}

// Attaches the backward rule only when some input needs a gradient.
template <typename Backward>
Var Finish(Tensor value, std::initializer_list<const Var*> inputs,
           Backward&& backward) {
  NodePtr n = NewNode(std::move(value));
  if (AnyRequiresGrad(inputs)) {
    n->requires_grad = true;
    n->is_leaf = false;
    n->parents.reserve(inputs.size());
    for (const Var* v : inputs) n->parents.push_back(v->shared());
    n->backward = std::forward<Backward>(backward);
  }
  return Var(std::move(n));
}

// Parent gradient buffer, or nullptr when that parent needs no gradient.
double* ParentGrad(Node& self, size_t i) {
  Node& p = *self.parents[i];
  if (!p.requires_grad) return nullptr;
  return p.MutableGrad().data();
}

}  // namespace

Tensor& Node::MutableGrad() {
  if (!has_grad) {
    grad = Tensor(value.shape());
    has_grad = true;
  }
  return grad;
}

Tensor Var::grad() const {
  if (node_->has_grad) return node_->grad;
  return Tensor(node_->value.shape());
}

double Var::item() const {
  if (size() != 1) {
    throw std::invalid_argument("item() on tensor of shape " +
                                ShapeString(shape()));
  }
  return node_->value[0];
}

bool GradEnabled() { return grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(grad_enabled) { grad_enabled = false; }
NoGradGuard::~NoGradGuard() { grad_enabled = previous_; }

Var Constant(Tensor t) { return Var(NewNode(std::move(t))); }

Var Leaf(Tensor t) {
  NodePtr n = NewNode(std::move(t));
  n->requires_grad = true;
  return Var(std::move(n));
}

Var MatVec(const Var& w, const Var& x) {
  Require(w.value().rank() == 2 && x.value().rank() == 1 &&
              w.shape()[1] == x.shape()[0],
          Describe("MatVec", w, x));
  const int m = w.shape()[0];
  const int n = w.shape()[1];
  Tensor y(Shape{m});
  const double* wd = w.value().data();
  const double* xd = x.value().data();
  for (int i = 0; i < m; ++i) {
    const double* row = wd + static_cast<size_t>(i) * n;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += row[j] * xd[j];
    y[i] = acc;
  }
  return Finish(std::move(y), {&w, &x}, [m, n](Node& self) {
    const double* g = self.grad.data();
    const double* wd = self.parents[0]->value.data();
    const double* xd = self.parents[1]->value.data();
    if (double* dw = ParentGrad(self, 0)) {
      for (int i = 0; i < m; ++i) {
        double* row = dw + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) row[j] += g[i] * xd[j];
      }
    }
    if (double* dx = ParentGrad(self, 1)) {
      for (int i = 0; i < m; ++i) {
        const double* row = wd + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) dx[j] += row[j] * g[i];
      }
    }
  });
}

Var VecMat(const Var& x, const Var& w) {
  Require(w.value().rank() == 2 && x.value().rank() == 1 &&
              w.shape()[0] == x.shape()[0],
          Describe("VecMat", x, w));
  const int m = w.shape()[0];
  const int n = w.shape()[1];
  Tensor y(Shape{n});
  const double* wd = w.value().data();
  const double* xd = x.value().data();
  for (int i = 0; i < m; ++i) {
    const double* row = wd + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) y[j] += xd[i] * row[j];
  }
  return Finish(std::move(y), {&x, &w}, [m, n](Node& self) {
    const double* g = self.grad.data();
    const double* xd = self.parents[0]->value.data();
    const double* wd = self.parents[1]->value.data();
    if (double* dx = ParentGrad(self, 0)) {
      for (int i = 0; i < m; ++i) {
        const double* row = wd + static_cast<size_t>(i) * n;
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += row[j] * g[j];
        dx[i] += acc;
      }
    }
    if (double* dw = ParentGrad(self, 1)) {
      for (int i = 0; i < m; ++i) {
        double* row = dw + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) row[j] += xd[i] * g[j];
      }
    }
  });
}

Var MatMul(const Var& a, const Var& b) {
  Require(a.value().rank() == 2 && b.value().rank() == 2 &&
              a.shape()[1] == b.shape()[0],
          Describe("MatMul", a, b));
  const int m = a.shape()[0];
  const int k = a.shape()[1];
  const int n = b.shape()[1];
  Tensor y(Shape{m, n});
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double av = a.value().at(i, p);
      for (int j = 0; j < n; ++j) y.at(i, j) += av * b.value().at(p, j);
    }
  }
  return Finish(std::move(y), {&a, &b}, [m, k, n](Node& self) {
    const Tensor& g = self.grad;
    const Tensor& av = self.parents[0]->value;
    const Tensor& bv = self.parents[1]->value;
    if (double* da = ParentGrad(self, 0)) {
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          double acc = 0.0;
          for (int j = 0; j < n; ++j) acc += g.at(i, j) * bv.at(p, j);
          da[i * k + p] += acc;
        }
    }
    if (double* db = ParentGrad(self, 1)) {
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p)
          for (int j = 0; j < n; ++j) db[p * n + j] += av.at(i, p) * g.at(i, j);
    }
  });
}

namespace {

template <typename Forward, typename DA, typename DB>
Var Elementwise2(const char* op, const Var& a, const Var& b, Forward f,
                 DA da_rule, DB db_rule) {
  Require(a.shape() == b.shape(), Describe(op, a, b));
  Tensor y(a.shape());
  const size_t n = y.size();
  for (size_t i = 0; i < n; ++i) y[i] = f(a.value()[i], b.value()[i]);
  return Finish(std::move(y), {&a, &b}, [n, da_rule, db_rule](Node& self) {
    const Tensor& av = self.parents[0]->value;
    const Tensor& bv = self.parents[1]->value;
    const double* g = self.grad.data();
    if (double* da = ParentGrad(self, 0))
      for (size_t i = 0; i < n; ++i) da[i] += da_rule(g[i], av[i], bv[i]);
    if (double* db = ParentGrad(self, 1))
      for (size_t i = 0; i < n; ++i) db[i] += db_rule(g[i], av[i], bv[i]);
  });
}

}  // namespace

Var Add(const Var& a, const Var& b) {
  return Elementwise2(
      "Add", a, b, [](double x, double y) { return x + y; },
      [](double g, double, double) { return g; },
      [](double g, double, double) { return g; });
}

Var Sub(const Var& a, const Var& b) {
  return Elementwise2(
      "Sub", a, b, [](double x, double y) { return x - y; },
      [](double g, double, double) { return g; },
      [](double g, double, double) { return -g; });
}

Var Mul(const Var& a, const Var& b) {
  return Elementwise2(
      "Mul", a, b, [](double x, double y) { return x * y; },
      [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Var Scale(const Var& a, double factor) {
  Tensor y = a.value();
  for (double& v : y.values()) v *= factor;
  return Finish(std::move(y), {&a}, [factor](Node& self) {
    double* da = ParentGrad(self, 0);
    const double* g = self.grad.data();
    for (size_t i = 0; i < self.grad.size(); ++i) da[i] += g[i] * factor;
  });
}

Var Concat(std::span<const Var> parts) {
  Require(!parts.empty(), "Concat: no inputs");
  int total = 0;
  for (const Var& p : parts) {
    Require(p.value().rank() <= 1, Describe("Concat", p));
    total += static_cast<int>(p.size());
  }
  Tensor y(Shape{total});
  int offset = 0;
  bool record = false;
  for (const Var& p : parts) {
    std::copy(p.value().data(), p.value().data() + p.size(), y.data() + offset);
    offset += static_cast<int>(p.size());
    record = record || p.requires_grad();
  }
  NodePtr n = NewNode(std::move(y));
  if (grad_enabled && record) {
    n->requires_grad = true;
    n->is_leaf = false;
    for (const Var& p : parts) n->parents.push_back(p.shared());
    n->backward = [](Node& self) {
      size_t offset = 0;
      for (size_t i = 0; i < self.parents.size(); ++i) {
        const size_t len = self.parents[i]->value.size();
        if (double* d = ParentGrad(self, i)) {
          for (size_t j = 0; j < len; ++j) d[j] += self.grad[offset + j];
        }
        offset += len;
      }
    };
  }
  return Var(std::move(n));
}

Var Concat(const Var& a, const Var& b) {
  const Var parts[] = {a, b};
  return Concat(std::span<const Var>(parts));
}

Var Slice(const Var& a, int begin, int length) {
  Require(a.value().rank() == 1 && begin >= 0 && length >= 0 &&
              begin + length <= a.shape()[0],
          Describe("Slice", a) + " range [" + std::to_string(begin) + ", " +
              std::to_string(begin + length) + ")");
  Tensor y(Shape{length});
  std::copy(a.value().data() + begin, a.value().data() + begin + length,
            y.data());
  return Finish(std::move(y), {&a}, [begin, length](Node& self) {
    double* da = ParentGrad(self, 0);
    for (int j = 0; j < length; ++j) da[begin + j] += self.grad[j];
  });
}

Var Stack(std::span<const Var> rows) {
  Require(!rows.empty(), "Stack: no inputs");
  const int n = rows[0].value().rank() == 1 ? rows[0].shape()[0] : -1;
  bool record = false;
  for (const Var& r : rows) {
    Require(r.value().rank() == 1 && r.shape()[0] == n, Describe("Stack", r));
    record = record || r.requires_grad();
  }
  const int m = static_cast<int>(rows.size());
  Tensor y(Shape{m, n});
  for (int i = 0; i < m; ++i) {
    std::copy(rows[i].value().data(), rows[i].value().data() + n,
              y.data() + static_cast<size_t>(i) * n);
  }
  NodePtr node = NewNode(std::move(y));
  if (grad_enabled && record) {
    node->requires_grad = true;
    node->is_leaf = false;
    for (const Var& r : rows) node->parents.push_back(r.shared());
    node->backward = [n](Node& self) {
      for (size_t i = 0; i < self.parents.size(); ++i) {
        if (double* d = ParentGrad(self, i)) {
          for (int j = 0; j < n; ++j) d[j] += self.grad[i * n + j];
        }
      }
    };
  }
  return Var(std::move(node));
}

Var AddN(std::span<const Var> terms) {
  Require(!terms.empty(), "AddN: no inputs");
  Tensor y(terms[0].shape());
  bool record = false;
  for (const Var& t : terms) {
    Require(t.shape() == y.shape(), Describe("AddN", terms[0], t));
    for (size_t i = 0; i < y.size(); ++i) y[i] += t.value()[i];
    record = record || t.requires_grad();
  }
  NodePtr node = NewNode(std::move(y));
  if (grad_enabled && record) {
    node->requires_grad = true;
    node->is_leaf = false;
    for (const Var& t : terms) node->parents.push_back(t.shared());
    node->backward = [](Node& self) {
      for (size_t i = 0; i < self.parents.size(); ++i) {
        if (double* d = ParentGrad(self, i)) {
          for (size_t j = 0; j < self.grad.size(); ++j) d[j] += self.grad[j];
        }
      }
    };
  }
  return Var(std::move(node));
}

namespace {

double SigmoidScalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var Sigmoid(const Var& a) {
  Tensor y(a.shape());
  for (size_t i = 0; i < y.size(); ++i) y[i] = SigmoidScalar(a.value()[i]);
  return Finish(std::move(y), {&a}, [](Node& self) {
    double* da = ParentGrad(self, 0);
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double s = self.value[i];
      da[i] += self.grad[i] * s * (1.0 - s);
    }
  });
}

Var Tanh(const Var& a) {
  Tensor y(a.shape());
  for (size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(a.value()[i]);
  return Finish(std::move(y), {&a}, [](Node& self) {
    double* da = ParentGrad(self, 0);
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double t = self.value[i];
      da[i] += self.grad[i] * (1.0 - t * t);
    }
  });
}

Var Log(const Var& a) {
  Tensor y(a.shape());
  for (size_t i = 0; i < y.size(); ++i) {
    Require(a.value()[i] > 0.0, "Log: non-positive input");
    y[i] = std::log(a.value()[i]);
  }
  return Finish(std::move(y), {&a}, [](Node& self) {
    double* da = ParentGrad(self, 0);
    const Tensor& x = self.parents[0]->value;
    for (size_t i = 0; i < self.grad.size(); ++i) da[i] += self.grad[i] / x[i];
  });
}

Var Softmax(const Var& a) {
  Require(a.value().rank() == 1 && a.size() > 0, Describe("Softmax", a));
  Tensor y(a.shape());
  const double mx = *std::max_element(a.value().values().begin(),
                                      a.value().values().end());
  double z = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    y[i] = std::exp(a.value()[i] - mx);
    z += y[i];
  }
  for (double& v : y.values()) v /= z;
  return Finish(std::move(y), {&a}, [](Node& self) {
    double* da = ParentGrad(self, 0);
    double dot = 0.0;
    for (size_t i = 0; i < self.grad.size(); ++i)
      dot += self.grad[i] * self.value[i];
    for (size_t i = 0; i < self.grad.size(); ++i)
      da[i] += self.value[i] * (self.grad[i] - dot);
  });
}

Var LogSoftmax(const Var& a) {
  Require(a.value().rank() == 1 && a.size() > 0, Describe("LogSoftmax", a));
  Tensor y(a.shape());
  const double mx = *std::max_element(a.value().values().begin(),
                                      a.value().values().end());
  double z = 0.0;
  for (size_t i = 0; i < y.size(); ++i) z += std::exp(a.value()[i] - mx);
  const double log_z = mx + std::log(z);
  for (size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] - log_z;
  return Finish(std::move(y), {&a}, [](Node& self) {
    double* da = ParentGrad(self, 0);
    double total = 0.0;
    for (size_t i = 0; i < self.grad.size(); ++i) total += self.grad[i];
    for (size_t i = 0; i < self.grad.size(); ++i)
      da[i] += self.grad[i] - std::exp(self.value[i]) * total;
  });
}

Var Sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return Finish(Tensor::Scalar(s), {&a}, [](Node& self) {
    double* da = ParentGrad(self, 0);
    const double g = self.grad[0];
    for (size_t i = 0; i < self.parents[0]->value.size(); ++i) da[i] += g;
  });
}

Var Dot(const Var& a, const Var& b) {
  Require(a.shape() == b.shape(), Describe("Dot", a, b));
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a.value()[i] * b.value()[i];
  return Finish(Tensor::Scalar(s), {&a, &b}, [](Node& self) {
    const double g = self.grad[0];
    const Tensor& av = self.parents[0]->value;
    const Tensor& bv = self.parents[1]->value;
    if (double* da = ParentGrad(self, 0))
      for (size_t i = 0; i < av.size(); ++i) da[i] += g * bv[i];
    if (double* db = ParentGrad(self, 1))
      for (size_t i = 0; i < bv.size(); ++i) db[i] += g * av[i];
  });
}

Var Gather(const Var& table, int row) {
  Require(table.value().rank() == 2 && row >= 0 && row < table.shape()[0],
          Describe("Gather", table) + " row " + std::to_string(row));
  const int n = table.shape()[1];
  Tensor y(Shape{n});
  std::copy(table.value().data() + static_cast<size_t>(row) * n,
            table.value().data() + static_cast<size_t>(row + 1) * n, y.data());
  return Finish(std::move(y), {&table}, [row, n](Node& self) {
    double* dt = ParentGrad(self, 0) + static_cast<size_t>(row) * n;
    for (int j = 0; j < n; ++j) dt[j] += self.grad[j];
  });
}

Var Pick(const Var& a, int index) {
  Require(index >= 0 && static_cast<size_t>(index) < a.size(),
          Describe("Pick", a) + " index " + std::to_string(index));
  return Finish(Tensor::Scalar(a.value()[index]), {&a}, [index](Node& self) {
    ParentGrad(self, 0)[index] += self.grad[0];
  });
}

Var GruCell(const GruWeights& p, const Var& h_prev, const Var& x) {
  const int hidden = h_prev.value().rank() == 1 ? h_prev.shape()[0] : -1;
  const int in = x.value().rank() == 1 ? x.shape()[0] : -1;
  const Shape wx{hidden, in};
  const Shape uh{hidden, hidden};
  const Shape b{hidden};
  Require(p.w_z.shape() == wx && p.w_r.shape() == wx && p.w_h.shape() == wx &&
              p.u_z.shape() == uh && p.u_r.shape() == uh &&
              p.u_h.shape() == uh && p.b_z.shape() == b &&
              p.b_r.shape() == b && p.b_h.shape() == b,
          "GruCell: weights do not match input " + ShapeString(x.shape()) +
              " and hidden " + ShapeString(h_prev.shape()));

  const double* hp = h_prev.value().data();
  const double* xv = x.value().data();
  auto affine = [&](const Var& w, const Var& u, const Var& bias,
                    const double* hin, double* out) {
    const double* wd = w.value().data();
    const double* ud = u.value().data();
    for (int i = 0; i < hidden; ++i) {
      double acc = bias.value()[i];
      const double* wr = wd + static_cast<size_t>(i) * in;
      for (int j = 0; j < in; ++j) acc += wr[j] * xv[j];
      const double* ur = ud + static_cast<size_t>(i) * hidden;
      for (int j = 0; j < hidden; ++j) acc += ur[j] * hin[j];
      out[i] = acc;
    }
  };

  std::vector<double> z(hidden), r(hidden), c(hidden), rh(hidden);
  affine(p.w_z, p.u_z, p.b_z, hp, z.data());
  affine(p.w_r, p.u_r, p.b_r, hp, r.data());
  for (int i = 0; i < hidden; ++i) {
    z[i] = SigmoidScalar(z[i]);
    r[i] = SigmoidScalar(r[i]);
    rh[i] = r[i] * hp[i];
  }
  affine(p.w_h, p.u_h, p.b_h, rh.data(), c.data());
  Tensor h(Shape{hidden});
  for (int i = 0; i < hidden; ++i) {
    c[i] = std::tanh(c[i]);
    h[i] = (1.0 - z[i]) * hp[i] + z[i] * c[i];
  }

  NodePtr node = NewNode(std::move(h));
  const Var* inputs[] = {&h_prev, &x,     &p.w_z, &p.u_z, &p.b_z, &p.w_r,
                         &p.u_r,  &p.b_r, &p.w_h, &p.u_h, &p.b_h};
  bool record = false;
  for (const Var* v : inputs) record = record || v->requires_grad();
  if (!grad_enabled || !record) return Var(std::move(node));

  node->requires_grad = true;
  node->is_leaf = false;
  for (const Var* v : inputs) node->parents.push_back(v->shared());
  node->backward = [hidden, in, z = std::move(z), r = std::move(r),
                    c = std::move(c), rh = std::move(rh)](Node& self) {
    const double* g = self.grad.data();
    const double* hp = self.parents[0]->value.data();
    const double* xv = self.parents[1]->value.data();
    std::vector<double> dh_prev(hidden, 0.0), dx(in, 0.0);
    std::vector<double> da_z(hidden), da_r(hidden), da_h(hidden);
    std::vector<double> d_rh(hidden, 0.0);

    for (int i = 0; i < hidden; ++i) {
      dh_prev[i] = g[i] * (1.0 - z[i]);
      const double dz = g[i] * (c[i] - hp[i]);
      const double dc = g[i] * z[i];
      da_z[i] = dz * z[i] * (1.0 - z[i]);
      da_h[i] = dc * (1.0 - c[i] * c[i]);
    }

    // Candidate branch: a_h = W_h x + U_h (r*h) + b_h.
    const double* uh = self.parents[9]->value.data();
    for (int i = 0; i < hidden; ++i) {
      const double* ur = uh + static_cast<size_t>(i) * hidden;
      for (int j = 0; j < hidden; ++j) d_rh[j] += ur[j] * da_h[i];
    }
    for (int i = 0; i < hidden; ++i) {
      da_r[i] = d_rh[i] * hp[i] * r[i] * (1.0 - r[i]);
      dh_prev[i] += d_rh[i] * r[i];
    }

    // Accumulate weight gradients and input gradients for one gate.
    auto gate = [&](size_t w_idx, size_t u_idx, size_t b_idx,
                    const std::vector<double>& da, const double* hin,
                    bool hin_is_h) {
      const double* wd = self.parents[w_idx]->value.data();
      const double* ud = self.parents[u_idx]->value.data();
      if (double* dw = ParentGrad(self, w_idx)) {
        for (int i = 0; i < hidden; ++i) {
          double* row = dw + static_cast<size_t>(i) * in;
          for (int j = 0; j < in; ++j) row[j] += da[i] * xv[j];
        }
      }
      if (double* du = ParentGrad(self, u_idx)) {
        for (int i = 0; i < hidden; ++i) {
          double* row = du + static_cast<size_t>(i) * hidden;
          for (int j = 0; j < hidden; ++j) row[j] += da[i] * hin[j];
        }
      }
      if (double* db = ParentGrad(self, b_idx)) {
        for (int i = 0; i < hidden; ++i) db[i] += da[i];
      }
      for (int i = 0; i < hidden; ++i) {
        const double* wr = wd + static_cast<size_t>(i) * in;
        for (int j = 0; j < in; ++j) dx[j] += wr[j] * da[i];
        if (hin_is_h) {
          const double* ur = ud + static_cast<size_t>(i) * hidden;
          for (int j = 0; j < hidden; ++j) dh_prev[j] += ur[j] * da[i];
        }
      }
    };
    gate(2, 3, 4, da_z, hp, true);
    gate(5, 6, 7, da_r, hp, true);
    // The candidate's recurrent input is r*h; its h-gradient went via d_rh.
    gate(8, 9, 10, da_h, rh.data(), false);

    if (double* d = ParentGrad(self, 0))
      for (int i = 0; i < hidden; ++i) d[i] += dh_prev[i];
    if (double* d = ParentGrad(self, 1))
      for (int j = 0; j < in; ++j) d[j] += dx[j];
  };
  return Var(std::move(node));
}

void Backward(const Var& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw std::invalid_argument(
        "Backward: loss must hold exactly one value, got shape " +
        (loss.defined() ? ShapeString(loss.shape()) : std::string("<none>")));
  }
  if (!loss.requires_grad()) return;

  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack = {loss.node()};
  seen.insert(loss.node());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) {
        stack.push_back(p.get());
      }
    }
  }
  std::sort(order.begin(), order.end(),
            [](const Node* a, const Node* b) { return a->id > b->id; });

  loss.node()->MutableGrad()[0] += 1.0;
  for (Node* n : order) {
    if (n->is_leaf) continue;
    if (n->has_grad) n->backward(*n);
  }
  // Intermediate buffers are released so a repeated call accumulates exactly
  // one more copy of the gradient into the leaves.
  for (Node* n : order) {
    if (!n->is_leaf) {
      n->grad = Tensor();
      n->has_grad = false;
    }
  }
}

}  // namespace negotiator
