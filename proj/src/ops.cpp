// Copyright (c) 2026 The sprune Authors. All Rights Reserved.
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

#include "sprune/ops.hpp"

#include <cmath>
#include <numbers>

#include "sprune/errors.hpp"
#include "sprune/kernels.hpp"

namespace sprune::ops {
namespace {

using Data = std::shared_ptr<const std::vector<double>>;

bool tracking(std::initializer_list<const Tensor*> inputs) {
  if (Tape::active() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

Data data_of(const Tensor& t) { return t.node().data; }

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(t.shape()));
  }
}

void require_finite(const Tensor& t, const char* op) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite input");
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), p = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions disagree for " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  }
  std::vector<double> c(m * p);
  kernels::gemm_nn(m, k, p, a.data(), b.data(), c);
  const bool track = tracking({&a, &b});
  Tensor out({m, p}, std::move(c), track);
  if (track) {
    Tape::active()->record(out, [a, b, m, k, p](std::span<const double> g) {
      if (a.requires_grad()) {
        std::vector<double> da(m * k);
        kernels::gemm_nt(m, p, k, g, b.data(), da);
        accumulate_grad(a, da);
      }
      if (b.requires_grad()) {
        std::vector<double> db(k * p);
        kernels::gemm_tn(k, m, p, a.data(), g, db);
        accumulate_grad(b, db);
      }
    });
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul_nt");
  require_rank(b, 2, "matmul_nt");
  const std::size_t m = a.dim(0), k = a.dim(1), p = b.dim(0);
  if (b.dim(1) != k) {
    throw ShapeError("matmul_nt: inner dimensions disagree for " + shape_string(a.shape()) + " and transposed " +
                     shape_string(b.shape()));
  }
  std::vector<double> c(m * p);
  kernels::gemm_nt(m, k, p, a.data(), b.data(), c);
  const bool track = tracking({&a, &b});
  Tensor out({m, p}, std::move(c), track);
  if (track) {
    Tape::active()->record(out, [a, b, m, k, p](std::span<const double> g) {
      if (a.requires_grad()) {
        std::vector<double> da(m * k);
        kernels::gemm_nn(m, p, k, g, b.data(), da);
        accumulate_grad(a, da);
      }
      if (b.requires_grad()) {
        std::vector<double> db(p * k);
        kernels::gemm_tn(p, m, k, g, a.data(), db);
        accumulate_grad(b, db);
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) + " differ");
  }
  std::vector<double> c(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = x[i] + y[i];
  const bool track = tracking({&a, &b});
  Tensor out(a.shape(), std::move(c), track);
  if (track) {
    Tape::active()->record(out, [a, b](std::span<const double> g) {
      accumulate_grad(a, g);
      accumulate_grad(b, g);
    });
  }
  return out;
}

Tensor add_row(const Tensor& m, const Tensor& row) {
  require_rank(m, 2, "add_row");
  const std::size_t r = m.dim(0), c = m.dim(1);
  if (row.numel() != c) {
    throw ShapeError("add_row: row " + shape_string(row.shape()) + " does not match " + shape_string(m.shape()));
  }
  std::vector<double> out_data(r * c);
  auto x = m.data(), b = row.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out_data[i * c + j] = x[i * c + j] + b[j];
  const bool track = tracking({&m, &row});
  Tensor out(m.shape(), std::move(out_data), track);
  if (track) {
    Tape::active()->record(out, [m, row, r, c](std::span<const double> g) {
      accumulate_grad(m, g);
      if (row.requires_grad()) {
        std::vector<double> db(c, 0.0);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) db[j] += g[i * c + j];
        accumulate_grad(row, db);
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& m, double factor) {
  std::vector<double> c(m.numel());
  auto x = m.data();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = x[i] * factor;
  const bool track = tracking({&m});
  Tensor out(m.shape(), std::move(c), track);
  if (track) {
    Tape::active()->record(out, [m, factor](std::span<const double> g) {
      std::vector<double> dm(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) dm[i] = g[i] * factor;
      accumulate_grad(m, dm);
    });
  }
  return out;
}

Tensor scale_by(const Tensor& m, const Tensor& gates, std::size_t index) {
  if (index >= gates.numel()) {
    throw IndexError("scale_by: gate index " + std::to_string(index) + " out of range for " +
                     shape_string(gates.shape()));
  }
  const double gv = gates[index];
  std::vector<double> c(m.numel());
  auto x = m.data();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = x[i] * gv;
  const bool track = tracking({&m, &gates});
  Tensor out(m.shape(), std::move(c), track);
  if (track) {
    Tape::active()->record(out, [m, gates, index, gv](std::span<const double> g) {
      if (m.requires_grad()) {
        std::vector<double> dm(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) dm[i] = g[i] * gv;
        accumulate_grad(m, dm);
      }
      if (gates.requires_grad()) {
        std::vector<double> dg(gates.numel(), 0.0);
        auto x = m.data();
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * x[i];
        dg[index] = s;
        accumulate_grad(gates, dg);
      }
    });
  }
  return out;
}

Tensor mul_cols(const Tensor& m, const Tensor& gates) {
  require_rank(m, 2, "mul_cols");
  const std::size_t r = m.dim(0), c = m.dim(1);
  if (gates.numel() != c) {
    throw ShapeError("mul_cols: gates " + shape_string(gates.shape()) + " do not match " + shape_string(m.shape()));
  }
  std::vector<double> out_data(r * c);
  auto x = m.data(), gv = gates.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out_data[i * c + j] = x[i * c + j] * gv[j];
  const bool track = tracking({&m, &gates});
  Tensor out(m.shape(), std::move(out_data), track);
  if (track) {
    Tape::active()->record(out, [m, gates, r, c](std::span<const double> g) {
      auto x = m.data(), gv = gates.data();
      if (m.requires_grad()) {
        std::vector<double> dm(r * c);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) dm[i * c + j] = g[i * c + j] * gv[j];
        accumulate_grad(m, dm);
      }
      if (gates.requires_grad()) {
        std::vector<double> dg(c, 0.0);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) dg[j] += g[i * c + j] * x[i * c + j];
        accumulate_grad(gates, dg);
      }
    });
  }
  return out;
}

Tensor softmax_rows(const Tensor& m) { return softmax_rows(m, {}); }

Tensor softmax_rows(const Tensor& m, std::span<const std::uint8_t> key_keep) {
  require_rank(m, 2, "softmax_rows");
  require_finite(m, "softmax_rows");
  const std::size_t r = m.dim(0), c = m.dim(1);
  if (!key_keep.empty() && key_keep.size() != c) {
    throw ShapeError("softmax_rows: key mask length " + std::to_string(key_keep.size()) + " does not match " +
                     shape_string(m.shape()));
  }
  std::vector<double> y(r * c);
  kernels::softmax_rows(r, c, m.data(), key_keep, y);
  const bool track = tracking({&m});
  Tensor out(m.shape(), std::move(y), track);
  if (track) {
    Tape::active()->record(out, [m, yd = data_of(out), r, c](std::span<const double> g) {
      const auto& yv = *yd;
      std::vector<double> dx(r * c);
      for (std::size_t i = 0; i < r; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += yv[i * c + j] * g[i * c + j];
        for (std::size_t j = 0; j < c; ++j) dx[i * c + j] = yv[i * c + j] * (g[i * c + j] - dot);
      }
      accumulate_grad(m, dx);
    });
  }
  return out;
}

Tensor gelu(const Tensor& m) {
  std::vector<double> y(m.numel());
  kernels::gelu(m.data(), y);
  const bool track = tracking({&m});
  Tensor out(m.shape(), std::move(y), track);
  if (track) {
    Tape::active()->record(out, [m](std::span<const double> g) {
      constexpr double kInvSqrt2 = 0.70710678118654752440;
      const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
      auto x = m.data();
      std::vector<double> dx(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double cdf = 0.5 * (1.0 + std::erf(x[i] * kInvSqrt2));
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x[i] * x[i]);
        dx[i] = g[i] * (cdf + x[i] * pdf);
      }
      accumulate_grad(m, dx);
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& m, const Tensor& gain, const Tensor& bias, double eps) {
  require_rank(m, 2, "layer_norm");
  const std::size_t r = m.dim(0), c = m.dim(1);
  if (c == 0) throw ShapeError("layer_norm: zero-width rows");
  if (gain.numel() != c || bias.numel() != c) {
    throw ShapeError("layer_norm: gain/bias do not match " + shape_string(m.shape()));
  }
  auto normalized = std::make_shared<std::vector<double>>(r * c);
  auto rstd = std::make_shared<std::vector<double>>(r);
  std::vector<double> y(r * c);
  kernels::layer_norm_rows(r, c, m.data(), gain.data(), bias.data(), eps, *normalized, *rstd, y);
  const bool track = tracking({&m, &gain, &bias});
  Tensor out(m.shape(), std::move(y), track);
  if (track) {
    Tape::active()->record(out, [m, gain, bias, normalized, rstd, r, c](std::span<const double> g) {
      const auto& xh = *normalized;
      auto gv = gain.data();
      if (gain.requires_grad() || bias.requires_grad()) {
        std::vector<double> dg(c, 0.0), db(c, 0.0);
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < c; ++j) {
            dg[j] += g[i * c + j] * xh[i * c + j];
            db[j] += g[i * c + j];
          }
        }
        accumulate_grad(gain, dg);
        accumulate_grad(bias, db);
      }
      if (m.requires_grad()) {
        std::vector<double> dx(r * c);
        const double inv_c = 1.0 / static_cast<double>(c);
        for (std::size_t i = 0; i < r; ++i) {
          double mean_d = 0.0, mean_dx = 0.0;
          for (std::size_t j = 0; j < c; ++j) {
            const double d = g[i * c + j] * gv[j];
            mean_d += d;
            mean_dx += d * xh[i * c + j];
          }
          mean_d *= inv_c;
          mean_dx *= inv_c;
          for (std::size_t j = 0; j < c; ++j) {
            const double d = g[i * c + j] * gv[j];
            dx[i * c + j] = (*rstd)[i] * (d - mean_d - xh[i * c + j] * mean_dx);
          }
        }
        accumulate_grad(m, dx);
      }
    });
  }
  return out;
}

Tensor gather_rows(const Tensor& table, std::span<const std::int32_t> ids) {
  require_rank(table, 2, "gather_rows");
  const std::size_t v = table.dim(0), d = table.dim(1);
  std::vector<double> y(ids.size() * d);
  auto t = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= v) {
      throw IndexError("gather_rows: id " + std::to_string(ids[i]) + " out of range for " + std::to_string(v) +
                       " rows");
    }
    std::copy_n(t.begin() + static_cast<std::ptrdiff_t>(ids[i] * d), d, y.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  const bool track = tracking({&table});
  Tensor out({ids.size(), d}, std::move(y), track);
  if (track) {
    Tape::active()->record(out, [table, idv = std::vector<std::int32_t>(ids.begin(), ids.end()), v, d](
                                    std::span<const double> g) {
      std::vector<double> dt(v * d, 0.0);
      for (std::size_t i = 0; i < idv.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) dt[static_cast<std::size_t>(idv[i]) * d + j] += g[i * d + j];
      accumulate_grad(table, dt);
    });
  }
  return out;
}

Tensor slice_rows(const Tensor& m, std::size_t begin, std::size_t count) {
  require_rank(m, 2, "slice_rows");
  const std::size_t r = m.dim(0), c = m.dim(1);
  if (begin + count > r) {
    throw IndexError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + shape_string(m.shape()));
  }
  auto x = m.data();
  std::vector<double> y(x.begin() + static_cast<std::ptrdiff_t>(begin * c),
                        x.begin() + static_cast<std::ptrdiff_t>((begin + count) * c));
  const bool track = tracking({&m});
  Tensor out({count, c}, std::move(y), track);
  if (track) {
    Tape::active()->record(out, [m, begin, r, c](std::span<const double> g) {
      std::vector<double> dm(r * c, 0.0);
      std::copy(g.begin(), g.end(), dm.begin() + static_cast<std::ptrdiff_t>(begin * c));
      accumulate_grad(m, dm);
    });
  }
  return out;
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no parts");
  const std::size_t c = parts[0].dim(1);
  std::size_t rows = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_rows");
    if (p.dim(1) != c) throw ShapeError("concat_rows: column counts differ");
    rows += p.dim(0);
    any_grad = any_grad || p.requires_grad();
  }
  std::vector<double> y;
  y.reserve(rows * c);
  for (const auto& p : parts) y.insert(y.end(), p.data().begin(), p.data().end());
  const bool track = any_grad && Tape::active() != nullptr;
  Tensor out({rows, c}, std::move(y), track);
  if (track) {
    Tape::active()->record(out, [pv = std::vector<Tensor>(parts.begin(), parts.end())](std::span<const double> g) {
      std::size_t offset = 0;
      for (const auto& p : pv) {
        accumulate_grad(p, g.subspan(offset, p.numel()));
        offset += p.numel();
      }
    });
  }
  return out;
}

Tensor stack(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("stack: no parts");
  const Shape inner = parts[0].shape();
  if (inner.size() != 2) throw ShapeError("stack: parts must be 2-D");
  for (const auto& p : parts) {
    if (p.shape() != inner) throw ShapeError("stack: part shapes differ");
  }
  Tensor flat = concat_rows(parts);
  // Same storage and history, reinterpreted as 3-D.
  Tensor out({parts.size(), inner[0], inner[1]}, std::vector<double>(flat.data().begin(), flat.data().end()),
             flat.requires_grad());
  if (flat.requires_grad()) {
    Tape::active()->record(out, [flat](std::span<const double> g) { accumulate_grad(flat, g); });
  }
  return out;
}

Tensor sum(const Tensor& m) {
  double s = 0.0;
  for (double v : m.data()) s += v;
  const bool track = tracking({&m});
  Tensor out({1}, {s}, track);
  if (track) {
    Tape::active()->record(out, [m](std::span<const double> g) {
      std::vector<double> dm(m.numel(), g[0]);
      accumulate_grad(m, dm);
    });
  }
  return out;
}

}  // namespace sprune::ops
