// Copyright 2026 The cmtrack Authors
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

#include "cmtrack/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cmtrack/errors.hpp"

namespace cmtrack::numerics {
namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape().to_string() + " vs " +
                         b.shape().to_string());
  }
}

void require_axis(const char* op, int axis) {
  if (axis != 0 && axis != 1) {
    throw DimensionError(std::string(op) + ": axis must be 0 or 1, got " + std::to_string(axis));
  }
}

template <typename F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------- kernels

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner extents differ, " + a.shape().to_string() + " x " +
                         b.shape().to_string());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out({m, n});
  double* o = out.data();
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = o + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = pa[i * k + p];
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += s * brow[j];
    }
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: " + a.shape().to_string() + " x " + b.shape().to_string() +
                         "^T");
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      out(i, j) = acc;
    }
  }
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: " + a.shape().to_string() + "^T x " + b.shape().to_string());
  }
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  Tensor out({m, n});
  double* o = out.data();
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a.data() + p * m;
    const double* brow = b.data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double s = arow[i];
      double* orow = o + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += s * brow[j];
    }
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Tensor softmax(const Tensor& x, int axis) {
  require_axis("softmax", axis);
  if (axis == 0) return transpose(softmax(transpose(x), 1));
  Tensor out(x.shape());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mx = x(r, 0);
    for (std::size_t c = 1; c < x.cols(); ++c) mx = std::max(mx, x(r, c));
    double total = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      out(r, c) = std::exp(x(r, c) - mx);
      total += out(r, c);
    }
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) /= total;
  }
  return out;
}

// ------------------------------------------------------------- primitives

Var matmul(Var a, Var b) {
  Tensor out = matmul(a.value(), b.value());
  return a.tape().record(
      std::move(out), {a, b},
      [a, b](Tape& t, const Tensor& g) {
        if (a.requires_grad()) t.accumulate(a, matmul_nt(g, b.value()));
        if (b.requires_grad()) t.accumulate(b, matmul_tn(a.value(), g));
      },
      "matmul");
}

Var transpose(Var a) {
  return a.tape().record(
      transpose(a.value()), {a},
      [a](Tape& t, const Tensor& g) { t.accumulate(a, transpose(g)); }, "transpose");
}

Var add(Var a, Var b) {
  require_same_shape("add", a.value(), b.value());
  Tensor out = zip(a.value(), b.value(), [](double x, double y) { return x + y; });
  return a.tape().record(
      std::move(out), {a, b},
      [a, b](Tape& t, const Tensor& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
      },
      "add");
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a.value(), b.value());
  Tensor out = zip(a.value(), b.value(), [](double x, double y) { return x - y; });
  return a.tape().record(
      std::move(out), {a, b},
      [a, b](Tape& t, const Tensor& g) {
        t.accumulate(a, g);
        if (b.requires_grad()) t.accumulate(b, map(g, [](double v) { return -v; }));
      },
      "sub");
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a.value(), b.value());
  Tensor out = zip(a.value(), b.value(), [](double x, double y) { return x * y; });
  return a.tape().record(
      std::move(out), {a, b},
      [a, b](Tape& t, const Tensor& g) {
        if (a.requires_grad()) t.accumulate(a, zip(g, b.value(), [](double x, double y) { return x * y; }));
        if (b.requires_grad()) t.accumulate(b, zip(g, a.value(), [](double x, double y) { return x * y; }));
      },
      "mul");
}

Var div(Var a, Var b) {
  require_same_shape("div", a.value(), b.value());
  Tensor out = zip(a.value(), b.value(), [](double x, double y) { return x / y; });
  return a.tape().record(
      std::move(out), {a, b},
      [a, b](Tape& t, const Tensor& g) {
        const Tensor& bv = b.value();
        if (a.requires_grad()) t.accumulate(a, zip(g, bv, [](double x, double y) { return x / y; }));
        if (b.requires_grad()) {
          Tensor gb(g.shape());
          const Tensor& av = a.value();
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] = -g[i] * av[i] / (bv[i] * bv[i]);
          t.accumulate(b, gb);
        }
      },
      "div");
}

Var add_row(Var a, Var row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw DimensionError("add_row: " + rv.shape().to_string() + " cannot broadcast over " +
                         av.shape().to_string());
  }
  Tensor out = av;
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) += rv[c];
  return a.tape().record(
      std::move(out), {a, row},
      [a, row](Tape& t, const Tensor& g) {
        t.accumulate(a, g);
        if (row.requires_grad()) {
          Tensor gr({1, g.cols()});
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) gr[c] += g(r, c);
          t.accumulate(row, gr);
        }
      },
      "add_row");
}

Var scale(Var a, double s) {
  return a.tape().record(
      map(a.value(), [s](double x) { return x * s; }), {a},
      [a, s](Tape& t, const Tensor& g) { t.accumulate(a, map(g, [s](double x) { return x * s; })); },
      "scale");
}

Var add_scalar(Var a, double s) {
  return a.tape().record(
      map(a.value(), [s](double x) { return x + s; }), {a},
      [a](Tape& t, const Tensor& g) { t.accumulate(a, g); }, "add_scalar");
}

Var minimum(Var a, Var b) {
  require_same_shape("minimum", a.value(), b.value());
  Tape& tape = a.tape();
  for (std::size_t i = 0; i < a.value().size(); ++i)
    tape.note_kink(std::abs(a.value()[i] - b.value()[i]));
  Tensor out = zip(a.value(), b.value(), [](double x, double y) { return std::min(x, y); });
  return tape.record(
      std::move(out), {a, b},
      [a, b](Tape& t, const Tensor& g) {
        Tensor ga(g.shape()), gb(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
          // Ties route the gradient to the first operand.
          if (a.value()[i] <= b.value()[i]) ga[i] = g[i]; else gb[i] = g[i];
        }
        t.accumulate(a, ga);
        t.accumulate(b, gb);
      },
      "minimum");
}

Var maximum(Var a, Var b) {
  require_same_shape("maximum", a.value(), b.value());
  Tape& tape = a.tape();
  for (std::size_t i = 0; i < a.value().size(); ++i)
    tape.note_kink(std::abs(a.value()[i] - b.value()[i]));
  Tensor out = zip(a.value(), b.value(), [](double x, double y) { return std::max(x, y); });
  return tape.record(
      std::move(out), {a, b},
      [a, b](Tape& t, const Tensor& g) {
        Tensor ga(g.shape()), gb(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (a.value()[i] >= b.value()[i]) ga[i] = g[i]; else gb[i] = g[i];
        }
        t.accumulate(a, ga);
        t.accumulate(b, gb);
      },
      "maximum");
}

Var relu(Var a) {
  Tape& tape = a.tape();
  for (double v : a.value().values()) tape.note_kink(std::abs(v));
  return tape.record(
      map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }), {a},
      [a](Tape& t, const Tensor& g) {
        t.accumulate(a, zip(g, a.value(), [](double gv, double x) { return x > 0.0 ? gv : 0.0; }));
      },
      "relu");
}

Var sigmoid(Var a) {
  Tensor out = map(a.value(), stable_sigmoid);
  Tensor s = out;
  return a.tape().record(
      std::move(out), {a},
      [a, s = std::move(s)](Tape& t, const Tensor& g) {
        t.accumulate(a, zip(g, s, [](double gv, double y) { return gv * y * (1.0 - y); }));
      },
      "sigmoid");
}

Var abs(Var a) {
  Tape& tape = a.tape();
  for (double v : a.value().values()) tape.note_kink(std::abs(v));
  return tape.record(
      map(a.value(), [](double x) { return std::abs(x); }), {a},
      [a](Tape& t, const Tensor& g) {
        t.accumulate(a, zip(g, a.value(), [](double gv, double x) {
                       return x > 0.0 ? gv : (x < 0.0 ? -gv : 0.0);
                     }));
      },
      "abs");
}

Var sqrt(Var a) {
  Tape& tape = a.tape();
  for (double v : a.value().values()) {
    if (v < 0.0) throw ContractError("sqrt: negative input " + std::to_string(v));
    tape.note_kink(v);
  }
  Tensor out = map(a.value(), [](double x) { return std::sqrt(x); });
  Tensor root = out;
  return tape.record(
      std::move(out), {a},
      [a, root = std::move(root)](Tape& t, const Tensor& g) {
        t.accumulate(a, zip(g, root, [](double gv, double y) { return y > 0.0 ? gv / (2.0 * y) : 0.0; }));
      },
      "sqrt");
}

Var softmax(Var x, int axis) {
  Tensor out = softmax(x.value(), axis);
  Tensor y = out;
  return x.tape().record(
      std::move(out), {x},
      [x, axis, y = std::move(y)](Tape& t, const Tensor& g) {
        Tensor gy = axis == 1 ? g : transpose(g);
        Tensor yy = axis == 1 ? y : transpose(y);
        Tensor gx(yy.shape());
        for (std::size_t r = 0; r < yy.rows(); ++r) {
          double dot = 0.0;
          for (std::size_t c = 0; c < yy.cols(); ++c) dot += gy(r, c) * yy(r, c);
          for (std::size_t c = 0; c < yy.cols(); ++c) gx(r, c) = yy(r, c) * (gy(r, c) - dot);
        }
        t.accumulate(x, axis == 1 ? gx : transpose(gx));
      },
      "softmax");
}

Var log_softmax(Var x, int axis) {
  require_axis("log_softmax", axis);
  const Tensor xv = axis == 1 ? x.value() : transpose(x.value());
  Tensor out(xv.shape());
  Tensor probs(xv.shape());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double mx = xv(r, 0);
    for (std::size_t c = 1; c < xv.cols(); ++c) mx = std::max(mx, xv(r, c));
    double total = 0.0;
    for (std::size_t c = 0; c < xv.cols(); ++c) total += std::exp(xv(r, c) - mx);
    const double lse = mx + std::log(total);
    for (std::size_t c = 0; c < xv.cols(); ++c) {
      out(r, c) = xv(r, c) - lse;
      probs(r, c) = std::exp(out(r, c));
    }
  }
  if (axis == 0) out = transpose(out);
  return x.tape().record(
      std::move(out), {x},
      [x, axis, probs = std::move(probs)](Tape& t, const Tensor& g) {
        Tensor gy = axis == 1 ? g : transpose(g);
        Tensor gx(gy.shape());
        for (std::size_t r = 0; r < gy.rows(); ++r) {
          double total = 0.0;
          for (std::size_t c = 0; c < gy.cols(); ++c) total += gy(r, c);
          for (std::size_t c = 0; c < gy.cols(); ++c) gx(r, c) = gy(r, c) - probs(r, c) * total;
        }
        t.accumulate(x, axis == 1 ? gx : transpose(gx));
      },
      "log_softmax");
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& xv = x.value();
  const std::size_t rows = xv.rows(), cols = xv.cols();
  if (gain.value().shape() != Shape{1, cols} || bias.value().shape() != Shape{1, cols}) {
    throw DimensionError("layer_norm: gain/bias must be [1x" + std::to_string(cols) + "], got " +
                         gain.value().shape().to_string() + " and " +
                         bias.value().shape().to_string());
  }
  Tensor normed(xv.shape());
  Tensor rstd({rows, 1});
  Tensor out(xv.shape());
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  for (std::size_t r = 0; r < rows; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += xv(r, c);
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (xv(r, c) - mu) * (xv(r, c) - mu);
    var /= static_cast<double>(cols);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      normed(r, c) = (xv(r, c) - mu) * rstd[r];
      out(r, c) = gv[c] * normed(r, c) + bv[c];
    }
  }
  return x.tape().record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, normed = std::move(normed), rstd = std::move(rstd)](Tape& t,
                                                                         const Tensor& g) {
        const std::size_t rows = g.rows(), cols = g.cols();
        const Tensor& gv = gain.value();
        if (gain.requires_grad() || bias.requires_grad()) {
          Tensor dgain({1, cols}), dbias({1, cols});
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) {
              dgain[c] += g(r, c) * normed(r, c);
              dbias[c] += g(r, c);
            }
          t.accumulate(gain, dgain);
          t.accumulate(bias, dbias);
        }
        if (!x.requires_grad()) return;
        Tensor dx({rows, cols});
        const double n = static_cast<double>(cols);
        for (std::size_t r = 0; r < rows; ++r) {
          double mean_d = 0.0, mean_dn = 0.0;
          for (std::size_t c = 0; c < cols; ++c) {
            const double d = g(r, c) * gv[c];
            mean_d += d;
            mean_dn += d * normed(r, c);
          }
          mean_d /= n;
          mean_dn /= n;
          for (std::size_t c = 0; c < cols; ++c) {
            const double d = g(r, c) * gv[c];
            dx(r, c) = rstd[r] * (d - mean_d - normed(r, c) * mean_dn);
          }
        }
        t.accumulate(x, dx);
      },
      "layer_norm");
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return a.tape().record(
      Tensor::scalar(total), {a},
      [a](Tape& t, const Tensor& g) { t.accumulate(a, Tensor(a.value().shape(), g[0])); }, "sum");
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return a.tape().record(
      Tensor::scalar(total / n), {a},
      [a, n](Tape& t, const Tensor& g) { t.accumulate(a, Tensor(a.value().shape(), g[0] / n)); },
      "mean");
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  const std::size_t rows = parts[0].value().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.value().rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " + parts[0].value().shape().to_string() +
                           " vs " + p.value().shape().to_string());
    }
    cols += p.value().cols();
  }
  Tensor out({rows, cols});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) out(r, offset + c) = v(r, c);
    offset += v.cols();
  }
  std::vector<Var> operands(parts.begin(), parts.end());
  return parts[0].tape().record(
      std::move(out), parts,
      [operands](Tape& t, const Tensor& g) {
        std::size_t offset = 0;
        for (const Var& p : operands) {
          const std::size_t pc = p.value().cols();
          if (p.requires_grad()) {
            Tensor gp({g.rows(), pc});
            for (std::size_t r = 0; r < g.rows(); ++r)
              for (std::size_t c = 0; c < pc; ++c) gp(r, c) = g(r, offset + c);
            t.accumulate(p, gp);
          }
          offset += pc;
        }
      },
      "concat_cols");
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no operands");
  const std::size_t cols = parts[0].value().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.value().cols() != cols) {
      throw DimensionError("concat_rows: column mismatch " + parts[0].value().shape().to_string() +
                           " vs " + p.value().shape().to_string());
    }
    rows += p.value().rows();
  }
  Tensor out({rows, cols});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    std::copy(p.value().data(), p.value().data() + p.value().size(), out.data() + offset * cols);
    offset += p.value().rows();
  }
  std::vector<Var> operands(parts.begin(), parts.end());
  return parts[0].tape().record(
      std::move(out), parts,
      [operands](Tape& t, const Tensor& g) {
        std::size_t offset = 0;
        for (const Var& p : operands) {
          const Shape s = p.value().shape();
          if (p.requires_grad()) {
            t.accumulate(p, Tensor(s, g.values().subspan(offset * g.cols(), s.size())));
          }
          offset += s.rows;
        }
      },
      "concat_rows");
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  if (count == 0 || begin + count > av.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " + av.shape().to_string());
  }
  Tensor out({av.rows(), count});
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = av(r, begin + c);
  return a.tape().record(
      std::move(out), {a},
      [a, begin, count](Tape& t, const Tensor& g) {
        Tensor ga(a.value().shape());
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < count; ++c) ga(r, begin + c) = g(r, c);
        t.accumulate(a, ga);
      },
      "slice_cols");
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  if (count == 0 || begin + count > av.rows()) {
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " + av.shape().to_string());
  }
  Tensor out({count, av.cols()}, av.values().subspan(begin * av.cols(), count * av.cols()));
  return a.tape().record(
      std::move(out), {a},
      [a, begin](Tape& t, const Tensor& g) {
        Tensor ga(a.value().shape());
        std::copy(g.data(), g.data() + g.size(), ga.data() + begin * ga.cols());
        t.accumulate(a, ga);
      },
      "slice_rows");
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(shape);
  return a.tape().record(
      std::move(out), {a},
      [a](Tape& t, const Tensor& g) { t.accumulate(a, g.reshaped(a.value().shape())); },
      "reshape");
}

Var permute_rows(Var a, std::span<const std::size_t> perm) {
  const Tensor& av = a.value();
  if (perm.size() != av.rows()) {
    throw DimensionError("permute_rows: permutation of length " + std::to_string(perm.size()) +
                         " for " + av.shape().to_string());
  }
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t p : perm) {
    if (p >= perm.size() || seen[p]) throw ContractError("permute_rows: not a permutation");
    seen[p] = true;
  }
  Tensor out(av.shape());
  for (std::size_t i = 0; i < perm.size(); ++i)
    std::copy_n(av.data() + perm[i] * av.cols(), av.cols(), out.data() + i * av.cols());
  std::vector<std::size_t> p(perm.begin(), perm.end());
  return a.tape().record(
      std::move(out), {a},
      [a, p = std::move(p)](Tape& t, const Tensor& g) {
        Tensor ga(g.shape());
        for (std::size_t i = 0; i < p.size(); ++i)
          std::copy_n(g.data() + i * g.cols(), g.cols(), ga.data() + p[i] * g.cols());
        t.accumulate(a, ga);
      },
      "permute_rows");
}

Var detach(Var a) { return a.tape().constant(a.value()); }

}  // namespace cmtrack::numerics
