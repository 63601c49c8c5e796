#include "rjca/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rjca {

namespace {

std::size_t mat_cols(const Tensor& t) { return t.rank() == 1 ? 1 : t.cols(); }

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() > 2) throw DimensionError(std::string(op) + ": rank-3 operand " + shape_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
  }
}

// Applies fn(index) to accumulate into the gradient of v when it needs one.
template <typename Fn>
void with_grad(Tape& t, Var v, Fn&& fn) {
  if (t.requires_grad(v)) fn(t.grad_buffer(v));
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  const std::size_t m = av.rows(), k = mat_cols(av), n = mat_cols(bv);
  if (bv.rows() != k) {
    throw DimensionError("matmul: inner extents disagree for " + shape_string(av.shape()) + " x " +
                         shape_string(bv.shape()));
  }
  Tensor out(bv.rank() == 1 ? Shape{m} : Shape{m, n});
  gemm_acc(av.values(), bv.values(), out.values(), m, k, n);
  return a.tape().record(std::move(out), {a, b},
                         [a, b, m, k, n](Tape& t, const Tensor& g) {
                           with_grad(t, a, [&](std::span<double> ga) {
                             gemm_nt_acc(g.values(), t.value(b).values(), ga, m, n, k);
                           });
                           with_grad(t, b, [&](std::span<double> gb) {
                             gemm_tn_acc(t.value(a).values(), g.values(), gb, k, m, n);
                           });
                         },
                         "matmul");
}

Var transpose(Var a) {
  const Tensor& av = a.value();
  require_matrix(av, "transpose");
  const std::size_t r = av.rows(), c = mat_cols(av);
  Tensor out = rjca::transpose(av);
  return a.tape().record(std::move(out), {a},
                         [a, r, c](Tape& t, const Tensor& g) {
                           with_grad(t, a, [&](std::span<double> ga) {
                             for (std::size_t i = 0; i < r; ++i)
                               for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g(j * r + i);
                           });
                         },
                         "transpose");
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  auto o = out.values();
  auto bv = b.value().values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape& t, const Tensor& g) {
                           t.accumulate(a, g);
                           t.accumulate(b, g);
                         },
                         "add");
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  auto o = out.values();
  auto bv = b.value().values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape& t, const Tensor& g) {
                           t.accumulate(a, g);
                           with_grad(t, b, [&](std::span<double> gb) {
                             for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g(i);
                           });
                         },
                         "sub");
}

Var hadamard(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "hadamard");
  Tensor out = a.value();
  auto o = out.values();
  auto bv = b.value().values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape& t, const Tensor& g) {
                           with_grad(t, a, [&](std::span<double> ga) {
                             const Tensor& bv = t.value(b);
                             for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g(i) * bv(i);
                           });
                           with_grad(t, b, [&](std::span<double> gb) {
                             const Tensor& av = t.value(a);
                             for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g(i) * av(i);
                           });
                         },
                         "hadamard");
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  return a.tape().record(std::move(out), {a},
                         [a, factor](Tape& t, const Tensor& g) {
                           with_grad(t, a, [&](std::span<double> ga) {
                             for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * g(i);
                           });
                         },
                         "scale");
}

Var add_bias(Var a, Var bias) {
  const Tensor& av = a.value();
  const Tensor& bv = bias.value();
  require_matrix(av, "add_bias");
  if (bv.rank() != 1 || bv.size() != av.rows()) {
    throw DimensionError("add_bias: bias " + shape_string(bv.shape()) + " does not match rows of " +
                         shape_string(av.shape()));
  }
  const std::size_t m = av.rows(), n = mat_cols(av);
  Tensor out = av;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.values()[i * n + j] += bv(i);
  return a.tape().record(std::move(out), {a, bias},
                         [a, bias, m, n](Tape& t, const Tensor& g) {
                           t.accumulate(a, g);
                           with_grad(t, bias, [&](std::span<double> gb) {
                             for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < n; ++j) gb[i] += g(i * n + j);
                           });
                         },
                         "add_bias");
}

Var activation(Var x, Activation kind) {
  const Tensor& xv = x.value();
  Tensor out = xv;
  auto o = out.values();
  switch (kind) {
    case Activation::tanh:
      for (double& v : o) v = std::tanh(v);
      return x.tape().record(std::move(out), {x},
                             [x](Tape& t, const Tensor& g) {
                               with_grad(t, x, [&](std::span<double> gx) {
                                 // y is the output of this node: recover it from x
                                 const Tensor& in = t.value(x);
                                 for (std::size_t i = 0; i < gx.size(); ++i) {
                                   const double y = std::tanh(in(i));
                                   gx[i] += g(i) * (1.0 - y * y);
                                 }
                               });
                             },
                             "tanh");
    case Activation::relu:
      for (double& v : o) v = v > 0.0 ? v : 0.0;
      return x.tape().record(std::move(out), {x},
                             [x](Tape& t, const Tensor& g) {
                               with_grad(t, x, [&](std::span<double> gx) {
                                 const Tensor& in = t.value(x);
                                 for (std::size_t i = 0; i < gx.size(); ++i)
                                   if (in(i) > 0.0) gx[i] += g(i);
                               });
                             },
                             "relu");
    case Activation::sigmoid:
      for (double& v : o) v = 1.0 / (1.0 + std::exp(-v));
      return x.tape().record(std::move(out), {x},
                             [x](Tape& t, const Tensor& g) {
                               with_grad(t, x, [&](std::span<double> gx) {
                                 const Tensor& in = t.value(x);
                                 for (std::size_t i = 0; i < gx.size(); ++i) {
                                   const double y = 1.0 / (1.0 + std::exp(-in(i)));
                                   gx[i] += g(i) * y * (1.0 - y);
                                 }
                               });
                             },
                             "sigmoid");
    case Activation::softmax_columns: {
      if (xv.rank() != 2) {
        throw DimensionError("softmax_columns: rank-2 input required, got " + shape_string(xv.shape()));
      }
      const std::size_t m = xv.rows(), n = xv.cols();
      for (std::size_t j = 0; j < n; ++j) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) mx = std::max(mx, out(i, j));
        double z = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          out(i, j) = std::exp(out(i, j) - mx);
          z += out(i, j);
        }
        for (std::size_t i = 0; i < m; ++i) out(i, j) /= z;
      }
      Tensor y = out;
      return x.tape().record(std::move(out), {x},
                             [x, y = std::move(y), m, n](Tape& t, const Tensor& g) {
                               with_grad(t, x, [&](std::span<double> gx) {
                                 for (std::size_t j = 0; j < n; ++j) {
                                   double dot = 0.0;
                                   for (std::size_t i = 0; i < m; ++i) dot += y(i, j) * g(i * n + j);
                                   for (std::size_t i = 0; i < m; ++i)
                                     gx[i * n + j] += y(i, j) * (g(i * n + j) - dot);
                                 }
                               });
                             },
                             "softmax_columns");
    }
  }
  throw ConfigError("activation: unknown kind");
}

Var sqrt(Var x) {
  Tensor out = x.value();
  for (double& v : out.values()) {
    if (v < 0.0) throw NumericError("sqrt: negative input " + std::to_string(v));
    v = std::sqrt(v);
  }
  Tensor y = out;
  return x.tape().record(std::move(out), {x},
                         [x, y = std::move(y)](Tape& t, const Tensor& g) {
                           with_grad(t, x, [&](std::span<double> gx) {
                             for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g(i) / (2.0 * y(i));
                           });
                         },
                         "sqrt");
}

Var clamp_min(Var x, double floor) {
  Tensor out = x.value();
  for (double& v : out.values()) v = std::max(v, floor);
  return x.tape().record(std::move(out), {x},
                         [x, floor](Tape& t, const Tensor& g) {
                           with_grad(t, x, [&](std::span<double> gx) {
                             const Tensor& in = t.value(x);
                             for (std::size_t i = 0; i < gx.size(); ++i)
                               if (in(i) > floor) gx[i] += g(i);
                           });
                         },
                         "clamp_min");
}

Var concat_rows(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "concat_rows");
  require_matrix(bv, "concat_rows");
  if (av.rank() != bv.rank() || mat_cols(av) != mat_cols(bv)) {
    throw DimensionError("concat_rows: column counts differ for " + shape_string(av.shape()) +
                         " and " + shape_string(bv.shape()));
  }
  const std::size_t split = av.size();
  Shape shape = av.shape();
  shape[0] += bv.rows();
  std::vector<double> data;
  data.reserve(av.size() + bv.size());
  data.insert(data.end(), av.values().begin(), av.values().end());
  data.insert(data.end(), bv.values().begin(), bv.values().end());
  Tensor out(std::move(shape), std::move(data));
  return a.tape().record(std::move(out), {a, b},
                         [a, b, split](Tape& t, const Tensor& g) {
                           with_grad(t, a, [&](std::span<double> ga) {
                             for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g(i);
                           });
                           with_grad(t, b, [&](std::span<double> gb) {
                             for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g(split + i);
                           });
                         },
                         "concat_rows");
}

Var concat_columns(std::span<const Var> columns) {
  if (columns.empty()) throw DimensionError("concat_columns: no columns");
  const std::size_t m = columns[0].value().rows();
  const std::size_t n = columns.size();
  Tensor out({m, n});
  for (std::size_t j = 0; j < n; ++j) {
    const Tensor& c = columns[j].value();
    if (c.rows() != m || mat_cols(c) != 1 || c.rank() > 2) {
      throw DimensionError("concat_columns: column " + std::to_string(j) + " has shape " +
                           shape_string(c.shape()) + ", expected " + std::to_string(m) + "x1");
    }
    for (std::size_t i = 0; i < m; ++i) out(i, j) = c(i);
  }
  std::vector<Var> inputs(columns.begin(), columns.end());
  Tape& tape = columns[0].tape();
  return tape.record(std::move(out), inputs,
                     [inputs, m, n](Tape& t, const Tensor& g) {
                       for (std::size_t j = 0; j < n; ++j) {
                         with_grad(t, inputs[j], [&](std::span<double> gc) {
                           for (std::size_t i = 0; i < m; ++i) gc[i] += g(i * n + j);
                         });
                       }
                     },
                     "concat_columns");
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  require_matrix(av, "slice_rows");
  if (begin + count > av.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " + shape_string(av.shape()));
  }
  const std::size_t n = mat_cols(av);
  Shape shape = av.shape();
  shape[0] = count;
  std::vector<double> data(av.values().begin() + begin * n, av.values().begin() + (begin + count) * n);
  Tensor out(std::move(shape), std::move(data));
  const std::size_t offset = begin * n;
  return a.tape().record(std::move(out), {a},
                         [a, offset](Tape& t, const Tensor& g) {
                           with_grad(t, a, [&](std::span<double> ga) {
                             for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g(i);
                           });
                         },
                         "slice_rows");
}

Var column(Var a, std::size_t j) {
  const Tensor& av = a.value();
  require_matrix(av, "column");
  const std::size_t m = av.rows(), n = mat_cols(av);
  if (j >= n) throw DimensionError("column: index " + std::to_string(j) + " out of range for " + shape_string(av.shape()));
  Tensor out({m, 1});
  for (std::size_t i = 0; i < m; ++i) out(i) = av.values()[i * n + j];
  return a.tape().record(std::move(out), {a},
                         [a, j, m, n](Tape& t, const Tensor& g) {
                           with_grad(t, a, [&](std::span<double> ga) {
                             for (std::size_t i = 0; i < m; ++i) ga[i * n + j] += g(i);
                           });
                         },
                         "column");
}

Var reverse_columns(Var a) {
  const Tensor& av = a.value();
  if (av.rank() != 2) throw DimensionError("reverse_columns: rank-2 input required");
  const std::size_t m = av.rows(), n = av.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = av(i, n - 1 - j);
  return a.tape().record(std::move(out), {a},
                         [a, m, n](Tape& t, const Tensor& g) {
                           with_grad(t, a, [&](std::span<double> ga) {
                             for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g(i * n + (n - 1 - j));
                           });
                         },
                         "reverse_columns");
}

Var reshape(Var a, Shape shape) {
  if (element_count(shape) != a.value().size()) {
    throw DimensionError("reshape: " + shape_string(a.value().shape()) + " to " + shape_string(shape));
  }
  Tensor out(std::move(shape), a.value().storage());
  return a.tape().record(std::move(out), {a},
                         [a](Tape& t, const Tensor& g) {
                           with_grad(t, a, [&](std::span<double> ga) {
                             for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g(i);
                           });
                         },
                         "reshape");
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return a.tape().record(Tensor({1}, {s}), {a},
                         [a](Tape& t, const Tensor& g) {
                           with_grad(t, a, [&](std::span<double> ga) {
                             for (double& v : ga) v += g(0);
                           });
                         },
                         "sum");
}

namespace {

// Normalizes `rows` contiguous vectors of length `len` in place; returns norms.
std::vector<double> normalize_blocks(Tensor& out, std::size_t rows, std::size_t len, const char* op) {
  std::vector<double> norms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += out(r * len + i) * out(r * len + i);
    const double nrm = std::sqrt(s);
    if (!(nrm > 0.0)) throw NumericError(std::string(op) + ": zero-norm vector at row " + std::to_string(r));
    for (std::size_t i = 0; i < len; ++i) out(r * len + i) /= nrm;
    norms[r] = nrm;
  }
  return norms;
}

Var normalize_impl(Var v, std::size_t rows, std::size_t len, const char* op) {
  Tensor out = v.value();
  std::vector<double> norms = normalize_blocks(out, rows, len, op);
  Tensor y = out;
  return v.tape().record(std::move(out), {v},
                         [v, y = std::move(y), norms = std::move(norms), rows, len](Tape& t, const Tensor& g) {
                           with_grad(t, v, [&](std::span<double> gv) {
                             // d(x/|x|) = (g - y (y.g)) / |x|
                             for (std::size_t r = 0; r < rows; ++r) {
                               double dot = 0.0;
                               for (std::size_t i = 0; i < len; ++i) dot += y(r * len + i) * g(r * len + i);
                               for (std::size_t i = 0; i < len; ++i) {
                                 const std::size_t k = r * len + i;
                                 gv[k] += (g(k) - y(k) * dot) / norms[r];
                               }
                             }
                           });
                         },
                         op);
}

}  // namespace

Var l2_normalize(Var v) {
  if (v.value().rank() != 1) throw DimensionError("l2_normalize: rank-1 input required");
  return normalize_impl(v, 1, v.value().size(), "l2_normalize");
}

Var l2_normalize_rows(Var m) {
  if (m.value().rank() != 2) throw DimensionError("l2_normalize_rows: rank-2 input required");
  return normalize_impl(m, m.value().rows(), m.value().cols(), "l2_normalize_rows");
}

Var angular_margin_logits(Var cosines, std::size_t label, double s, double margin) {
  const Tensor& cv = cosines.value();
  if (cv.rank() != 1) throw DimensionError("angular_margin_logits: rank-1 cosines required");
  if (label >= cv.size()) {
    throw InputError("angular_margin_logits: label " + std::to_string(label) + " out of range for " +
                     std::to_string(cv.size()) + " classes");
  }
  Tensor out = cv;
  for (double& v : out.values()) v *= s;
  const double lo = -1.0 + kCosineClamp, hi = 1.0 - kCosineClamp;
  const double raw = cv(label);
  const double c = std::clamp(raw, lo, hi);
  const bool clamped = raw < lo || raw > hi;
  const double sin_t = std::sqrt(1.0 - c * c);
  const double cm = std::cos(margin), sm = std::sin(margin);
  out(label) = s * (c * cm - sin_t * sm);
  const double dtarget = clamped ? 0.0 : s * (cm + c * sm / sin_t);
  return cosines.tape().record(std::move(out), {cosines},
                               [cosines, label, s, dtarget](Tape& t, const Tensor& g) {
                                 with_grad(t, cosines, [&](std::span<double> gc) {
                                   for (std::size_t j = 0; j < gc.size(); ++j)
                                     gc[j] += (j == label ? dtarget : s) * g(j);
                                 });
                               },
                               "angular_margin_logits");
}

Var softmax_cross_entropy(Var logits, std::size_t label) {
  const Tensor& lv = logits.value();
  if (lv.rank() != 1) throw DimensionError("softmax_cross_entropy: rank-1 logits required");
  if (label >= lv.size()) throw InputError("softmax_cross_entropy: label out of range");
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : lv.values()) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : lv.values()) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  Tensor probs = lv;
  for (double& v : probs.values()) v = std::exp(v - lse);
  const double loss = lse - lv(label);
  return logits.tape().record(Tensor({1}, {loss}), {logits},
                              [logits, label, probs = std::move(probs)](Tape& t, const Tensor& g) {
                                with_grad(t, logits, [&](std::span<double> gl) {
                                  for (std::size_t j = 0; j < gl.size(); ++j)
                                    gl[j] += g(0) * (probs(j) - (j == label ? 1.0 : 0.0));
                                });
                              },
                              "softmax_cross_entropy");
}

}  // namespace rjca
