#include "zipfmem/nn/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace zipfmem::nn {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<MatR<T>>;
template <typename T>
using CMapM = Eigen::Map<const MatR<T>>;
template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

struct RowsCols {
  std::size_t rows;
  std::size_t cols;
};

RowsCols as_rows(const Shape& s, const char* op) {
  if (s.size() == 1) return {1, s[0]};
  if (s.size() == 2) return {s[0], s[1]};
  throw std::invalid_argument(std::string(op) + ": expected rank 1 or 2, got " + shape_str(s));
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

template <typename T>
void require_same(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) shape_error(op, a.shape(), b.shape());
}

// f maps x -> y; df maps (x, y) -> dy/dx.
template <typename T, typename F, typename DF>
Tensor<T> unary(const char* op, const Tensor<T>& a, F f, DF df) {
  const auto& x = a.node()->value;
  std::vector<T> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return detail::make_result<T>(op, a.shape(), std::move(y), {a.node()}, [df](Node<T>& out) {
    auto& p = *out.parents[0];
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * df(p.value[i], out.value[i]);
  });
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same("add", a, b);
  const auto& x = a.node()->value;
  const auto& y = b.node()->value;
  std::vector<T> z(x.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + y[i];
  return detail::make_result<T>("add", a.shape(), std::move(z), {a.node(), b.node()}, [](Node<T>& out) {
    for (auto& p : out.parents) {
      if (!p->requires_grad) continue;
      auto& g = p->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same("sub", a, b);
  const auto& x = a.node()->value;
  const auto& y = b.node()->value;
  std::vector<T> z(x.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] - y[i];
  return detail::make_result<T>("sub", a.shape(), std::move(z), {a.node(), b.node()}, [](Node<T>& out) {
    if (out.parents[0]->requires_grad) {
      auto& g = out.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
    }
    if (out.parents[1]->requires_grad) {
      auto& g = out.parents[1]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= out.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same("mul", a, b);
  const auto& x = a.node()->value;
  const auto& y = b.node()->value;
  std::vector<T> z(x.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * y[i];
  return detail::make_result<T>("mul", a.shape(), std::move(z), {a.node(), b.node()}, [](Node<T>& out) {
    auto& pa = *out.parents[0];
    auto& pb = *out.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * pa.value[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  return unary<T>(
      "scale", a, [factor](T x) { return x * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T offset) {
  return unary<T>(
      "add_scalar", a, [offset](T x) { return x + offset; }, [](T, T) { return T{1}; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  return unary<T>(
      "relu", a, [](T x) { return x > T{0} ? x : T{0}; }, [](T x, T) { return x > T{0} ? T{1} : T{0}; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return unary<T>(
      "sigmoid", a, [](T x) { return T{1} / (T{1} + std::exp(-x)); }, [](T, T y) { return y * (T{1} - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  return unary<T>(
      "tanh", a, [](T x) { return std::tanh(x); }, [](T, T y) { return T{1} - y * y; });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  return unary<T>(
      "exp", a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
  return unary<T>(
      "log", a, [](T x) { return std::log(x); }, [](T x, T) { return T{1} / x; });
}

template <typename T>
Tensor<T> reciprocal(const Tensor<T>& a) {
  return unary<T>(
      "reciprocal", a, [](T x) { return T{1} / x; }, [](T, T y) { return -y * y; });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T s{0};
  for (T v : a.node()->value) s += v;
  return detail::make_result<T>("sum", Shape{1}, {s}, {a.node()}, [](Node<T>& out) {
    auto& g = out.parents[0]->ensure_grad();
    for (auto& v : g) v += out.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  return scale(sum(a), T{1} / static_cast<T>(a.numel()));
}

template <typename T>
Tensor<T> dot(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.numel() != b.numel()) shape_error("dot", a.shape(), b.shape());
  const auto& x = a.node()->value;
  const auto& y = b.node()->value;
  T s{0};
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return detail::make_result<T>("dot", Shape{1}, {s}, {a.node(), b.node()}, [](Node<T>& out) {
    auto& pa = *out.parents[0];
    auto& pb = *out.parents[1];
    const T g = out.grad[0];
    if (pa.requires_grad) {
      auto& ga = pa.ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& gb = pb.ensure_grad();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g * pa.value[i];
    }
  });
}

template <typename T>
Tensor<T> sum_squares(const Tensor<T>& a) {
  T s{0};
  for (T v : a.node()->value) s += v * v;
  return detail::make_result<T>("sum_squares", Shape{1}, {s}, {a.node()}, [](Node<T>& out) {
    auto& p = *out.parents[0];
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += T{2} * out.grad[0] * p.value[i];
  });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_error("matmul", a.shape(), b.shape());
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> z(m * n);
  MapM<T>(z.data(), m, n).noalias() = CMapM<T>(a.data().data(), m, k) * CMapM<T>(b.data().data(), k, n);
  return detail::make_result<T>("matmul", Shape{m, n}, std::move(z), {a.node(), b.node()}, [m, k, n](Node<T>& out) {
    auto& pa = *out.parents[0];
    auto& pb = *out.parents[1];
    CMapM<T> dz(out.grad.data(), m, n);
    if (pa.requires_grad) {
      MapM<T>(pa.ensure_grad().data(), m, k).noalias() += dz * CMapM<T>(pb.value.data(), k, n).transpose();
    }
    if (pb.requires_grad) {
      MapM<T>(pb.ensure_grad().data(), k, n).noalias() += CMapM<T>(pa.value.data(), m, k).transpose() * dz;
    }
  });
}

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) shape_error("matmul_nt", a.shape(), b.shape());
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  std::vector<T> z(m * n);
  MapM<T>(z.data(), m, n).noalias() =
      CMapM<T>(a.data().data(), m, k) * CMapM<T>(b.data().data(), n, k).transpose();
  return detail::make_result<T>("matmul_nt", Shape{m, n}, std::move(z), {a.node(), b.node()},
                                [m, k, n](Node<T>& out) {
                                  auto& pa = *out.parents[0];
                                  auto& pb = *out.parents[1];
                                  CMapM<T> dz(out.grad.data(), m, n);
                                  if (pa.requires_grad) {
                                    MapM<T>(pa.ensure_grad().data(), m, k).noalias() +=
                                        dz * CMapM<T>(pb.value.data(), n, k);
                                  }
                                  if (pb.requires_grad) {
                                    MapM<T>(pb.ensure_grad().data(), n, k).noalias() +=
                                        dz.transpose() * CMapM<T>(pa.value.data(), m, k);
                                  }
                                });
}

template <typename T>
Tensor<T> affine(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (weight.rank() != 2) throw std::invalid_argument("affine: weight must be rank 2, got " + shape_str(weight.shape()));
  const auto [rows, n_in] = as_rows(x.shape(), "affine");
  const std::size_t n_out = weight.dim(0);
  if (weight.dim(1) != n_in) shape_error("affine", x.shape(), weight.shape());
  if (bias.rank() != 1 || bias.dim(0) != n_out) shape_error("affine", weight.shape(), bias.shape());
  std::vector<T> y(rows * n_out);
  MapM<T> ym(y.data(), rows, n_out);
  ym.noalias() = CMapM<T>(x.data().data(), rows, n_in) * CMapM<T>(weight.data().data(), n_out, n_in).transpose();
  ym.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.data().data(), n_out);
  Shape out_shape = x.rank() == 1 ? Shape{n_out} : Shape{rows, n_out};
  return detail::make_result<T>(
      "affine", std::move(out_shape), std::move(y), {x.node(), weight.node(), bias.node()},
      [rows = rows, n_in = n_in, n_out](Node<T>& out) {
        auto& px = *out.parents[0];
        auto& pw = *out.parents[1];
        auto& pb = *out.parents[2];
        CMapM<T> dy(out.grad.data(), rows, n_out);
        if (px.requires_grad) {
          MapM<T>(px.ensure_grad().data(), rows, n_in).noalias() += dy * CMapM<T>(pw.value.data(), n_out, n_in);
        }
        if (pw.requires_grad) {
          MapM<T>(pw.ensure_grad().data(), n_out, n_in).noalias() +=
              dy.transpose() * CMapM<T>(px.value.data(), rows, n_in);
        }
        if (pb.requires_grad) {
          // plain loop: Eigen's vectorized colwise sum orders terms by pointer alignment
          auto& gb = pb.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r) {
            const T* g = out.grad.data() + r * n_out;
            for (std::size_t o = 0; o < n_out; ++o) gb[o] += g[o];
          }
        }
      });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernels, const Tensor<T>& bias, std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("conv2d: stride must be positive");
  if (kernels.rank() != 4) throw std::invalid_argument("conv2d: kernels must be rank 4, got " + shape_str(kernels.shape()));
  const bool batched = x.rank() == 4;
  if (!batched && x.rank() != 3) throw std::invalid_argument("conv2d: input must be rank 3 or 4, got " + shape_str(x.shape()));
  const std::size_t n = batched ? x.dim(0) : 1;
  const std::size_t c = x.dim(batched ? 1 : 0), h = x.dim(batched ? 2 : 1), w = x.dim(batched ? 3 : 2);
  const std::size_t f = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  if (kernels.dim(1) != c) shape_error("conv2d", x.shape(), kernels.shape());
  if (kh > h || kw > w) {
    throw std::invalid_argument("conv2d: kernel " + shape_str(kernels.shape()) + " larger than input " +
                                shape_str(x.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != f)) shape_error("conv2d", kernels.shape(), bias.shape());

  const std::size_t ho = (h - kh) / stride + 1, wo = (w - kw) / stride + 1;
  const std::size_t hw = ho * wo, ckk = c * kh * kw, cols_n = n * hw;

  // im2col: row r = (ch, i, j), column = (image, oy, ox)
  auto cols = std::make_shared<std::vector<T>>(ckk * cols_n);
  const T* xv = x.data().data();
  for (std::size_t img = 0; img < n; ++img) {
    const T* xi = xv + img * c * h * w;
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t i = 0; i < kh; ++i) {
        for (std::size_t j = 0; j < kw; ++j) {
          T* dst = cols->data() + ((ch * kh + i) * kw + j) * cols_n + img * hw;
          for (std::size_t oy = 0; oy < ho; ++oy) {
            const T* src = xi + (ch * h + oy * stride + i) * w + j;
            for (std::size_t ox = 0; ox < wo; ++ox) dst[oy * wo + ox] = src[ox * stride];
          }
        }
      }
    }
  }
  MatR<T> prod = CMapM<T>(kernels.data().data(), f, ckk) * CMapM<T>(cols->data(), ckk, cols_n);
  std::vector<T> y(n * f * hw);
  for (std::size_t img = 0; img < n; ++img) {
    for (std::size_t ff = 0; ff < f; ++ff) {
      const T b = has_bias ? bias.data()[ff] : T{0};
      const T* src = prod.data() + ff * cols_n + img * hw;
      T* dst = y.data() + (img * f + ff) * hw;
      for (std::size_t q = 0; q < hw; ++q) dst[q] = src[q] + b;
    }
  }
  Shape out_shape = batched ? Shape{n, f, ho, wo} : Shape{f, ho, wo};
  std::vector<NodePtr<T>> parents{x.node(), kernels.node()};
  if (has_bias) parents.push_back(bias.node());
  return detail::make_result<T>(
      "conv2d", std::move(out_shape), std::move(y), std::move(parents),
      [cols, n, c, h, w, f, kh, kw, ho, wo, hw, ckk, cols_n, stride, has_bias](Node<T>& out) {
        MatR<T> dy(f, cols_n);
        for (std::size_t img = 0; img < n; ++img) {
          for (std::size_t ff = 0; ff < f; ++ff) {
            const T* src = out.grad.data() + (img * f + ff) * hw;
            std::copy(src, src + hw, dy.data() + ff * cols_n + img * hw);
          }
        }
        auto& px = *out.parents[0];
        auto& pk = *out.parents[1];
        if (pk.requires_grad) {
          MapM<T>(pk.ensure_grad().data(), f, ckk).noalias() += dy * CMapM<T>(cols->data(), ckk, cols_n).transpose();
        }
        if (has_bias && out.parents[2]->requires_grad) {
          auto& gb = out.parents[2]->ensure_grad();
          for (std::size_t ff = 0; ff < f; ++ff) {
            const T* g = dy.data() + ff * cols_n;
            T acc{0};
            for (std::size_t q = 0; q < cols_n; ++q) acc += g[q];
            gb[ff] += acc;
          }
        }
        if (px.requires_grad) {
          MatR<T> dcols = CMapM<T>(pk.value.data(), f, ckk).transpose() * dy;
          auto& gx = px.ensure_grad();
          for (std::size_t img = 0; img < n; ++img) {
            T* gi = gx.data() + img * c * h * w;
            for (std::size_t ch = 0; ch < c; ++ch) {
              for (std::size_t i = 0; i < kh; ++i) {
                for (std::size_t j = 0; j < kw; ++j) {
                  const T* src = dcols.data() + ((ch * kh + i) * kw + j) * cols_n + img * hw;
                  for (std::size_t oy = 0; oy < ho; ++oy) {
                    T* dst = gi + (ch * h + oy * stride + i) * w + j;
                    for (std::size_t ox = 0; ox < wo; ++ox) dst[ox * stride] += src[oy * wo + ox];
                  }
                }
              }
            }
          }
        }
      });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (numel(shape) != a.numel()) shape_error("reshape", a.shape(), shape);
  return detail::make_result<T>("reshape", std::move(shape), a.node()->value, {a.node()}, [](Node<T>& out) {
    auto& g = out.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
  });
}

template <typename T>
Tensor<T> concat_cols(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const bool vec = parts[0].rank() == 1;
  const std::size_t rows = as_rows(parts[0].shape(), "concat_cols").rows;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const auto rc = as_rows(p.shape(), "concat_cols");
    if (rc.rows != rows || (p.rank() == 1) != vec) shape_error("concat_cols", parts[0].shape(), p.shape());
    widths.push_back(rc.cols);
    total += rc.cols;
  }
  std::vector<T> y(rows * total);
  std::vector<NodePtr<T>> parents;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const T* src = parts[k].data().data();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(src + r * widths[k], src + (r + 1) * widths[k], y.data() + r * total + offset);
    }
    offset += widths[k];
    parents.push_back(parts[k].node());
  }
  Shape out_shape = vec ? Shape{total} : Shape{rows, total};
  return detail::make_result<T>("concat_cols", std::move(out_shape), std::move(y), std::move(parents),
                                [widths, rows, total](Node<T>& out) {
                                  std::size_t offset = 0;
                                  for (std::size_t k = 0; k < out.parents.size(); ++k) {
                                    auto& p = *out.parents[k];
                                    if (p.requires_grad) {
                                      auto& g = p.ensure_grad();
                                      for (std::size_t r = 0; r < rows; ++r) {
                                        for (std::size_t q = 0; q < widths[k]; ++q) {
                                          g[r * widths[k] + q] += out.grad[r * total + offset + q];
                                        }
                                      }
                                    }
                                    offset += widths[k];
                                  }
                                });
}

template <typename T>
Tensor<T> concat_rows(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  if (parts[0].rank() != 2) throw std::invalid_argument("concat_rows: expected rank 2, got " + shape_str(parts[0].shape()));
  const std::size_t cols = parts[0].dim(1);
  std::size_t rows = 0;
  std::vector<T> y;
  std::vector<NodePtr<T>> parents;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.dim(1) != cols) shape_error("concat_rows", parts[0].shape(), p.shape());
    rows += p.dim(0);
    y.insert(y.end(), p.data().begin(), p.data().end());
    parents.push_back(p.node());
  }
  return detail::make_result<T>("concat_rows", Shape{rows, cols}, std::move(y), std::move(parents),
                                [](Node<T>& out) {
                                  std::size_t offset = 0;
                                  for (auto& p : out.parents) {
                                    if (p->requires_grad) {
                                      auto& g = p->ensure_grad();
                                      for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[offset + i];
                                    }
                                    offset += p->value.size();
                                  }
                                });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& a, std::size_t start, std::size_t count) {
  const auto [rows, cols] = as_rows(a.shape(), "slice_cols");
  if (count == 0 || start + count > cols) {
    throw std::invalid_argument("slice_cols: range [" + std::to_string(start) + ", " + std::to_string(start + count) +
                                ") out of " + shape_str(a.shape()));
  }
  std::vector<T> y(rows * count);
  const T* src = a.data().data();
  for (std::size_t r = 0; r < rows; ++r) std::copy(src + r * cols + start, src + r * cols + start + count, y.data() + r * count);
  Shape out_shape = a.rank() == 1 ? Shape{count} : Shape{rows, count};
  return detail::make_result<T>("slice_cols", std::move(out_shape), std::move(y), {a.node()},
                                [rows = rows, cols = cols, start, count](Node<T>& out) {
                                  auto& g = out.parents[0]->ensure_grad();
                                  for (std::size_t r = 0; r < rows; ++r) {
                                    for (std::size_t q = 0; q < count; ++q) g[r * cols + start + q] += out.grad[r * count + q];
                                  }
                                });
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& a, std::size_t start, std::size_t count) {
  if (a.rank() != 2) throw std::invalid_argument("slice_rows: expected rank 2, got " + shape_str(a.shape()));
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  if (count == 0 || start + count > rows) {
    throw std::invalid_argument("slice_rows: range out of " + shape_str(a.shape()));
  }
  std::vector<T> y(a.data().begin() + start * cols, a.data().begin() + (start + count) * cols);
  return detail::make_result<T>("slice_rows", Shape{count, cols}, std::move(y), {a.node()},
                                [start, cols](Node<T>& out) {
                                  auto& g = out.parents[0]->ensure_grad();
                                  for (std::size_t i = 0; i < out.grad.size(); ++i) g[start * cols + i] += out.grad[i];
                                });
}

template <typename T>
Tensor<T> repeat_rows(const Tensor<T>& a, std::size_t times) {
  const auto [rows, cols] = as_rows(a.shape(), "repeat_rows");
  if (times == 0) throw std::invalid_argument("repeat_rows: times must be positive");
  std::vector<T> y(rows * times * cols);
  const T* src = a.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t t = 0; t < times; ++t) std::copy(src + r * cols, src + (r + 1) * cols, y.data() + (r * times + t) * cols);
  }
  return detail::make_result<T>("repeat_rows", Shape{rows * times, cols}, std::move(y), {a.node()},
                                [rows = rows, cols = cols, times](Node<T>& out) {
                                  auto& g = out.parents[0]->ensure_grad();
                                  for (std::size_t r = 0; r < rows; ++r) {
                                    for (std::size_t t = 0; t < times; ++t) {
                                      const T* src = out.grad.data() + (r * times + t) * cols;
                                      for (std::size_t q = 0; q < cols; ++q) g[r * cols + q] += src[q];
                                    }
                                  }
                                });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& a) {
  const auto [rows, cols] = as_rows(a.shape(), "softmax");
  std::vector<T> y(a.numel());
  const T* x = a.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x + r * cols;
    T* yr = y.data() + r * cols;
    const T mx = *std::max_element(xr, xr + cols);
    T z{0};
    for (std::size_t q = 0; q < cols; ++q) z += (yr[q] = std::exp(xr[q] - mx));
    for (std::size_t q = 0; q < cols; ++q) yr[q] /= z;
  }
  return detail::make_result<T>("softmax", a.shape(), std::move(y), {a.node()},
                                [rows = rows, cols = cols](Node<T>& out) {
                                  auto& g = out.parents[0]->ensure_grad();
                                  for (std::size_t r = 0; r < rows; ++r) {
                                    const T* s = out.value.data() + r * cols;
                                    const T* d = out.grad.data() + r * cols;
                                    T inner{0};
                                    for (std::size_t q = 0; q < cols; ++q) inner += s[q] * d[q];
                                    for (std::size_t q = 0; q < cols; ++q) g[r * cols + q] += s[q] * (d[q] - inner);
                                  }
                                });
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& a) {
  const auto [rows, cols] = as_rows(a.shape(), "log_softmax");
  std::vector<T> y(a.numel());
  const T* x = a.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x + r * cols;
    T* yr = y.data() + r * cols;
    const T mx = *std::max_element(xr, xr + cols);
    T z{0};
    for (std::size_t q = 0; q < cols; ++q) z += std::exp(xr[q] - mx);
    const T lse = mx + std::log(z);
    for (std::size_t q = 0; q < cols; ++q) yr[q] = xr[q] - lse;
  }
  return detail::make_result<T>("log_softmax", a.shape(), std::move(y), {a.node()},
                                [rows = rows, cols = cols](Node<T>& out) {
                                  auto& g = out.parents[0]->ensure_grad();
                                  for (std::size_t r = 0; r < rows; ++r) {
                                    const T* ly = out.value.data() + r * cols;
                                    const T* d = out.grad.data() + r * cols;
                                    T total{0};
                                    for (std::size_t q = 0; q < cols; ++q) total += d[q];
                                    for (std::size_t q = 0; q < cols; ++q) {
                                      g[r * cols + q] += d[q] - std::exp(ly[q]) * total;
                                    }
                                  }
                                });
}

template <typename T>
Tensor<T> pick(const Tensor<T>& a, std::span<const int> index) {
  const auto [rows, cols] = as_rows(a.shape(), "pick");
  if (index.size() != rows) throw std::invalid_argument("pick: index count does not match rows of " + shape_str(a.shape()));
  std::vector<std::size_t> flat(rows);
  std::vector<T> y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    if (index[r] < 0 || static_cast<std::size_t>(index[r]) >= cols) {
      throw std::invalid_argument("pick: index " + std::to_string(index[r]) + " out of range");
    }
    flat[r] = r * cols + static_cast<std::size_t>(index[r]);
    y[r] = a.data()[flat[r]];
  }
  return detail::make_result<T>("pick", Shape{rows}, std::move(y), {a.node()}, [flat](Node<T>& out) {
    auto& g = out.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < flat.size(); ++r) g[flat[r]] += out.grad[r];
  });
}

template <typename T>
Tensor<T> l2_normalize_rows(const Tensor<T>& a, T eps) {
  const auto [rows, cols] = as_rows(a.shape(), "l2_normalize_rows");
  std::vector<T> y(a.numel());
  std::vector<T> norms(rows);
  const T* x = a.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    T s{0};
    for (std::size_t q = 0; q < cols; ++q) s += x[r * cols + q] * x[r * cols + q];
    norms[r] = std::sqrt(s + eps);
    for (std::size_t q = 0; q < cols; ++q) y[r * cols + q] = x[r * cols + q] / norms[r];
  }
  return detail::make_result<T>("l2_normalize_rows", a.shape(), std::move(y), {a.node()},
                                [rows = rows, cols = cols, norms](Node<T>& out) {
                                  auto& g = out.parents[0]->ensure_grad();
                                  for (std::size_t r = 0; r < rows; ++r) {
                                    const T* yr = out.value.data() + r * cols;
                                    const T* d = out.grad.data() + r * cols;
                                    T inner{0};
                                    for (std::size_t q = 0; q < cols; ++q) inner += yr[q] * d[q];
                                    for (std::size_t q = 0; q < cols; ++q) {
                                      g[r * cols + q] += (d[q] - yr[q] * inner) / norms[r];
                                    }
                                  }
                                });
}

template <typename T>
Tensor<T> row_sq_norm(const Tensor<T>& a) {
  const auto [rows, cols] = as_rows(a.shape(), "row_sq_norm");
  std::vector<T> y(rows, T{0});
  const T* x = a.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t q = 0; q < cols; ++q) y[r] += x[r * cols + q] * x[r * cols + q];
  }
  return detail::make_result<T>("row_sq_norm", Shape{rows}, std::move(y), {a.node()},
                                [rows = rows, cols = cols](Node<T>& out) {
                                  auto& p = *out.parents[0];
                                  auto& g = p.ensure_grad();
                                  for (std::size_t r = 0; r < rows; ++r) {
                                    for (std::size_t q = 0; q < cols; ++q) {
                                      g[r * cols + q] += T{2} * out.grad[r] * p.value[r * cols + q];
                                    }
                                  }
                                });
}

template <typename T>
Tensor<T> group_weighted_mean(const Tensor<T>& weights, const Tensor<T>& values, std::size_t group) {
  if (group == 0) throw std::invalid_argument("group_weighted_mean: group must be positive");
  if (weights.rank() != 1 || values.rank() != 2 || values.dim(0) != weights.dim(0) || weights.dim(0) % group != 0) {
    shape_error("group_weighted_mean", weights.shape(), values.shape());
  }
  const std::size_t batch = weights.dim(0) / group, d = values.dim(1);
  const T* w = weights.data().data();
  const T* v = values.data().data();
  std::vector<T> totals(batch, T{0});
  std::vector<T> y(batch * d, T{0});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < group; ++j) {
      const std::size_t row = b * group + j;
      totals[b] += w[row];
      for (std::size_t q = 0; q < d; ++q) y[b * d + q] += w[row] * v[row * d + q];
    }
    for (std::size_t q = 0; q < d; ++q) y[b * d + q] /= totals[b];
  }
  return detail::make_result<T>(
      "group_weighted_mean", Shape{batch, d}, std::move(y), {weights.node(), values.node()},
      [batch, group, d, totals](Node<T>& out) {
        auto& pw = *out.parents[0];
        auto& pv = *out.parents[1];
        for (std::size_t b = 0; b < batch; ++b) {
          const T* dy = out.grad.data() + b * d;
          const T* m = out.value.data() + b * d;
          for (std::size_t j = 0; j < group; ++j) {
            const std::size_t row = b * group + j;
            if (pw.requires_grad) {
              T s{0};
              for (std::size_t q = 0; q < d; ++q) s += dy[q] * (pv.value[row * d + q] - m[q]);
              pw.ensure_grad()[row] += s / totals[b];
            }
            if (pv.requires_grad) {
              auto& gv = pv.ensure_grad();
              const T c = pw.value[row] / totals[b];
              for (std::size_t q = 0; q < d; ++q) gv[row * d + q] += c * dy[q];
            }
          }
        }
      });
}

template <typename T>
Tensor<T> nt_xent_losses(const Tensor<T>& anchors, const Tensor<T>& positives, T temperature) {
  if (anchors.rank() != 2 || anchors.shape() != positives.shape()) {
    shape_error("nt_xent_losses", anchors.shape(), positives.shape());
  }
  if (!(temperature > T{0})) throw std::invalid_argument("nt_xent_losses: temperature must be positive");
  const std::size_t n = anchors.dim(0), d = anchors.dim(1);
  if (n < 1) throw std::invalid_argument("nt_xent_losses: empty batch");
  MatR<T> z(2 * n, d);
  z.topRows(n) = CMapM<T>(anchors.data().data(), n, d);
  z.bottomRows(n) = CMapM<T>(positives.data().data(), n, d);
  // probabilities over the 2N-1 candidates per anchor; the self column is zero
  auto prob = std::make_shared<MatR<T>>(MatR<T>(CMapM<T>(anchors.data().data(), n, d) * z.transpose()) / temperature);
  std::vector<T> loss(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = prob->row(i);
    row(i) = -std::numeric_limits<T>::infinity();
    const T mx = row.maxCoeff();
    const T positive_logit = row(n + i);
    T total{0};
    for (std::size_t j = 0; j < 2 * n; ++j) total += (row(j) = std::exp(row(j) - mx));
    loss[i] = mx + std::log(total) - positive_logit;
    row /= total;
  }
  return detail::make_result<T>(
      "nt_xent_losses", Shape{n}, std::move(loss), {anchors.node(), positives.node()},
      [prob, n, d, temperature](Node<T>& out) {
        auto& pa = *out.parents[0];
        auto& pp = *out.parents[1];
        MatR<T> g = *prob;
        for (std::size_t i = 0; i < n; ++i) {
          g(i, n + i) -= T{1};
          g.row(i) *= out.grad[i] / temperature;
        }
        MatR<T> z(2 * n, d);
        z.topRows(n) = CMapM<T>(pa.value.data(), n, d);
        z.bottomRows(n) = CMapM<T>(pp.value.data(), n, d);
        MatR<T> dz = g.transpose() * z.topRows(n);  // [2n x d]
        if (pa.requires_grad) {
          MapM<T> ga(pa.ensure_grad().data(), n, d);
          ga.noalias() += g * z;
          ga += dz.topRows(n);
        }
        if (pp.requires_grad) {
          MapM<T>(pp.ensure_grad().data(), n, d) += dz.bottomRows(n);
        }
      });
}

#define ZIPFMEM_INSTANTIATE_OPS(T)                                                                  \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> scale(const Tensor<T>&, T);                                                    \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                               \
  template Tensor<T> relu(const Tensor<T>&);                                                        \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                     \
  template Tensor<T> tanh(const Tensor<T>&);                                                        \
  template Tensor<T> exp(const Tensor<T>&);                                                         \
  template Tensor<T> log(const Tensor<T>&);                                                         \
  template Tensor<T> reciprocal(const Tensor<T>&);                                                  \
  template Tensor<T> sum(const Tensor<T>&);                                                         \
  template Tensor<T> mean(const Tensor<T>&);                                                        \
  template Tensor<T> dot(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> sum_squares(const Tensor<T>&);                                                 \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> affine(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t);     \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                              \
  template Tensor<T> concat_cols(std::span<const Tensor<T>>);                                       \
  template Tensor<T> concat_rows(std::span<const Tensor<T>>);                                       \
  template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);                        \
  template Tensor<T> slice_rows(const Tensor<T>&, std::size_t, std::size_t);                        \
  template Tensor<T> repeat_rows(const Tensor<T>&, std::size_t);                                    \
  template Tensor<T> softmax(const Tensor<T>&);                                                     \
  template Tensor<T> log_softmax(const Tensor<T>&);                                                 \
  template Tensor<T> pick(const Tensor<T>&, std::span<const int>);                                  \
  template Tensor<T> l2_normalize_rows(const Tensor<T>&, T);                                        \
  template Tensor<T> row_sq_norm(const Tensor<T>&);                                                 \
  template Tensor<T> group_weighted_mean(const Tensor<T>&, const Tensor<T>&, std::size_t);          \
  template Tensor<T> nt_xent_losses(const Tensor<T>&, const Tensor<T>&, T);

ZIPFMEM_INSTANTIATE_OPS(float)
ZIPFMEM_INSTANTIATE_OPS(double)

}  // namespace zipfmem::nn
