#include "citgan/core/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "citgan/core/errors.hpp"

namespace citgan::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

bool wants(const detail::Node& self, std::size_t i) { return self.parents[i]->requires_grad; }
Tensor& pgrad(detail::Node& self, std::size_t i) { return self.parents[i]->grad_buffer(); }
const Tensor& pvalue(const detail::Node& self, std::size_t i) { return self.parents[i]->value; }

void require_same_shape(const Var& a, const Var& b, const char* op) {
  CITGAN_REQUIRE(a.value().same_shape(b.value()), std::string(op) + ": shape mismatch " +
                                                      a.value().shape_string() + " vs " + b.value().shape_string());
}

void require_rank(const Var& a, int rank, const char* op) {
  CITGAN_REQUIRE(a.value().rank() == rank, std::string(op) + ": expected rank " + std::to_string(rank) +
                                               " tensor, got " + a.value().shape_string());
}

template <typename F, typename D>
Var unary(const Var& a, F f, D dfdx) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return Var::from_op(std::move(y), {a}, [dfdx](detail::Node& self) {
    const Tensor& xv = pvalue(self, 0);
    Tensor& gx = pgrad(self, 0);
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += self.grad[i] * dfdx(xv[i], self.value[i]);
  });
}

// Column matrix for one sample: rows index (c, ky, kx), columns index output pixels.
void im2col(const double* x, int channels, int height, int width, int kernel, int stride, int padding, int out_h,
            int out_w, double* cols) {
  const int out_hw = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    const double* plane = x + static_cast<std::size_t>(c) * height * width;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        double* row = cols + (static_cast<std::size_t>(c) * kernel * kernel + ky * kernel + kx) * out_hw;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - padding + ky;
          double* dst = row + oy * out_w;
          if (iy < 0 || iy >= height) {
            std::fill(dst, dst + out_w, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(iy) * width;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - padding + kx;
            dst[ox] = (ix >= 0 && ix < width) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, int channels, int height, int width, int kernel, int stride, int padding,
                int out_h, int out_w, double* x) {
  const int out_hw = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    double* plane = x + static_cast<std::size_t>(c) * height * width;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const double* row = cols + (static_cast<std::size_t>(c) * kernel * kernel + ky * kernel + kx) * out_hw;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - padding + ky;
          if (iy < 0 || iy >= height) continue;
          const double* src = row + oy * out_w;
          double* dst = plane + static_cast<std::size_t>(iy) * width;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - padding + kx;
            if (ix >= 0 && ix < width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return Var::from_op(std::move(y), {a, b}, [](detail::Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (!wants(self, p)) continue;
      Tensor& g = pgrad(self, p);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  return Var::from_op(std::move(y), {a, b}, [](detail::Node& self) {
    if (wants(self, 0)) {
      Tensor& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants(self, 1)) {
      Tensor& g = pgrad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  return Var::from_op(std::move(y), {a, b}, [](detail::Node& self) {
    const Tensor& av = pvalue(self, 0);
    const Tensor& bv = pvalue(self, 1);
    if (wants(self, 0)) {
      Tensor& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (wants(self, 1)) {
      Tensor& g = pgrad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

Var scale(const Var& a, double factor) {
  return unary(
      a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Var add_scalar(const Var& a, double value) {
  return unary(
      a, [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Var reshape(const Var& a, std::vector<int> shape) {
  Tensor y = a.value().reshaped(std::move(shape));
  return Var::from_op(std::move(y), {a}, [](detail::Node& self) {
    Tensor& g = pgrad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Var abs(const Var& a) {
  return unary(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var square(const Var& a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var tanh(const Var& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var leaky_relu(const Var& a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var softplus(const Var& a) {
  return unary(
      a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return Var::from_op(Tensor::scalar(s), {a}, [](detail::Node& self) {
    Tensor& g = pgrad(self, 0);
    const double go = self.grad[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += go;
  });
}

Var mean(const Var& a) {
  const std::size_t n = a.value().size();
  CITGAN_REQUIRE(n > 0, "mean of an empty tensor");
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return Var::from_op(Tensor::scalar(s / static_cast<double>(n)), {a}, [n](detail::Node& self) {
    Tensor& g = pgrad(self, 0);
    const double go = self.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += go;
  });
}

Var log_softmax(const Var& logits) {
  require_rank(logits, 2, "log_softmax");
  const Tensor& x = logits.value();
  const int rows = x.dim(0), cols = x.dim(1);
  Tensor y(x.shape());
  for (int r = 0; r < rows; ++r) {
    const double* xr = x.data() + static_cast<std::size_t>(r) * cols;
    double* yr = y.data() + static_cast<std::size_t>(r) * cols;
    const double m = *std::max_element(xr, xr + cols);
    double s = 0.0;
    for (int c = 0; c < cols; ++c) s += std::exp(xr[c] - m);
    const double lse = m + std::log(s);
    for (int c = 0; c < cols; ++c) yr[c] = xr[c] - lse;
  }
  return Var::from_op(std::move(y), {logits}, [rows, cols](detail::Node& self) {
    Tensor& gx = pgrad(self, 0);
    for (int r = 0; r < rows; ++r) {
      const std::size_t off = static_cast<std::size_t>(r) * cols;
      double gs = 0.0;
      for (int c = 0; c < cols; ++c) gs += self.grad[off + c];
      for (int c = 0; c < cols; ++c) gx[off + c] += self.grad[off + c] - std::exp(self.value[off + c]) * gs;
    }
  });
}

Var softmax(const Var& logits) {
  require_rank(logits, 2, "softmax");
  const Tensor& x = logits.value();
  const int rows = x.dim(0), cols = x.dim(1);
  Tensor y(x.shape());
  for (int r = 0; r < rows; ++r) {
    const double* xr = x.data() + static_cast<std::size_t>(r) * cols;
    double* yr = y.data() + static_cast<std::size_t>(r) * cols;
    const double m = *std::max_element(xr, xr + cols);
    double s = 0.0;
    for (int c = 0; c < cols; ++c) s += (yr[c] = std::exp(xr[c] - m));
    for (int c = 0; c < cols; ++c) yr[c] /= s;
  }
  return Var::from_op(std::move(y), {logits}, [rows, cols](detail::Node& self) {
    Tensor& gx = pgrad(self, 0);
    for (int r = 0; r < rows; ++r) {
      const std::size_t off = static_cast<std::size_t>(r) * cols;
      double dot = 0.0;
      for (int c = 0; c < cols; ++c) dot += self.grad[off + c] * self.value[off + c];
      for (int c = 0; c < cols; ++c) gx[off + c] += self.value[off + c] * (self.grad[off + c] - dot);
    }
  });
}

Var pick(const Var& x, const std::vector<int>& index) {
  require_rank(x, 2, "pick");
  const int rows = x.value().dim(0), cols = x.value().dim(1);
  CITGAN_REQUIRE(static_cast<int>(index.size()) == rows, "pick: index count does not match batch size");
  Tensor y({rows});
  for (int r = 0; r < rows; ++r) {
    CITGAN_REQUIRE(index[r] >= 0 && index[r] < cols,
                   "pick: index " + std::to_string(index[r]) + " out of range for " + std::to_string(cols) + " columns");
    y[r] = x.value()[static_cast<std::size_t>(r) * cols + index[r]];
  }
  return Var::from_op(std::move(y), {x}, [index, cols](detail::Node& self) {
    Tensor& g = pgrad(self, 0);
    for (std::size_t r = 0; r < index.size(); ++r) g[r * cols + index[r]] += self.grad[r];
  });
}

Var pick_rows(const Var& x, const std::vector<int>& index) {
  require_rank(x, 3, "pick_rows");
  const int n = x.value().dim(0), heads = x.value().dim(1), width = x.value().dim(2);
  CITGAN_REQUIRE(static_cast<int>(index.size()) == n, "pick_rows: index count does not match batch size");
  Tensor y({n, width});
  for (int i = 0; i < n; ++i) {
    CITGAN_REQUIRE(index[i] >= 0 && index[i] < heads,
                   "pick_rows: index " + std::to_string(index[i]) + " out of range for " + std::to_string(heads));
    const double* src = x.value().data() + (static_cast<std::size_t>(i) * heads + index[i]) * width;
    std::copy(src, src + width, y.data() + static_cast<std::size_t>(i) * width);
  }
  return Var::from_op(std::move(y), {x}, [index, heads, width](detail::Node& self) {
    Tensor& g = pgrad(self, 0);
    for (std::size_t i = 0; i < index.size(); ++i) {
      double* dst = g.data() + (i * heads + index[i]) * width;
      const double* src = self.grad.data() + i * width;
      for (int k = 0; k < width; ++k) dst[k] += src[k];
    }
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear");
  const int n = x.value().dim(0), in = x.value().dim(1), out = weight.value().dim(0);
  CITGAN_REQUIRE(weight.value().dim(1) == in, "linear: input width " + std::to_string(in) +
                                                  " does not match weight " + weight.value().shape_string());
  CITGAN_REQUIRE(bias.value().size() == static_cast<std::size_t>(out), "linear: bias size mismatch");
  Tensor y({n, out});
  ConstMapMat X(x.value().data(), n, in);
  ConstMapMat W(weight.value().data(), out, in);
  MapMat Y(y.data(), n, out);
  Y.noalias() = X * W.transpose();
  Eigen::Map<const Eigen::RowVectorXd> b(bias.value().data(), out);
  Y.rowwise() += b;
  return Var::from_op(std::move(y), {x, weight, bias}, [n, in, out](detail::Node& self) {
    ConstMapMat G(self.grad.data(), n, out);
    if (wants(self, 0)) {
      MapMat GX(pgrad(self, 0).data(), n, in);
      GX.noalias() += G * ConstMapMat(pvalue(self, 1).data(), out, in);
    }
    if (wants(self, 1)) {
      MapMat GW(pgrad(self, 1).data(), out, in);
      GW.noalias() += G.transpose() * ConstMapMat(pvalue(self, 0).data(), n, in);
    }
    if (wants(self, 2)) {
      Eigen::Map<Eigen::RowVectorXd> gb(pgrad(self, 2).data(), out);
      gb += G.colwise().sum();
    }
  });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int padding) {
  require_rank(x, 4, "conv2d");
  require_rank(weight, 4, "conv2d");
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const int o = wv.dim(0), k = wv.dim(2);
  CITGAN_REQUIRE(wv.dim(1) == c && wv.dim(3) == k,
                 "conv2d: weight " + wv.shape_string() + " incompatible with input " + xv.shape_string());
  CITGAN_REQUIRE(bias.value().size() == static_cast<std::size_t>(o), "conv2d: bias size mismatch");
  CITGAN_REQUIRE(stride >= 1 && padding >= 0, "conv2d: invalid stride/padding");
  const int oh = (h + 2 * padding - k) / stride + 1;
  const int ow = (w + 2 * padding - k) / stride + 1;
  CITGAN_REQUIRE(oh > 0 && ow > 0, "conv2d: input " + xv.shape_string() + " too small for kernel");
  const int ckk = c * k * k, ohw = oh * ow;

  Tensor y({n, o, oh, ow});
  AlignedBuffer cols(static_cast<std::size_t>(ckk) * ohw);
  ConstMapMat W(wv.data(), o, ckk);
  Eigen::Map<const Eigen::VectorXd> b(bias.value().data(), o);
  for (int i = 0; i < n; ++i) {
    im2col(xv.data() + static_cast<std::size_t>(i) * c * h * w, c, h, w, k, stride, padding, oh, ow, cols.data());
    MapMat Y(y.data() + static_cast<std::size_t>(i) * o * ohw, o, ohw);
    Y.noalias() = W * ConstMapMat(cols.data(), ckk, ohw);
    Y.colwise() += b;
  }

  return Var::from_op(std::move(y), {x, weight, bias},
                      [=](detail::Node& self) {
                        const Tensor& xval = pvalue(self, 0);
                        const Tensor& wval = pvalue(self, 1);
                        const bool gx = wants(self, 0), gw = wants(self, 1), gb = wants(self, 2);
                        AlignedBuffer col_buf(static_cast<std::size_t>(ckk) * ohw);
                        ConstMapMat Wm(wval.data(), o, ckk);
                        for (int i = 0; i < n; ++i) {
                          ConstMapMat G(self.grad.data() + static_cast<std::size_t>(i) * o * ohw, o, ohw);
                          if (gb) {
                            Eigen::Map<Eigen::VectorXd> gbias(pgrad(self, 2).data(), o);
                            gbias += G.rowwise().sum();
                          }
                          if (gw) {
                            im2col(xval.data() + static_cast<std::size_t>(i) * c * h * w, c, h, w, k, stride, padding,
                                   oh, ow, col_buf.data());
                            MapMat GW(pgrad(self, 1).data(), o, ckk);
                            GW.noalias() += G * ConstMapMat(col_buf.data(), ckk, ohw).transpose();
                          }
                          if (gx) {
                            MapMat C(col_buf.data(), ckk, ohw);
                            C.noalias() = Wm.transpose() * G;
                            col2im_add(col_buf.data(), c, h, w, k, stride, padding, oh, ow,
                                       pgrad(self, 0).data() + static_cast<std::size_t>(i) * c * h * w);
                          }
                        }
                      });
}

Var upsample_nearest2x(const Var& x) {
  require_rank(x, 4, "upsample_nearest2x");
  const Tensor& xv = x.value();
  const int planes = xv.dim(0) * xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  Tensor y({xv.dim(0), xv.dim(1), 2 * h, 2 * w});
  for (int p = 0; p < planes; ++p) {
    const double* src = xv.data() + static_cast<std::size_t>(p) * h * w;
    double* dst = y.data() + static_cast<std::size_t>(p) * 4 * h * w;
    for (int yy = 0; yy < 2 * h; ++yy)
      for (int xx = 0; xx < 2 * w; ++xx) dst[yy * 2 * w + xx] = src[(yy / 2) * w + xx / 2];
  }
  return Var::from_op(std::move(y), {x}, [planes, h, w](detail::Node& self) {
    Tensor& g = pgrad(self, 0);
    for (int p = 0; p < planes; ++p) {
      const double* src = self.grad.data() + static_cast<std::size_t>(p) * 4 * h * w;
      double* dst = g.data() + static_cast<std::size_t>(p) * h * w;
      for (int yy = 0; yy < 2 * h; ++yy)
        for (int xx = 0; xx < 2 * w; ++xx) dst[(yy / 2) * w + xx / 2] += src[yy * 2 * w + xx];
    }
  });
}

Var instance_norm(const Var& x, double eps) {
  require_rank(x, 4, "instance_norm");
  const Tensor& xv = x.value();
  const int planes = xv.dim(0) * xv.dim(1);
  const int hw = xv.dim(2) * xv.dim(3);
  Tensor y(xv.shape());
  std::vector<double> inv_std(static_cast<std::size_t>(planes));
  for (int p = 0; p < planes; ++p) {
    const double* src = xv.data() + static_cast<std::size_t>(p) * hw;
    double* dst = y.data() + static_cast<std::size_t>(p) * hw;
    double m = 0.0;
    for (int i = 0; i < hw; ++i) m += src[i];
    m /= hw;
    double var = 0.0;
    for (int i = 0; i < hw; ++i) var += (src[i] - m) * (src[i] - m);
    var /= hw;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[p] = is;
    for (int i = 0; i < hw; ++i) dst[i] = (src[i] - m) * is;
  }
  return Var::from_op(std::move(y), {x}, [planes, hw, inv_std = std::move(inv_std)](detail::Node& self) {
    Tensor& g = pgrad(self, 0);
    for (int p = 0; p < planes; ++p) {
      const double* go = self.grad.data() + static_cast<std::size_t>(p) * hw;
      const double* xh = self.value.data() + static_cast<std::size_t>(p) * hw;
      double* gi = g.data() + static_cast<std::size_t>(p) * hw;
      double mg = 0.0, mgx = 0.0;
      for (int i = 0; i < hw; ++i) {
        mg += go[i];
        mgx += go[i] * xh[i];
      }
      mg /= hw;
      mgx /= hw;
      for (int i = 0; i < hw; ++i) gi[i] += inv_std[p] * (go[i] - mg - xh[i] * mgx);
    }
  });
}

Var modulate(const Var& x, const Var& gain, const Var& shift) {
  require_rank(x, 4, "modulate");
  const Tensor& xv = x.value();
  const int n = xv.dim(0), c = xv.dim(1), hw = xv.dim(2) * xv.dim(3);
  const std::vector<int> per_channel{n, c};
  CITGAN_REQUIRE(gain.value().shape() == per_channel && shift.value().shape() == per_channel,
                 "modulate: gain/shift must be [N,C] matching " + xv.shape_string());
  Tensor y(xv.shape());
  for (int p = 0; p < n * c; ++p) {
    const double a = gain.value()[p], b = shift.value()[p];
    const double* src = xv.data() + static_cast<std::size_t>(p) * hw;
    double* dst = y.data() + static_cast<std::size_t>(p) * hw;
    for (int i = 0; i < hw; ++i) dst[i] = src[i] * a + b;
  }
  return Var::from_op(std::move(y), {x, gain, shift}, [n, c, hw](detail::Node& self) {
    const Tensor& xv = pvalue(self, 0);
    const Tensor& av = pvalue(self, 1);
    for (int p = 0; p < n * c; ++p) {
      const double* go = self.grad.data() + static_cast<std::size_t>(p) * hw;
      const double* xs = xv.data() + static_cast<std::size_t>(p) * hw;
      double sg = 0.0, sgx = 0.0;
      for (int i = 0; i < hw; ++i) {
        sg += go[i];
        sgx += go[i] * xs[i];
      }
      if (wants(self, 0)) {
        double* gi = pgrad(self, 0).data() + static_cast<std::size_t>(p) * hw;
        for (int i = 0; i < hw; ++i) gi[i] += go[i] * av[p];
      }
      if (wants(self, 1)) pgrad(self, 1)[p] += sgx;
      if (wants(self, 2)) pgrad(self, 2)[p] += sg;
    }
  });
}

Var global_avg_pool(const Var& x) {
  require_rank(x, 4, "global_avg_pool");
  const Tensor& xv = x.value();
  const int n = xv.dim(0), c = xv.dim(1), hw = xv.dim(2) * xv.dim(3);
  Tensor y({n, c});
  for (int p = 0; p < n * c; ++p) {
    const double* src = xv.data() + static_cast<std::size_t>(p) * hw;
    double s = 0.0;
    for (int i = 0; i < hw; ++i) s += src[i];
    y[p] = s / hw;
  }
  return Var::from_op(std::move(y), {x}, [n, c, hw](detail::Node& self) {
    Tensor& g = pgrad(self, 0);
    for (int p = 0; p < n * c; ++p) {
      const double go = self.grad[p] / hw;
      double* dst = g.data() + static_cast<std::size_t>(p) * hw;
      for (int i = 0; i < hw; ++i) dst[i] += go;
    }
  });
}

}  // namespace citgan::ops
