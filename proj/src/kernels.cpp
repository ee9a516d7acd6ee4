#include "netburst/kernels.hpp"

#include <cmath>

namespace netburst::kernels {

namespace {

inline double gelu_scalar(double x) {
  // 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
  const double c = 0.7978845608028653558798921198687;  // sqrt(2/pi)
  double x3 = x * x * x;
  return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x3)));
}

inline double gelu_grad_scalar(double x) {
  const double c = 0.7978845608028653558798921198687;
  double x2 = x * x;
  double inner = c * (x + 0.044715 * x2 * x);
  double t = std::tanh(inner);
  double dinner = c * (1.0 + 3.0 * 0.044715 * x2);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner;
}

inline void attention_row(const double* q, const double* k, const double* v,
                          double* out, double* prow, int T, int d, int t) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const double* qt = q + static_cast<std::size_t>(t) * d;
  double maxs = -1e300;
  for (int j = 0; j <= t; ++j) {
    const double* kj = k + static_cast<std::size_t>(j) * d;
    double s = 0.0;
    for (int c = 0; c < d; ++c) s += qt[c] * kj[c];
    s *= scale;
    prow[j] = s;
    if (s > maxs) maxs = s;
  }
  double denom = 0.0;
  for (int j = 0; j <= t; ++j) {
    prow[j] = std::exp(prow[j] - maxs);
    denom += prow[j];
  }
  double inv = 1.0 / denom;
  for (int j = 0; j <= t; ++j) prow[j] *= inv;
  for (int j = t + 1; j < T; ++j) prow[j] = 0.0;
  double* ot = out + static_cast<std::size_t>(t) * d;
  for (int c = 0; c < d; ++c) ot[c] = 0.0;
  for (int j = 0; j <= t; ++j) {
    const double* vj = v + static_cast<std::size_t>(j) * d;
    double p = prow[j];
    for (int c = 0; c < d; ++c) ot[c] += p * vj[c];
  }
}

// Backward for one head block. dq/dk/dv are overwritten.
inline void attention_backward_block(const double* q, const double* k,
                                     const double* v, const double* probs,
                                     const double* dout, double* dq, double* dk,
                                     double* dv, int T, int d) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const std::size_t nd = static_cast<std::size_t>(T) * d;
  for (std::size_t i = 0; i < nd; ++i) {
    dq[i] = 0.0;
    dk[i] = 0.0;
    dv[i] = 0.0;
  }
  for (int t = 0; t < T; ++t) {
    const double* prow = probs + static_cast<std::size_t>(t) * T;
    const double* dot = dout + static_cast<std::size_t>(t) * d;
    const double* qt = q + static_cast<std::size_t>(t) * d;
    // dv[j] += p[t][j] * dout[t]; dscore[t][j] via softmax jacobian
    double dot_dot_o = 0.0;  // sum_j p[j] * (dout . v[j])
    for (int j = 0; j <= t; ++j) {
      const double* vj = v + static_cast<std::size_t>(j) * d;
      double g = 0.0;
      for (int c = 0; c < d; ++c) g += dot[c] * vj[c];
      dot_dot_o += prow[j] * g;
    }
    for (int j = 0; j <= t; ++j) {
      const double* vj = v + static_cast<std::size_t>(j) * d;
      const double* kj = k + static_cast<std::size_t>(j) * d;
      double g = 0.0;
      for (int c = 0; c < d; ++c) g += dot[c] * vj[c];
      double dscore = prow[j] * (g - dot_dot_o) * scale;
      double* dvj = dv + static_cast<std::size_t>(j) * d;
      double* dkj = dk + static_cast<std::size_t>(j) * d;
      double* dqt = dq + static_cast<std::size_t>(t) * d;
      for (int c = 0; c < d; ++c) {
        dvj[c] += prow[j] * dot[c];
        dqt[c] += dscore * kj[c];
        dkj[c] += dscore * qt[c];
      }
    }
  }
}

}  // namespace

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      double av = ai[p];
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k,
               int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<std::size_t>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k,
               int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < k; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int r = 0; r < m; ++r)
        s += a[static_cast<std::size_t>(r) * k + i] *
             b[static_cast<std::size_t>(r) * n + j];
      ci[j] = s;
    }
  }
}

void add_bias(double* x, const double* bias, int rows, int cols) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    double* xi = x + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) xi[j] += bias[j];
  }
}

void col_sums(const double* x, double* out, int rows, int cols) {
#pragma omp parallel for schedule(static)
  for (int j = 0; j < cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < rows; ++i) s += x[static_cast<std::size_t>(i) * cols + j];
    out[j] = s;
  }
}

void layernorm(const double* x, const double* gamma, const double* beta,
               double* y, double* mean, double* rstd, int rows, int cols) {
  const double eps = 1e-5;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    const double* xi = x + static_cast<std::size_t>(i) * cols;
    double* yi = y + static_cast<std::size_t>(i) * cols;
    double m = 0.0;
    for (int j = 0; j < cols; ++j) m += xi[j];
    m /= cols;
    double v = 0.0;
    for (int j = 0; j < cols; ++j) {
      double dxj = xi[j] - m;
      v += dxj * dxj;
    }
    v /= cols;
    double rs = 1.0 / std::sqrt(v + eps);
    mean[i] = m;
    rstd[i] = rs;
    for (int j = 0; j < cols; ++j) yi[j] = (xi[j] - m) * rs * gamma[j] + beta[j];
  }
}

void layernorm_backward(const double* x, const double* gamma, const double* dy,
                        const double* mean, const double* rstd, double* dx,
                        double* dgamma, double* dbeta, int rows, int cols) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    const double* xi = x + static_cast<std::size_t>(i) * cols;
    const double* dyi = dy + static_cast<std::size_t>(i) * cols;
    double* dxi = dx + static_cast<std::size_t>(i) * cols;
    double m = mean[i], rs = rstd[i];
    double sum_g = 0.0, sum_gx = 0.0;
    for (int j = 0; j < cols; ++j) {
      double g = dyi[j] * gamma[j];
      sum_g += g;
      sum_gx += g * (xi[j] - m) * rs;
    }
    double inv_n = 1.0 / cols;
    for (int j = 0; j < cols; ++j) {
      double g = dyi[j] * gamma[j];
      double xhat = (xi[j] - m) * rs;
      dxi[j] = rs * (g - inv_n * sum_g - xhat * inv_n * sum_gx);
    }
  }
  // parameter grads: one thread per column, rows scanned in order
#pragma omp parallel for schedule(static)
  for (int j = 0; j < cols; ++j) {
    double dg = 0.0, db = 0.0;
    for (int i = 0; i < rows; ++i) {
      std::size_t idx = static_cast<std::size_t>(i) * cols + j;
      double xhat = (x[idx] - mean[i]) * rstd[i];
      dg += dy[idx] * xhat;
      db += dy[idx];
    }
    dgamma[j] = dg;
    dbeta[j] = db;
  }
}

void gelu(const double* x, double* y, std::int64_t n) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) y[i] = gelu_scalar(x[i]);
}

void gelu_backward(const double* x, const double* dy, double* dx,
                   std::int64_t n) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) dx[i] = dy[i] * gelu_grad_scalar(x[i]);
}

void attention(const double* q, const double* k, const double* v, double* out,
               double* probs, int blocks, int T, int d) {
  const std::int64_t total = static_cast<std::int64_t>(blocks) * T;
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < total; ++r) {
    int blk = static_cast<int>(r / T);
    int t = static_cast<int>(r % T);
    std::size_t off = static_cast<std::size_t>(blk) * T * d;
    std::size_t poff = static_cast<std::size_t>(blk) * T * T +
                       static_cast<std::size_t>(t) * T;
    attention_row(q + off, k + off, v + off, out + off, probs + poff, T, d, t);
  }
}

void attention_backward(const double* q, const double* k, const double* v,
                        const double* probs, const double* dout, double* dq,
                        double* dk, double* dv, int blocks, int T, int d) {
#pragma omp parallel for schedule(static)
  for (int blk = 0; blk < blocks; ++blk) {
    std::size_t off = static_cast<std::size_t>(blk) * T * d;
    std::size_t poff = static_cast<std::size_t>(blk) * T * T;
    attention_backward_block(q + off, k + off, v + off, probs + poff,
                             dout + off, dq + off, dk + off, dv + off, T, d);
  }
}

namespace ref {

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      double av = ai[p];
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k,
               int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<std::size_t>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k,
               int n) {
  for (int i = 0; i < k; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int r = 0; r < m; ++r)
        s += a[static_cast<std::size_t>(r) * k + i] *
             b[static_cast<std::size_t>(r) * n + j];
      ci[j] = s;
    }
  }
}

void add_bias(double* x, const double* bias, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    double* xi = x + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) xi[j] += bias[j];
  }
}

void col_sums(const double* x, double* out, int rows, int cols) {
  for (int j = 0; j < cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < rows; ++i) s += x[static_cast<std::size_t>(i) * cols + j];
    out[j] = s;
  }
}

void layernorm(const double* x, const double* gamma, const double* beta,
               double* y, double* mean, double* rstd, int rows, int cols) {
  const double eps = 1e-5;
  for (int i = 0; i < rows; ++i) {
    const double* xi = x + static_cast<std::size_t>(i) * cols;
    double* yi = y + static_cast<std::size_t>(i) * cols;
    double m = 0.0;
    for (int j = 0; j < cols; ++j) m += xi[j];
    m /= cols;
    double v = 0.0;
    for (int j = 0; j < cols; ++j) {
      double dxj = xi[j] - m;
      v += dxj * dxj;
    }
    v /= cols;
    double rs = 1.0 / std::sqrt(v + eps);
    mean[i] = m;
    rstd[i] = rs;
    for (int j = 0; j < cols; ++j) yi[j] = (xi[j] - m) * rs * gamma[j] + beta[j];
  }
}

void layernorm_backward(const double* x, const double* gamma, const double* dy,
                        const double* mean, const double* rstd, double* dx,
                        double* dgamma, double* dbeta, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    const double* xi = x + static_cast<std::size_t>(i) * cols;
    const double* dyi = dy + static_cast<std::size_t>(i) * cols;
    double* dxi = dx + static_cast<std::size_t>(i) * cols;
    double m = mean[i], rs = rstd[i];
    double sum_g = 0.0, sum_gx = 0.0;
    for (int j = 0; j < cols; ++j) {
      double g = dyi[j] * gamma[j];
      sum_g += g;
      sum_gx += g * (xi[j] - m) * rs;
    }
    double inv_n = 1.0 / cols;
    for (int j = 0; j < cols; ++j) {
      double g = dyi[j] * gamma[j];
      double xhat = (xi[j] - m) * rs;
      dxi[j] = rs * (g - inv_n * sum_g - xhat * inv_n * sum_gx);
    }
  }
  for (int j = 0; j < cols; ++j) {
    double dg = 0.0, db = 0.0;
    for (int i = 0; i < rows; ++i) {
      std::size_t idx = static_cast<std::size_t>(i) * cols + j;
      double xhat = (x[idx] - mean[i]) * rstd[i];
      dg += dy[idx] * xhat;
      db += dy[idx];
    }
    dgamma[j] = dg;
    dbeta[j] = db;
  }
}

void gelu(const double* x, double* y, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) y[i] = gelu_scalar(x[i]);
}

void gelu_backward(const double* x, const double* dy, double* dx,
                   std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) dx[i] = dy[i] * gelu_grad_scalar(x[i]);
}

void attention(const double* q, const double* k, const double* v, double* out,
               double* probs, int blocks, int T, int d) {
  for (int blk = 0; blk < blocks; ++blk) {
    std::size_t off = static_cast<std::size_t>(blk) * T * d;
    for (int t = 0; t < T; ++t) {
      std::size_t poff = static_cast<std::size_t>(blk) * T * T +
                         static_cast<std::size_t>(t) * T;
      attention_row(q + off, k + off, v + off, out + off, probs + poff, T, d,
                    t);
    }
  }
}

void attention_backward(const double* q, const double* k, const double* v,
                        const double* probs, const double* dout, double* dq,
                        double* dk, double* dv, int blocks, int T, int d) {
  for (int blk = 0; blk < blocks; ++blk) {
    std::size_t off = static_cast<std::size_t>(blk) * T * d;
    std::size_t poff = static_cast<std::size_t>(blk) * T * T;
    attention_backward_block(q + off, k + off, v + off, probs + poff,
                             dout + off, dq + off, dk + off, dv + off, T, d);
  }
}

}  // namespace ref

}  // namespace netburst::kernels
