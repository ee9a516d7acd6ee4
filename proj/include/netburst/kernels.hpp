#pragma once

#include <cstdint>

// Dense kernels behind the token model. Every kernel comes in two builds:
// the OpenMP-parallel version here and a plain serial reference in
// kernels::ref used as the testing oracle and by the benchmark target.
//
// Parallelism is only ever over independent output elements and the inner
// summation order is identical in both versions, so parallel and reference
// results are bit-identical for any thread count.

namespace netburst::kernels {

// C[m x n] = A[m x k] * B[k x n], row-major
void matmul(const double* a, const double* b, double* c, int m, int k, int n);

// C[m x n] = A[m x k] * B^T, with B stored [n x k]
void matmul_nt(const double* a, const double* b, double* c, int m, int k,
               int n);

// C[k x n] = A^T * B, with A stored [m x k], B [m x n]; weight-gradient shape
void matmul_tn(const double* a, const double* b, double* c, int m, int k,
               int n);

// x[r][c] += bias[c]
void add_bias(double* x, const double* bias, int rows, int cols);

// out[c] = sum_r x[r][c]; bias-gradient shape
void col_sums(const double* x, double* out, int rows, int cols);

// y = layernorm(x) * gamma + beta, per row; mean/rstd caches are written for
// the backward pass
void layernorm(const double* x, const double* gamma, const double* beta,
               double* y, double* mean, double* rstd, int rows, int cols);

void layernorm_backward(const double* x, const double* gamma, const double* dy,
                        const double* mean, const double* rstd, double* dx,
                        double* dgamma, double* dbeta, int rows, int cols);

// tanh-approximation GELU
void gelu(const double* x, double* y, std::int64_t n);
void gelu_backward(const double* x, const double* dy, double* dx,
                   std::int64_t n);

// Causal softmax attention over `blocks` independent [T x d] head blocks
// (blocks = batch * heads). probs must hold blocks*T*T doubles; row t of each
// block stores the t+1 attention weights, zero-padded.
void attention(const double* q, const double* k, const double* v, double* out,
               double* probs, int blocks, int T, int d);

void attention_backward(const double* q, const double* k, const double* v,
                        const double* probs, const double* dout, double* dq,
                        double* dk, double* dv, int blocks, int T, int d);

namespace ref {
void matmul(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nt(const double* a, const double* b, double* c, int m, int k,
               int n);
void matmul_tn(const double* a, const double* b, double* c, int m, int k,
               int n);
void add_bias(double* x, const double* bias, int rows, int cols);
void col_sums(const double* x, double* out, int rows, int cols);
void layernorm(const double* x, const double* gamma, const double* beta,
               double* y, double* mean, double* rstd, int rows, int cols);
void layernorm_backward(const double* x, const double* gamma, const double* dy,
                        const double* mean, const double* rstd, double* dx,
                        double* dgamma, double* dbeta, int rows, int cols);
void gelu(const double* x, double* y, std::int64_t n);
void gelu_backward(const double* x, const double* dy, double* dx,
                   std::int64_t n);
void attention(const double* q, const double* k, const double* v, double* out,
               double* probs, int blocks, int T, int d);
void attention_backward(const double* q, const double* k, const double* v,
                        const double* probs, const double* dout, double* dq,
                        double* dk, double* dv, int blocks, int T, int d);
}  // namespace ref

}  // namespace netburst::kernels
