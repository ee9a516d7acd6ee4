#include "netburst/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "netburst/kernels.hpp"
#include "netburst/rng.hpp"

namespace netburst {

namespace {

namespace kn = netburst::kernels;

struct Layout {
  int V, C, L, H, A, d, F;
  std::size_t tok_emb, pos_emb, layers_base, per_layer;
  std::size_t ln1_g, ln1_b, w_qkv, b_qkv, w_att, b_att;
  std::size_t ln2_g, ln2_b, w_fc, b_fc, w_pr, b_pr;
  std::size_t lnf_g, lnf_b, w_out, b_out, total;

  explicit Layout(const ModelConfig& c)
      : V(c.vocab), C(c.context), L(c.layers), H(c.hidden), A(c.heads),
        d(c.hidden / c.heads), F(4 * c.hidden) {
    std::size_t h = static_cast<std::size_t>(H);
    tok_emb = 0;
    pos_emb = tok_emb + static_cast<std::size_t>(V + 1) * h;
    layers_base = pos_emb + static_cast<std::size_t>(C) * h;
    ln1_g = 0;
    ln1_b = ln1_g + h;
    w_qkv = ln1_b + h;
    b_qkv = w_qkv + h * 3 * h;
    w_att = b_qkv + 3 * h;
    b_att = w_att + h * h;
    ln2_g = b_att + h;
    ln2_b = ln2_g + h;
    w_fc = ln2_b + h;
    b_fc = w_fc + h * static_cast<std::size_t>(F);
    w_pr = b_fc + static_cast<std::size_t>(F);
    b_pr = w_pr + static_cast<std::size_t>(F) * h;
    per_layer = b_pr + h;
    lnf_g = layers_base + static_cast<std::size_t>(L) * per_layer;
    lnf_b = lnf_g + h;
    w_out = lnf_b + h;
    b_out = w_out + h * static_cast<std::size_t>(V);
    total = b_out + static_cast<std::size_t>(V);
  }

  std::size_t layer(int l) const {
    return layers_base + static_cast<std::size_t>(l) * per_layer;
  }
};

struct Acts {
  int B = 0, T = 0, R = 0;
  std::vector<double> xs;                              // (L+1) R H
  std::vector<double> ln1_out, ln1_mean, ln1_rstd;     // L R H, L R, L R
  std::vector<double> q, k, v;                         // L R H, head-split
  std::vector<double> probs;                           // L B A T T
  std::vector<double> att_merged;                      // L R H
  std::vector<double> xmid;                            // L R H
  std::vector<double> ln2_out, ln2_mean, ln2_rstd;
  std::vector<double> fc, gact;                        // L R F
  std::vector<double> lnf_out, lnf_mean, lnf_rstd;     // R H, R, R
  std::vector<double> logits;                          // R V
  std::vector<double> buf_h;                           // R H scratch
  std::vector<double> buf_qkv;                         // R 3H scratch
  std::vector<double> att_heads;                       // R H scratch
  std::vector<double> per_pos;                         // R scratch

  void resize(const Layout& lay, int batch, int seqlen) {
    B = batch;
    T = seqlen;
    R = B * T;
    std::size_t rh = static_cast<std::size_t>(R) * lay.H;
    std::size_t rf = static_cast<std::size_t>(R) * lay.F;
    std::size_t lcount = static_cast<std::size_t>(lay.L);
    xs.resize((lcount + 1) * rh);
    ln1_out.resize(lcount * rh);
    ln1_mean.resize(lcount * R);
    ln1_rstd.resize(lcount * R);
    q.resize(lcount * rh);
    k.resize(lcount * rh);
    v.resize(lcount * rh);
    probs.resize(lcount * static_cast<std::size_t>(B) * lay.A * T * T);
    att_merged.resize(lcount * rh);
    xmid.resize(lcount * rh);
    ln2_out.resize(lcount * rh);
    ln2_mean.resize(lcount * R);
    ln2_rstd.resize(lcount * R);
    fc.resize(lcount * rf);
    gact.resize(lcount * rf);
    lnf_out.resize(rh);
    lnf_mean.resize(R);
    lnf_rstd.resize(R);
    logits.resize(static_cast<std::size_t>(R) * lay.V);
    buf_h.resize(rh);
    buf_qkv.resize(static_cast<std::size_t>(R) * 3 * lay.H);
    att_heads.resize(rh);
    per_pos.resize(R);
  }
};

struct BackBufs {
  std::vector<double> dx, d_h1, d_h2, d_f, d_qkv, dq, dk, dv, datt;

  void resize(const Layout& lay, int R) {
    std::size_t rh = static_cast<std::size_t>(R) * lay.H;
    dx.resize(rh);
    d_h1.resize(rh);
    d_h2.resize(rh);
    d_f.resize(static_cast<std::size_t>(R) * lay.F);
    d_qkv.resize(static_cast<std::size_t>(R) * 3 * lay.H);
    dq.resize(rh);
    dk.resize(rh);
    dv.resize(rh);
    datt.resize(rh);
  }
};

// row layout [.. q(A*d) | k | v ..] -> per-head blocks [(b*A+a), t, c]
void split_heads(const double* qkv, double* q, double* k, double* v, int B,
                 int T, int A, int d) {
  int H = A * d;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < B * T; ++r) {
    int b = r / T, t = r % T;
    const double* row = qkv + static_cast<std::size_t>(r) * 3 * H;
    for (int a = 0; a < A; ++a) {
      std::size_t dst =
          (static_cast<std::size_t>(b) * A + a) * T * d + static_cast<std::size_t>(t) * d;
      for (int c = 0; c < d; ++c) {
        q[dst + c] = row[a * d + c];
        k[dst + c] = row[H + a * d + c];
        v[dst + c] = row[2 * H + a * d + c];
      }
    }
  }
}

void merge_heads(const double* heads, double* rows, int B, int T, int A,
                 int d) {
  int H = A * d;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < B * T; ++r) {
    int b = r / T, t = r % T;
    double* row = rows + static_cast<std::size_t>(r) * H;
    for (int a = 0; a < A; ++a) {
      std::size_t src =
          (static_cast<std::size_t>(b) * A + a) * T * d + static_cast<std::size_t>(t) * d;
      for (int c = 0; c < d; ++c) row[a * d + c] = heads[src + c];
    }
  }
}

void split_heads_single(const double* rows, double* heads, int B, int T, int A,
                        int d) {
  int H = A * d;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < B * T; ++r) {
    int b = r / T, t = r % T;
    const double* row = rows + static_cast<std::size_t>(r) * H;
    for (int a = 0; a < A; ++a) {
      std::size_t dst =
          (static_cast<std::size_t>(b) * A + a) * T * d + static_cast<std::size_t>(t) * d;
      for (int c = 0; c < d; ++c) heads[dst + c] = row[a * d + c];
    }
  }
}

void merge_heads_qkv(const double* dq, const double* dk, const double* dv,
                     double* qkv, int B, int T, int A, int d) {
  int H = A * d;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < B * T; ++r) {
    int b = r / T, t = r % T;
    double* row = qkv + static_cast<std::size_t>(r) * 3 * H;
    for (int a = 0; a < A; ++a) {
      std::size_t src =
          (static_cast<std::size_t>(b) * A + a) * T * d + static_cast<std::size_t>(t) * d;
      for (int c = 0; c < d; ++c) {
        row[a * d + c] = dq[src + c];
        row[H + a * d + c] = dk[src + c];
        row[2 * H + a * d + c] = dv[src + c];
      }
    }
  }
}

void add_inplace(double* a, const double* b, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) a[i] += b[i];
}

void forward(const Layout& lay, const std::vector<double>& P,
             const std::vector<int>& tokens, int B, int T, Acts& a) {
  a.resize(lay, B, T);
  const int H = lay.H, A = lay.A, d = lay.d, F = lay.F, V = lay.V;
  const int R = a.R;
  const std::size_t rh = static_cast<std::size_t>(R) * H;
  const std::size_t rf = static_cast<std::size_t>(R) * F;

#pragma omp parallel for schedule(static)
  for (int r = 0; r < R; ++r) {
    int t = r % T;
    int tok = tokens[static_cast<std::size_t>(r)];
    const double* te = &P[lay.tok_emb + static_cast<std::size_t>(tok) * H];
    const double* pe = &P[lay.pos_emb + static_cast<std::size_t>(t) * H];
    double* xr = &a.xs[static_cast<std::size_t>(r) * H];
    for (int h = 0; h < H; ++h) xr[h] = te[h] + pe[h];
  }

  for (int l = 0; l < lay.L; ++l) {
    std::size_t base = lay.layer(l);
    const double* x = &a.xs[static_cast<std::size_t>(l) * rh];
    double* ln1 = &a.ln1_out[static_cast<std::size_t>(l) * rh];
    kn::layernorm(x, &P[base + lay.ln1_g], &P[base + lay.ln1_b], ln1,
                  &a.ln1_mean[static_cast<std::size_t>(l) * R],
                  &a.ln1_rstd[static_cast<std::size_t>(l) * R], R, H);
    kn::matmul(ln1, &P[base + lay.w_qkv], a.buf_qkv.data(), R, H, 3 * H);
    kn::add_bias(a.buf_qkv.data(), &P[base + lay.b_qkv], R, 3 * H);
    double* q = &a.q[static_cast<std::size_t>(l) * rh];
    double* k = &a.k[static_cast<std::size_t>(l) * rh];
    double* v = &a.v[static_cast<std::size_t>(l) * rh];
    split_heads(a.buf_qkv.data(), q, k, v, B, T, A, d);
    double* probs = &a.probs[static_cast<std::size_t>(l) * B * A * T * T];
    kn::attention(q, k, v, a.att_heads.data(), probs, B * A, T, d);
    double* merged = &a.att_merged[static_cast<std::size_t>(l) * rh];
    merge_heads(a.att_heads.data(), merged, B, T, A, d);
    kn::matmul(merged, &P[base + lay.w_att], a.buf_h.data(), R, H, H);
    kn::add_bias(a.buf_h.data(), &P[base + lay.b_att], R, H);
    double* xm = &a.xmid[static_cast<std::size_t>(l) * rh];
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(rh); ++i)
      xm[i] = x[i] + a.buf_h[static_cast<std::size_t>(i)];
    double* ln2 = &a.ln2_out[static_cast<std::size_t>(l) * rh];
    kn::layernorm(xm, &P[base + lay.ln2_g], &P[base + lay.ln2_b], ln2,
                  &a.ln2_mean[static_cast<std::size_t>(l) * R],
                  &a.ln2_rstd[static_cast<std::size_t>(l) * R], R, H);
    double* fc = &a.fc[static_cast<std::size_t>(l) * rf];
    kn::matmul(ln2, &P[base + lay.w_fc], fc, R, H, F);
    kn::add_bias(fc, &P[base + lay.b_fc], R, F);
    double* ga = &a.gact[static_cast<std::size_t>(l) * rf];
    kn::gelu(fc, ga, static_cast<std::int64_t>(rf));
    kn::matmul(ga, &P[base + lay.w_pr], a.buf_h.data(), R, F, H);
    kn::add_bias(a.buf_h.data(), &P[base + lay.b_pr], R, H);
    double* xnext = &a.xs[(static_cast<std::size_t>(l) + 1) * rh];
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(rh); ++i)
      xnext[i] = xm[i] + a.buf_h[static_cast<std::size_t>(i)];
  }

  const double* xl = &a.xs[static_cast<std::size_t>(lay.L) * rh];
  kn::layernorm(xl, &P[lay.lnf_g], &P[lay.lnf_b], a.lnf_out.data(),
                a.lnf_mean.data(), a.lnf_rstd.data(), R, H);
  kn::matmul(a.lnf_out.data(), &P[lay.w_out], a.logits.data(), R, H, V);
  kn::add_bias(a.logits.data(), &P[lay.b_out], R, V);
}

// Mean cross-entropy over positions whose target != pad. Transforms
// a.logits into dloss/dlogits in place.
double loss_and_dlogits(const std::vector<int>& targets, int pad, Acts& a,
                        int V) {
  const int R = a.R;
  long n_valid = 0;
  for (int r = 0; r < R; ++r)
    if (targets[static_cast<std::size_t>(r)] != pad) ++n_valid;
  if (n_valid == 0) throw DataError("batch has no unpadded targets");
  const double inv = 1.0 / static_cast<double>(n_valid);

#pragma omp parallel for schedule(static)
  for (int r = 0; r < R; ++r) {
    double* row = &a.logits[static_cast<std::size_t>(r) * V];
    int tgt = targets[static_cast<std::size_t>(r)];
    if (tgt == pad) {
      for (int j = 0; j < V; ++j) row[j] = 0.0;
      a.per_pos[static_cast<std::size_t>(r)] = 0.0;
      continue;
    }
    double mx = row[0];
    for (int j = 1; j < V; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < V; ++j) sum += std::exp(row[j] - mx);
    double lse = std::log(sum) + mx;
    a.per_pos[static_cast<std::size_t>(r)] = lse - row[tgt];
    for (int j = 0; j < V; ++j) row[j] = std::exp(row[j] - lse) * inv;
    row[tgt] -= inv;
  }

  double total = 0.0;
  for (int r = 0; r < R; ++r) total += a.per_pos[static_cast<std::size_t>(r)];
  return total * inv;
}

// Loss only, logits left untouched (numeric side of the gradient check).
double loss_only(const std::vector<int>& targets, int pad, const Acts& a,
                 int V) {
  const int R = a.R;
  long n_valid = 0;
  double total = 0.0;
  for (int r = 0; r < R; ++r) {
    int tgt = targets[static_cast<std::size_t>(r)];
    if (tgt == pad) continue;
    ++n_valid;
    const double* row = &a.logits[static_cast<std::size_t>(r) * V];
    double mx = row[0];
    for (int j = 1; j < V; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < V; ++j) sum += std::exp(row[j] - mx);
    total += std::log(sum) + mx - row[tgt];
  }
  if (n_valid == 0) throw DataError("batch has no unpadded targets");
  return total / static_cast<double>(n_valid);
}

void backward(const Layout& lay, const std::vector<double>& P,
              const std::vector<int>& tokens, Acts& a, std::vector<double>& G,
              BackBufs& bb) {
  const int H = lay.H, A = lay.A, d = lay.d, F = lay.F, V = lay.V;
  const int R = a.R, B = a.B, T = a.T;
  const std::size_t rh = static_cast<std::size_t>(R) * H;
  bb.resize(lay, R);
  std::fill(G.begin(), G.end(), 0.0);

  kn::matmul_tn(a.lnf_out.data(), a.logits.data(), &G[lay.w_out], R, H, V);
  kn::col_sums(a.logits.data(), &G[lay.b_out], R, V);
  kn::matmul_nt(a.logits.data(), &P[lay.w_out], bb.d_h1.data(), R, V, H);
  const double* xl = &a.xs[static_cast<std::size_t>(lay.L) * rh];
  kn::layernorm_backward(xl, &P[lay.lnf_g], bb.d_h1.data(), a.lnf_mean.data(),
                         a.lnf_rstd.data(), bb.dx.data(), &G[lay.lnf_g],
                         &G[lay.lnf_b], R, H);

  for (int l = lay.L - 1; l >= 0; --l) {
    std::size_t base = lay.layer(l);
    std::size_t rf = static_cast<std::size_t>(R) * F;
    const double* ga = &a.gact[static_cast<std::size_t>(l) * rf];
    const double* fc = &a.fc[static_cast<std::size_t>(l) * rf];
    const double* ln2 = &a.ln2_out[static_cast<std::size_t>(l) * rh];
    const double* xm = &a.xmid[static_cast<std::size_t>(l) * rh];
    const double* ln1 = &a.ln1_out[static_cast<std::size_t>(l) * rh];
    const double* x = &a.xs[static_cast<std::size_t>(l) * rh];

    // MLP branch
    kn::matmul_tn(ga, bb.dx.data(), &G[base + lay.w_pr], R, F, H);
    kn::col_sums(bb.dx.data(), &G[base + lay.b_pr], R, H);
    kn::matmul_nt(bb.dx.data(), &P[base + lay.w_pr], bb.d_f.data(), R, H, F);
    kn::gelu_backward(fc, bb.d_f.data(), bb.d_f.data(),
                      static_cast<std::int64_t>(rf));
    kn::matmul_tn(ln2, bb.d_f.data(), &G[base + lay.w_fc], R, H, F);
    kn::col_sums(bb.d_f.data(), &G[base + lay.b_fc], R, F);
    kn::matmul_nt(bb.d_f.data(), &P[base + lay.w_fc], bb.d_h1.data(), R, F, H);
    kn::layernorm_backward(xm, &P[base + lay.ln2_g], bb.d_h1.data(),
                           &a.ln2_mean[static_cast<std::size_t>(l) * R],
                           &a.ln2_rstd[static_cast<std::size_t>(l) * R],
                           bb.d_h2.data(), &G[base + lay.ln2_g],
                           &G[base + lay.ln2_b], R, H);
    add_inplace(bb.dx.data(), bb.d_h2.data(), rh);  // now d(xmid)

    // attention branch
    const double* merged = &a.att_merged[static_cast<std::size_t>(l) * rh];
    kn::matmul_tn(merged, bb.dx.data(), &G[base + lay.w_att], R, H, H);
    kn::col_sums(bb.dx.data(), &G[base + lay.b_att], R, H);
    kn::matmul_nt(bb.dx.data(), &P[base + lay.w_att], bb.d_h1.data(), R, H, H);
    split_heads_single(bb.d_h1.data(), bb.datt.data(), B, T, A, d);
    const double* q = &a.q[static_cast<std::size_t>(l) * rh];
    const double* k = &a.k[static_cast<std::size_t>(l) * rh];
    const double* v = &a.v[static_cast<std::size_t>(l) * rh];
    const double* probs = &a.probs[static_cast<std::size_t>(l) * B * A * T * T];
    kn::attention_backward(q, k, v, probs, bb.datt.data(), bb.dq.data(),
                           bb.dk.data(), bb.dv.data(), B * A, T, d);
    merge_heads_qkv(bb.dq.data(), bb.dk.data(), bb.dv.data(), bb.d_qkv.data(),
                    B, T, A, d);
    kn::matmul_tn(ln1, bb.d_qkv.data(), &G[base + lay.w_qkv], R, H, 3 * H);
    kn::col_sums(bb.d_qkv.data(), &G[base + lay.b_qkv], R, 3 * H);
    kn::matmul_nt(bb.d_qkv.data(), &P[base + lay.w_qkv], bb.d_h1.data(), R,
                  3 * H, H);
    kn::layernorm_backward(x, &P[base + lay.ln1_g], bb.d_h1.data(),
                           &a.ln1_mean[static_cast<std::size_t>(l) * R],
                           &a.ln1_rstd[static_cast<std::size_t>(l) * R],
                           bb.d_h2.data(), &G[base + lay.ln1_g],
                           &G[base + lay.ln1_b], R, H);
    add_inplace(bb.dx.data(), bb.d_h2.data(), rh);  // now d(xs[l])
  }

  // embedding scatter: one thread owns a column slice, rows scanned in order
#pragma omp parallel for schedule(static)
  for (int h = 0; h < H; ++h) {
    for (int r = 0; r < R; ++r) {
      int t = r % T;
      int tok = tokens[static_cast<std::size_t>(r)];
      double g = bb.dx[static_cast<std::size_t>(r) * H + h];
      G[lay.tok_emb + static_cast<std::size_t>(tok) * H + h] += g;
      G[lay.pos_emb + static_cast<std::size_t>(t) * H + h] += g;
    }
  }
}

std::vector<double> softmax_row(const double* row, int n) {
  double mx = row[0];
  for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
  double sum = 0.0;
  std::vector<double> p(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    p[static_cast<std::size_t>(j)] = std::exp(row[j] - mx);
    sum += p[static_cast<std::size_t>(j)];
  }
  for (double& x : p) x /= sum;
  return p;
}

void check_tokens(const std::vector<std::vector<int>>& seqs, int vocab,
                  const char* what) {
  for (const auto& s : seqs)
    for (int t : s)
      if (t < 0 || t >= vocab)
        throw DataError(std::string(what) + " token " + std::to_string(t) +
                        " outside vocab [0, " + std::to_string(vocab) + ")");
}

// Walks a sequence in chunks of at most context+1 tokens so that every target
// position is predicted exactly once; emit(chunk, first_count) where targets
// with in-chunk input index < first_count are already covered by a previous
// chunk.
template <typename Emit>
void walk_chunks(int context, const std::vector<int>& seq, Emit&& emit) {
  std::size_t len = seq.size();
  if (len < 2) return;
  std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(context) + 1, len);
  std::size_t pos = 0;  // first uncovered target is seq[pos+1]
  while (pos < len - 1) {
    std::size_t start = std::min(pos, len - w);
    std::vector<int> chunk(seq.begin() + static_cast<std::ptrdiff_t>(start),
                           seq.begin() + static_cast<std::ptrdiff_t>(start + w));
    emit(chunk, pos - start);
    pos = start + w - 1;
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab < 1) throw ConfigError("model vocab must be positive");
  if (context < 1) throw ConfigError("model context must be positive");
  if (layers < 1 || hidden < 1 || heads < 1 || batch < 1 || patience < 1 ||
      max_steps < 1 || eval_every < 1)
    throw ConfigError("model counts must be positive");
  if (hidden % heads != 0)
    throw ConfigError("hidden (" + std::to_string(hidden) +
                      ") must be divisible by heads (" + std::to_string(heads) +
                      ")");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
}

std::size_t TokenModel::param_count(const ModelConfig& config) {
  config.validate();
  return Layout(config).total;
}

TokenModel TokenModel::random_init(const ModelConfig& config) {
  config.validate();
  Layout lay(config);
  TokenModel m;
  m.config_ = config;
  m.params_.resize(lay.total);
  Rng rng(derive_seed(config.seed, 0));
  for (double& p : m.params_) p = 0.02 * rng.gaussian();
  auto ones = [&](std::size_t off, int n) {
    for (int i = 0; i < n; ++i) m.params_[off + static_cast<std::size_t>(i)] = 1.0;
  };
  auto zeros = [&](std::size_t off, int n) {
    for (int i = 0; i < n; ++i) m.params_[off + static_cast<std::size_t>(i)] = 0.0;
  };
  for (int l = 0; l < lay.L; ++l) {
    std::size_t base = lay.layer(l);
    ones(base + lay.ln1_g, lay.H);
    zeros(base + lay.ln1_b, lay.H);
    zeros(base + lay.b_qkv, 3 * lay.H);
    zeros(base + lay.b_att, lay.H);
    ones(base + lay.ln2_g, lay.H);
    zeros(base + lay.ln2_b, lay.H);
    zeros(base + lay.b_fc, lay.F);
    zeros(base + lay.b_pr, lay.H);
  }
  ones(lay.lnf_g, lay.H);
  zeros(lay.lnf_b, lay.H);
  zeros(lay.b_out, lay.V);
  return m;
}

std::vector<double> TokenModel::next_token_dist(
    const std::vector<int>& context) const {
  if (context.empty()) throw ConfigError("next_token_dist: empty context");
  for (int t : context)
    if (t < 0 || t >= config_.vocab)
      throw DataError("context token outside vocab");
  Layout lay(config_);
  std::size_t keep = std::min<std::size_t>(context.size(),
                                           static_cast<std::size_t>(config_.context));
  std::vector<int> window(context.end() - static_cast<std::ptrdiff_t>(keep),
                          context.end());
  Acts a;
  forward(lay, params_, window, 1, static_cast<int>(keep), a);
  const double* last =
      &a.logits[(keep - 1) * static_cast<std::size_t>(lay.V)];
  return softmax_row(last, lay.V);
}

std::vector<int> TokenModel::generate(const std::vector<int>& context, int n,
                                      const GenMode& mode) const {
  if (n < 0) throw ConfigError("generate: n must be >= 0");
  if (context.empty()) throw ConfigError("generate: empty context");
  if (mode.kind == GenMode::sample && !(mode.temperature > 0.0))
    throw ConfigError("generate: temperature must be > 0");
  Rng rng(mode.seed);
  std::vector<int> window = context;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<double> p = next_token_dist(window);
    int pick = sample_from_dist(p, mode, rng);
    out.push_back(pick);
    window.push_back(pick);
    if (window.size() > static_cast<std::size_t>(config_.context))
      window.erase(window.begin());
  }
  return out;
}

int sample_from_dist(const std::vector<double>& dist, const GenMode& mode,
                     Rng& rng) {
  if (mode.kind == GenMode::greedy) {
    int pick = 0;
    for (int j = 1; j < static_cast<int>(dist.size()); ++j)
      if (dist[static_cast<std::size_t>(j)] > dist[static_cast<std::size_t>(pick)])
        pick = j;
    return pick;
  }
  if (!(mode.temperature > 0.0))
    throw ConfigError("sampling temperature must be > 0");
  // temperature-scaled in log space; temperature -> 0 recovers argmax
  std::vector<double> lp(dist.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < dist.size(); ++j) {
    lp[j] = std::log(dist[j]) / mode.temperature;
    mx = std::max(mx, lp[j]);
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    lp[j] = std::exp(lp[j] - mx);
    sum += lp[j];
  }
  double u = rng.uniform() * sum;
  double acc = 0.0;
  int pick = static_cast<int>(dist.size()) - 1;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    acc += lp[j];
    if (u < acc) {
      pick = static_cast<int>(j);
      break;
    }
  }
  return pick;
}

std::vector<double> TokenModel::embed(const std::vector<int>& seq) const {
  if (seq.empty()) throw ConfigError("embed: empty sequence");
  for (int t : seq)
    if (t < 0 || t >= config_.vocab) throw DataError("embed: token outside vocab");
  Layout lay(config_);
  std::vector<double> sum(static_cast<std::size_t>(lay.H), 0.0);
  std::size_t total = 0;
  Acts a;
  std::size_t pos = 0;
  while (pos < seq.size()) {
    std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(config_.context),
                                          seq.size() - pos);
    std::vector<int> chunk(seq.begin() + static_cast<std::ptrdiff_t>(pos),
                           seq.begin() + static_cast<std::ptrdiff_t>(pos + w));
    forward(lay, params_, chunk, 1, static_cast<int>(w), a);
    for (std::size_t r = 0; r < w; ++r)
      for (int h = 0; h < lay.H; ++h)
        sum[static_cast<std::size_t>(h)] += a.lnf_out[r * lay.H + h];
    total += w;
    pos += w;
  }
  for (double& s : sum) s /= static_cast<double>(total);
  return sum;
}

double TokenModel::sequence_loss(const std::vector<int>& seq) const {
  if (seq.size() < 2) throw DataError("sequence_loss needs >= 2 tokens");
  Layout lay(config_);
  double total = 0.0;
  std::size_t count = 0;
  Acts a;
  walk_chunks(config_.context, seq, [&](const std::vector<int>& chunk,
                                        std::size_t first_count) {
    int T = static_cast<int>(chunk.size()) - 1;
    std::vector<int> inputs(chunk.begin(), chunk.end() - 1);
    forward(lay, params_, inputs, 1, T, a);
    for (int t = static_cast<int>(first_count); t < T; ++t) {
      const double* row = &a.logits[static_cast<std::size_t>(t) * lay.V];
      double mx = row[0];
      for (int j = 1; j < lay.V; ++j) mx = std::max(mx, row[j]);
      double s = 0.0;
      for (int j = 0; j < lay.V; ++j) s += std::exp(row[j] - mx);
      total += std::log(s) + mx - row[chunk[static_cast<std::size_t>(t) + 1]];
      ++count;
    }
  });
  return total / static_cast<double>(count);
}

double evaluate_loss(const TokenModel& model,
                     const std::vector<std::vector<int>>& seqs) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& s : seqs) {
    if (s.size() < 2) continue;
    total += model.sequence_loss(s) * static_cast<double>(s.size() - 1);
    count += s.size() - 1;
  }
  if (count == 0) throw DataError("evaluate_loss: no predictable positions");
  return total / static_cast<double>(count);
}

double greedy_accuracy(const TokenModel& model,
                       const std::vector<std::vector<int>>& seqs) {
  Layout lay(model.config());
  std::size_t hits = 0, count = 0;
  Acts a;
  for (const auto& seq : seqs) {
    walk_chunks(model.config().context, seq, [&](const std::vector<int>& chunk,
                                                 std::size_t first_count) {
      int T = static_cast<int>(chunk.size()) - 1;
      std::vector<int> inputs(chunk.begin(), chunk.end() - 1);
      forward(lay, model.params(), inputs, 1, T, a);
      for (int t = static_cast<int>(first_count); t < T; ++t) {
        const double* row = &a.logits[static_cast<std::size_t>(t) * lay.V];
        int best = 0;
        for (int j = 1; j < lay.V; ++j)
          if (row[j] > row[best]) best = j;
        if (best == chunk[static_cast<std::size_t>(t) + 1]) ++hits;
        ++count;
      }
    });
  }
  if (count == 0) throw DataError("greedy_accuracy: no predictable positions");
  return static_cast<double>(hits) / static_cast<double>(count);
}

std::pair<TokenModel, TrainReport> train(
    const ModelConfig& config, const std::vector<std::vector<int>>& train_seqs,
    const std::vector<std::vector<int>>& val_seqs) {
  config.validate();
  check_tokens(train_seqs, config.vocab, "train");
  check_tokens(val_seqs, config.vocab, "val");
  std::size_t max_len = 0;
  for (const auto& s : train_seqs) max_len = std::max(max_len, s.size());
  if (max_len < 2)
    throw DataError("training needs at least one sequence of length >= 2");

  Layout lay(config);
  const int pad = config.vocab;
  const std::size_t w_tokens =
      std::min<std::size_t>(static_cast<std::size_t>(config.context) + 1, max_len);
  const int T = static_cast<int>(w_tokens) - 1;
  const int B = config.batch;

  TokenModel model = TokenModel::random_init(config);
  std::vector<double>& P = model.params_;
  std::vector<double> G(lay.total), m1(lay.total, 0.0), m2(lay.total, 0.0);
  std::vector<double> best_params;
  double best_val = std::numeric_limits<double>::infinity();
  Rng rng(derive_seed(config.seed, 1));
  Acts acts;
  BackBufs bb;
  TrainReport report;

  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double b1t = 1.0, b2t = 1.0;
  int bad_evals = 0;
  double train_loss = 0.0;

  std::vector<int> inputs(static_cast<std::size_t>(B) * T);
  std::vector<int> targets(static_cast<std::size_t>(B) * T);

  for (long step = 1; step <= config.max_steps; ++step) {
    for (int b = 0; b < B; ++b) {
      const std::vector<int>& seq =
          train_seqs[rng.below(train_seqs.size())];
      std::vector<int> slice;
      if (seq.size() >= w_tokens) {
        std::size_t start = rng.below(seq.size() - w_tokens + 1);
        slice.assign(seq.begin() + static_cast<std::ptrdiff_t>(start),
                     seq.begin() + static_cast<std::ptrdiff_t>(start + w_tokens));
      } else {
        slice.assign(w_tokens - seq.size(), pad);
        slice.insert(slice.end(), seq.begin(), seq.end());
      }
      for (int t = 0; t < T; ++t) {
        inputs[static_cast<std::size_t>(b) * T + t] = slice[static_cast<std::size_t>(t)];
        targets[static_cast<std::size_t>(b) * T + t] =
            slice[static_cast<std::size_t>(t) + 1];
      }
    }

    forward(lay, P, inputs, B, T, acts);
    train_loss = loss_and_dlogits(targets, pad, acts, lay.V);
    if (!std::isfinite(train_loss))
      throw NumericError("training loss diverged (non-finite) at step " +
                         std::to_string(step));
    backward(lay, P, inputs, acts, G, bb);

    b1t *= beta1;
    b2t *= beta2;
    const double corr1 = 1.0 / (1.0 - b1t);
    const double corr2 = 1.0 / (1.0 - b2t);
    const double lr = config.learning_rate;
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(lay.total); ++i) {
      double g = G[static_cast<std::size_t>(i)];
      double mm = beta1 * m1[static_cast<std::size_t>(i)] + (1.0 - beta1) * g;
      double vv = beta2 * m2[static_cast<std::size_t>(i)] + (1.0 - beta2) * g * g;
      m1[static_cast<std::size_t>(i)] = mm;
      m2[static_cast<std::size_t>(i)] = vv;
      P[static_cast<std::size_t>(i)] -=
          lr * (mm * corr1) / (std::sqrt(vv * corr2) + eps);
    }

    report.steps = step;
    if (!val_seqs.empty() && step % config.eval_every == 0) {
      double val_loss = evaluate_loss(model, val_seqs);
      report.loss_curve.push_back({step, train_loss, val_loss});
      if (val_loss < best_val) {
        best_val = val_loss;
        best_params = P;
        bad_evals = 0;
      } else {
        ++bad_evals;
        if (bad_evals >= config.patience) {
          report.stopped_early = true;
          break;
        }
      }
    }
  }

  report.final_train_loss = train_loss;
  if (!best_params.empty()) {
    P = std::move(best_params);
    report.best_val_loss = best_val;
  } else {
    report.best_val_loss = train_loss;
  }
  model.trained_ = true;
  return {std::move(model), std::move(report)};
}

double grad_check(const ModelConfig& config, const std::vector<int>& seq,
                  const std::vector<std::size_t>& indices) {
  config.validate();
  if (seq.size() < 2) throw DataError("grad_check needs >= 2 tokens");
  if (seq.size() > static_cast<std::size_t>(config.context) + 1)
    throw ConfigError("grad_check sequence longer than context");
  for (int t : seq)
    if (t < 0 || t >= config.vocab) throw DataError("grad_check: token outside vocab");

  Layout lay(config);
  TokenModel model = TokenModel::random_init(config);
  std::vector<double>& P = model.mutable_params();
  const int T = static_cast<int>(seq.size()) - 1;
  std::vector<int> inputs(seq.begin(), seq.end() - 1);
  std::vector<int> targets(seq.begin() + 1, seq.end());

  Acts acts;
  BackBufs bb;
  forward(lay, P, inputs, 1, T, acts);
  loss_and_dlogits(targets, config.vocab, acts, lay.V);
  std::vector<double> G(lay.total);
  backward(lay, P, inputs, acts, G, bb);

  const double h = 1e-5;
  double max_rel = 0.0;
  for (std::size_t idx : indices) {
    if (idx >= lay.total)
      throw ConfigError("grad_check: parameter index out of range");
    double saved = P[idx];
    P[idx] = saved + h;
    forward(lay, P, inputs, 1, T, acts);
    double f1 = loss_only(targets, config.vocab, acts, lay.V);
    P[idx] = saved - h;
    forward(lay, P, inputs, 1, T, acts);
    double f2 = loss_only(targets, config.vocab, acts, lay.V);
    P[idx] = saved;
    double numeric = (f1 - f2) / (2.0 * h);
    double analytic = G[idx];
    double denom = std::max({1e-6, std::abs(analytic), std::abs(numeric)});
    max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
  }
  return max_rel;
}

// --- checkpoint io -----------------------------------------------------------

void TokenModel::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << "netburst-checkpoint v1\n";
  f << "vocab " << config_.vocab << '\n';
  f << "context " << config_.context << '\n';
  f << "layers " << config_.layers << '\n';
  f << "hidden " << config_.hidden << '\n';
  f << "heads " << config_.heads << '\n';
  f << "learning_rate " << fmt_g17(config_.learning_rate) << '\n';
  f << "batch " << config_.batch << '\n';
  f << "patience " << config_.patience << '\n';
  f << "max_steps " << config_.max_steps << '\n';
  f << "eval_every " << config_.eval_every << '\n';
  f << "seed " << config_.seed << '\n';
  f << "trained " << (trained_ ? 1 : 0) << '\n';
  f << "params " << params_.size() << '\n';
  for (double p : params_) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(p);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i)
      bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
    f.write(reinterpret_cast<const char*>(bytes), 8);
  }
  if (!f) throw DataError("write failed for " + path);
}

TokenModel TokenModel::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path);
  std::string line;
  std::getline(f, line);
  if (line != "netburst-checkpoint v1")
    throw DataError(path + ": not a checkpoint file");

  TokenModel m;
  std::size_t n_params = 0;
  bool saw_params = false;
  while (!saw_params && std::getline(f, line)) {
    std::size_t sp = line.find(' ');
    if (sp == std::string::npos) throw DataError(path + ": malformed header");
    std::string key = line.substr(0, sp);
    std::string val = line.substr(sp + 1);
    if (key == "vocab") m.config_.vocab = std::stoi(val);
    else if (key == "context") m.config_.context = std::stoi(val);
    else if (key == "layers") m.config_.layers = std::stoi(val);
    else if (key == "hidden") m.config_.hidden = std::stoi(val);
    else if (key == "heads") m.config_.heads = std::stoi(val);
    else if (key == "learning_rate") m.config_.learning_rate = std::stod(val);
    else if (key == "batch") m.config_.batch = std::stoi(val);
    else if (key == "patience") m.config_.patience = std::stoi(val);
    else if (key == "max_steps") m.config_.max_steps = std::stoi(val);
    else if (key == "eval_every") m.config_.eval_every = std::stoi(val);
    else if (key == "seed") m.config_.seed = std::stoull(val);
    else if (key == "trained") m.trained_ = val == "1";
    else if (key == "params") {
      n_params = std::stoull(val);
      saw_params = true;
    } else {
      throw DataError(path + ": unknown header key '" + key + "'");
    }
  }
  if (!saw_params) throw DataError(path + ": missing params header");
  m.config_.validate();
  if (n_params != param_count(m.config_))
    throw DataError(path + ": parameter count does not match config");
  m.params_.resize(n_params);
  for (double& p : m.params_) {
    unsigned char bytes[8];
    f.read(reinterpret_cast<char*>(bytes), 8);
    if (!f) throw DataError(path + ": truncated parameter payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    p = std::bit_cast<double>(bits);
  }
  return m;
}

}  // namespace netburst
