#include "cogload/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "cogload/error.hpp"
#include "cogload/prng.hpp"

namespace cogload::nn {

namespace {

// Four independent partial sums in a fixed order: vectorizable and reproducible.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_shape(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::shape_mismatch, what);
}

// y = W x + b for W (rows x cols).
void dense_forward(const double* w, const double* b, const double* x, std::size_t rows, std::size_t cols, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = b[r] + dot(w + r * cols, x, cols);
}

// gW += dy (x) x, gb += dy, dx = W^T dy (dx may be null).
void dense_backward(const double* w, const double* x, const double* dy, std::size_t rows, std::size_t cols,
                    double* gw, double* gb, double* dx) {
  if (dx != nullptr) std::fill(dx, dx + cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    if (dy[r] == 0.0) continue;
    axpy(dy[r], x, gw + r * cols, cols);
    gb[r] += dy[r];
    if (dx != nullptr) axpy(dy[r], w + r * cols, dx, cols);
  }
}

struct ConvShape {
  std::size_t in_ch, in_len, out_ch, kernel, padding;
  std::size_t out_len() const { return in_len + 2 * padding - kernel + 1; }
};

// Valid time range [t0, t1) of output positions touching the input at tap k.
inline void tap_range(const ConvShape& s, std::size_t k, std::size_t& t0, std::size_t& t1, std::ptrdiff_t& shift) {
  shift = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(s.padding);
  const auto lo = std::max<std::ptrdiff_t>(0, -shift);
  const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(s.out_len()),
                                           static_cast<std::ptrdiff_t>(s.in_len) - shift);
  t0 = static_cast<std::size_t>(lo);
  t1 = hi > lo ? static_cast<std::size_t>(hi) : t0;
}

void conv_forward(const ConvShape& s, const double* in, const double* w, const double* b, double* out) {
  const std::size_t lout = s.out_len();
  for (std::size_t o = 0; o < s.out_ch; ++o) {
    double* out_o = out + o * lout;
    std::fill(out_o, out_o + lout, b[o]);
    for (std::size_t c = 0; c < s.in_ch; ++c) {
      for (std::size_t k = 0; k < s.kernel; ++k) {
        std::size_t t0, t1;
        std::ptrdiff_t shift;
        tap_range(s, k, t0, t1, shift);
        if (t1 <= t0) continue;
        axpy(w[(o * s.in_ch + c) * s.kernel + k], in + c * s.in_len + static_cast<std::ptrdiff_t>(t0) + shift,
             out_o + t0, t1 - t0);
      }
    }
  }
}

void conv_backward(const ConvShape& s, const double* in, const double* w, const double* dout, double* gw,
                   double* gb, double* din) {
  const std::size_t lout = s.out_len();
  if (din != nullptr) std::fill(din, din + s.in_ch * s.in_len, 0.0);
  for (std::size_t o = 0; o < s.out_ch; ++o) {
    const double* d_o = dout + o * lout;
    double sum = 0.0;
    for (std::size_t t = 0; t < lout; ++t) sum += d_o[t];
    gb[o] += sum;
    for (std::size_t c = 0; c < s.in_ch; ++c) {
      for (std::size_t k = 0; k < s.kernel; ++k) {
        std::size_t t0, t1;
        std::ptrdiff_t shift;
        tap_range(s, k, t0, t1, shift);
        if (t1 <= t0) continue;
        const std::size_t wi = (o * s.in_ch + c) * s.kernel + k;
        const double* in_c = in + c * s.in_len + static_cast<std::ptrdiff_t>(t0) + shift;
        gw[wi] += dot(d_o + t0, in_c, t1 - t0);
        if (din != nullptr) axpy(w[wi], d_o + t0, din + c * s.in_len + static_cast<std::ptrdiff_t>(t0) + shift, t1 - t0);
      }
    }
  }
}

void relu_inplace(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_mask(const double* activated, double* grad, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!(activated[i] > 0.0)) grad[i] = 0.0;
  }
}

void maxpool2_forward(const double* in, std::size_t ch, std::size_t len, double* out, std::uint32_t* arg) {
  const std::size_t lout = len / 2;
  for (std::size_t c = 0; c < ch; ++c) {
    for (std::size_t t = 0; t < lout; ++t) {
      const std::size_t a = c * len + 2 * t;
      const bool second = in[a + 1] > in[a];
      out[c * lout + t] = second ? in[a + 1] : in[a];
      arg[c * lout + t] = static_cast<std::uint32_t>(second ? a + 1 : a);
    }
  }
}

void maxpool2_backward(const double* dout, const std::uint32_t* arg, std::size_t n_out, double* din, std::size_t n_in) {
  std::fill(din, din + n_in, 0.0);
  for (std::size_t i = 0; i < n_out; ++i) din[arg[i]] += dout[i];
}

// Stacked gate order [i, f, o, c~] matching W_x* / W_h* / b_* tensor order.
struct LstmView {
  const double* wx = nullptr;    // (4H, in)
  const double* wh = nullptr;    // (4H, H)
  const double* peep = nullptr;  // (3H) [ci, cf, co] or null
  const double* bias = nullptr;  // (4H)
  std::size_t in = 0;
  std::size_t hidden = 0;
};

// One cell step. `gates` receives post-activation [i, f, o, c~]; h_prev/c_prev may be null (zero state).
void lstm_cell_forward(const LstmView& v, const double* x, const double* h_prev, const double* c_prev, double* gates,
                       double* c, double* tanh_c, double* h) {
  const std::size_t H = v.hidden;
  for (std::size_t r = 0; r < 4 * H; ++r) {
    double z = v.bias[r] + dot(v.wx + r * v.in, x, v.in);
    if (h_prev != nullptr) z += dot(v.wh + r * H, h_prev, H);
    gates[r] = z;
  }
  if (v.peep != nullptr && c_prev != nullptr) {
    for (std::size_t j = 0; j < 3 * H; ++j) gates[j] += v.peep[j] * c_prev[j % H];
  }
  for (std::size_t j = 0; j < 3 * H; ++j) gates[j] = sigmoid(gates[j]);
  for (std::size_t j = 3 * H; j < 4 * H; ++j) gates[j] = std::tanh(gates[j]);
  for (std::size_t j = 0; j < H; ++j) {
    const double cp = c_prev != nullptr ? c_prev[j] : 0.0;
    c[j] = gates[H + j] * cp + gates[j] * gates[3 * H + j];
    tanh_c[j] = std::tanh(c[j]);
    h[j] = gates[2 * H + j] * tanh_c[j];
  }
}

struct PackedLstm {
  std::vector<double> wx, wh, peep, bias;
  LstmView view(std::size_t in, std::size_t hidden) const {
    return {wx.data(), wh.data(), peep.empty() ? nullptr : peep.data(), bias.data(), in, hidden};
  }
};

PackedLstm pack(const LstmLayerParams& p) {
  const std::size_t H = p.hidden;
  const std::size_t in = p.input;
  for (const auto* w : {&p.w_xi, &p.w_xf, &p.w_xo, &p.w_xc}) check_shape(w->size() == H * in, "LSTM input weight shape");
  for (const auto* w : {&p.w_hi, &p.w_hf, &p.w_ho, &p.w_hc}) check_shape(w->size() == H * H, "LSTM recurrent weight shape");
  for (const auto* w : {&p.b_i, &p.b_f, &p.b_o, &p.b_c}) check_shape(w->size() == H, "LSTM bias shape");
  if (p.peephole) {
    for (const auto* w : {&p.w_ci, &p.w_cf, &p.w_co}) check_shape(w->size() == H, "LSTM peephole shape");
  }
  PackedLstm out;
  for (const auto* w : {&p.w_xi, &p.w_xf, &p.w_xo, &p.w_xc}) out.wx.insert(out.wx.end(), w->begin(), w->end());
  for (const auto* w : {&p.w_hi, &p.w_hf, &p.w_ho, &p.w_hc}) out.wh.insert(out.wh.end(), w->begin(), w->end());
  if (p.peephole) {
    for (const auto* w : {&p.w_ci, &p.w_cf, &p.w_co}) out.peep.insert(out.peep.end(), w->begin(), w->end());
  }
  for (const auto* w : {&p.b_i, &p.b_f, &p.b_o, &p.b_c}) out.bias.insert(out.bias.end(), w->begin(), w->end());
  return out;
}

// Offsets of each parameter group inside the flat vector.
struct Offsets {
  struct Lstm {
    std::size_t wx, wh, peep, bias, in;
    bool has_peep;
  };
  std::size_t conv_w[2], conv_b[2];
  std::vector<Lstm> lstm;
  std::size_t fc_w[3], fc_b[3];
  std::size_t total;
};

Offsets offsets_of(const ModelConfig& cfg) {
  std::map<std::string, std::size_t> by_name;
  std::size_t total = 0;
  for (const auto& t : parameter_layout(cfg)) {
    by_name[t.name] = t.offset;
    total = t.offset + t.size;
  }
  Offsets o;
  o.conv_w[0] = by_name.at("conv1.weight");
  o.conv_b[0] = by_name.at("conv1.bias");
  o.conv_w[1] = by_name.at("conv2.weight");
  o.conv_b[1] = by_name.at("conv2.bias");
  for (std::size_t l = 0; l < cfg.lstm_layers; ++l) {
    const std::string p = "lstm" + std::to_string(l) + ".";
    Offsets::Lstm L{};
    L.wx = by_name.at(p + "W_xi");
    L.wh = by_name.at(p + "W_hi");
    L.has_peep = cfg.peephole;
    L.peep = cfg.peephole ? by_name.at(p + "W_ci") : 0;
    L.bias = by_name.at(p + "b_i");
    L.in = l == 0 ? cfg.conv2_channels : cfg.lstm_hidden;
    o.lstm.push_back(L);
  }
  o.fc_w[0] = by_name.at("fc1.weight");
  o.fc_b[0] = by_name.at("fc1.bias");
  o.fc_w[1] = by_name.at("fc2.weight");
  o.fc_b[1] = by_name.at("fc2.bias");
  o.fc_w[2] = by_name.at("head.weight");
  o.fc_b[2] = by_name.at("head.bias");
  o.total = total;
  return o;
}

// Per-sample forward/backward with activation caches. Holds a pointer to the
// parameter vector, which may be updated between calls.
class Engine {
 public:
  explicit Engine(const ModelParams& p) : cfg_(p.config), w_(&p.values), off_(offsets_of(p.config)) {
    const std::size_t L0 = cfg_.window_len;
    l1_ = L0 + 2 * cfg_.padding - cfg_.kernel + 1;
    l1p_ = cfg_.pooling ? l1_ / 2 : l1_;
    l2_ = l1p_ + 2 * cfg_.padding - cfg_.kernel + 1;
    l2p_ = cfg_.pooling ? l2_ / 2 : l2_;
    const std::size_t H = cfg_.lstm_hidden;
    a1_.resize(cfg_.conv1_channels * l1_);
    a1p_.resize(cfg_.conv1_channels * l1p_);
    arg1_.resize(a1p_.size());
    a2_.resize(cfg_.conv2_channels * l2_);
    a2p_.resize(cfg_.conv2_channels * l2p_);
    arg2_.resize(a2p_.size());
    seq_.resize(l2p_ * cfg_.conv2_channels);
    layers_.resize(cfg_.lstm_layers);
    for (auto& L : layers_) {
      L.gates.resize(l2p_ * 4 * H);
      L.c.resize(l2p_ * H);
      L.tanh_c.resize(l2p_ * H);
      L.h.resize(l2p_ * H);
    }
    u1_.resize(cfg_.fc1);
    u2_.resize(cfg_.fc2);
    d_u1_.resize(cfg_.fc1);
    d_u2_.resize(cfg_.fc2);
    d_seq_a_.resize(l2p_ * std::max(H, cfg_.conv2_channels));
    d_seq_b_.resize(l2p_ * std::max(H, cfg_.conv2_channels));
    dz_.resize(4 * H);
    dh_rec_.resize(H);
    dc_next_.resize(H);
    dc_prev_.resize(H);
    d_a2p_.resize(a2p_.size());
    d_a2_.resize(a2_.size());
    d_a1p_.resize(a1p_.size());
    d_a1_.resize(a1_.size());
  }

  // x: (F, T) for one sample.
  void forward(const double* x, double* logits) {
    const double* w = w_->data();
    x_ = x;
    const ConvShape s1{cfg_.n_features, cfg_.window_len, cfg_.conv1_channels, cfg_.kernel, cfg_.padding};
    conv_forward(s1, x, w + off_.conv_w[0], w + off_.conv_b[0], a1_.data());
    relu_inplace(a1_.data(), a1_.size());
    const double* in2 = a1_.data();
    if (cfg_.pooling) {
      maxpool2_forward(a1_.data(), cfg_.conv1_channels, l1_, a1p_.data(), arg1_.data());
      in2 = a1p_.data();
    }
    const ConvShape s2{cfg_.conv1_channels, l1p_, cfg_.conv2_channels, cfg_.kernel, cfg_.padding};
    conv_forward(s2, in2, w + off_.conv_w[1], w + off_.conv_b[1], a2_.data());
    relu_inplace(a2_.data(), a2_.size());
    const double* a2 = a2_.data();
    if (cfg_.pooling) {
      maxpool2_forward(a2_.data(), cfg_.conv2_channels, l2_, a2p_.data(), arg2_.data());
      a2 = a2p_.data();
    }
    const std::size_t T = l2p_;
    const std::size_t C2 = cfg_.conv2_channels;
    for (std::size_t c = 0; c < C2; ++c) {
      for (std::size_t t = 0; t < T; ++t) seq_[t * C2 + c] = a2[c * T + t];
    }

    const std::size_t H = cfg_.lstm_hidden;
    const double* layer_in = seq_.data();
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      auto& L = layers_[l];
      const LstmView v = view(l);
      for (std::size_t t = 0; t < T; ++t) {
        lstm_cell_forward(v, layer_in + t * v.in, t ? L.h.data() + (t - 1) * H : nullptr,
                          t ? L.c.data() + (t - 1) * H : nullptr, L.gates.data() + t * 4 * H, L.c.data() + t * H,
                          L.tanh_c.data() + t * H, L.h.data() + t * H);
      }
      layer_in = L.h.data();
    }

    const double* flat = layers_.back().h.data();
    dense_forward(w + off_.fc_w[0], w + off_.fc_b[0], flat, cfg_.fc1, T * H, u1_.data());
    relu_inplace(u1_.data(), u1_.size());
    dense_forward(w + off_.fc_w[1], w + off_.fc_b[1], u1_.data(), cfg_.fc2, cfg_.fc1, u2_.data());
    relu_inplace(u2_.data(), u2_.size());
    dense_forward(w + off_.fc_w[2], w + off_.fc_b[2], u2_.data(), cfg_.n_classes, cfg_.fc2, logits);
  }

  // Accumulates parameter gradients for the sample last passed to forward().
  void backward(const double* dlogits, double* g) {
    const double* w = w_->data();
    const std::size_t H = cfg_.lstm_hidden;
    const std::size_t T = l2p_;

    dense_backward(w + off_.fc_w[2], u2_.data(), dlogits, cfg_.n_classes, cfg_.fc2, g + off_.fc_w[2],
                   g + off_.fc_b[2], d_u2_.data());
    relu_mask(u2_.data(), d_u2_.data(), d_u2_.size());
    dense_backward(w + off_.fc_w[1], u1_.data(), d_u2_.data(), cfg_.fc2, cfg_.fc1, g + off_.fc_w[1],
                   g + off_.fc_b[1], d_u1_.data());
    relu_mask(u1_.data(), d_u1_.data(), d_u1_.size());
    double* d_out = d_seq_a_.data();
    double* d_in = d_seq_b_.data();
    dense_backward(w + off_.fc_w[0], layers_.back().h.data(), d_u1_.data(), cfg_.fc1, T * H, g + off_.fc_w[0],
                   g + off_.fc_b[0], d_out);

    for (std::size_t l = layers_.size(); l-- > 0;) {
      lstm_backward(l, d_out, d_in, g);
      std::swap(d_out, d_in);
    }
    // d_out now holds the gradient w.r.t. the conv sequence (T x C2).
    const std::size_t C2 = cfg_.conv2_channels;
    double* d_a2 = cfg_.pooling ? d_a2p_.data() : d_a2_.data();
    for (std::size_t c = 0; c < C2; ++c) {
      for (std::size_t t = 0; t < T; ++t) d_a2[c * T + t] = d_out[t * C2 + c];
    }
    if (cfg_.pooling) maxpool2_backward(d_a2p_.data(), arg2_.data(), d_a2p_.size(), d_a2_.data(), d_a2_.size());
    relu_mask(a2_.data(), d_a2_.data(), d_a2_.size());

    const ConvShape s2{cfg_.conv1_channels, l1p_, cfg_.conv2_channels, cfg_.kernel, cfg_.padding};
    const double* in2 = cfg_.pooling ? a1p_.data() : a1_.data();
    double* d_in2 = cfg_.pooling ? d_a1p_.data() : d_a1_.data();
    conv_backward(s2, in2, w + off_.conv_w[1], d_a2_.data(), g + off_.conv_w[1], g + off_.conv_b[1], d_in2);
    if (cfg_.pooling) maxpool2_backward(d_a1p_.data(), arg1_.data(), d_a1p_.size(), d_a1_.data(), d_a1_.size());
    relu_mask(a1_.data(), d_a1_.data(), d_a1_.size());

    const ConvShape s1{cfg_.n_features, cfg_.window_len, cfg_.conv1_channels, cfg_.kernel, cfg_.padding};
    conv_backward(s1, x_, w + off_.conv_w[0], d_a1_.data(), g + off_.conv_w[0], g + off_.conv_b[0], nullptr);
  }

 private:
  struct LayerCache {
    std::vector<double> gates, c, tanh_c, h;
  };

  LstmView view(std::size_t l) const {
    const double* w = w_->data();
    const auto& o = off_.lstm[l];
    return {w + o.wx, w + o.wh, o.has_peep ? w + o.peep : nullptr, w + o.bias, o.in, cfg_.lstm_hidden};
  }

  // Backpropagation through time for layer l. d_h: (T x H) gradient w.r.t. this
  // layer's outputs; writes (T x in) gradient w.r.t. its inputs into d_x.
  void lstm_backward(std::size_t l, const double* d_h, double* d_x, double* g) {
    const std::size_t H = cfg_.lstm_hidden;
    const std::size_t T = l2p_;
    const LstmView v = view(l);
    const auto& o = off_.lstm[l];
    const auto& L = layers_[l];
    const double* x_seq = l == 0 ? seq_.data() : layers_[l - 1].h.data();
    double* g_wx = g + o.wx;
    double* g_wh = g + o.wh;
    double* g_b = g + o.bias;
    double* g_p = o.has_peep ? g + o.peep : nullptr;

    std::fill(dh_rec_.begin(), dh_rec_.end(), 0.0);
    std::fill(dc_next_.begin(), dc_next_.end(), 0.0);
    for (std::size_t t = T; t-- > 0;) {
      const double* gt = L.gates.data() + t * 4 * H;
      const double* tc = L.tanh_c.data() + t * H;
      const double* cp = t ? L.c.data() + (t - 1) * H : nullptr;
      for (std::size_t j = 0; j < H; ++j) {
        const double i = gt[j], f = gt[H + j], og = gt[2 * H + j], cc = gt[3 * H + j];
        const double c_prev = cp ? cp[j] : 0.0;
        const double dh = d_h[t * H + j] + dh_rec_[j];
        const double dc = dh * og * (1.0 - tc[j] * tc[j]) + dc_next_[j];
        const double dzi = dc * cc * i * (1.0 - i);
        const double dzf = dc * c_prev * f * (1.0 - f);
        const double dzo = dh * tc[j] * og * (1.0 - og);
        const double dzc = dc * i * (1.0 - cc * cc);
        dz_[j] = dzi;
        dz_[H + j] = dzf;
        dz_[2 * H + j] = dzo;
        dz_[3 * H + j] = dzc;
        double dcp = dc * f;
        if (v.peep != nullptr) {
          dcp += dzi * v.peep[j] + dzf * v.peep[H + j] + dzo * v.peep[2 * H + j];
          if (cp) {
            g_p[j] += dzi * c_prev;
            g_p[H + j] += dzf * c_prev;
            g_p[2 * H + j] += dzo * c_prev;
          }
        }
        dc_prev_[j] = dcp;
      }
      const double* xt = x_seq + t * v.in;
      const double* hp = t ? L.h.data() + (t - 1) * H : nullptr;
      double* dxt = d_x + t * v.in;
      std::fill(dxt, dxt + v.in, 0.0);
      std::fill(dh_rec_.begin(), dh_rec_.end(), 0.0);
      for (std::size_t r = 0; r < 4 * H; ++r) {
        const double d = dz_[r];
        if (d == 0.0) continue;
        g_b[r] += d;
        axpy(d, xt, g_wx + r * v.in, v.in);
        axpy(d, v.wx + r * v.in, dxt, v.in);
        if (hp != nullptr) {
          axpy(d, hp, g_wh + r * H, H);
          axpy(d, v.wh + r * H, dh_rec_.data(), H);
        }
      }
      std::swap(dc_next_, dc_prev_);
    }
  }

  const ModelConfig& cfg_;
  const std::vector<double>* w_;
  Offsets off_;
  std::size_t l1_ = 0, l1p_ = 0, l2_ = 0, l2p_ = 0;
  const double* x_ = nullptr;
  std::vector<double> a1_, a1p_, a2_, a2p_, seq_;
  std::vector<std::uint32_t> arg1_, arg2_;
  std::vector<LayerCache> layers_;
  std::vector<double> u1_, u2_;
  std::vector<double> d_u1_, d_u2_, d_seq_a_, d_seq_b_, dz_, dh_rec_, dc_next_, dc_prev_;
  std::vector<double> d_a2p_, d_a2_, d_a1p_, d_a1_;
};

// Cross-entropy of one logit row; writes (softmax - onehot) * scale into drow.
double row_cross_entropy(const double* logits, std::size_t n, int target, double scale, double* drow) {
  double m = logits[0];
  for (std::size_t k = 1; k < n; ++k) m = std::max(m, logits[k]);
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) sum += std::exp(logits[k] - m);
  const double lse = m + std::log(sum);
  if (drow != nullptr) {
    for (std::size_t k = 0; k < n; ++k) {
      const double p = std::exp(logits[k] - m) / sum;
      drow[k] = (p - (static_cast<int>(k) == target ? 1.0 : 0.0)) * scale;
    }
  }
  return lse - logits[target];
}

void check_targets(std::span<const int> targets, std::size_t n_classes) {
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= n_classes) fail(ErrorCode::invalid_class, "target " + std::to_string(t));
  }
}

void check_input(const Tensor3& x, const ModelConfig& cfg) {
  check_shape(x.channels == cfg.n_features && x.time == cfg.window_len,
              "input (" + std::to_string(x.channels) + " x " + std::to_string(x.time) + ") does not match model (" +
                  std::to_string(cfg.n_features) + " x " + std::to_string(cfg.window_len) + ")");
  check_shape(x.data.size() == x.batch * x.channels * x.time, "tensor data size");
}

}  // namespace

// ---------------------------------------------------------------------------

Tensor3 conv1d_forward(const Tensor3& x, const ConvLayerParams& p, int padding) {
  check_shape(padding >= 0, "negative padding");
  check_shape(p.in_channels == x.channels, "conv expects " + std::to_string(p.in_channels) + " channels, got " +
                                               std::to_string(x.channels));
  check_shape(p.weight.size() == p.out_channels * p.in_channels * p.kernel && p.bias.size() == p.out_channels,
              "conv parameter shape");
  const auto pad = static_cast<std::size_t>(padding);
  check_shape(p.kernel >= 1 && x.time + 2 * pad >= p.kernel, "conv output would be empty");
  const ConvShape s{p.in_channels, x.time, p.out_channels, p.kernel, pad};
  Tensor3 out(x.batch, p.out_channels, s.out_len());
  for (std::size_t b = 0; b < x.batch; ++b) {
    conv_forward(s, x.sample(b).data(), p.weight.data(), p.bias.data(), out.data.data() + b * out.channels * out.time);
  }
  return out;
}

std::vector<double> relu(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  relu_inplace(out.data(), out.size());
  return out;
}

Tensor3 relu(Tensor3 x) {
  relu_inplace(x.data.data(), x.data.size());
  return x;
}

LstmLayerParams LstmLayerParams::zeros(std::size_t input, std::size_t hidden, bool peephole) {
  LstmLayerParams p;
  p.input = input;
  p.hidden = hidden;
  p.peephole = peephole;
  for (auto* w : {&p.w_xi, &p.w_xf, &p.w_xo, &p.w_xc}) w->assign(hidden * input, 0.0);
  for (auto* w : {&p.w_hi, &p.w_hf, &p.w_ho, &p.w_hc}) w->assign(hidden * hidden, 0.0);
  if (peephole) {
    for (auto* w : {&p.w_ci, &p.w_cf, &p.w_co}) w->assign(hidden, 0.0);
  }
  for (auto* w : {&p.b_i, &p.b_f, &p.b_o, &p.b_c}) w->assign(hidden, 0.0);
  return p;
}

LstmState lstm_step(std::span<const double> x, std::span<const double> h_prev, std::span<const double> c_prev,
                    const LstmLayerParams& p) {
  check_shape(x.size() == p.input, "lstm_step input size");
  check_shape(h_prev.size() == p.hidden && c_prev.size() == p.hidden, "lstm_step state size");
  const PackedLstm packed = pack(p);
  std::vector<double> gates(4 * p.hidden), tc(p.hidden);
  LstmState out{std::vector<double>(p.hidden), std::vector<double>(p.hidden)};
  lstm_cell_forward(packed.view(p.input, p.hidden), x.data(), h_prev.data(), c_prev.data(), gates.data(),
                    out.c.data(), tc.data(), out.h.data());
  return out;
}

Tensor3 lstm_forward(const Tensor3& x, std::span<const LstmLayerParams> layers) {
  check_shape(!layers.empty(), "no LSTM layers");
  check_shape(x.channels == layers.front().input, "LSTM input size");
  for (std::size_t l = 1; l < layers.size(); ++l) {
    check_shape(layers[l].input == layers[l - 1].hidden, "LSTM layer " + std::to_string(l) + " input size");
  }
  std::vector<PackedLstm> packed;
  for (const auto& L : layers) packed.push_back(pack(L));
  const std::size_t T = x.time;
  const std::size_t H = layers.back().hidden;
  Tensor3 out(x.batch, H, T);
  for (std::size_t b = 0; b < x.batch; ++b) {
    std::vector<double> seq(T * x.channels);
    for (std::size_t c = 0; c < x.channels; ++c) {
      for (std::size_t t = 0; t < T; ++t) seq[t * x.channels + c] = x.at(b, c, t);
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::size_t Hl = layers[l].hidden;
      const LstmView v = packed[l].view(layers[l].input, Hl);
      std::vector<double> gates(4 * Hl), c(T * Hl), tc(Hl), h(T * Hl);
      for (std::size_t t = 0; t < T; ++t) {
        lstm_cell_forward(v, seq.data() + t * v.in, t ? h.data() + (t - 1) * Hl : nullptr,
                          t ? c.data() + (t - 1) * Hl : nullptr, gates.data(), c.data() + t * Hl, tc.data(),
                          h.data() + t * Hl);
      }
      seq = std::move(h);
    }
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j < H; ++j) out.at(b, j, t) = seq[t * H + j];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t ModelConfig::conv1_len() const {
  const std::size_t l = window_len + 2 * padding - kernel + 1;
  return pooling ? l / 2 : l;
}

std::size_t ModelConfig::conv2_len() const {
  const std::size_t l = conv1_len() + 2 * padding - kernel + 1;
  return pooling ? l / 2 : l;
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::config_invalid, "model: " + what);
  };
  require(n_features >= 1 && window_len >= 1, "input shape must be non-empty");
  require(conv1_channels >= 1 && conv2_channels >= 1 && kernel >= 1, "conv sizes must be positive");
  require(window_len + 2 * padding >= kernel, "window too short for conv1");
  require(window_len + 2 * padding - kernel + 1 >= (pooling ? 2u : 1u), "conv1 output too short");
  require(conv1_len() + 2 * padding >= kernel && conv1_len() + 2 * padding - kernel + 1 >= (pooling ? 2u : 1u),
          "conv2 output too short");
  require(lstm_hidden >= 1 && lstm_layers >= 1, "LSTM sizes must be positive");
  require(fc1 >= 1 && fc2 >= 1 && n_classes >= 2, "dense sizes must be positive");
}

ModelConfig default_model_config(std::size_t n_features, std::size_t window_len) {
  ModelConfig c;
  c.n_features = n_features;
  c.window_len = window_len;
  return c;
}

std::vector<TensorSpec> parameter_layout(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<TensorSpec> t;
  std::size_t off = 0;
  auto add = [&](std::string name, std::vector<std::size_t> shape) {
    std::size_t size = 1;
    for (auto d : shape) size *= d;
    t.push_back({std::move(name), std::move(shape), off, size});
    off += size;
  };
  const std::size_t H = cfg.lstm_hidden;
  add("conv1.weight", {cfg.conv1_channels, cfg.n_features, cfg.kernel});
  add("conv1.bias", {cfg.conv1_channels});
  add("conv2.weight", {cfg.conv2_channels, cfg.conv1_channels, cfg.kernel});
  add("conv2.bias", {cfg.conv2_channels});
  for (std::size_t l = 0; l < cfg.lstm_layers; ++l) {
    const std::string p = "lstm" + std::to_string(l) + ".";
    const std::size_t in = l == 0 ? cfg.conv2_channels : H;
    for (const char* g : {"W_xi", "W_xf", "W_xo", "W_xc"}) add(p + g, {H, in});
    for (const char* g : {"W_hi", "W_hf", "W_ho", "W_hc"}) add(p + g, {H, H});
    if (cfg.peephole) {
      for (const char* g : {"W_ci", "W_cf", "W_co"}) add(p + g, {H});
    }
    for (const char* g : {"b_i", "b_f", "b_o", "b_c"}) add(p + g, {H});
  }
  add("fc1.weight", {cfg.fc1, cfg.flatten_size()});
  add("fc1.bias", {cfg.fc1});
  add("fc2.weight", {cfg.fc2, cfg.fc1});
  add("fc2.bias", {cfg.fc2});
  add("head.weight", {cfg.n_classes, cfg.fc2});
  add("head.bias", {cfg.n_classes});
  return t;
}

std::size_t parameter_count(const ModelConfig& cfg) {
  const auto layout = parameter_layout(cfg);
  return layout.back().offset + layout.back().size;
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
  return {cfg, std::vector<double>(parameter_count(cfg), 0.0)};
}

ModelParams ModelParams::initialize(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p = zeros(cfg);
  Rng rng(seed);
  for (const auto& t : parameter_layout(cfg)) {
    const auto dot_pos = t.name.rfind('.');
    const std::string leaf = t.name.substr(dot_pos + 1);
    const bool is_bias = leaf == "bias" || leaf.rfind("b_", 0) == 0;
    if (is_bias) {
      if (leaf == "b_f") std::fill_n(p.values.begin() + static_cast<std::ptrdiff_t>(t.offset), t.size, 1.0);
      continue;
    }
    std::size_t fan_in = 1;
    if (t.shape.size() == 1) {
      fan_in = cfg.lstm_hidden;  // peephole vectors act on the hidden-sized cell state
    } else {
      for (std::size_t d = 1; d < t.shape.size(); ++d) fan_in *= t.shape[d];
    }
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.size; ++i) p.values[t.offset + i] = rng.uniform(-bound, bound);
  }
  return p;
}

std::span<double> ModelParams::tensor(std::string_view name) {
  for (const auto& t : parameter_layout(config)) {
    if (t.name == name) return {values.data() + t.offset, t.size};
  }
  fail(ErrorCode::shape_mismatch, "no tensor named '" + std::string(name) + "'");
}

std::span<const double> ModelParams::tensor(std::string_view name) const {
  return const_cast<ModelParams*>(this)->tensor(name);
}

ConvLayerParams ModelParams::conv_layer(std::size_t index) const {
  check_shape(index < 2, "conv layer index");
  const std::string p = index == 0 ? "conv1." : "conv2.";
  ConvLayerParams c;
  c.out_channels = index == 0 ? config.conv1_channels : config.conv2_channels;
  c.in_channels = index == 0 ? config.n_features : config.conv1_channels;
  c.kernel = config.kernel;
  auto w = tensor(p + "weight");
  auto b = tensor(p + "bias");
  c.weight.assign(w.begin(), w.end());
  c.bias.assign(b.begin(), b.end());
  return c;
}

LstmLayerParams ModelParams::lstm_layer(std::size_t index) const {
  check_shape(index < config.lstm_layers, "LSTM layer index");
  const std::string p = "lstm" + std::to_string(index) + ".";
  LstmLayerParams L = LstmLayerParams::zeros(index == 0 ? config.conv2_channels : config.lstm_hidden,
                                             config.lstm_hidden, config.peephole);
  auto copy = [&](std::vector<double>& dst, const char* name) {
    auto src = tensor(p + name);
    dst.assign(src.begin(), src.end());
  };
  copy(L.w_xi, "W_xi"); copy(L.w_xf, "W_xf"); copy(L.w_xo, "W_xo"); copy(L.w_xc, "W_xc");
  copy(L.w_hi, "W_hi"); copy(L.w_hf, "W_hf"); copy(L.w_ho, "W_ho"); copy(L.w_hc, "W_hc");
  if (config.peephole) {
    copy(L.w_ci, "W_ci"); copy(L.w_cf, "W_cf"); copy(L.w_co, "W_co");
  }
  copy(L.b_i, "b_i"); copy(L.b_f, "b_f"); copy(L.b_o, "b_o"); copy(L.b_c, "b_c");
  return L;
}

std::vector<double> forward(const Tensor3& x, const ModelParams& p) {
  check_input(x, p.config);
  check_shape(p.values.size() == parameter_count(p.config), "parameter vector size");
  Engine e(p);
  std::vector<double> logits(x.batch * p.config.n_classes);
  for (std::size_t b = 0; b < x.batch; ++b) e.forward(x.sample(b).data(), logits.data() + b * p.config.n_classes);
  return logits;
}

LossResult softmax_cross_entropy(std::span<const double> logits, std::size_t n_classes, std::span<const int> targets) {
  check_targets(targets, n_classes);
  check_shape(logits.size() == targets.size() * n_classes, "logits/targets size");
  LossResult r;
  r.dlogits.resize(logits.size());
  if (targets.empty()) return r;
  const double scale = 1.0 / static_cast<double>(targets.size());
  for (std::size_t b = 0; b < targets.size(); ++b) {
    r.loss += row_cross_entropy(logits.data() + b * n_classes, n_classes, targets[b], scale,
                                r.dlogits.data() + b * n_classes);
  }
  r.loss *= scale;
  return r;
}

std::vector<double> softmax_rows(std::span<const double> logits, std::size_t n_classes) {
  std::vector<double> p(logits.size());
  for (std::size_t b = 0; b * n_classes < logits.size(); ++b) {
    const double* row = logits.data() + b * n_classes;
    const double m = *std::max_element(row, row + n_classes);
    double sum = 0.0;
    for (std::size_t k = 0; k < n_classes; ++k) sum += std::exp(row[k] - m);
    for (std::size_t k = 0; k < n_classes; ++k) p[b * n_classes + k] = std::exp(row[k] - m) / sum;
  }
  return p;
}

BackwardResult backward(const Tensor3& x, std::span<const int> targets, const ModelParams& p) {
  check_input(x, p.config);
  check_shape(targets.size() == x.batch, "targets size != batch");
  check_targets(targets, p.config.n_classes);
  BackwardResult r;
  r.grad.assign(p.values.size(), 0.0);
  if (x.batch == 0) return r;
  Engine e(p);
  const std::size_t nc = p.config.n_classes;
  std::vector<double> logits(nc), dl(nc);
  const double scale = 1.0 / static_cast<double>(x.batch);
  for (std::size_t b = 0; b < x.batch; ++b) {
    e.forward(x.sample(b).data(), logits.data());
    r.loss += row_cross_entropy(logits.data(), nc, targets[b], scale, dl.data());
    e.backward(dl.data(), r.grad.data());
  }
  r.loss *= scale;
  return r;
}

AdamState AdamState::for_params(std::size_t n, AdamConfig cfg) {
  AdamState s;
  s.config = cfg;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  return s;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& s) {
  check_shape(params.size() == grads.size() && s.m.size() == params.size() && s.v.size() == params.size(),
              "Adam parameter/gradient/state sizes differ");
  ++s.step;
  const auto& c = s.config;
  const double t = static_cast<double>(s.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    s.m[i] = c.beta1 * s.m[i] + (1.0 - c.beta1) * g;
    s.v[i] = c.beta2 * s.v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = s.m[i] / bc1;
    const double v_hat = s.v[i] / bc2;
    params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

Tensor3 to_tensor(const WindowedDataset& ds, std::span<const std::size_t> indices) {
  const std::size_t F = ds.n_features;
  const std::size_t T = ds.window_len;
  Tensor3 x(indices.size(), F, T);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& w = ds.windows.at(indices[b]).values;
    check_shape(w.size() == T * F, "window size");
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t f = 0; f < F; ++f) x.at(b, f, t) = w[t * F + f];
    }
  }
  return x;
}

Tensor3 to_tensor(const WindowedDataset& ds) {
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return to_tensor(ds, all);
}

std::vector<int> labels_of(const WindowedDataset& ds) {
  std::vector<int> out;
  out.reserve(ds.size());
  for (const auto& w : ds.windows) out.push_back(index_of(w.label));
  return out;
}

TrainResult train(const WindowedDataset& ds, const ModelConfig& cfg, const TrainConfig& tc, std::uint64_t seed) {
  if (ds.size() == 0) fail(ErrorCode::empty_dataset, "training set is empty");
  const auto counts = ds.class_counts();
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) {
      fail(ErrorCode::missing_class, "class " + std::string(to_string(class_from_index(static_cast<int>(k)))) +
                                         " absent from training set");
    }
  }
  cfg.validate();
  check_shape(ds.n_features == cfg.n_features && ds.window_len == cfg.window_len, "dataset shape != model config");
  if (tc.batch_size == 0) fail(ErrorCode::config_invalid, "batch size must be positive");

  TrainResult r{ModelParams::initialize(cfg, derive_seed(seed, {1})), {}, {}};
  r.adam = AdamState::for_params(r.params.values.size(), tc.adam);
  const Tensor3 x = to_tensor(ds);
  const std::vector<int> y = labels_of(ds);
  Rng rng(derive_seed(seed, {2}));
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  Engine e(r.params);
  const std::size_t nc = cfg.n_classes;
  std::vector<double> grad(r.params.values.size());
  std::vector<double> logits(nc), dl(nc);
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t end = std::min(order.size(), start + tc.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t idx = order[i];
        e.forward(x.sample(idx).data(), logits.data());
        total += row_cross_entropy(logits.data(), nc, y[idx], scale, dl.data());
        e.backward(dl.data(), grad.data());
      }
      adam_step(r.params.values, grad, r.adam);
    }
    r.loss_history.push_back(total / static_cast<double>(order.size()));
    if (tc.on_epoch) tc.on_epoch(epoch, r.loss_history.back());
  }
  return r;
}

Prediction predict(const ModelParams& p, const Tensor3& x) {
  Prediction out;
  out.n_classes = p.config.n_classes;
  out.probabilities = softmax_rows(forward(x, p), out.n_classes);
  for (std::size_t b = 0; b < x.batch; ++b) {
    const double* row = out.probabilities.data() + b * out.n_classes;
    std::size_t best = 0;
    for (std::size_t k = 1; k < out.n_classes; ++k) {
      if (row[k] > row[best]) best = k;
    }
    out.classes.push_back(static_cast<int>(best));
  }
  return out;
}

Prediction predict(const ModelParams& p, const WindowedDataset& ds) { return predict(p, to_tensor(ds)); }

ModelConfig tiny_model_config() {
  ModelConfig c;
  c.n_features = 2;
  c.window_len = 4;
  c.conv1_channels = 3;
  c.conv2_channels = 4;
  c.lstm_hidden = 3;
  c.lstm_layers = 2;
  c.fc1 = 5;
  c.fc2 = 6;
  return c;
}

GradCheckReport grad_check(const ModelConfig& cfg, double tolerance, std::uint64_t seed,
                           const std::function<void(std::vector<double>&)>& corrupt) {
  ModelParams p = ModelParams::initialize(cfg, seed);
  Rng rng(derive_seed(seed, {99}));
  for (auto& v : p.values) v += rng.uniform(-0.1, 0.1);
  const std::size_t batch = cfg.n_classes;
  Tensor3 x(batch, cfg.n_features, cfg.window_len);
  for (auto& v : x.data) v = rng.normal();
  std::vector<int> targets(batch);
  std::iota(targets.begin(), targets.end(), 0);

  auto analytic = backward(x, targets, p).grad;
  if (corrupt) corrupt(analytic);

  auto loss_at = [&]() { return softmax_cross_entropy(forward(x, p), cfg.n_classes, targets).loss; };
  constexpr double h = 1e-5;
  GradCheckReport rep;
  const auto layout = parameter_layout(cfg);
  for (const auto& t : layout) {
    for (std::size_t i = 0; i < t.size; ++i) {
      double& w = p.values[t.offset + i];
      const double saved = w;
      w = saved + h;
      const double lp = loss_at();
      w = saved - h;
      const double lm = loss_at();
      w = saved;
      const double numeric = (lp - lm) / (2.0 * h);
      const double a = analytic[t.offset + i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      if (rel > rep.max_rel_error || rep.n_checked == 0) {
        rep.max_rel_error = rel;
        rep.worst_tensor = t.name;
        rep.worst_index = i;
      }
      ++rep.n_checked;
    }
  }
  rep.pass = rep.max_rel_error <= tolerance;
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'C', 'L', 'F', '1'};

struct Writer {
  std::vector<unsigned char> bytes;
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
};

struct Reader {
  std::span<const unsigned char> bytes;
  std::size_t pos = 0;
  void need(std::size_t n) const {
    if (pos + n > bytes.size()) fail(ErrorCode::parse_error, "weight file truncated");
  }
  std::uint8_t u8() {
    need(1);
    return bytes[pos++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
};

}  // namespace

std::vector<unsigned char> serialize(const SavedModel& m) {
  const auto& c = m.params.config;
  const std::size_t n = parameter_count(c);
  check_shape(m.params.values.size() == n, "parameter vector size");
  Writer w;
  for (char ch : kMagic) w.u8(static_cast<std::uint8_t>(ch));
  w.u32(kWeightFormatVersion);
  for (std::size_t v : {c.n_features, c.window_len, c.conv1_channels, c.conv2_channels, c.kernel, c.padding,
                        static_cast<std::size_t>(c.pooling), c.lstm_hidden, c.lstm_layers,
                        static_cast<std::size_t>(c.peephole), c.fc1, c.fc2, c.n_classes}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  w.u64(m.split_fingerprint);
  w.u64(n);
  for (double v : m.params.values) w.f64(v);
  w.u8(m.adam ? 1 : 0);
  if (m.adam) {
    const auto& a = *m.adam;
    check_shape(a.m.size() == n && a.v.size() == n, "Adam state size");
    w.f64(a.config.learning_rate);
    w.f64(a.config.beta1);
    w.f64(a.config.beta2);
    w.f64(a.config.epsilon);
    w.u64(a.step);
    for (double v : a.m) w.f64(v);
    for (double v : a.v) w.f64(v);
  }
  return std::move(w.bytes);
}

SavedModel deserialize(std::span<const unsigned char> bytes) {
  Reader r{bytes};
  for (char ch : kMagic) {
    if (r.u8() != static_cast<unsigned char>(ch)) fail(ErrorCode::parse_error, "bad weight file magic");
  }
  const auto version = r.u32();
  if (version != kWeightFormatVersion) fail(ErrorCode::parse_error, "unsupported weight format version " + std::to_string(version));
  SavedModel m;
  auto& c = m.params.config;
  c.n_features = r.u32();
  c.window_len = r.u32();
  c.conv1_channels = r.u32();
  c.conv2_channels = r.u32();
  c.kernel = r.u32();
  c.padding = r.u32();
  c.pooling = r.u32() != 0;
  c.lstm_hidden = r.u32();
  c.lstm_layers = r.u32();
  c.peephole = r.u32() != 0;
  c.fc1 = r.u32();
  c.fc2 = r.u32();
  c.n_classes = r.u32();
  m.split_fingerprint = r.u64();
  const auto n = r.u64();
  if (n != parameter_count(c)) fail(ErrorCode::parse_error, "parameter count does not match architecture");
  r.need(n * 8);
  m.params.values.resize(n);
  for (auto& v : m.params.values) v = r.f64();
  if (r.u8() != 0) {
    AdamState a;
    a.config.learning_rate = r.f64();
    a.config.beta1 = r.f64();
    a.config.beta2 = r.f64();
    a.config.epsilon = r.f64();
    a.step = r.u64();
    r.need(n * 16);
    a.m.resize(n);
    a.v.resize(n);
    for (auto& v : a.m) v = r.f64();
    for (auto& v : a.v) v = r.f64();
    m.adam = std::move(a);
  }
  if (r.pos != bytes.size()) fail(ErrorCode::parse_error, "trailing bytes in weight file");
  return m;
}

void save_model(const std::filesystem::path& path, const SavedModel& m) {
  const auto bytes = serialize(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::io_error, "write failed for " + path.string());
}

SavedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace cogload::nn
