#include "dialogctl/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dialogctl/rng.hpp"

namespace dialogctl {

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

void glorot_fill(Tensor& t, Rng& rng) {
  const double limit =
      std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
  for (double& v : t.values) v = rng.uniform(-limit, limit);
}

// out[j] += sum_i in[i] * W[i][j]
void accumulate_vec_mat(std::span<const double> in, const Tensor& w,
                        std::span<double> out) {
  const std::size_t cols = w.cols();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double xi = in[i];
    if (xi == 0.0) continue;
    const double* row = &w.values[i * cols];
    for (std::size_t j = 0; j < cols; ++j) out[j] += xi * row[j];
  }
}

// W[i][j] += a[i] * b[j]
void accumulate_outer(std::span<const double> a, std::span<const double> b,
                      Tensor& w) {
  const std::size_t cols = w.cols();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    double* row = &w.values[i * cols];
    for (std::size_t j = 0; j < cols; ++j) row[j] += ai * b[j];
  }
}

// out[i] = sum_j W[i][j] * v[j]
void mat_vec(const Tensor& w, std::span<const double> v, std::span<double> out) {
  const std::size_t cols = w.cols();
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double* row = &w.values[i * cols];
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
}

void check_state(const ModelParams& p, const ModelState& s) {
  const std::size_t h = p.has_recurrence() ? p.hidden_dim : 0;
  const std::size_t c = p.kind == ModelKind::LSTM ? p.hidden_dim : 0;
  if (s.h.size() != h || s.c.size() != c)
    throw std::invalid_argument("model state does not match model kind");
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::LSTM: return "lstm";
    case ModelKind::RNN: return "rnn";
    case ModelKind::DNN: return "dnn";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  if (lower == "lstm") return ModelKind::LSTM;
  if (lower == "rnn") return ModelKind::RNN;
  if (lower == "dnn") return ModelKind::DNN;
  throw std::invalid_argument("unknown model kind: " + std::string(text));
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

bool ModelParams::all_finite() const {
  return std::all_of(tensors.begin(), tensors.end(),
                     [](const Tensor& t) { return t.all_finite(); });
}

ModelParams zeros_like(const ModelParams& like) {
  ModelParams out = like;
  for (auto& t : out.tensors) std::fill(t.values.begin(), t.values.end(), 0.0);
  return out;
}

void check_same_shapes(const ModelParams& a, const ModelParams& b) {
  if (a.tensors.size() != b.tensors.size())
    throw std::invalid_argument("parameter sets differ in tensor count");
  for (std::size_t i = 0; i < a.tensors.size(); ++i)
    if (a.tensors[i].shape != b.tensors[i].shape)
      throw std::invalid_argument("shape mismatch in tensor " + a.tensors[i].name);
}

void axpy(ModelParams& target, const ModelParams& other, double scale) {
  check_same_shapes(target, other);
  for (std::size_t i = 0; i < target.tensors.size(); ++i) {
    auto& dst = target.tensors[i].values;
    const auto& src = other.tensors[i].values;
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
  }
}

ModelParams init_model(ModelKind kind, std::size_t input_dim,
                       std::size_t hidden_dim, std::size_t n_actions,
                       std::uint64_t seed) {
  if (input_dim == 0 || hidden_dim == 0 || n_actions == 0)
    throw std::invalid_argument("model dimensions must be positive");

  ModelParams p;
  p.kind = kind;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.n_actions = n_actions;
  const std::size_t width = p.gate_width();

  p.tensors.emplace_back("W_x", std::vector<std::size_t>{input_dim, width});
  if (kind != ModelKind::DNN)
    p.tensors.emplace_back("W_h", std::vector<std::size_t>{hidden_dim, width});
  p.tensors.emplace_back("b", std::vector<std::size_t>{width});
  p.tensors.emplace_back("W_out", std::vector<std::size_t>{hidden_dim, n_actions});
  p.tensors.emplace_back("b_out", std::vector<std::size_t>{n_actions});

  Rng rng(seed);
  glorot_fill(p.w_x(), rng);
  if (kind != ModelKind::DNN) glorot_fill(p.w_h(), rng);
  glorot_fill(p.w_out(), rng);
  return p;
}

ModelState initial_state(const ModelParams& params) {
  ModelState s;
  if (params.has_recurrence()) s.h.assign(params.hidden_dim, 0.0);
  if (params.kind == ModelKind::LSTM) s.c.assign(params.hidden_dim, 0.0);
  return s;
}

namespace {

// One step, filling `cache` with everything backprop needs.
void step_into(const ModelParams& p, const ModelState& state,
               std::span<const double> x, StepCache& cache) {
  if (x.size() != p.input_dim)
    throw std::invalid_argument("feature vector has " + std::to_string(x.size()) +
                                " entries, model expects " +
                                std::to_string(p.input_dim));
  check_state(p, state);

  const std::size_t H = p.hidden_dim;
  cache.x.assign(x.begin(), x.end());
  cache.h_prev = state.h;
  cache.c_prev = state.c;

  std::vector<double> pre(p.bias().values);
  accumulate_vec_mat(x, p.w_x(), pre);
  if (p.has_recurrence()) accumulate_vec_mat(state.h, p.w_h(), pre);

  cache.gates.resize(pre.size());
  switch (p.kind) {
    case ModelKind::LSTM: {
      cache.c.resize(H);
      cache.h.resize(H);
      for (std::size_t j = 0; j < H; ++j) {
        const double i = sigmoid(pre[j]);
        const double f = sigmoid(pre[H + j]);
        const double g = std::tanh(pre[2 * H + j]);
        const double o = sigmoid(pre[3 * H + j]);
        cache.gates[j] = i;
        cache.gates[H + j] = f;
        cache.gates[2 * H + j] = g;
        cache.gates[3 * H + j] = o;
        cache.c[j] = f * state.c[j] + i * g;
        cache.h[j] = o * std::tanh(cache.c[j]);
      }
      break;
    }
    case ModelKind::RNN:
    case ModelKind::DNN:
      for (std::size_t j = 0; j < H; ++j) cache.gates[j] = std::tanh(pre[j]);
      cache.h = cache.gates;
      cache.c.clear();
      break;
  }

  cache.logits = p.b_out().values;
  accumulate_vec_mat(cache.h, p.w_out(), cache.logits);
}

ModelState state_after(const ModelParams& p, const StepCache& cache) {
  ModelState s;
  if (p.has_recurrence()) s.h = cache.h;
  if (p.kind == ModelKind::LSTM) s.c = cache.c;
  return s;
}

}  // namespace

StepOutput forward_step(const ModelParams& params, const ModelState& state,
                        std::span<const double> x) {
  StepCache cache;
  step_into(params, state, x, cache);
  return {state_after(params, cache), std::move(cache.logits)};
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

ForwardTrace forward_sequence(const ModelParams& params,
                              const std::vector<std::vector<double>>& inputs) {
  ForwardTrace trace;
  trace.steps.resize(inputs.size());
  ModelState state = initial_state(params);
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    step_into(params, state, inputs[t], trace.steps[t]);
    state = state_after(params, trace.steps[t]);
  }
  return trace;
}

ModelParams backward_sequence(const ModelParams& p, const ForwardTrace& trace,
                              const std::vector<std::vector<double>>& upstream) {
  if (trace.steps.size() != upstream.size())
    throw std::invalid_argument("sequence length " +
                                std::to_string(trace.steps.size()) +
                                " does not match upstream gradient length " +
                                std::to_string(upstream.size()));

  ModelParams grads = zeros_like(p);
  const std::size_t H = p.hidden_dim;
  const std::size_t width = p.gate_width();

  std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0);
  std::vector<double> dh(H), da(width), dh_rec(H);

  for (std::size_t t = trace.steps.size(); t-- > 0;) {
    const StepCache& s = trace.steps[t];
    const auto& dz = upstream[t];
    if (dz.size() != p.n_actions)
      throw std::invalid_argument("upstream gradient has wrong width");

    accumulate_outer(s.h, dz, grads.w_out());
    for (std::size_t k = 0; k < dz.size(); ++k) grads.b_out().values[k] += dz[k];

    mat_vec(p.w_out(), dz, dh);
    if (p.has_recurrence())
      for (std::size_t j = 0; j < H; ++j) dh[j] += dh_next[j];

    switch (p.kind) {
      case ModelKind::LSTM:
        for (std::size_t j = 0; j < H; ++j) {
          const double i = s.gates[j];
          const double f = s.gates[H + j];
          const double g = s.gates[2 * H + j];
          const double o = s.gates[3 * H + j];
          const double tc = std::tanh(s.c[j]);
          const double dc = dh[j] * o * (1.0 - tc * tc) + dc_next[j];
          da[j] = dc * g * i * (1.0 - i);
          da[H + j] = dc * s.c_prev[j] * f * (1.0 - f);
          da[2 * H + j] = dc * i * (1.0 - g * g);
          da[3 * H + j] = dh[j] * tc * o * (1.0 - o);
          dc_next[j] = dc * f;
        }
        break;
      case ModelKind::RNN:
      case ModelKind::DNN:
        for (std::size_t j = 0; j < H; ++j) da[j] = dh[j] * (1.0 - s.h[j] * s.h[j]);
        break;
    }

    accumulate_outer(s.x, da, grads.w_x());
    for (std::size_t k = 0; k < width; ++k) grads.bias().values[k] += da[k];
    if (p.has_recurrence()) {
      accumulate_outer(s.h_prev, da, grads.w_h());
      mat_vec(p.w_h(), da, dh_rec);
      dh_next = dh_rec;
    }
  }
  return grads;
}

ModelParams backward_sequence(const ModelParams& params,
                              const std::vector<std::vector<double>>& inputs,
                              const std::vector<std::vector<double>>& upstream) {
  if (inputs.size() != upstream.size())
    throw std::invalid_argument("inputs and upstream gradients differ in length");
  return backward_sequence(params, forward_sequence(params, inputs), upstream);
}

}  // namespace dialogctl
