#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "dialogctl/tensor.hpp"

namespace dialogctl {

enum class ModelKind : std::uint32_t { LSTM = 0, RNN = 1, DNN = 2 };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

/// Weights of a sequence policy with a softmax head.
///
/// Tensor order is fixed per kind:
///   LSTM: W_x (D x 4H), W_h (H x 4H), b (4H), W_out (H x A), b_out (A)
///   RNN:  W_x (D x H),  W_h (H x H),  b (H),  W_out (H x A), b_out (A)
///   DNN:  W_x (D x H),                b (H),  W_out (H x A), b_out (A)
/// LSTM gate blocks inside the 4H axis are ordered input, forget, cell, output.
struct ModelParams {
  ModelKind kind = ModelKind::LSTM;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t n_actions = 0;
  std::vector<Tensor> tensors;

  const Tensor& w_x() const { return tensors[0]; }
  const Tensor& w_h() const { return tensors[1]; }
  const Tensor& bias() const { return tensors[kind == ModelKind::DNN ? 1 : 2]; }
  const Tensor& w_out() const { return tensors[kind == ModelKind::DNN ? 2 : 3]; }
  const Tensor& b_out() const { return tensors[kind == ModelKind::DNN ? 3 : 4]; }
  Tensor& w_x() { return tensors[0]; }
  Tensor& w_h() { return tensors[1]; }
  Tensor& bias() { return tensors[kind == ModelKind::DNN ? 1 : 2]; }
  Tensor& w_out() { return tensors[kind == ModelKind::DNN ? 2 : 3]; }
  Tensor& b_out() { return tensors[kind == ModelKind::DNN ? 3 : 4]; }

  bool has_recurrence() const { return kind != ModelKind::DNN; }
  std::size_t gate_width() const {
    return kind == ModelKind::LSTM ? 4 * hidden_dim : hidden_dim;
  }
  std::size_t parameter_count() const;
  bool all_finite() const;

  bool operator==(const ModelParams&) const = default;
};

/// Same shapes as `like`, all values zero. Used for gradients and optimizer
/// accumulators.
ModelParams zeros_like(const ModelParams& like);

/// Adds `scale * other` into `target` element-wise; shapes must match.
void axpy(ModelParams& target, const ModelParams& other, double scale = 1.0);

void check_same_shapes(const ModelParams& a, const ModelParams& b);

/// Recurrent state; empty vectors for DNN.
struct ModelState {
  std::vector<double> h;
  std::vector<double> c;

  bool operator==(const ModelState&) const = default;
};

/// Glorot-uniform weights from a seeded generator, all biases zero
/// (including the LSTM forget gate).
ModelParams init_model(ModelKind kind, std::size_t input_dim,
                       std::size_t hidden_dim, std::size_t n_actions,
                       std::uint64_t seed);

/// Zero state at dialog start.
ModelState initial_state(const ModelParams& params);

struct StepOutput {
  ModelState state;
  std::vector<double> logits;
};

StepOutput forward_step(const ModelParams& params, const ModelState& state,
                        std::span<const double> x);

std::vector<double> softmax(std::span<const double> logits);

/// Per-step activations kept for backpropagation through time.
struct StepCache {
  std::vector<double> x;
  std::vector<double> h_prev, c_prev;
  std::vector<double> gates;  // post-nonlinearity, gate_width() entries
  std::vector<double> c, h;
  std::vector<double> logits;
};

struct ForwardTrace {
  std::vector<StepCache> steps;
};

/// Runs a whole sequence from the zero state.
ForwardTrace forward_sequence(const ModelParams& params,
                              const std::vector<std::vector<double>>& inputs);

/// Exact gradients of sum_t <upstream[t], logits[t]> with respect to every
/// parameter, given a trace recorded with the same params.
ModelParams backward_sequence(const ModelParams& params, const ForwardTrace& trace,
                              const std::vector<std::vector<double>>& upstream);

/// Convenience overload that replays the forward pass first.
ModelParams backward_sequence(const ModelParams& params,
                              const std::vector<std::vector<double>>& inputs,
                              const std::vector<std::vector<double>>& upstream);

}  // namespace dialogctl
