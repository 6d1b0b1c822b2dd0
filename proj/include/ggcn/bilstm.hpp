#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ggcn/rng.hpp"
#include "ggcn/tensor.hpp"

namespace ggcn {

// One LSTM direction. Weight matrices are stored input-major ({in, hidden}
// and {hidden, hidden}) so a step is x*W + h*U + b.
struct LstmDirectionParams {
  Tensor w_input, u_input, b_input;
  Tensor w_forget, u_forget, b_forget;
  Tensor w_output, u_output, b_output;
  Tensor w_cell, u_cell, b_cell;

  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor>>& out) const {
    out.emplace_back(prefix + ".w_input", w_input);
    out.emplace_back(prefix + ".u_input", u_input);
    out.emplace_back(prefix + ".b_input", b_input);
    out.emplace_back(prefix + ".w_forget", w_forget);
    out.emplace_back(prefix + ".u_forget", u_forget);
    out.emplace_back(prefix + ".b_forget", b_forget);
    out.emplace_back(prefix + ".w_output", w_output);
    out.emplace_back(prefix + ".u_output", u_output);
    out.emplace_back(prefix + ".b_output", b_output);
    out.emplace_back(prefix + ".w_cell", w_cell);
    out.emplace_back(prefix + ".u_cell", u_cell);
    out.emplace_back(prefix + ".b_cell", b_cell);
  }
};

struct BiLstmParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;  // per direction; output width is twice this
  LstmDirectionParams forward_dir;
  LstmDirectionParams backward_dir;

  // Uniform [-k, k] with k = 1/sqrt(hidden); forget-gate bias shifted by +1.
  static BiLstmParams init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
    BiLstmParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    double k = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    auto mat = [&](std::size_t r, std::size_t c) {
      Tensor t = Tensor::zeros({r, c}, true);
      for (double& v : t.values()) v = rng.uniform(-k, k);
      return t;
    };
    auto vec = [&](double shift) {
      Tensor t = Tensor::zeros({hidden_dim}, true);
      for (double& v : t.values()) v = rng.uniform(-k, k) + shift;
      return t;
    };
    auto dir = [&]() {
      LstmDirectionParams d;
      d.w_input = mat(input_dim, hidden_dim);
      d.u_input = mat(hidden_dim, hidden_dim);
      d.b_input = vec(0.0);
      d.w_forget = mat(input_dim, hidden_dim);
      d.u_forget = mat(hidden_dim, hidden_dim);
      d.b_forget = vec(1.0);
      d.w_output = mat(input_dim, hidden_dim);
      d.u_output = mat(hidden_dim, hidden_dim);
      d.b_output = vec(0.0);
      d.w_cell = mat(input_dim, hidden_dim);
      d.u_cell = mat(hidden_dim, hidden_dim);
      d.b_cell = vec(0.0);
      return d;
    };
    p.forward_dir = dir();
    p.backward_dir = dir();
    return p;
  }

  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor>>& out) const {
    forward_dir.collect(prefix + ".fw", out);
    backward_dir.collect(prefix + ".bw", out);
  }
};

namespace detail {

inline std::vector<Tensor> lstm_direction(const Tensor& rows,
                                          const std::vector<std::size_t>& order,
                                          const LstmDirectionParams& p,
                                          std::size_t hidden_dim) {
  Tensor h = Tensor::zeros({hidden_dim});
  Tensor c = Tensor::zeros({hidden_dim});
  std::vector<Tensor> states(order.size());
  for (std::size_t step = 0; step < order.size(); ++step) {
    Tensor x = select_row(rows, order[step]);
    Tensor in_gate = sigmoid(add(add(matmul(x, p.w_input), matmul(h, p.u_input)), p.b_input));
    Tensor forget_gate =
        sigmoid(add(add(matmul(x, p.w_forget), matmul(h, p.u_forget)), p.b_forget));
    Tensor out_gate =
        sigmoid(add(add(matmul(x, p.w_output), matmul(h, p.u_output)), p.b_output));
    Tensor cell_in = tanh(add(add(matmul(x, p.w_cell), matmul(h, p.u_cell)), p.b_cell));
    c = add(elementwise_mul(forget_gate, c), elementwise_mul(in_gate, cell_in));
    h = elementwise_mul(out_gate, tanh(c));
    states[order[step]] = h;
  }
  return states;
}

}  // namespace detail

// Runs the recurrence left-to-right and right-to-left from zero initial
// states; output row i is [forward_i ; backward_i].
inline Tensor bilstm(const Tensor& rows, const BiLstmParams& params) {
  if (rows.rank() != 2 || rows.dim(1) != params.input_dim) {
    throw std::runtime_error("bilstm: input shape " + shape_str(rows.shape()) +
                             " does not match input dim " + std::to_string(params.input_dim));
  }
  std::size_t n = rows.dim(0);
  std::vector<std::size_t> fwd_order(n), bwd_order(n);
  for (std::size_t i = 0; i < n; ++i) {
    fwd_order[i] = i;
    bwd_order[i] = n - 1 - i;
  }
  auto fwd = detail::lstm_direction(rows, fwd_order, params.forward_dir, params.hidden_dim);
  auto bwd = detail::lstm_direction(rows, bwd_order, params.backward_dir, params.hidden_dim);
  std::vector<Tensor> out_rows;
  out_rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out_rows.push_back(concat({fwd[i], bwd[i]}));
  return stack_rows(out_rows);
}

}  // namespace ggcn
