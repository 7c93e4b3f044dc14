#pragma once

#include "dialact/rng.hpp"
#include "dialact/tensor.hpp"

#include <string>

namespace dialact {

enum class Gate : int { kOutput = 0, kInput = 1, kForget = 2, kCandidate = 3 };

// Parameters of one LSTM direction. The four gates are stacked in the order
// (o, i, f, g) so each gate occupies a contiguous block of hidden_dim rows:
//   w_x: 4H x D   input-to-gate
//   u_h: 4H x H   hidden-to-gate
//   b:   4H       gate bias
struct LstmParams {
  Mat w_x;
  Mat u_h;
  Vec b;

  static LstmParams zeros(Eigen::Index input_dim, Eigen::Index hidden_dim);

  Eigen::Index input_dim() const { return w_x.cols(); }
  Eigen::Index hidden_dim() const { return u_h.cols(); }

  auto gate_wx(Gate k) { return w_x.middleRows(static_cast<int>(k) * hidden_dim(), hidden_dim()); }
  auto gate_uh(Gate k) { return u_h.middleRows(static_cast<int>(k) * hidden_dim(), hidden_dim()); }
  auto gate_b(Gate k) { return b.segment(static_cast<int>(k) * hidden_dim(), hidden_dim()); }

  // Glorot-uniform per gate block; biases zero.
  void init_uniform(Rng& rng);

  // Exposes the twelve per-gate arrays (W_xo ... b_g) under `prefix`.
  void collect(LstmParams& grad, const std::string& prefix, ParamList& out);

  void check_finite() const;
};

struct CellState {
  Vec h;
  Vec c;

  static CellState zeros(Eigen::Index hidden_dim) {
    return {Vec::Zero(hidden_dim), Vec::Zero(hidden_dim)};
  }
};

// Intermediates of one cell evaluation kept for backprop.
struct LstmCellCache {
  Vec x;
  CellState prev;
  Vec gates;  // 4H activations o, i, f, g
  Vec c;
  Vec tanh_c;
};

CellState lstm_cell(const Vec& x, const CellState& prev, const LstmParams& p,
                    LstmCellCache* cache = nullptr);

// Backward through one cell. dh, dc are gradients w.r.t. the cell's outputs.
// Accumulates into grad; writes input and previous-state gradients.
void lstm_cell_backward(const LstmCellCache& cache, const LstmParams& p, const Vec& dh,
                        const Vec& dc, LstmParams& grad, Vec& dx, CellState& dprev);

// Cached activations for a whole sequence, stored at original positions.
struct LstmTrace {
  bool reversed = false;
  Mat x;       // T x D
  Mat gates;   // T x 4H
  Mat c;       // T x H
  Mat tanh_c;  // T x H
  Mat h;       // T x H
};

// Runs the cell from a zero state over the rows of `seq` (T x D), or over its
// reverse when `reversed`. Row t of the result is the hidden state at
// original position t.
Mat run_lstm(const Mat& seq, const LstmParams& p, bool reversed, LstmTrace* trace = nullptr);

// Backprop through time for run_lstm. d_h is T x H (gradient w.r.t. every
// returned hidden). Accumulates into grad and returns d_seq (T x D).
Mat run_lstm_backward(const LstmTrace& trace, const LstmParams& p, const Mat& d_h,
                      LstmParams& grad);

struct BiLstmOutput {
  Mat fwd;  // T x H, row t = forward hidden at t
  Mat bwd;  // T x H, row t = backward hidden at t
};

struct BiLstmTrace {
  LstmTrace fwd;
  LstmTrace bwd;
};

BiLstmOutput bilstm(const Mat& seq, const LstmParams& p_fwd, const LstmParams& p_bwd,
                    BiLstmTrace* trace = nullptr);

Mat bilstm_backward(const BiLstmTrace& trace, const LstmParams& p_fwd, const LstmParams& p_bwd,
                    const Mat& d_fwd, const Mat& d_bwd, LstmParams& g_fwd, LstmParams& g_bwd);

}  // namespace dialact
