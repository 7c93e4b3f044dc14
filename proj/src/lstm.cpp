#include "dialact/lstm.hpp"

#include "dialact/errors.hpp"
#include "dialact/functional.hpp"

#include <array>
#include <cmath>
#include <string>

namespace dialact {

namespace {

constexpr std::array<const char*, 4> kGateSuffix = {"o", "i", "f", "g"};

void check_dims(const Mat& seq, const LstmParams& p, const char* op) {
  if (seq.cols() != p.input_dim())
    throw ShapeError(std::string(op) + ": input dim " + std::to_string(seq.cols()) +
                     " does not match parameters " + std::to_string(p.input_dim()));
}

void fill_uniform(Eigen::Ref<Mat> m, double scale, Rng& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-scale, scale);
}

// In place: sigmoid on o, i, f blocks, tanh on g.
template <class Row>
void activate(Row&& a, Eigen::Index H) {
  for (Eigen::Index k = 0; k < 3 * H; ++k) a[k] = sigmoid(a[k]);
  for (Eigen::Index k = 3 * H; k < 4 * H; ++k) a[k] = std::tanh(a[k]);
}

}  // namespace

LstmParams LstmParams::zeros(Eigen::Index input_dim, Eigen::Index hidden_dim) {
  if (input_dim <= 0 || hidden_dim <= 0) throw InvalidArgument("LstmParams: dims must be > 0");
  return {Mat::Zero(4 * hidden_dim, input_dim), Mat::Zero(4 * hidden_dim, hidden_dim),
          Vec::Zero(4 * hidden_dim)};
}

void LstmParams::init_uniform(Rng& rng) {
  const auto H = hidden_dim();
  const auto D = input_dim();
  const double sx = std::sqrt(6.0 / static_cast<double>(H + D));
  const double sh = std::sqrt(6.0 / static_cast<double>(H + H));
  for (int k = 0; k < 4; ++k) {
    fill_uniform(w_x.middleRows(k * H, H), sx, rng);
    fill_uniform(u_h.middleRows(k * H, H), sh, rng);
  }
  b.setZero();
}

void LstmParams::collect(LstmParams& grad, const std::string& prefix, ParamList& out) {
  const auto H = static_cast<std::size_t>(hidden_dim());
  const auto D = static_cast<std::size_t>(input_dim());
  for (std::size_t k = 0; k < 4; ++k) {
    out.push_back({prefix + "W_x" + kGateSuffix[k], H, D,
                   std::span<double>(w_x.data() + k * H * D, H * D),
                   std::span<double>(grad.w_x.data() + k * H * D, H * D)});
  }
  for (std::size_t k = 0; k < 4; ++k) {
    out.push_back({prefix + "U_h" + kGateSuffix[k], H, H,
                   std::span<double>(u_h.data() + k * H * H, H * H),
                   std::span<double>(grad.u_h.data() + k * H * H, H * H)});
  }
  for (std::size_t k = 0; k < 4; ++k) {
    out.push_back({prefix + "b_" + kGateSuffix[k], H, 1, std::span<double>(b.data() + k * H, H),
                   std::span<double>(grad.b.data() + k * H, H)});
  }
}

void LstmParams::check_finite() const {
  if (!w_x.allFinite() || !u_h.allFinite() || !b.allFinite())
    throw NumericalError("LstmParams: non-finite entry");
}

CellState lstm_cell(const Vec& x, const CellState& prev, const LstmParams& p,
                    LstmCellCache* cache) {
  const auto H = p.hidden_dim();
  if (x.size() != p.input_dim() || prev.h.size() != H || prev.c.size() != H)
    throw ShapeError("lstm_cell: dimension mismatch (x " + std::to_string(x.size()) + ", h " +
                     std::to_string(prev.h.size()) + ", c " + std::to_string(prev.c.size()) +
                     " vs D=" + std::to_string(p.input_dim()) + ", H=" + std::to_string(H) + ")");
  Vec a = p.w_x * x + p.u_h * prev.h + p.b;
  activate(a, H);
  CellState next;
  next.c = a.segment(2 * H, H).cwiseProduct(prev.c) + a.segment(H, H).cwiseProduct(a.segment(3 * H, H));
  Vec tc = next.c.array().tanh().matrix();
  next.h = a.segment(0, H).cwiseProduct(tc);
  if (cache) {
    cache->x = x;
    cache->prev = prev;
    cache->gates = std::move(a);
    cache->c = next.c;
    cache->tanh_c = std::move(tc);
  }
  return next;
}

void lstm_cell_backward(const LstmCellCache& cache, const LstmParams& p, const Vec& dh,
                        const Vec& dc_in, LstmParams& grad, Vec& dx, CellState& dprev) {
  const auto H = p.hidden_dim();
  const auto o = cache.gates.segment(0, H).array();
  const auto i = cache.gates.segment(H, H).array();
  const auto f = cache.gates.segment(2 * H, H).array();
  const auto g = cache.gates.segment(3 * H, H).array();
  const auto tc = cache.tanh_c.array();

  const Eigen::ArrayXd dc = dc_in.array() + dh.array() * o * (1.0 - tc * tc);
  Vec da(4 * H);
  da.segment(0, H) = (dh.array() * tc * o * (1.0 - o)).matrix();
  da.segment(H, H) = (dc * g * i * (1.0 - i)).matrix();
  da.segment(2 * H, H) = (dc * cache.prev.c.array() * f * (1.0 - f)).matrix();
  da.segment(3 * H, H) = (dc * i * (1.0 - g * g)).matrix();

  grad.w_x.noalias() += da * cache.x.transpose();
  grad.u_h.noalias() += da * cache.prev.h.transpose();
  grad.b += da;
  dx = p.w_x.transpose() * da;
  dprev.h = p.u_h.transpose() * da;
  dprev.c = (dc * f).matrix();
}

Mat run_lstm(const Mat& seq, const LstmParams& p, bool reversed, LstmTrace* trace) {
  const auto T = seq.rows();
  if (T == 0) throw InvalidArgument("run_lstm: empty sequence");
  check_dims(seq, p, "run_lstm");
  const auto H = p.hidden_dim();

  Mat gates = seq * p.w_x.transpose();
  gates.rowwise() += p.b.transpose();
  Mat c(T, H), tanh_c(T, H), h(T, H);

  RowVec h_prev = RowVec::Zero(H);
  RowVec c_prev = RowVec::Zero(H);
  for (Eigen::Index s = 0; s < T; ++s) {
    const Eigen::Index t = reversed ? T - 1 - s : s;
    auto a = gates.row(t);
    if (s > 0) a.noalias() += h_prev * p.u_h.transpose();
    activate(a, H);
    c.row(t) = a.segment(2 * H, H).cwiseProduct(c_prev) + a.segment(H, H).cwiseProduct(a.segment(3 * H, H));
    tanh_c.row(t) = c.row(t).array().tanh().matrix();
    h.row(t) = a.segment(0, H).cwiseProduct(tanh_c.row(t));
    h_prev = h.row(t);
    c_prev = c.row(t);
  }
  if (trace) {
    trace->reversed = reversed;
    trace->x = seq;
    trace->gates = std::move(gates);
    trace->c = std::move(c);
    trace->tanh_c = std::move(tanh_c);
    trace->h = h;
  }
  return h;
}

Mat run_lstm_backward(const LstmTrace& tr, const LstmParams& p, const Mat& d_h, LstmParams& grad) {
  const auto T = tr.h.rows();
  const auto H = p.hidden_dim();
  if (d_h.rows() != T || d_h.cols() != H) throw ShapeError("run_lstm_backward: d_h shape mismatch");

  Mat d_a(T, 4 * H);
  Mat h_prev = Mat::Zero(T, H);
  RowVec dh_next = RowVec::Zero(H);
  RowVec dc_next = RowVec::Zero(H);
  for (Eigen::Index s = T - 1; s >= 0; --s) {
    const Eigen::Index t = tr.reversed ? T - 1 - s : s;
    const Eigen::Index prev = tr.reversed ? t + 1 : t - 1;
    const auto gates = tr.gates.row(t).array();
    const auto o = gates.segment(0, H);
    const auto i = gates.segment(H, H);
    const auto f = gates.segment(2 * H, H);
    const auto g = gates.segment(3 * H, H);
    const auto tc = tr.tanh_c.row(t).array();

    const Eigen::ArrayXXd dh = (d_h.row(t) + dh_next).array();
    const Eigen::ArrayXXd dc = dc_next.array() + dh * o * (1.0 - tc * tc);
    auto da = d_a.row(t);
    da.segment(0, H) = (dh * tc * o * (1.0 - o)).matrix();
    da.segment(H, H) = (dc * g * i * (1.0 - i)).matrix();
    if (s > 0) {
      da.segment(2 * H, H) = (dc * tr.c.row(prev).array() * f * (1.0 - f)).matrix();
      h_prev.row(t) = tr.h.row(prev);
    } else {
      da.segment(2 * H, H).setZero();
    }
    da.segment(3 * H, H) = (dc * i * (1.0 - g * g)).matrix();

    dh_next.noalias() = da * p.u_h;
    dc_next = (dc * f).matrix();
  }
  grad.w_x.noalias() += d_a.transpose() * tr.x;
  grad.u_h.noalias() += d_a.transpose() * h_prev;
  grad.b += d_a.colwise().sum().transpose();
  return d_a * p.w_x;
}

BiLstmOutput bilstm(const Mat& seq, const LstmParams& p_fwd, const LstmParams& p_bwd,
                    BiLstmTrace* trace) {
  if (p_fwd.hidden_dim() != p_bwd.hidden_dim())
    throw ShapeError("bilstm: forward and backward hidden dims differ");
  BiLstmOutput out;
  out.fwd = run_lstm(seq, p_fwd, false, trace ? &trace->fwd : nullptr);
  out.bwd = run_lstm(seq, p_bwd, true, trace ? &trace->bwd : nullptr);
  return out;
}

Mat bilstm_backward(const BiLstmTrace& trace, const LstmParams& p_fwd, const LstmParams& p_bwd,
                    const Mat& d_fwd, const Mat& d_bwd, LstmParams& g_fwd, LstmParams& g_bwd) {
  Mat dx = run_lstm_backward(trace.fwd, p_fwd, d_fwd, g_fwd);
  dx += run_lstm_backward(trace.bwd, p_bwd, d_bwd, g_bwd);
  return dx;
}

}  // namespace dialact
