#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sgdlab/distribution.hpp"
#include "sgdlab/sgd_engine.hpp"

namespace sgdlab {

// Second-moment recursions of constant-stepsize SGD under Gaussian features,
// written in the eigenbasis of H. Everything here relies on the closed-form
// Gaussian fourth moment; other feature distributions are not supported.

enum class ChainKind {
  kBias,        ///< B_t = E[beta_t^bias (x) beta_t^bias], B_0 = beta_0 beta_0^T
  kVariance,    ///< C_t = E[beta_t^var (x) beta_t^var], C_0 = 0
  kPartialSum,  ///< S_t = B_0 + ... + B_t
};

struct CovarianceState {
  Matrix matrix;
  std::size_t step = 0;
  ChainKind kind = ChainKind::kBias;

  /// Step-0 state of the given chain for (model, cfg).
  static CovarianceState initial(ChainKind kind, const RegressionModel& model,
                                 const SgdConfig& cfg);
};

/// (I - gamma T)∘A = E[(I - gamma x x^T) A (I - gamma x x^T)]
///                = A - gamma (HA + AH) + gamma^2 M∘A.
Matrix apply_contraction(const Spectrum& spec, double gamma, const Matrix& a);

/// (I - gamma T~)∘A = (I - gamma H) A (I - gamma H).
Matrix apply_deterministic_contraction(const Spectrum& spec, double gamma, const Matrix& a);

/// Advances `state` by `steps` steps of its chain's recursion:
///   B_t = (I - gamma T)∘B_{t-1}
///   C_t = (I - gamma T)∘C_{t-1} + gamma^2 Sigma
///   S_t = (I - gamma T)∘S_{t-1} + B_0
/// Throws InvariantError if the result is not PSD within tolerance and
/// DivergenceError if it stops being finite.
CovarianceState evolve(CovarianceState state, const RegressionModel& model,
                       const SgdConfig& cfg, std::size_t steps);

/// Runs the chain until successive traces differ by < 1e-12 relative, capped
/// at `max_steps`; approximates C_inf or S_inf.
CovarianceState steady_state(ChainKind kind, const RegressionModel& model,
                             const SgdConfig& cfg, std::size_t max_steps = 1'000'000);

struct ExactRisk {
  double total = 0.0;
  double bias = 0.0;
  double variance = 0.0;
};

/// Which second-moment map drives the recursion. kDeterministic replaces
/// M∘A by HAH, i.e. the gradient-descent-like contraction.
enum class MomentOperator { kGaussian, kDeterministic };

/// Exact E[L(w_bar)] - L(w*) for the average of w_s, ..., w_{s+N-1}.
///
/// Uses E[beta_k | beta_t] = (I - gamma H)^{k-t} beta_t, so that
///   risk = 1/(2N^2) sum_t <H (I + 2 sum_{j=1}^{m_t} (I - gamma H)^j), D_t>
/// with m_t = s+N-1-t and D_t the second moment at step t. In the eigenbasis
/// only the diagonals of B_t and C_t enter, and the Gaussian recursion maps
/// diagonals to diagonals, so cost is O((s+N) d). The total is accumulated
/// from its own chain (D_0 = B_0, driven by Sigma), independently of the bias
/// and variance chains.
///
/// Requires a well-specified model. Throws DivergenceError when the moments
/// stop being finite.
ExactRisk exact_risk(const RegressionModel& model, const SgdConfig& cfg,
                     MomentOperator op = MomentOperator::kGaussian);

/// One PSD-order relation tracked over steps t = 0..N.
struct OrderCheck {
  std::string name;
  bool binding = true;         ///< counts towards OrderReport::passed()
  std::vector<double> margins; ///< normalized PSD margin per step
  double worst = 0.0;
  std::size_t worst_step = 0;

  bool passed() const noexcept { return worst >= -kPsdTolerance; }
};

struct OrderReport {
  std::vector<OrderCheck> checks;

  bool passed() const noexcept;
  const OrderCheck* find(const std::string& name) const;
};

/// Evolves C_t for t = 0..N and checks, per step,
///   monotone:          C_{t-1} <= C_t
///   crude_upper:       C_t <= gamma sigma^2 / (1 - gamma alpha tr H) I
///   refined_upper_t:   C_t <= gamma sigma^2 / (1 - gamma alpha tr H) (I - (I - gamma H)^t)
///   refined_upper_2t:  same with exponent 2t (recorded, non-binding)
///   lower_2t:          C_t >= gamma sigma^2 / 2 (I - (I - gamma H)^{2t})
/// plus limit_crude_upper on C_inf. Requires a well-specified model and
/// gamma alpha tr H < 1.
OrderReport check_variance_chain_order(const RegressionModel& model,
                                       const SgdConfig& cfg, double alpha = 3.0);

/// Evolves S_t for t = 0..N and checks monotonicity and
///   S_t <= sum_{k<=t} (I-gH)^k B_0 (I-gH)^k
///          + gamma alpha tr(B_0) / (1 - gamma alpha tr H) sum_{k<=t} (I-gH)^{2k} H,
/// plus limit_moment_bound: M∘S_inf <= alpha tr(B_0) / (gamma (1 - gamma alpha tr H)) H.
/// Requires gamma alpha tr H < 1.
OrderReport check_partial_sum_order(const RegressionModel& model,
                                    const SgdConfig& cfg, double alpha = 3.0);

}  // namespace sgdlab
