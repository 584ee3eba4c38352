#pragma once

#include <mutex>
#include <optional>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Core>

// Local loss functions and their operator interface: evaluation, gradient,
// primal update (proximity operator) and, where available, the convex
// conjugate used by the primal-dual gap.

namespace gtvmin {

// Raised when an operation is not defined for a loss or penalty kind
// (e.g. the gradient of the lasso loss).
struct UnsupportedOperation : std::logic_error {
  using std::logic_error::logic_error;
};

struct LocalDataset {
  Eigen::MatrixXd X;  // m x d
  Eigen::VectorXd y;  // length m

  int sample_count() const { return static_cast<int>(X.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }
};

enum class LossKind { trivial, squared, logistic, ridge, lasso };

// Result of an inner iterative prox solve; closed-form kinds always report
// zero iterations and residual.
struct ProxStats {
  int iterations = 0;
  double residual = 0.0;
  bool converged = true;
};

class LocalLoss {
 public:
  static LocalLoss trivial(int dim);
  static LocalLoss squared(LocalDataset data);
  static LocalLoss logistic(LocalDataset data);  // labels in {-1,+1}
  static LocalLoss ridge(LocalDataset data, double eta);
  static LocalLoss lasso(LocalDataset data, double eta);

  LossKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double eta() const { return eta_; }
  const LocalDataset& dataset() const { return data_; }
  bool differentiable() const { return kind_ != LossKind::lasso; }

  double evaluate(const Eigen::VectorXd& v) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& v) const;

  // argmin_z loss(z) + (1/2tau) ||z - v||^2. Closed form for trivial,
  // squared and ridge; damped Newton for logistic; proximal gradient for
  // lasso (inner tolerance 1e-10, at most 500 inner iterations).
  Eigen::VectorXd primal_update(const Eigen::VectorXd& v, double tau,
                                ProxStats* stats = nullptr) const;

  // Convex conjugate loss*(z). Supported for trivial (indicator of {0},
  // returning +inf off it) and for squared/ridge with positive definite
  // quadratic part; nullopt means the conjugate is not available and callers
  // must degrade gracefully.
  std::optional<double> conjugate(const Eigen::VectorXd& z) const;
  bool conjugate_supported() const;

  // Gradient Lipschitz bound where analytic: squared 2*lmax(Q), ridge
  // 2*lmax(Q)+2*eta, logistic lmax(Q)/2, trivial 0. nullopt for lasso.
  std::optional<double> lipschitz_bound() const;

  // Quadratic structure Q = X^T X / m (+ eta I for ridge), ybar = X^T y / m.
  // Only meaningful for squared/ridge; trivial exposes zero matrices.
  const Eigen::MatrixXd& quadratic_term() const { return Q_; }
  const Eigen::VectorXd& linear_term() const { return ybar_; }
  double min_eigenvalue() const { return eig_min_; }
  double max_eigenvalue() const { return eig_max_; }

  LocalLoss(const LocalLoss& other);
  LocalLoss& operator=(const LocalLoss& other);
  LocalLoss(LocalLoss&&) = default;
  LocalLoss& operator=(LocalLoss&&) = default;

 private:
  LocalLoss() = default;
  void init_quadratic();
  Eigen::VectorXd prox_quadratic(const Eigen::VectorXd& v, double tau) const;
  Eigen::VectorXd prox_logistic(const Eigen::VectorXd& v, double tau, ProxStats* stats) const;
  Eigen::VectorXd prox_lasso(const Eigen::VectorXd& v, double tau, ProxStats* stats) const;

  LossKind kind_ = LossKind::trivial;
  int dim_ = 0;
  double eta_ = 0.0;
  LocalDataset data_;

  // Cached quadratic structure (squared/ridge; zero for trivial).
  Eigen::MatrixXd Q_;
  Eigen::VectorXd ybar_;
  double const_term_ = 0.0;  // y^T y / m
  double eig_min_ = 0.0;
  double eig_max_ = 0.0;
  std::optional<Eigen::LLT<Eigen::MatrixXd>> Q_llt_;  // set when Q is PD

  // Factorization of (I + 2 tau Q) for the closed-form prox, filled on first
  // use for a given tau. Concurrent readers, single writer, idempotent fill.
  mutable std::mutex prox_mutex_;
  mutable double prox_tau_ = -1.0;
  mutable Eigen::LLT<Eigen::MatrixXd> prox_llt_;
};

}  // namespace gtvmin
