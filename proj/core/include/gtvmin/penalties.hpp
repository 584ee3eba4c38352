#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Core>

// GTV penalty functions phi, their convex conjugates and the edge-wise dual
// update operators (proximity operators of phi*).

namespace gtvmin {

// Euclidean clipping: v scaled to norm gamma when ||v||_2 >= gamma.
Eigen::VectorXd clip(const Eigen::VectorXd& v, double gamma);
double clip(double v, double gamma);

enum class PenaltyKind { norm2, norm1, quadratic, quadratic_q };

struct ConjugateDomain {
  bool ok;
  // lamA * phi*(u / lamA) for the quadratic kinds; nullopt for norm kinds
  // (their conjugate is an indicator).
  std::optional<double> value;
};

class GtvPenalty {
 public:
  static GtvPenalty norm2();
  static GtvPenalty norm1();
  static GtvPenalty quadratic();
  // Q must be symmetric positive definite; rejected otherwise.
  static GtvPenalty quadratic_q(const Eigen::MatrixXd& Q);

  PenaltyKind kind() const { return kind_; }
  bool is_norm() const { return kind_ == PenaltyKind::norm2 || kind_ == PenaltyKind::norm1; }

  double evaluate(const Eigen::VectorXd& v) const;

  // argmin_z lamA phi*(z/lamA) + (1/2sigma)||v - z||^2 with lamA = lambda*A_e.
  Eigen::VectorXd dual_update(const Eigen::VectorXd& v, double sigma, double lamA) const;

  // Dual feasibility test ||u||_* <= lamA for the norm kinds; for quadratic
  // kinds always ok, with the conjugate value for the primal-dual gap.
  ConjugateDomain conjugate_domain_ok(const Eigen::VectorXd& u, double lamA) const;

  // Dual norm of the penalty (norm kinds only): l2 for norm2, linf for norm1.
  double dual_norm(const Eigen::VectorXd& u) const;

  GtvPenalty(const GtvPenalty&);
  GtvPenalty& operator=(const GtvPenalty&);
  GtvPenalty(GtvPenalty&&) = default;
  GtvPenalty& operator=(GtvPenalty&&) = default;

 private:
  GtvPenalty() = default;

  PenaltyKind kind_ = PenaltyKind::norm2;
  Eigen::MatrixXd Q_;
  std::optional<Eigen::LLT<Eigen::MatrixXd>> Q_llt_;

  // Factorizations of ((sigma/lamA) Q^{-1} + I), one per distinct
  // (sigma, lamA) pair; built lazily, idempotent fill under the mutex.
  mutable std::mutex cache_mutex_;
  mutable std::map<std::pair<double, double>, std::shared_ptr<Eigen::LLT<Eigen::MatrixXd>>>
      factor_cache_;
};

}  // namespace gtvmin
