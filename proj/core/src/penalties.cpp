#include "gtvmin/penalties.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace gtvmin {

namespace {
// Relative slack when testing membership in the dual-norm ball; dual updates
// land exactly on the boundary up to rounding.
constexpr double kDomainSlack = 1e-12;
}  // namespace

Eigen::VectorXd clip(const Eigen::VectorXd& v, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("clip level must be positive");
  const double norm = v.norm();
  if (norm >= gamma) return (gamma / norm) * v;
  return v;
}

double clip(double v, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("clip level must be positive");
  const double a = std::abs(v);
  if (a >= gamma) return (gamma / a) * v;
  return v;
}

GtvPenalty::GtvPenalty(const GtvPenalty& other)
    : kind_(other.kind_), Q_(other.Q_), Q_llt_(other.Q_llt_) {}

GtvPenalty& GtvPenalty::operator=(const GtvPenalty& other) {
  if (this != &other) {
    kind_ = other.kind_;
    Q_ = other.Q_;
    Q_llt_ = other.Q_llt_;
    std::lock_guard<std::mutex> lock(cache_mutex_);
    factor_cache_.clear();
  }
  return *this;
}

GtvPenalty GtvPenalty::norm2() {
  GtvPenalty p;
  p.kind_ = PenaltyKind::norm2;
  return p;
}

GtvPenalty GtvPenalty::norm1() {
  GtvPenalty p;
  p.kind_ = PenaltyKind::norm1;
  return p;
}

GtvPenalty GtvPenalty::quadratic() {
  GtvPenalty p;
  p.kind_ = PenaltyKind::quadratic;
  return p;
}

GtvPenalty GtvPenalty::quadratic_q(const Eigen::MatrixXd& Q) {
  if (Q.rows() != Q.cols()) throw std::invalid_argument("Q must be square");
  if (!Q.isApprox(Q.transpose(), 1e-12)) throw std::invalid_argument("Q must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff()))
    throw std::invalid_argument("Q must be positive definite");
  GtvPenalty p;
  p.kind_ = PenaltyKind::quadratic_q;
  p.Q_ = 0.5 * (Q + Q.transpose());
  p.Q_llt_.emplace(p.Q_);
  return p;
}

double GtvPenalty::evaluate(const Eigen::VectorXd& v) const {
  switch (kind_) {
    case PenaltyKind::norm2:
      return v.norm();
    case PenaltyKind::norm1:
      return v.lpNorm<1>();
    case PenaltyKind::quadratic:
      return 0.5 * v.squaredNorm();
    case PenaltyKind::quadratic_q:
      return 0.5 * v.dot(Q_ * v);
  }
  return 0.0;
}

Eigen::VectorXd GtvPenalty::dual_update(const Eigen::VectorXd& v, double sigma,
                                        double lamA) const {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (!(lamA > 0.0)) throw std::invalid_argument("lambda*A_e must be positive");
  switch (kind_) {
    case PenaltyKind::norm2:
      return clip(v, lamA);
    case PenaltyKind::norm1: {
      Eigen::VectorXd z = v;
      for (int j = 0; j < z.size(); ++j) z[j] = clip(z[j], lamA);
      return z;
    }
    case PenaltyKind::quadratic:
      return v / (1.0 + sigma / lamA);
    case PenaltyKind::quadratic_q: {
      std::shared_ptr<Eigen::LLT<Eigen::MatrixXd>> llt;
      {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        auto& slot = factor_cache_[{sigma, lamA}];
        if (!slot) {
          Eigen::MatrixXd A =
              (sigma / lamA) * Q_llt_->solve(Eigen::MatrixXd::Identity(Q_.rows(), Q_.cols())) +
              Eigen::MatrixXd::Identity(Q_.rows(), Q_.cols());
          slot = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(A);
        }
        llt = slot;
      }
      return llt->solve(v);
    }
  }
  return v;
}

ConjugateDomain GtvPenalty::conjugate_domain_ok(const Eigen::VectorXd& u, double lamA) const {
  if (!(lamA > 0.0)) throw std::invalid_argument("lambda*A_e must be positive");
  const double bound = lamA * (1.0 + kDomainSlack);
  switch (kind_) {
    case PenaltyKind::norm2:
      return {u.norm() <= bound, std::nullopt};
    case PenaltyKind::norm1:
      return {u.lpNorm<Eigen::Infinity>() <= bound, std::nullopt};
    case PenaltyKind::quadratic:
      return {true, u.squaredNorm() / (2.0 * lamA)};
    case PenaltyKind::quadratic_q:
      return {true, u.dot(Q_llt_->solve(u)) / (2.0 * lamA)};
  }
  return {true, std::nullopt};
}

double GtvPenalty::dual_norm(const Eigen::VectorXd& u) const {
  switch (kind_) {
    case PenaltyKind::norm2:
      return u.norm();
    case PenaltyKind::norm1:
      return u.lpNorm<Eigen::Infinity>();
    default:
      throw std::invalid_argument("dual norm is defined for norm penalties only");
  }
}

}  // namespace gtvmin
