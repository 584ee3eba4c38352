#include "gtvmin/losses.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace gtvmin {

namespace {

constexpr double kInnerTol = 1e-10;
constexpr int kInnerMaxIters = 500;
constexpr double kPdTol = 1e-10;  // positive-definiteness threshold, relative

// log(1 + exp(-t)) without overflow
double softplus_neg(double t) {
  if (t < -40.0) return -t;
  if (t > 40.0) return std::exp(-t);
  return std::log1p(std::exp(-t));
}

double sigmoid(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

void check_dim(const LocalLoss& loss, const Eigen::VectorXd& v) {
  if (static_cast<int>(v.size()) != loss.dim())
    throw std::invalid_argument("parameter vector has wrong dimension");
}

}  // namespace

LocalLoss::LocalLoss(const LocalLoss& other)
    : kind_(other.kind_),
      dim_(other.dim_),
      eta_(other.eta_),
      data_(other.data_),
      Q_(other.Q_),
      ybar_(other.ybar_),
      const_term_(other.const_term_),
      eig_min_(other.eig_min_),
      eig_max_(other.eig_max_),
      Q_llt_(other.Q_llt_) {}

LocalLoss& LocalLoss::operator=(const LocalLoss& other) {
  if (this != &other) {
    kind_ = other.kind_;
    dim_ = other.dim_;
    eta_ = other.eta_;
    data_ = other.data_;
    Q_ = other.Q_;
    ybar_ = other.ybar_;
    const_term_ = other.const_term_;
    eig_min_ = other.eig_min_;
    eig_max_ = other.eig_max_;
    Q_llt_ = other.Q_llt_;
    prox_tau_ = -1.0;
  }
  return *this;
}

LocalLoss LocalLoss::trivial(int dim) {
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  LocalLoss loss;
  loss.kind_ = LossKind::trivial;
  loss.dim_ = dim;
  loss.Q_ = Eigen::MatrixXd::Zero(dim, dim);
  loss.ybar_ = Eigen::VectorXd::Zero(dim);
  return loss;
}

void LocalLoss::init_quadratic() {
  const int m = data_.sample_count();
  const int d = data_.dim();
  if (m < 1) throw std::invalid_argument("empty dataset is only legal for the trivial loss");
  if (data_.y.size() != m) throw std::invalid_argument("label count does not match sample count");
  if (!data_.X.allFinite() || !data_.y.allFinite())
    throw std::invalid_argument("dataset contains non-finite entries");
  dim_ = d;
  Q_ = data_.X.transpose() * data_.X / static_cast<double>(m);
  if (kind_ == LossKind::ridge) Q_ += eta_ * Eigen::MatrixXd::Identity(d, d);
  ybar_ = data_.X.transpose() * data_.y / static_cast<double>(m);
  const_term_ = data_.y.squaredNorm() / static_cast<double>(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q_, Eigen::EigenvaluesOnly);
  eig_min_ = eig.eigenvalues().minCoeff();
  eig_max_ = eig.eigenvalues().maxCoeff();
  if ((kind_ == LossKind::squared || kind_ == LossKind::ridge) &&
      eig_min_ > kPdTol * std::max(1.0, eig_max_)) {
    Q_llt_.emplace(Q_);
  }
}

LocalLoss LocalLoss::squared(LocalDataset data) {
  LocalLoss loss;
  loss.kind_ = LossKind::squared;
  loss.data_ = std::move(data);
  loss.init_quadratic();
  return loss;
}

LocalLoss LocalLoss::logistic(LocalDataset data) {
  for (int r = 0; r < data.sample_count(); ++r) {
    if (data.y[r] != 1.0 && data.y[r] != -1.0)
      throw std::invalid_argument("logistic labels must be in {-1,+1}");
  }
  LocalLoss loss;
  loss.kind_ = LossKind::logistic;
  loss.data_ = std::move(data);
  loss.init_quadratic();
  return loss;
}

LocalLoss LocalLoss::ridge(LocalDataset data, double eta) {
  if (eta < 0.0) throw std::invalid_argument("eta must be nonnegative");
  LocalLoss loss;
  loss.kind_ = LossKind::ridge;
  loss.eta_ = eta;
  loss.data_ = std::move(data);
  loss.init_quadratic();
  return loss;
}

LocalLoss LocalLoss::lasso(LocalDataset data, double eta) {
  if (eta < 0.0) throw std::invalid_argument("eta must be nonnegative");
  LocalLoss loss;
  loss.kind_ = LossKind::lasso;
  loss.eta_ = eta;
  loss.data_ = std::move(data);
  loss.init_quadratic();
  // Q_ holds the plain X^T X / m part for lasso; eta enters via the l1 term.
  return loss;
}

double LocalLoss::evaluate(const Eigen::VectorXd& v) const {
  check_dim(*this, v);
  switch (kind_) {
    case LossKind::trivial:
      return 0.0;
    case LossKind::squared:
    case LossKind::ridge:
      // v^T Q v - 2 ybar^T v + y^T y / m; ridge's Q already carries eta I.
      return v.dot(Q_ * v) - 2.0 * ybar_.dot(v) + const_term_;
    case LossKind::lasso:
      return v.dot(Q_ * v) - 2.0 * ybar_.dot(v) + const_term_ + eta_ * v.lpNorm<1>();
    case LossKind::logistic: {
      double total = 0.0;
      for (int r = 0; r < data_.sample_count(); ++r) {
        total += softplus_neg(data_.y[r] * data_.X.row(r).dot(v));
      }
      return total / data_.sample_count();
    }
  }
  return 0.0;
}

Eigen::VectorXd LocalLoss::gradient(const Eigen::VectorXd& v) const {
  check_dim(*this, v);
  switch (kind_) {
    case LossKind::trivial:
      return Eigen::VectorXd::Zero(dim_);
    case LossKind::squared:
    case LossKind::ridge:
      return 2.0 * (Q_ * v - ybar_);
    case LossKind::logistic: {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
      for (int r = 0; r < data_.sample_count(); ++r) {
        const double t = data_.y[r] * data_.X.row(r).dot(v);
        g -= sigmoid(-t) * data_.y[r] * data_.X.row(r).transpose();
      }
      return g / data_.sample_count();
    }
    case LossKind::lasso:
      throw UnsupportedOperation("gradient of the lasso loss is not defined");
  }
  return Eigen::VectorXd::Zero(dim_);
}

Eigen::VectorXd LocalLoss::prox_quadratic(const Eigen::VectorXd& v, double tau) const {
  // (I + 2 tau Q) z = v + 2 tau ybar
  {
    std::lock_guard<std::mutex> lock(prox_mutex_);
    if (prox_tau_ != tau) {
      Eigen::MatrixXd A = Eigen::MatrixXd::Identity(dim_, dim_) + 2.0 * tau * Q_;
      prox_llt_.compute(A);
      prox_tau_ = tau;
    }
  }
  return prox_llt_.solve(v + 2.0 * tau * ybar_);
}

Eigen::VectorXd LocalLoss::prox_logistic(const Eigen::VectorXd& v, double tau,
                                         ProxStats* stats) const {
  // Damped Newton on psi(z) = loss(z) + (1/2tau)||z - v||^2
  Eigen::VectorXd z = v;
  const int m = data_.sample_count();
  double residual = 0.0;
  for (int it = 0; it < kInnerMaxIters; ++it) {
    Eigen::VectorXd g = gradient(z) + (z - v) / tau;
    residual = g.norm();
    if (residual <= kInnerTol) {
      if (stats) *stats = {it, residual, true};
      return z;
    }
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(dim_, dim_) / tau;
    for (int r = 0; r < m; ++r) {
      const double t = data_.y[r] * data_.X.row(r).dot(z);
      const double s = sigmoid(-t);
      H += (s * (1.0 - s) / m) * data_.X.row(r).transpose() * data_.X.row(r);
    }
    Eigen::VectorXd step = H.llt().solve(-g);
    const double psi0 = evaluate(z) + z.dot(z - 2.0 * v) / (2.0 * tau);
    double alpha = 1.0;
    const double slope = g.dot(step);
    while (alpha > 1e-12) {
      Eigen::VectorXd trial = z + alpha * step;
      const double psi = evaluate(trial) + trial.dot(trial - 2.0 * v) / (2.0 * tau);
      if (psi <= psi0 + 1e-4 * alpha * slope) break;
      alpha *= 0.5;
    }
    z += alpha * step;
  }
  if (stats) *stats = {kInnerMaxIters, residual, false};
  return z;
}

Eigen::VectorXd LocalLoss::prox_lasso(const Eigen::VectorXd& v, double tau,
                                      ProxStats* stats) const {
  // Proximal gradient (soft-thresholding) on the smooth part
  // (1/m)||Xz - y||^2 + (1/2tau)||z - v||^2, fixed step 1/(L + 1/tau).
  const double L = 2.0 * eig_max_;
  const double step = 1.0 / (L + 1.0 / tau);
  Eigen::VectorXd z = v;
  double change = 0.0;
  for (int it = 0; it < kInnerMaxIters; ++it) {
    Eigen::VectorXd g = 2.0 * (Q_ * z - ybar_) + (z - v) / tau;
    Eigen::VectorXd next = z - step * g;
    const double thresh = step * eta_;
    for (int j = 0; j < dim_; ++j) {
      const double a = next[j];
      next[j] = (a > thresh) ? a - thresh : (a < -thresh) ? a + thresh : 0.0;
    }
    change = (next - z).norm();
    z = next;
    if (change <= kInnerTol) {
      if (stats) *stats = {it + 1, change, true};
      return z;
    }
  }
  if (stats) *stats = {kInnerMaxIters, change, false};
  return z;
}

Eigen::VectorXd LocalLoss::primal_update(const Eigen::VectorXd& v, double tau,
                                         ProxStats* stats) const {
  check_dim(*this, v);
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!v.allFinite()) throw std::invalid_argument("primal update input is not finite");
  if (stats) *stats = {};
  switch (kind_) {
    case LossKind::trivial:
      return v;
    case LossKind::squared:
    case LossKind::ridge:
      return prox_quadratic(v, tau);
    case LossKind::logistic:
      return prox_logistic(v, tau, stats);
    case LossKind::lasso:
      return prox_lasso(v, tau, stats);
  }
  return v;
}

bool LocalLoss::conjugate_supported() const {
  if (kind_ == LossKind::trivial) return true;
  if (kind_ == LossKind::squared || kind_ == LossKind::ridge) return Q_llt_.has_value();
  return false;
}

std::optional<double> LocalLoss::conjugate(const Eigen::VectorXd& z) const {
  check_dim(*this, z);
  if (kind_ == LossKind::trivial) {
    // conjugate of the zero function: indicator of {0}
    return z.isZero(0.0) ? 0.0 : std::numeric_limits<double>::infinity();
  }
  if ((kind_ == LossKind::squared || kind_ == LossKind::ridge) && Q_llt_) {
    // loss(w) = w^T Q w - 2 ybar^T w + c with Q positive definite:
    // loss*(z) = (z + 2 ybar)^T Q^{-1} (z + 2 ybar) / 4 - c
    Eigen::VectorXd b = z + 2.0 * ybar_;
    return 0.25 * b.dot(Q_llt_->solve(b)) - const_term_;
  }
  return std::nullopt;
}

std::optional<double> LocalLoss::lipschitz_bound() const {
  switch (kind_) {
    case LossKind::trivial:
      return 0.0;
    case LossKind::squared:
    case LossKind::ridge:
      return 2.0 * eig_max_;
    case LossKind::logistic:
      return eig_max_ / 2.0;
    case LossKind::lasso:
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace gtvmin
