#include "qns/confidence.hpp"

#include <lapacke.h>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qns {

namespace {

std::string describe_direction(const Eigen::VectorXd& v, std::span<const std::string_view> names) {
  std::vector<Index> order(static_cast<std::size_t>(v.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return std::abs(v(a)) > std::abs(v(b)); });
  std::string out;
  for (Index i : order) {
    if (std::abs(v(i)) < 0.1 * std::abs(v(order.front()))) break;
    if (!out.empty()) out += " ";
    const std::string name = static_cast<std::size_t>(i) < names.size()
                                 ? std::string(names[static_cast<std::size_t>(i)])
                                 : fmt::format("theta[{}]", i);
    out += fmt::format("{:+.3f}*{}", v(i), name);
  }
  return out;
}

[[noreturn]] void throw_non_identifiable(const Eigen::MatrixXd& a_scaled,
                                         const Eigen::VectorXd& scale, double condition,
                                         std::span<const std::string_view> names) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a_scaled);
  const auto& ev = es.eigenvalues();
  Index k = 0;
  for (Index i = 1; i < ev.size(); ++i)
    if (std::abs(ev(i)) < std::abs(ev(k))) k = i;
  Eigen::VectorXd dir = scale.asDiagonal() * es.eigenvectors().col(k);
  if (dir.norm() > 0.0) dir.normalize();
  throw NonIdentifiable(fmt::format("non-identifiable at this point (condition {:.3e}); null direction {}",
                                    condition, describe_direction(dir, names)),
                        dir);
}

}  // namespace

CovarianceReport mestimator_covariance(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& z,
                                       const LossFunction& loss, bool second_order,
                                       const ResidualCurvature* curvature,
                                       std::span<const std::string_view> parameter_names) {
  const Index n = jacobian.rows();
  const Index p = jacobian.cols();
  if (z.size() != n) throw Error("residual and Jacobian sizes differ");
  if (p == 0) throw Error("no parameters");
  Eigen::VectorXd psi(n), dpsi(n);
  for (Index a = 0; a < n; ++a) {
    const LossValue v = loss.eval(z(a));
    psi(a) = v.psi;
    dpsi(a) = v.second;
  }
  Eigen::MatrixXd a_mat = jacobian.transpose() * dpsi.asDiagonal() * jacobian;
  if (second_order) {
    if (!curvature || curvature->size() != static_cast<std::size_t>(p))
      throw Error("second-order covariance needs the residual curvature tensor");
    for (Index k = 0; k < p; ++k) {
      const Eigen::MatrixXd& dk = (*curvature)[static_cast<std::size_t>(k)];
      if (dk.rows() != n || dk.cols() != p) throw Error("curvature tensor has the wrong shape");
      a_mat.row(k) += (dk.transpose() * psi).transpose();
    }
    a_mat = 0.5 * (a_mat + a_mat.transpose()).eval();
  }
  const Eigen::MatrixXd b_mat = jacobian.transpose() * psi.cwiseAbs2().asDiagonal() * jacobian;

  // Equilibrate, then factorize A = L D L^T with Bunch-Kaufman pivoting.
  Eigen::VectorXd scale(p);
  for (Index i = 0; i < p; ++i) {
    const double d = std::abs(a_mat(i, i));
    scale(i) = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
  }
  const Eigen::MatrixXd a_scaled = scale.asDiagonal() * a_mat * scale.asDiagonal();
  Eigen::MatrixXd factor = a_scaled;
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(p));
  const auto pn = static_cast<lapack_int>(p);
  lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', pn, factor.data(), pn, ipiv.data());
  if (info > 0) throw_non_identifiable(a_scaled, scale, std::numeric_limits<double>::infinity(), parameter_names);
  if (info < 0) throw Error("dsytrf: invalid argument");
  double anorm = 0.0;
  for (Index j = 0; j < p; ++j) anorm = std::max(anorm, a_scaled.col(j).cwiseAbs().sum());
  double rcond = 0.0;
  info = LAPACKE_dsycon(LAPACK_COL_MAJOR, 'L', pn, factor.data(), pn, ipiv.data(), anorm, &rcond);
  if (info != 0) throw Error("dsycon failed");
  const double condition = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(condition < kMaxCovarianceCondition))
    throw_non_identifiable(a_scaled, scale, condition, parameter_names);

  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(p, p);
  info = LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', pn, pn, factor.data(), pn, ipiv.data(), inv.data(), pn);
  if (info != 0) throw Error("dsytrs failed");
  const Eigen::MatrixXd a_inv = scale.asDiagonal() * inv * scale.asDiagonal();

  CovarianceReport report;
  report.sigma_theta = a_inv * b_mat * a_inv.transpose();
  report.sigma_theta = 0.5 * (report.sigma_theta + report.sigma_theta.transpose()).eval();
  report.used_second_order = second_order;
  report.condition = condition;
  return report;
}

double normal_quantile_two_sided(double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error("confidence level must lie in (0, 1)");
  const boost::math::normal_distribution<double> normal;
  return boost::math::quantile(normal, 0.5 * (1.0 + level));
}

std::vector<Interval> confidence_intervals(const Eigen::VectorXd& theta_hat,
                                           const CovarianceReport& report, double level) {
  const double q = normal_quantile_two_sided(level);
  if (report.sigma_theta.rows() != theta_hat.size())
    throw Error("covariance and parameter sizes differ");
  std::vector<Interval> out;
  for (Index i = 0; i < theta_hat.size(); ++i) {
    const double half = q * std::sqrt(std::max(0.0, report.sigma_theta(i, i)));
    out.push_back({theta_hat(i) - half, theta_hat(i) + half});
  }
  return out;
}

ResidualCurvature residual_curvature(const ResidualFunction& f, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& steps, const Eigen::VectorXd& upper,
                                     int workers) {
  const Index p = x.size();
  ResidualCurvature out(static_cast<std::size_t>(p));
  for (Index k = 0; k < p; ++k) {
    const double h = 10.0 * steps(k);
    Eigen::VectorXd xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    const Eigen::VectorXd fp = f(xp);
    const Eigen::VectorXd fm = f(xm);
    const Eigen::MatrixXd jp = finite_difference_jacobian(f, xp, fp, steps, upper, workers);
    const Eigen::MatrixXd jm = finite_difference_jacobian(f, xm, fm, steps, upper, workers);
    out[static_cast<std::size_t>(k)] = (jp - jm) / (2.0 * h);
  }
  return out;
}

}  // namespace qns
