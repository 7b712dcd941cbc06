#include "qns/least_squares.hpp"

#include "qns/parallel.hpp"
#include "qns/qcore.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace qns {

Eigen::VectorXd finite_difference_steps(const Eigen::VectorXd& x, double relative,
                                        const Eigen::VectorXd& floor) {
  Eigen::VectorXd h(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double f = floor.size() == x.size() ? floor(i) : 1e-8;
    h(i) = std::max(relative * std::abs(x(i)), f);
  }
  return h;
}

Eigen::MatrixXd finite_difference_jacobian(const ResidualFunction& f, const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& f0, const Eigen::VectorXd& steps,
                                           const Eigen::VectorXd& upper, int workers) {
  Eigen::MatrixXd jac(f0.size(), x.size());
  parallel_for(static_cast<std::size_t>(x.size()), workers, [&](std::size_t col) {
    const auto i = static_cast<Index>(col);
    const double h = steps(i);
    auto eval = [&](double offset) {
      Eigen::VectorXd xs = x;
      xs(i) += offset;
      Eigen::VectorXd fs = f(xs);
      if (fs.size() != f0.size()) throw Error("residual length changed between evaluations");
      return std::pair{std::move(fs), xs(i) - x(i)};
    };
    if (upper.size() == x.size() && x(i) + h > upper(i)) {
      const auto [fm, dm] = eval(-h);
      jac.col(i) = (fm - f0) / dm;
      return;
    }
    const auto [fp, dp] = eval(h);
    const auto [fm, dm] = eval(-h);
    jac.col(i) = (fp - fm) / (dp - dm);
  });
  return jac;
}

double total_loss(const LossFunction& loss, const Eigen::VectorXd& z) {
  double total = 0.0;
  for (Index a = 0; a < z.size(); ++a) total += loss.eval(z(a)).value;
  return total;
}

Eigen::VectorXd loss_gradient(const LossFunction& loss, const Eigen::VectorXd& z,
                              const Eigen::MatrixXd& jacobian) {
  Eigen::VectorXd psi(z.size());
  for (Index a = 0; a < z.size(); ++a) psi(a) = loss.eval(z(a)).psi;
  return jacobian.transpose() * psi;
}

namespace {

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::VectorXd project(Eigen::VectorXd x) const {
    for (Index i = 0; i < x.size(); ++i) {
      if (lower.size() == x.size()) x(i) = std::max(x(i), lower(i));
      if (upper.size() == x.size()) x(i) = std::min(x(i), upper(i));
    }
    return x;
  }

  bool at_lower(const Eigen::VectorXd& x, Index i) const {
    return lower.size() == x.size() && x(i) <= lower(i);
  }
  bool at_upper(const Eigen::VectorXd& x, Index i) const {
    return upper.size() == x.size() && x(i) >= upper(i);
  }
};

}  // namespace

LeastSquaresResult robust_least_squares(const ResidualFunction& f, const Eigen::VectorXd& x0,
                                        const LossFunction& loss,
                                        const LeastSquaresOptions& opt) {
  const Index p = x0.size();
  const Box box{opt.lower, opt.upper};
  if (box.lower.size() == p && box.upper.size() == p &&
      (box.lower.array() > box.upper.array()).any())
    throw Error("lower bound exceeds upper bound");

  LeastSquaresResult res;
  Eigen::VectorXd x = box.project(x0);
  Eigen::VectorXd z = f(x);
  ++res.evaluations;
  if (!z.allFinite()) throw Error("residuals are not finite at the initial point");
  double cost = total_loss(loss, z);
  double mu = -1.0;
  double nu = 2.0;

  Eigen::MatrixXd jac;
  Eigen::VectorXd steps;
  bool done = false;
  while (!done) {
    if (cost <= std::numeric_limits<double>::min()) {
      res.converged = true;
      res.status = "zero cost";
      break;
    }
    if (res.iterations >= opt.max_iterations) {
      res.status = "iteration limit";
      break;
    }
    ++res.iterations;
    steps = finite_difference_steps(x, opt.relative_step, opt.step_floor);
    jac = finite_difference_jacobian(f, x, z, steps, opt.upper, opt.workers);
    res.evaluations += static_cast<int>(p);

    Eigen::VectorXd psi(z.size()), w(z.size());
    for (Index a = 0; a < z.size(); ++a) {
      psi(a) = loss.eval(z(a)).psi;
      w(a) = loss.weight(z(a));
    }
    const Eigen::VectorXd g = jac.transpose() * psi;
    const Eigen::MatrixXd h = jac.transpose() * w.asDiagonal() * jac;

    std::vector<Index> free;
    double scaled_gradient = 0.0;
    for (Index i = 0; i < p; ++i) {
      const bool blocked = (box.at_lower(x, i) && g(i) > 0.0) || (box.at_upper(x, i) && g(i) < 0.0);
      if (blocked) continue;
      free.push_back(i);
      scaled_gradient =
          std::max(scaled_gradient, std::abs(g(i)) * std::max(std::abs(x(i)), 1.0) / std::max(cost, 1.0));
    }
    res.projected_gradient = scaled_gradient;
    if (scaled_gradient <= opt.grad_tol) {
      res.converged = true;
      res.status = "gradient tolerance";
      break;
    }

    const auto nf = static_cast<Index>(free.size());
    Eigen::MatrixXd hf(nf, nf);
    Eigen::VectorXd gf(nf);
    for (Index a = 0; a < nf; ++a) {
      gf(a) = g(free[static_cast<std::size_t>(a)]);
      for (Index b = 0; b < nf; ++b)
        hf(a, b) = h(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
    }
    Eigen::VectorXd diag = hf.diagonal();
    const double max_diag = diag.size() ? diag.maxCoeff() : 0.0;
    for (Index a = 0; a < nf; ++a) diag(a) = std::max(diag(a), 1e-12 * max_diag + 1e-300);
    if (mu < 0.0) mu = 1e-3;

    while (true) {
      Eigen::MatrixXd damped = hf;
      damped.diagonal() += mu * diag;
      Eigen::VectorXd df = damped.ldlt().solve(-gf);
      if (!df.allFinite()) {
        const double curvature = gf.dot(hf * gf);
        const double alpha = curvature > 0.0 ? gf.squaredNorm() / curvature : 1.0 / (1.0 + mu);
        df = -alpha * gf;
        ++res.step_fallbacks;
      }
      Eigen::VectorXd trial = x;
      for (Index a = 0; a < nf; ++a) trial(free[static_cast<std::size_t>(a)]) += df(a);
      trial = box.project(trial);
      const Eigen::VectorXd delta = trial - x;
      const double predicted = -(g.dot(delta) + 0.5 * delta.dot(h * delta));
      const double step_norm = delta.norm();
      const bool tiny = step_norm <= opt.step_tol * (x.norm() + opt.step_tol);

      Eigen::VectorXd z_trial = f(trial);
      ++res.evaluations;
      const double cost_trial = z_trial.allFinite() ? total_loss(loss, z_trial)
                                                    : std::numeric_limits<double>::infinity();
      const double actual = cost - cost_trial;
      if (predicted > 0.0 && actual > 0.0) {
        const double ratio = actual / predicted;
        x = trial;
        z = std::move(z_trial);
        const double previous = cost;
        cost = cost_trial;
        mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * ratio - 1.0, 3));
        nu = 2.0;
        if (actual <= opt.cost_tol * previous) {
          res.converged = true;
          res.status = "cost tolerance";
          done = true;
        } else if (tiny) {
          res.converged = true;
          res.status = "step tolerance";
          done = true;
        }
        break;
      }
      if (tiny) {
        res.converged = true;
        res.status = "step tolerance";
        done = true;
        break;
      }
      mu *= nu;
      nu *= 2.0;
      if (mu > 1e20) {
        res.status = "damping limit";
        done = true;
        break;
      }
    }
  }

  res.x = x;
  res.cost = cost;
  res.residuals = z;
  res.step = finite_difference_steps(x, opt.relative_step, opt.step_floor);
  res.jacobian = finite_difference_jacobian(f, x, z, res.step, opt.upper, opt.workers);
  res.evaluations += static_cast<int>(p);
  return res;
}

}  // namespace qns
