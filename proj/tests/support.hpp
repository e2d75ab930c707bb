#pragma once

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace cnfp::testing {

/// Central-difference Jacobian of f at x.
inline Eigen::MatrixXd numeric_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double h = 1e-6) {
  const Eigen::VectorXd y0 = f(x);
  Eigen::MatrixXd jac(y0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp(j) += h;
    xm(j) -= h;
    jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return jac;
}

/// Fourth-order central-difference Jacobian; accurate where entries are tiny.
inline Eigen::MatrixXd numeric_jacobian5(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                         const Eigen::VectorXd& x, double h = 1e-4) {
  const Eigen::VectorXd y0 = f(x);
  Eigen::MatrixXd jac(y0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    auto at = [&](double t) {
      Eigen::VectorXd xt = x;
      xt(j) += t;
      return f(xt);
    };
    jac.col(j) = (at(-2 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2 * h)) / (12.0 * h);
  }
  return jac;
}

/// Central-difference gradient of a scalar function.
inline Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp(j) += h;
    xm(j) -= h;
    g(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - b_i| / max(|b_i|, floor).
inline double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-3) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a(i) - b(i)) / std::max(std::abs(b(i)), floor));
  return worst;
}

}  // namespace cnfp::testing
