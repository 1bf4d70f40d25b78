#pragma once

// Dual active-set method (Goldfarb-Idnani family) for strictly convex QPs:
//   min 0.5 x'Hx + f'x   s.t.  Aeq x = beq,  Ain x <= bin.
// Starts from the equality-constrained minimizer, so no feasible primal point is
// needed. Each iteration solves the KKT system of the current working set.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "flexsc/errors.hpp"

namespace flexsc {

struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  Eigen::MatrixXd Ain;
  Eigen::VectorXd bin;
};

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda_eq;
  Eigen::VectorXd lambda_in;  // one per inequality row, zero when inactive
  std::vector<Eigen::Index> active;
  int iterations = 0;
};

namespace detail {

inline Eigen::VectorXd solve_kkt(const Eigen::MatrixXd& H, const Eigen::MatrixXd& N,
                                 const Eigen::VectorXd& top, const Eigen::VectorXd& bottom) {
  const Eigen::Index n = H.rows(), k = N.rows();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
  K.topLeftCorner(n, n) = H;
  K.topRightCorner(n, k) = N.transpose();
  K.bottomLeftCorner(k, n) = N;
  Eigen::VectorXd rhs(n + k);
  rhs << top, bottom;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
  if (!(lu.rcond() > 1e-14)) throw RankError("QP: working-set KKT matrix is singular");
  return lu.solve(rhs);
}

}  // namespace detail

inline QpResult solve_qp(const QpProblem& qp, int max_iterations = 100, double tol = 1e-9) {
  const Eigen::Index n = qp.H.rows();
  if (qp.H.cols() != n || qp.f.size() != n) throw DimensionError("QP: H/f size mismatch");
  const Eigen::Index ne = qp.Aeq.rows(), ni = qp.Ain.rows();
  if ((ne > 0 && qp.Aeq.cols() != n) || qp.beq.size() != ne)
    throw DimensionError("QP: equality block size mismatch");
  if ((ni > 0 && qp.Ain.cols() != n) || qp.bin.size() != ni)
    throw DimensionError("QP: inequality block size mismatch");

  QpResult res;
  res.lambda_in = Eigen::VectorXd::Zero(ni);
  const Eigen::MatrixXd Aeq = ne > 0 ? qp.Aeq : Eigen::MatrixXd(0, n);
  {
    const Eigen::VectorXd z = detail::solve_kkt(qp.H, Aeq, -qp.f, qp.beq);
    res.x = z.head(n);
    res.lambda_eq = z.tail(ne);
  }

  std::vector<Eigen::Index>& A = res.active;
  auto working_normals = [&]() {
    Eigen::MatrixXd N(ne + static_cast<Eigen::Index>(A.size()), n);
    N.topRows(ne) = Aeq;
    for (std::size_t i = 0; i < A.size(); ++i) N.row(ne + static_cast<Eigen::Index>(i)) = qp.Ain.row(A[i]);
    return N;
  };

  while (true) {
    // Most violated inequality outside the working set.
    Eigen::Index p = -1;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < ni; ++i) {
      if (std::find(A.begin(), A.end(), i) != A.end()) continue;
      const double v = qp.Ain.row(i).dot(res.x) - qp.bin(i);
      if (v > tol * (1.0 + std::abs(qp.bin(i))) && v > worst) {
        worst = v;
        p = i;
      }
    }
    if (p < 0) return res;

    while (true) {
      if (++res.iterations > max_iterations)
        throw SolverError("QP: active-set iteration did not converge within " +
                          std::to_string(max_iterations) + " iterations");
      const Eigen::MatrixXd N = working_normals();
      const Eigen::VectorXd zr =
          detail::solve_kkt(qp.H, N, -qp.Ain.row(p).transpose(), Eigen::VectorXd::Zero(N.rows()));
      const Eigen::VectorXd z = zr.head(n);
      const Eigen::VectorXd r = zr.tail(N.rows());

      double t_full = std::numeric_limits<double>::infinity();
      const double slope = qp.Ain.row(p).dot(z);
      if (z.norm() > 1e-12 * (1.0 + res.x.norm()) && slope < 0.0)
        t_full = (qp.Ain.row(p).dot(res.x) - qp.bin(p)) / (-slope);

      double t_part = std::numeric_limits<double>::infinity();
      std::size_t block = 0;
      for (std::size_t i = 0; i < A.size(); ++i) {
        const double ri = r(ne + static_cast<Eigen::Index>(i));
        if (ri < 0.0) {
          const double t = res.lambda_in(A[i]) / (-ri);
          if (t < t_part) {
            t_part = t;
            block = i;
          }
        }
      }

      if (!std::isfinite(t_full) && !std::isfinite(t_part))
        throw SolverError("QP: constraints are infeasible");

      const double t = std::min(t_full, t_part);
      res.x += t * z;
      res.lambda_eq += t * r.head(ne);
      for (std::size_t i = 0; i < A.size(); ++i)
        res.lambda_in(A[i]) += t * r(ne + static_cast<Eigen::Index>(i));
      res.lambda_in(p) += t;

      if (t_full <= t_part) {
        A.push_back(p);
        break;
      }
      res.lambda_in(A[block]) = 0.0;
      A.erase(A.begin() + static_cast<std::ptrdiff_t>(block));
    }
  }
}

}  // namespace flexsc
