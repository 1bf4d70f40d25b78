#pragma once

// Input/output records, block-Hankel matrices, persistency of excitation and
// SVD reduction of the stacked data matrix.
//
// Signals are stored column-per-sample: u is m x T, y is p x T. Sample k pairs the
// input u_k with the output y_k measured after u_k has been applied for one period.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "flexsc/errors.hpp"
#include "flexsc/io.hpp"

namespace flexsc {

struct Trajectory {
  Eigen::MatrixXd u;  // m x T
  Eigen::MatrixXd y;  // p x T
  double dt = 1.0;

  Trajectory() = default;
  Trajectory(Eigen::MatrixXd u_, Eigen::MatrixXd y_, double dt_)
      : u(std::move(u_)), y(std::move(y_)), dt(dt_) {
    validate();
  }
  static Trajectory scalar(const Eigen::VectorXd& u, const Eigen::VectorXd& y, double dt) {
    return Trajectory(u.transpose(), y.transpose(), dt);
  }

  Eigen::Index size() const { return u.cols(); }
  Eigen::Index input_dim() const { return u.rows(); }
  Eigen::Index output_dim() const { return y.rows(); }
  Eigen::VectorXd u_scalar() const { return u.row(0).transpose(); }
  Eigen::VectorXd y_scalar() const { return y.row(0).transpose(); }

  void validate() const {
    if (u.cols() != y.cols()) throw DimensionError("Trajectory: u and y lengths differ");
    if (u.cols() < 1) throw DimensionError("Trajectory: empty");
    if (u.rows() < 1 || y.rows() < 1) throw DimensionError("Trajectory: zero signal dimension");
    if (!(dt > 0.0)) throw ParameterError("Trajectory: dt must be > 0");
  }
};

// Block Hankel matrix of depth L; signal is dim x T.
inline Eigen::MatrixXd build_hankel(const Eigen::MatrixXd& signal, Eigen::Index depth) {
  const Eigen::Index dim = signal.rows(), T = signal.cols();
  if (depth < 1) throw DimensionError("build_hankel: depth must be >= 1");
  if (depth > T) throw DimensionError("build_hankel: depth exceeds signal length");
  const Eigen::Index cols = T - depth + 1;
  Eigen::MatrixXd H(depth * dim, cols);
  for (Eigen::Index i = 0; i < depth; ++i) H.middleRows(i * dim, dim) = signal.middleCols(i, cols);
  return H;
}

inline Eigen::MatrixXd build_hankel(const Eigen::VectorXd& signal, Eigen::Index depth) {
  return build_hankel(Eigen::MatrixXd(signal.transpose()), depth);
}

inline constexpr double kRankTolerance = 1e-10;

inline Eigen::Index numerical_rank(const Eigen::VectorXd& sv, double rel_tol = kRankTolerance) {
  if (sv.size() == 0 || !(sv(0) > 0.0)) return 0;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * sv(0)) ++r;
  return r;
}

inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return Eigen::VectorXd();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
  Eigen::VectorXd s = svd.singularValues();
  if (!s.allFinite()) throw NumericError("SVD produced non-finite singular values");
  return s;
}

struct PeCheck {
  bool exciting = false;
  bool too_short = false;  // fewer Hankel columns than rows: rank test never ran
  Eigen::Index rank = 0;
  Eigen::Index required = 0;

  explicit operator bool() const { return exciting; }
  std::string message() const {
    std::ostringstream os;
    if (too_short)
      os << "signal too short for order: need at least " << required << " Hankel columns";
    else
      os << "Hankel rank " << rank << " of " << required << (exciting ? " (full row rank)" : "");
    return os.str();
  }
};

inline PeCheck is_persistently_exciting(const Eigen::MatrixXd& signal, Eigen::Index order) {
  if (order < 1) throw DimensionError("is_persistently_exciting: order must be >= 1");
  PeCheck res;
  res.required = order * signal.rows();
  if (order > signal.cols() || signal.cols() - order + 1 < res.required) {
    res.too_short = true;
    return res;
  }
  res.rank = numerical_rank(singular_values(build_hankel(signal, order)));
  res.exciting = res.rank == res.required;
  return res;
}

inline PeCheck is_persistently_exciting(const Eigen::VectorXd& signal, Eigen::Index order) {
  return is_persistently_exciting(Eigen::MatrixXd(signal.transpose()), order);
}

struct HankelSystem {
  Eigen::MatrixXd up, uf, yp, yf;
  Eigen::Index t_ini = 0;
  Eigen::Index horizon = 0;
  Eigen::Index depth = 0;
  Eigen::Index m = 1;
  Eigen::Index p = 1;

  Eigen::Index columns() const { return up.cols(); }
  // Row order (up, uf, yp, yf) matches the constraint layout (u_ini, u, y_ini, y).
  Eigen::MatrixXd stacked() const {
    Eigen::MatrixXd S(up.rows() + uf.rows() + yp.rows() + yf.rows(), uf.cols());
    S << up, uf, yp, yf;
    return S;
  }
};

inline HankelSystem split_past_future(const Trajectory& traj, Eigen::Index t_ini, Eigen::Index horizon) {
  traj.validate();
  if (t_ini < 0 || horizon < 1) throw DimensionError("split_past_future: need t_ini >= 0, horizon >= 1");
  const Eigen::Index L = t_ini + horizon;
  if (L > traj.size()) throw DimensionError("split_past_future: t_ini + horizon exceeds data length");
  const Eigen::MatrixXd Hu = build_hankel(traj.u, L);
  const Eigen::MatrixXd Hy = build_hankel(traj.y, L);
  HankelSystem hs;
  hs.t_ini = t_ini;
  hs.horizon = horizon;
  hs.depth = L;
  hs.m = traj.input_dim();
  hs.p = traj.output_dim();
  hs.up = Hu.topRows(t_ini * hs.m);
  hs.uf = Hu.bottomRows(horizon * hs.m);
  hs.yp = Hy.topRows(t_ini * hs.p);
  hs.yf = Hy.bottomRows(horizon * hs.p);
  return hs;
}

struct RankRule {
  enum class Kind { gap, fixed, full };
  Kind kind = Kind::full;
  Eigen::Index r = 0;

  static RankRule gap() { return {Kind::gap, 0}; }
  static RankRule fixed(Eigen::Index r) { return {Kind::fixed, r}; }
  static RankRule full() { return {Kind::full, 0}; }

  static RankRule parse(const std::string& s) {
    if (s == "gap") return gap();
    if (s == "full") return full();
    if (s.rfind("fixed:", 0) == 0) {
      const long long r = io::parse_int(s.substr(6));
      if (r < 1) throw ParseError("rank rule fixed:r needs r >= 1");
      return fixed(r);
    }
    throw ParseError("unknown rank rule '" + s + "' (expected gap, full or fixed:r)");
  }
  std::string str() const {
    switch (kind) {
      case Kind::gap: return "gap";
      case Kind::full: return "full";
      default: return "fixed:" + std::to_string(r);
    }
  }
};

inline constexpr double kTurningPointRatio = 10.0;

// Index of the largest consecutive drop sigma_i / sigma_{i+1}. Falls back to the
// full length when no drop reaches kTurningPointRatio.
inline Eigen::Index choose_rank(const Eigen::VectorXd& sv) {
  if (sv.size() == 0) throw DimensionError("choose_rank: empty singular value list");
  Eigen::Index best = sv.size();
  double best_ratio = 0.0;
  // Roundoff-level values count as exact zeros.
  const double floor = sv(0) * static_cast<double>(sv.size()) * std::numeric_limits<double>::epsilon();
  for (Eigen::Index i = 0; i + 1 < sv.size(); ++i) {
    if (!(sv(i) > floor)) break;
    const double ratio = sv(i + 1) > floor ? sv(i) / sv(i + 1) : std::numeric_limits<double>::infinity();
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = i + 1;
    }
  }
  return best_ratio >= kTurningPointRatio ? best : sv.size();
}

struct ReducedHankel {
  Eigen::MatrixXd h_bar;  // W1 * Sigma1, rows in (up, uf, yp, yf) order
  Eigen::Index rank = 0;
  Eigen::VectorXd singular_values;
  Eigen::Index t_ini = 0;
  Eigen::Index horizon = 0;
  Eigen::Index m = 1;
  Eigen::Index p = 1;
};

inline ReducedHankel svd_reduce(const HankelSystem& hs, RankRule rule = RankRule::full()) {
  const Eigen::MatrixXd S = hs.stacked();
  if (S.size() == 0) throw DimensionError("svd_reduce: empty data matrix");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeThinU);
  const Eigen::VectorXd sv = svd.singularValues();
  if (!sv.allFinite() || !svd.matrixU().allFinite()) throw NumericError("svd_reduce: SVD failed");
  Eigen::Index r = 0;
  switch (rule.kind) {
    case RankRule::Kind::full: r = sv.size(); break;
    case RankRule::Kind::gap: r = choose_rank(sv); break;
    case RankRule::Kind::fixed:
      if (rule.r < 1 || rule.r > sv.size())
        throw DimensionError("svd_reduce: fixed rank outside [1, " + std::to_string(sv.size()) + "]");
      r = rule.r;
      break;
  }
  ReducedHankel red;
  red.h_bar = svd.matrixU().leftCols(r) * sv.head(r).asDiagonal();
  red.rank = r;
  red.singular_values = sv;
  red.t_ini = hs.t_ini;
  red.horizon = hs.horizon;
  red.m = hs.m;
  red.p = hs.p;
  return red;
}

// CSV with header t,u,y (scalar) or t,u0,..,y0,.. (vector signals); t = k*dt.
inline void write_csv(const Trajectory& traj, std::ostream& os) {
  traj.validate();
  const bool scalar = traj.input_dim() == 1 && traj.output_dim() == 1;
  os << "t";
  if (scalar) {
    os << ",u,y\n";
  } else {
    for (Eigen::Index i = 0; i < traj.input_dim(); ++i) os << ",u" << i;
    for (Eigen::Index i = 0; i < traj.output_dim(); ++i) os << ",y" << i;
    os << "\n";
  }
  for (Eigen::Index k = 0; k < traj.size(); ++k) {
    os << io::format_double(static_cast<double>(k) * traj.dt);
    for (Eigen::Index i = 0; i < traj.input_dim(); ++i) os << ',' << io::format_double(traj.u(i, k));
    for (Eigen::Index i = 0; i < traj.output_dim(); ++i) os << ',' << io::format_double(traj.y(i, k));
    os << '\n';
  }
}

inline void write_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(traj, f);
}

inline Trajectory read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("trajectory CSV: missing header", 1);
  const auto head = io::split(line, ',');
  if (head.empty() || head[0] != "t") throw ParseError("trajectory CSV: first column must be t", 1);
  Eigen::Index m = 0, p = 0;
  for (std::size_t i = 1; i < head.size(); ++i) {
    if (!head[i].empty() && head[i][0] == 'u' && p == 0) ++m;
    else if (!head[i].empty() && head[i][0] == 'y') ++p;
    else throw ParseError("trajectory CSV: unexpected column '" + head[i] + "'", 1);
  }
  if (m == 0 || p == 0) throw ParseError("trajectory CSV: need u and y columns", 1);
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    const auto cells = io::split(line, ',');
    if (cells.size() != head.size()) throw ParseError("trajectory CSV: wrong column count", lineno);
    std::vector<double> r;
    for (const auto& c : cells) r.push_back(io::parse_double(c, lineno));
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ParseError("trajectory CSV: no samples");
  const Eigen::Index T = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd u(m, T), y(p, T);
  for (Eigen::Index k = 0; k < T; ++k) {
    for (Eigen::Index i = 0; i < m; ++i) u(i, k) = rows[k][1 + i];
    for (Eigen::Index i = 0; i < p; ++i) y(i, k) = rows[k][1 + m + i];
  }
  const double dt = T > 1 ? rows[1][0] - rows[0][0] : 1.0;
  return Trajectory(std::move(u), std::move(y), dt);
}

inline Trajectory read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  return read_csv(f);
}

}  // namespace flexsc
