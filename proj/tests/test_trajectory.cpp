#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "flexsc/trajectory.hpp"
#include "oracles.hpp"

using namespace flexsc;

namespace {

Eigen::VectorXd white(std::mt19937_64& rng, Eigen::Index T) {
  std::normal_distribution<double> nd(0.0, 1.0);
  return Eigen::VectorXd::NullaryExpr(T, [&] { return nd(rng); });
}

Trajectory lti_data(const oracle::Lti& s, std::mt19937_64& rng, Eigen::Index T) {
  const Eigen::VectorXd u = white(rng, T);
  const Eigen::VectorXd y = s.simulate(white(rng, s.order()), u);
  return Trajectory::scalar(u, y, 1.0);
}

Eigen::MatrixXd projector(const Eigen::MatrixXd& A, double rel_tol = 1e-9) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > rel_tol * svd.singularValues()(0)) ++r;
  const Eigen::MatrixXd U = svd.matrixU().leftCols(r);
  return U * U.transpose();
}

}  // namespace

TEST(Hankel, SmallExamples) {
  Eigen::VectorXd s(4);
  s << 1, 2, 3, 4;
  Eigen::MatrixXd H2(2, 3);
  H2 << 1, 2, 3, 2, 3, 4;
  EXPECT_EQ(build_hankel(s, 2), H2);
  EXPECT_EQ(build_hankel(s, 4), Eigen::MatrixXd(s));
  EXPECT_THROW(build_hankel(s, 5), DimensionError);
  EXPECT_THROW(build_hankel(s, 0), DimensionError);
}

TEST(Hankel, WindowPropertyAtFullSize) {
  std::mt19937_64 rng(3);
  const Eigen::VectorXd s = white(rng, 4000);
  const Eigen::MatrixXd H = build_hankel(s, 40);
  EXPECT_EQ(H.rows(), 40);
  EXPECT_EQ(H.cols(), 3961);
  for (Eigen::Index i = 0; i < H.rows(); ++i)
    for (Eigen::Index j = 0; j < H.cols(); j += 97) EXPECT_EQ(H(i, j), s(i + j));
}

TEST(Hankel, BlockLayoutForVectorSignals) {
  Eigen::MatrixXd s(2, 5);
  s << 1, 2, 3, 4, 5, 10, 20, 30, 40, 50;
  const Eigen::MatrixXd H = build_hankel(s, 3);
  ASSERT_EQ(H.rows(), 6);
  ASSERT_EQ(H.cols(), 3);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      EXPECT_EQ(H(2 * i, j), s(0, i + j));
      EXPECT_EQ(H(2 * i + 1, j), s(1, i + j));
    }
}

TEST(PersistentExcitation, ConstantSignalFails) {
  const PeCheck pe = is_persistently_exciting(Eigen::VectorXd(Eigen::VectorXd::Constant(50, 2.0)), 2);
  EXPECT_FALSE(pe);
  EXPECT_FALSE(pe.too_short);
  EXPECT_EQ(pe.rank, 1);
}

TEST(PersistentExcitation, WhiteNoisePasses) {
  std::mt19937_64 rng(11);
  const Eigen::VectorXd s = white(rng, 200);
  const PeCheck pe = is_persistently_exciting(s, 10);
  EXPECT_TRUE(pe);
  EXPECT_EQ(pe.rank, oracle::jacobi_rank(build_hankel(s, 10)));
}

TEST(PersistentExcitation, ShortSignalReportedSeparately) {
  std::mt19937_64 rng(12);
  const PeCheck pe = is_persistently_exciting(white(rng, 18), 10);  // 2L - 1 = 19
  EXPECT_FALSE(pe);
  EXPECT_TRUE(pe.too_short);
  EXPECT_TRUE(is_persistently_exciting(white(rng, 19), 10));
  EXPECT_TRUE(is_persistently_exciting(white(rng, 5), 10).too_short);
  EXPECT_THROW(is_persistently_exciting(white(rng, 5), 0), DimensionError);
}

TEST(Split, BlocksReassembleHankel) {
  std::mt19937_64 rng(5);
  const Trajectory tr = Trajectory::scalar(white(rng, 100), white(rng, 100), 0.05);
  const HankelSystem hs = split_past_future(tr, 4, 6);
  Eigen::MatrixXd U(10, hs.columns()), Y(10, hs.columns());
  U << hs.up, hs.uf;
  Y << hs.yp, hs.yf;
  EXPECT_EQ(U, build_hankel(tr.u, 10));
  EXPECT_EQ(Y, build_hankel(tr.y, 10));
  EXPECT_EQ(hs.depth, 10);
}

TEST(Split, FullSizeDimensions) {
  std::mt19937_64 rng(6);
  const Trajectory tr = Trajectory::scalar(white(rng, 4000), white(rng, 4000), 0.05);
  const HankelSystem hs = split_past_future(tr, 20, 20);
  for (const Eigen::MatrixXd* b : {&hs.up, &hs.uf, &hs.yp, &hs.yf}) {
    EXPECT_EQ(b->rows(), 20);
    EXPECT_EQ(b->cols(), 3961);
  }
  EXPECT_EQ(hs.stacked().rows(), 80);
}

TEST(Split, DegenerateAndInvalid) {
  std::mt19937_64 rng(7);
  const Trajectory tr = Trajectory::scalar(white(rng, 30), white(rng, 30), 1.0);
  const HankelSystem hs = split_past_future(tr, 0, 5);
  EXPECT_EQ(hs.up.rows(), 0);
  EXPECT_EQ(hs.yp.rows(), 0);
  EXPECT_EQ(hs.uf, build_hankel(tr.u, 5));
  EXPECT_THROW(split_past_future(tr, 20, 11), DimensionError);
  EXPECT_THROW(split_past_future(tr, -1, 5), DimensionError);
}

TEST(ChooseRank, Examples) {
  Eigen::VectorXd a(5);
  a << 10, 9, 8, 1e-8, 1e-9;
  EXPECT_EQ(choose_rank(a), 3);
  EXPECT_EQ(choose_rank(Eigen::VectorXd::Constant(6, 2.0)), 6);
  Eigen::VectorXd b(4);
  b << 8, 4, 2, 1;  // every drop is 2x, below the turning-point ratio
  EXPECT_EQ(choose_rank(b), 4);
  Eigen::VectorXd z(3);
  z << 5, 1, 0;
  EXPECT_EQ(choose_rank(z), 2);
  EXPECT_THROW(choose_rank(Eigen::VectorXd()), DimensionError);
}

TEST(RankRule, ParseRoundTrip) {
  for (const std::string s : {"gap", "full", "fixed:12"}) EXPECT_EQ(RankRule::parse(s).str(), s);
  EXPECT_THROW(RankRule::parse("fixed:0"), ParseError);
  EXPECT_THROW(RankRule::parse("best"), ParseError);
}

TEST(SvdReduce, PreservesColumnSpaceOnNoiselessData) {
  std::mt19937_64 rng(21);
  oracle::Lti s = oracle::random_lti(rng, 2);
  const Trajectory tr = lti_data(s, rng, 300);
  const HankelSystem hs = split_past_future(tr, 4, 8);
  const ReducedHankel red = svd_reduce(hs, RankRule::gap());
  EXPECT_EQ(red.rank, 12 + 2);  // m L + n
  EXPECT_EQ(red.h_bar.rows(), 24);
  EXPECT_LT((projector(red.h_bar) - projector(hs.stacked())).norm(), 1e-8);
}

TEST(SvdReduce, FullRowCountGivesSquareMatrix) {
  std::mt19937_64 rng(22);
  const Trajectory tr = Trajectory::scalar(white(rng, 4000), white(rng, 4000), 0.05);
  const ReducedHankel red = svd_reduce(split_past_future(tr, 20, 20), RankRule::fixed(80));
  EXPECT_EQ(red.h_bar.rows(), 80);
  EXPECT_EQ(red.h_bar.cols(), 80);
  EXPECT_EQ(red.singular_values.size(), 80);
  EXPECT_TRUE(std::is_sorted(red.singular_values.data(), red.singular_values.data() + 80, std::greater<>()));
}

TEST(SvdReduce, FullRankReproducesGram) {
  std::mt19937_64 rng(23);
  const Trajectory tr = Trajectory::scalar(white(rng, 12), white(rng, 12), 1.0);
  const HankelSystem hs = split_past_future(tr, 3, 4);  // 14 rows, 6 columns
  const Eigen::MatrixXd S = hs.stacked();
  const ReducedHankel red = svd_reduce(hs, RankRule::fixed(S.cols()));
  // h_bar = S V1 with V1 orthogonal, so the Gram matrices agree.
  EXPECT_TRUE((red.h_bar * red.h_bar.transpose()).isApprox(S * S.transpose(), 1e-12));
  EXPECT_THROW(svd_reduce(hs, RankRule::fixed(7)), DimensionError);
}

TEST(FundamentalLemma, TrajectoriesLieInHankelRange) {
  std::mt19937_64 rng(2024);
  const Eigen::Index n = 3, L = 6;
  for (int trial = 0; trial < 20; ++trial) {
    const oracle::Lti s = oracle::random_lti(rng, n);
    const Eigen::Index T = 60;
    const Trajectory tr = lti_data(s, rng, T);
    ASSERT_TRUE(is_persistently_exciting(tr.u, n + L));
    Eigen::MatrixXd H(2 * L, T - L + 1);
    H << build_hankel(tr.u, L), build_hankel(tr.y, L);
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(H);

    // Forward: a fresh trajectory is a combination of the columns.
    const Eigen::VectorXd u = white(rng, L);
    const Eigen::VectorXd y = s.simulate(white(rng, n), u);
    Eigen::VectorXd w(2 * L);
    w << u, y;
    const Eigen::VectorXd g = cod.solve(w);
    EXPECT_LT((H * g - w).norm() / w.norm(), 1e-8) << "trial " << trial;

    // Converse: any combination is a trajectory from some initial state.
    const Eigen::VectorXd wg = H * white(rng, H.cols());
    const Eigen::VectorXd ug = wg.head(L), yg = wg.tail(L);
    const Eigen::VectorXd x0 =
        s.observability(L).colPivHouseholderQr().solve(yg - s.toeplitz(L) * ug);
    EXPECT_LT((s.simulate(x0, ug) - yg).norm() / yg.norm(), 1e-8) << "trial " << trial;
  }
}

TEST(FundamentalLemma, ExcitationFailsBelowLengthBound) {
  std::mt19937_64 rng(77);
  const Eigen::Index n = 3, L = 6, m = 1;
  const Eigen::Index bound = (m + 1) * (n + L) - 1;
  for (Eigen::Index T = n + L; T < bound; ++T) EXPECT_FALSE(is_persistently_exciting(white(rng, T), n + L));
  EXPECT_TRUE(is_persistently_exciting(white(rng, bound), n + L));
}

TEST(TrajectoryCsv, RoundTripIsExact) {
  std::mt19937_64 rng(8);
  const Trajectory tr = Trajectory::scalar(white(rng, 50), white(rng, 50) * 1e-7, 0.05);
  std::stringstream ss;
  write_csv(tr, ss);
  EXPECT_EQ(ss.str().substr(0, 6), "t,u,y\n");
  const Trajectory back = read_csv(ss);
  EXPECT_EQ(back.u, tr.u);
  EXPECT_EQ(back.y, tr.y);
  EXPECT_EQ(back.dt, tr.dt);
}

TEST(TrajectoryCsv, VectorSignalsAndErrors) {
  Trajectory tr(Eigen::MatrixXd::Random(2, 5), Eigen::MatrixXd::Random(3, 5), 0.1);
  std::stringstream ss;
  write_csv(tr, ss);
  const Trajectory back = read_csv(ss);
  EXPECT_EQ(back.u, tr.u);
  EXPECT_EQ(back.y, tr.y);

  std::stringstream bad("t,u,y\n0,1\n");
  EXPECT_THROW(read_csv(bad), ParseError);
  std::stringstream bad2("t,u,y\n0,1,x\n");
  EXPECT_THROW(read_csv(bad2), ParseError);
  std::stringstream bad3("time,u,y\n");
  EXPECT_THROW(read_csv(bad3), ParseError);
}

TEST(TrajectoryType, Invariants) {
  EXPECT_THROW(Trajectory(Eigen::MatrixXd::Zero(1, 4), Eigen::MatrixXd::Zero(1, 3), 1.0), DimensionError);
  EXPECT_THROW(Trajectory(Eigen::MatrixXd::Zero(1, 0), Eigen::MatrixXd::Zero(1, 0), 1.0), DimensionError);
  EXPECT_THROW(Trajectory(Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd::Zero(1, 2), 0.0), ParameterError);
}
