#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "bowtie/errors.hpp"
#include "bowtie/model.hpp"

using namespace bowtie;

namespace {

Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

const SystemParams kFig1{1.0, 0.1, 1.0};
const SingleModeCoupling kFig1Mode{0.1, 10.0};

std::size_t count_kind(const std::vector<CrossingRecord>& r, CrossingKind k) {
  return static_cast<std::size_t>(std::count_if(r.begin(), r.end(), [&](const auto& x) { return x.kind == k; }));
}

}  // namespace

TEST(SpinOperators, Matrices) {
  const SpinOperators ops = spin1_operators();
  Eigen::Matrix3d sz = Eigen::Vector3d(1, 0, -1).asDiagonal();
  Eigen::Matrix3d sx;
  sx << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  EXPECT_EQ(ops.sz, sz);
  EXPECT_EQ(ops.sx, sx);
  const Eigen::VectorXd ev = sorted_eigenvalues(ops.sx);
  EXPECT_NEAR(ev[0], -std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(ev[1], 0.0, 1e-14);
  EXPECT_NEAR(ev[2], std::sqrt(2.0), 1e-14);
}

TEST(SystemHamiltonian, Examples) {
  Eigen::Matrix3d h0;
  h0 << 0, 0.1, 0, 0.1, 0, 0.1, 0, 0.1, 0;
  EXPECT_EQ(h_system(0.0, kFig1), h0);
  Eigen::Matrix3d h2;
  h2 << 2, 0.1, 0, 0.1, 0, 0.1, 0, 0.1, -2;
  EXPECT_EQ(h_system(2.0, kFig1), h2);
  const Eigen::VectorXd ev = sorted_eigenvalues(h0);
  EXPECT_NEAR(ev[0], -0.1 * std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(ev[1], 0.0, 1e-15);
  EXPECT_NEAR(ev[2], 0.1 * std::sqrt(2.0), 1e-15);
}

TEST(TruncatedHamiltonian, DecoupledBlocks) {
  const SingleModeCoupling off{0.0, 10.0};
  const Eigen::MatrixXd h = h_single_mode_truncated(1.3, kFig1, off, 3);
  for (int n = 0; n <= 3; ++n) {
    for (int m = 0; m <= 3; ++m) {
      const Eigen::Matrix3d blk = h.block<3, 3>(3 * n, 3 * m);
      if (n == m) {
        EXPECT_TRUE(blk.isApprox(h_system(1.3, kFig1) + n * 10.0 * Eigen::Matrix3d::Identity()));
      } else {
        EXPECT_TRUE(blk.isZero());
      }
    }
  }
  EXPECT_EQ(h_single_mode_truncated(1.3, kFig1, kFig1Mode, 0), Eigen::MatrixXd(h_system(1.3, kFig1)));
}

TEST(TruncatedHamiltonian, HermitianAndMirrorSymmetricSpectrum) {
  for (double t : {-17.3, -2.0, 0.0, 0.4, 9.9, 25.0}) {
    const Eigen::MatrixXd h = h_single_mode_truncated(t, kFig1, {0.3, 7.0}, 6);
    EXPECT_EQ(h, h.transpose());
    const Eigen::VectorXd a = sorted_eigenvalues(h);
    const Eigen::VectorXd b = sorted_eigenvalues(h_single_mode_truncated(-t, kFig1, {0.3, 7.0}, 6));
    for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-10 * std::max(1.0, std::abs(a[i])));
  }
}

TEST(TruncatedHamiltonian, RejectsNegativeCutoff) {
  EXPECT_THROW(h_single_mode_truncated(0.0, kFig1, kFig1Mode, -1), ConfigError);
}

TEST(EnergyDiagram, DiabaticLinesWhenUncoupled) {
  const SystemParams p{1.0, 0.0, 1.0};
  const SingleModeCoupling c{0.0, 10.0};
  const int n_max = 3;
  const EnergyDiagram d = energy_diagram(p, c, n_max, {-30.0, 30.0, 0.5});
  ASSERT_EQ(d.times.size(), 121u);
  for (std::size_t i = 0; i < d.times.size(); ++i) {
    std::vector<double> lines;
    for (Spin s : kSpins) {
      for (int n = 0; n <= n_max; ++n) lines.push_back(diabatic_energy({s, n}, d.times[i], p, c));
    }
    std::sort(lines.begin(), lines.end());
    for (std::size_t j = 0; j < lines.size(); ++j) {
      EXPECT_NEAR(d.levels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), lines[j], 1e-12);
    }
  }
}

TEST(EnergyDiagram, ParallelFamiliesSeparatedByModeFrequency) {
  // Far from every crossing group the spacing within a family is Omega up to small dressing.
  const EnergyDiagram d = energy_diagram(kFig1, kFig1Mode, 2, {-30.0, -29.0, 1.0});
  const Eigen::VectorXd row = d.levels.row(0).transpose();
  // At t = -30 the (+, n) rungs at -30, -20, -10 are the three lowest levels.
  EXPECT_NEAR(row[1] - row[0], 10.0, 0.01);
  EXPECT_NEAR(row[2] - row[1], 10.0, 0.01);
}

TEST(Crossings, Fig1Taxonomy) {
  const auto recs = classify_crossings(kFig1, kFig1Mode, 4, {-30.0, 30.0});
  std::size_t a3 = 0;
  bool a2_left = false, a2_right = false;
  for (const auto& r : recs) {
    // Dressed copies (+,n),(0,n),(-,n) sit at E = n Omega; only the vacuum group is at the origin.
    if (r.kind == CrossingKind::a3) EXPECT_NEAR(r.time, 0.0, 1e-12);
    if (r.kind == CrossingKind::a3 && std::abs(r.energy) < 1e-12) {
      ++a3;
      ASSERT_EQ(r.levels.size(), 3u);
      EXPECT_EQ(r.levels[0], (DiabaticLevel{Spin::plus, 0}));
      EXPECT_EQ(r.levels[1], (DiabaticLevel{Spin::zero, 0}));
      EXPECT_EQ(r.levels[2], (DiabaticLevel{Spin::minus, 0}));
    }
    if (r.kind == CrossingKind::a2 && std::abs(r.energy) < 1e-12) {
      if (std::abs(r.time + 10.0) < 1e-12) {
        a2_left = true;
        ASSERT_EQ(r.levels.size(), 2u);
        EXPECT_EQ(r.levels[0], (DiabaticLevel{Spin::plus, 1}));
        EXPECT_EQ(r.levels[1], (DiabaticLevel{Spin::zero, 0}));
      }
      if (std::abs(r.time - 10.0) < 1e-12) a2_right = true;
    }
  }
  EXPECT_EQ(a3, 1u);
  EXPECT_TRUE(a2_left);
  EXPECT_TRUE(a2_right);
}

TEST(Crossings, ThreeLevelGroupsWithLargeShiftAreForbidden) {
  // (+, m+2n), (0, m+n), (-, m) meet at t = -n Omega / v; n >= 2 is an f1 crossing.
  const auto recs = classify_crossings(kFig1, kFig1Mode, 6, {-30.0, 30.0});
  bool found = false;
  for (const auto& r : recs) {
    if (std::abs(r.time + 20.0) < 1e-9 && r.levels.size() == 3) {
      const int shift = r.levels[0].bosons - r.levels[1].bosons;
      if (shift == 2) {
        EXPECT_EQ(r.kind, CrossingKind::f1);
        found = true;
      }
    }
  }
  EXPECT_TRUE(found);
}

TEST(Crossings, MirrorSymmetricAndCutoffInvariant) {
  const TimeWindow w{-30.0, 30.0};
  const auto recs = classify_crossings(kFig1, kFig1Mode, 4, w);
  for (const auto& r : recs) {
    const bool mirrored = std::any_of(recs.begin(), recs.end(), [&](const auto& q) {
      return std::abs(q.time + r.time) < 1e-9 && std::abs(q.energy - r.energy) < 1e-9 && q.kind == r.kind;
    });
    EXPECT_TRUE(mirrored) << "t=" << r.time << " E=" << r.energy;
  }
  // Records up to the original energy ceiling do not move when the cutoff grows.
  const auto bigger = classify_crossings(kFig1, kFig1Mode, 9, w);
  std::vector<CrossingRecord> clipped;
  for (const auto& r : bigger) {
    if (r.energy <= 40.0 + 1e-9) clipped.push_back(r);
  }
  ASSERT_EQ(clipped.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_NEAR(clipped[i].time, recs[i].time, 1e-12);
    EXPECT_NEAR(clipped[i].energy, recs[i].energy, 1e-12);
    EXPECT_EQ(clipped[i].kind, recs[i].kind);
    EXPECT_EQ(clipped[i].levels, recs[i].levels);
  }
}

TEST(Crossings, DegenerateLadderRejected) {
  EXPECT_THROW(classify_crossings(kFig1, {0.1, 0.0}, 4, {-30.0, 30.0}), ConfigError);
}

TEST(Crossings, UncoupledModelHasNoGap) {
  const SystemParams p{1.0, 0.0, 1.0};
  const SingleModeCoupling c{0.0, 10.0};
  const auto recs = classify_crossings(p, c, 2, {-30.0, 30.0});
  EXPECT_GT(recs.size(), 0u);
  for (const auto& r : recs) {
    if (!is_allowed(r.kind)) continue;
    EXPECT_LT(anticrossing_gap(p, c, 3, r, 1.0).gap, 1e-9);
  }
}

TEST(Crossings, A3GapScalesWithDelta) {
  auto vacuum_a3_gap = [](const SystemParams& p, const SingleModeCoupling& c) {
    const auto recs = classify_crossings(p, c, 4, {-1.0, 1.0});
    EXPECT_EQ(count_kind(recs, CrossingKind::a3), 5u);
    const auto& a3 = *std::find_if(recs.begin(), recs.end(), [](const auto& r) {
      return r.kind == CrossingKind::a3 && std::abs(r.energy) < 1e-12;
    });
    return anticrossing_gap(p, c, 5, a3, 2.0).gap;
  };
  double previous = 0.0;
  for (double delta : {0.05, 0.1, 0.2}) {
    const SystemParams p{1.0, delta, 1.0};
    // Without the mode the splitting is exactly that of Delta * Sx at t = 0.
    EXPECT_NEAR(vacuum_a3_gap(p, {0.0, 10.0}) / (delta * std::sqrt(2.0)), 1.0, 1e-9);
    const double gap = vacuum_a3_gap(p, kFig1Mode);
    if (previous > 0.0) EXPECT_NEAR(gap / previous, 2.0, 0.04);
    previous = gap;
  }
}

TEST(Csv, DiagramAndCrossingHeaders) {
  const EnergyDiagram d = energy_diagram(kFig1, kFig1Mode, 1, {-1.0, 1.0, 1.0});
  const std::string csv = diagram_csv(d);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,E1,E2,E3,E4,E5,E6");
  const std::string cr = crossings_csv(classify_crossings(kFig1, kFig1Mode, 0, {-1.0, 1.0}));
  EXPECT_EQ(cr, "t,E,kind,levels\n0,0,a3,+:0;0:0;-:0\n");
}
