#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "stablab/attacks.hpp"
#include "stablab/errors.hpp"
#include "stablab/linear.hpp"
#include "stablab/models.hpp"

using namespace stablab;

namespace {

const LinearClassifier kToy{(Vector(2) << 1.0, -2.0).finished(), 0.0};
const Vector kX = (Vector(2) << 0.5, 0.5).finished();

Vector random_vec(Eigen::Index n, Rng& rng, double lo = -1, double hi = 1) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

LinearClassifier random_linear(Eigen::Index n, Rng& rng) {
  return {random_vec(n, rng, -2, 2), rng.uniform(-0.5, 0.5)};
}

}  // namespace

TEST(Fgsm, HandComputedMaximize) {
  const Mlp model = to_mlp(kToy);
  EXPECT_NEAR(kToy.logit(kX), -0.5, 1e-15);
  const Vector adv = fgsm(model, kX, 1, 0.1, AttackMode::Maximize, false);
  EXPECT_NEAR(adv[0], 0.4, 1e-15);
  EXPECT_NEAR(adv[1], 0.6, 1e-15);
  EXPECT_NEAR(kToy.logit(adv), -0.8, 1e-14);
}

TEST(Fgsm, HandComputedMinimize) {
  const Vector adv = fgsm(to_mlp(kToy), kX, 1, 0.1, AttackMode::Minimize, false);
  EXPECT_NEAR(adv[0], 0.6, 1e-15);
  EXPECT_NEAR(adv[1], 0.4, 1e-15);
  EXPECT_NEAR(kToy.logit(adv), -0.2, 1e-14);
}

TEST(Fgsm, ZeroBudgetIsIdentity) {
  EXPECT_EQ(fgsm(to_mlp(kToy), kX, 1, 0.0, AttackMode::Maximize, false), kX);
  EXPECT_THROW(fgsm(to_mlp(kToy), kX, 1, -0.1, AttackMode::Maximize, false), Error);
}

TEST(Fgsm, BatchMatchesSingle) {
  Rng rng(2, 0);
  const Mlp model = init_mlp({5, 6, 3}, rng);
  RowMatrix X(4, 5);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform();
  const std::vector<int> y{0, 1, 2, 1};
  const RowMatrix adv = fgsm_batch(model, X, y, 0.05, AttackMode::Maximize, true);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(Vector(adv.row(i).transpose()),
              fgsm(model, X.row(i).transpose(), y[i], 0.05, AttackMode::Maximize, true));
  }
}

TEST(Pgd, OneFullStepEqualsClosedForm) {
  Rng rng(3, streams::kAttack);
  for (int t = 0; t < 100; ++t) {
    const auto f = random_linear(6, rng);
    const Vector x = random_vec(6, rng);
    const int y = rng.below(2) ? 1 : -1;
    const double eps = rng.uniform(0.01, 0.5);
    const AttackConfig cfg{eps, 1, eps, AttackInit::Zero, AttackMode::Maximize, false};
    const Vector adv = pgd(to_mlp(f), x, y, cfg, rng);
    const Vector expected = x - eps * y * f.w.array().sign().matrix();
    EXPECT_LE((adv - expected).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Pgd, MoreStepsNeverWorseWithBestIterate) {
  Rng rng(4, streams::kInit);
  const Mlp model = init_mlp({8, 16, 1}, rng);
  for (int t = 0; t < 50; ++t) {
    const Vector x = random_vec(8, rng);
    const int y = rng.below(2) ? 1 : -1;
    Rng r10(1, streams::kAttack), r100(1, streams::kAttack);
    const auto c10 = AttackConfig::pgd(0.3, 10, 0.25, AttackInit::Zero, AttackMode::Maximize, false);
    const auto c100 = AttackConfig::pgd(0.3, 100, 0.25, AttackInit::Zero, AttackMode::Maximize, false);
    const double l10 = loss(model, pgd(model, x, y, c10, r10), y, LossKind::Logistic);
    const double l100 = loss(model, pgd(model, x, y, c100, r100), y, LossKind::Logistic);
    EXPECT_GE(l100, l10 - 1e-9);
  }
}

TEST(Pgd, ClampKeepsPixelsInUnitBox) {
  Rng rng(5, streams::kInit);
  const Mlp model = init_mlp({10, 8, 3}, rng);
  RowMatrix X(20, 10);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.below(3) * 0.5;  // 0, 0.5, 1
  std::vector<int> y(20);
  for (auto& v : y) v = int(rng.below(3));
  for (auto init : {AttackInit::Zero, AttackInit::UniformRandom}) {
    const auto cfg = AttackConfig::pgd(0.3, 10, 0.25, init, AttackMode::Maximize, true);
    const RowMatrix adv = pgd_batch(model, X, y, cfg, rng);
    EXPECT_GE(adv.minCoeff(), 0.0);
    EXPECT_LE(adv.maxCoeff(), 1.0);
    EXPECT_LE((adv - X).cwiseAbs().maxCoeff(), 0.3 + 1e-12);
  }
}

TEST(Pgd, BudgetAndModeInvariants) {
  Rng rng(6, 0);
  for (int t = 0; t < 200; ++t) {
    const int m = 1 + int(rng.below(10));
    std::vector<int> dims{m};
    for (std::uint64_t l = 0, L = rng.below(3); l < L; ++l) dims.push_back(2 + int(rng.below(8)));
    const bool binary = rng.below(2);
    dims.push_back(binary ? 1 : 3);
    const Mlp model = init_mlp(dims, rng);
    const LossKind kind = model.default_loss();
    const Vector x = random_vec(m, rng, 0, 1);
    const int y = binary ? (rng.below(2) ? 1 : -1) : int(rng.below(3));
    const double eps = rng.uniform(0, 0.5);
    const auto mode = rng.below(2) ? AttackMode::Maximize : AttackMode::Minimize;
    const auto init = rng.below(2) ? AttackInit::Zero : AttackInit::UniformRandom;
    const auto cfg = AttackConfig::pgd(eps, 1 + int(rng.below(20)), rng.uniform(0.05, 1.0), init,
                                       mode, rng.below(2));
    const Vector adv = pgd(model, x, y, cfg, rng);
    ASSERT_LE((adv - x).cwiseAbs().maxCoeff(), eps + 1e-12) << "trial " << t;
    if (init == AttackInit::Zero) {
      const double before = loss(model, x, y, kind), after = loss(model, adv, y, kind);
      if (mode == AttackMode::Maximize) {
        EXPECT_GE(after, before) << "trial " << t;
      } else {
        EXPECT_LE(after, before) << "trial " << t;
      }
    }
  }
}

TEST(Pgd, ZeroBudgetAndBadConfig) {
  Rng rng(7, 0);
  const Mlp model = to_mlp(kToy);
  const auto zero = AttackConfig::pgd(0.0, 10, 0.25, AttackInit::UniformRandom, AttackMode::Maximize, false);
  EXPECT_EQ(pgd(model, kX, 1, zero, rng), kX);
  AttackConfig bad{0.1, 0, 0.01, AttackInit::Zero, AttackMode::Maximize, false};
  EXPECT_THROW(bad.validate(), Error);
  bad = {-0.1, 10, 0.01, AttackInit::Zero, AttackMode::Maximize, false};
  EXPECT_THROW(pgd(model, kX, 1, bad, rng), Error);
  bad = {0.1, 10, 0.0, AttackInit::Zero, AttackMode::Maximize, false};
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Pgd, BatchMatchesSingleWithZeroStart) {
  Rng rng(8, streams::kInit);
  const Mlp model = init_mlp({4, 6, 1}, rng);
  RowMatrix X(6, 4);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform();
  const std::vector<int> y{1, -1, 1, 1, -1, -1};
  const auto cfg = AttackConfig::pgd(0.2, 15, 0.25, AttackInit::Zero, AttackMode::Maximize, false);
  Rng a(1, streams::kAttack);
  const RowMatrix adv = pgd_batch(model, X, y, cfg, a);
  for (int i = 0; i < 6; ++i) {
    Rng b(1, streams::kAttack);
    const Vector single = pgd(model, X.row(i).transpose(), y[i], cfg, b);
    EXPECT_LE((single - adv.row(i).transpose()).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Pgd, RandomStartIsSeeded) {
  Rng init(9, streams::kInit);
  const Mlp model = init_mlp({4, 6, 1}, init);
  const RowMatrix X = RowMatrix::Constant(3, 4, 0.5);
  const std::vector<int> y{1, -1, 1};
  const auto cfg = AttackConfig::pgd(0.2, 5, 0.25, AttackInit::UniformRandom, AttackMode::Maximize, false);
  Rng a(3, streams::kAttack), b(3, streams::kAttack);
  EXPECT_EQ(pgd_batch(model, X, y, cfg, a), pgd_batch(model, X, y, cfg, b));
}

TEST(LinearWorstCase, PaperExample) {
  const auto f = natural_classifier(0.1, 2);
  const Vector x = (Vector(3) << 0.3, -0.2, 1.0).finished();
  const Vector p = linear_worst_case(f, x, 1, 0.2, AttackMode::Minimize);
  EXPECT_LE((p - (x + Vector::Constant(3, 0.2))).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(linear_worst_case(f, x, 1, 0.0, AttackMode::Maximize), x);
  EXPECT_THROW(linear_worst_case(f, x, 1, -0.1, AttackMode::Maximize), Error);
}

TEST(LinearWorstCase, PgdMatchesClosedForm) {
  Rng rng(10, 0);
  for (int t = 0; t < 300; ++t) {
    const auto f = random_linear(1 + rng.below(12), rng);
    const Vector x = random_vec(f.w.size(), rng);
    const int y = rng.below(2) ? 1 : -1;
    const double eps = rng.uniform(0.001, 0.5);
    const auto mode = rng.below(2) ? AttackMode::Maximize : AttackMode::Minimize;
    const auto cfg = AttackConfig::pgd(eps, 100, 0.25, AttackInit::Zero, mode, false);
    const Mlp model = to_mlp(f);
    const double got = loss(model, pgd(model, x, y, cfg, rng), y, LossKind::Logistic);
    const double want = oracle::logistic_loss(y * f.logit(linear_worst_case(f, x, y, eps, mode)));
    EXPECT_NEAR(got, want, 1e-9) << "trial " << t;
  }
}

TEST(LinearRobustLoss, MatchesWorstCase) {
  Rng rng(11, 0);
  for (int t = 0; t < 100; ++t) {
    const auto f = random_linear(5, rng);
    const Vector x = random_vec(5, rng);
    const int y = rng.below(2) ? 1 : -1;
    const double eps = rng.uniform(0, 0.5);
    const double margin = y * f.logit(x) - eps * f.w.lpNorm<1>();
    EXPECT_NEAR(linear_robust_loss(f, x, y, eps), oracle::logistic_loss(margin), 1e-12);
  }
}
