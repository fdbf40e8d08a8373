#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "mlmem/error.hpp"
#include "mlmem/trainer.hpp"
#include "oracles.hpp"

using namespace mlmem;

TEST_CASE("correlation term values") {
  std::vector<double> s{1, 3, 2, 5, 4};
  std::vector<double> neg{-1, -3, -2, -5, -4};
  CHECK(correlation_term(s, s, 0.7) == doctest::Approx(-0.7));
  CHECK(correlation_term(neg, s, 0.7) == doctest::Approx(-0.7));
  std::vector<double> a{1, -1, 1, -1}, b{1, 1, -1, -1};
  CHECK(correlation_term(a, b, 1.0) == doctest::Approx(0.0));
  std::vector<double> flat{2, 2, 2, 2};
  CHECK_THROWS_AS(correlation_term(flat, b, 1.0), ContractError);
}

TEST_CASE("pearson agrees with the two-pass oracle") {
  for (std::uint64_t t = 0; t < 20; ++t) {
    auto a = testing::random_reals(40, 100 + t);
    auto b = testing::random_reals(40, 200 + t);
    CHECK(pearson(a, b) == doctest::Approx(oracle::pearson(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("correlation gradient") {
  SUBCASE("stationary at theta = s") {
    auto s = testing::random_reals(30, 5);
    for (double g : correlation_gradient(s, s, 1.0)) CHECK(std::abs(g) < 1e-6);
  }
  SUBCASE("linear in lambda") {
    auto t = testing::random_reals(30, 6);
    auto s = testing::random_reals(30, 7);
    auto g1 = correlation_gradient(t, s, 1.5);
    auto g2 = correlation_gradient(t, s, 3.0);
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g2[i] == doctest::Approx(2 * g1[i]));
  }
  SUBCASE("finite differences at 20 random points") {
    for (std::uint64_t t = 0; t < 20; ++t) {
      auto theta = testing::random_reals(50, 300 + t);
      auto s = testing::random_reals(50, 400 + t, 0, 255);
      auto f = [&](const std::vector<double>& x) { return correlation_term(x, s, 1.0); };
      auto fd = oracle::numeric_gradient(f, theta, 1e-4);
      CHECK(oracle::relative_error(correlation_gradient(theta, s, 1.0), fd) <= 1e-4);
    }
  }
}

TEST_CASE("sign penalty values") {
  std::vector<double> t1{0.3, -0.2};
  std::vector<int> s1{1, -1};
  CHECK(sign_penalty(t1, s1, 5.0) == 0.0);
  std::vector<double> t2{-0.5};
  std::vector<int> s2{1};
  CHECK(sign_penalty(t2, s2, 2.0) == doctest::Approx(1.0));
  // Every sign wrong: the penalty is the scaled l1 norm.
  std::vector<double> t3{0.5, -1.5, 2.0, -0.25};
  std::vector<int> s3{-1, 1, -1, 1};
  CHECK(sign_penalty(t3, s3, 3.0) == doctest::Approx(3.0 / 4 * (0.5 + 1.5 + 2.0 + 0.25)));
}

TEST_CASE("sign penalty subgradient") {
  std::vector<double> agree{0.3, -0.2};
  std::vector<int> s{1, -1};
  for (double g : sign_penalty_gradient(agree, s, 4.0)) CHECK(g == 0.0);
  std::vector<double> one{-1.0};
  std::vector<int> plus{1};
  CHECK(sign_penalty_gradient(one, plus, 1.0)[0] == doctest::Approx(-1.0));

  for (std::uint64_t t = 0; t < 20; ++t) {
    auto theta = testing::random_reals(60, 500 + t);
    Rng rng(600 + t);
    std::vector<int> bits(60);
    for (auto& b : bits) b = rng.below(2) ? 1 : -1;
    auto f = [&](const std::vector<double>& x) { return sign_penalty(x, bits, 50.0); };
    auto fd = oracle::numeric_gradient(f, theta, 1e-5);
    auto g = sign_penalty_gradient(theta, bits, 50.0);
    std::vector<double> a, b;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      if (std::abs(theta[i]) < 1e-3) continue;
      a.push_back(g[i]);
      b.push_back(fd[i]);
    }
    CHECK(oracle::relative_error(a, b) <= 1e-4);
  }
}

TEST_CASE("sgd_train") {
  SUBCASE("separable 1-D logistic regression") {
    LabeledDataset d(DatasetKind::Tabular, 1, 2);
    for (int i = 0; i < 50; ++i) {
      d.add(std::vector<double>{-1.0}, 0);
      d.add(std::vector<double>{1.0}, 1);
    }
    Hyperparameters hp;
    hp.epochs = 50;
    hp.batch_size = 10;
    auto rep = sgd_train({Architecture::BinaryLogistic, 1, 2, {}}, d, hp, {});
    CHECK(rep.train_accuracy == 1.0);
    CHECK(rep.epoch_loss.back() <= rep.epoch_loss.front());
  }
  SUBCASE("one l2 step with zero data gradient") {
    // A hinge model far beyond the margin contributes no data gradient.
    LabeledDataset d(DatasetKind::Tabular, 1, 2);
    d.add(std::vector<double>{1.0}, 1);
    ParameterVector init(std::vector<float>{5.0f});
    Hyperparameters hp;
    hp.epochs = 1;
    hp.batch_size = 1;
    hp.learning_rate = 0.1;
    RegularizerSpec reg;
    reg.add(L2{0.5});
    auto rep = sgd_train_from({Architecture::BinaryLinearSvm, 1, 2, {}}, init, d, hp, reg);
    CHECK(rep.params[0] == doctest::Approx(5.0 - 0.1 * 2 * 0.5 * 5.0));
  }
  SUBCASE("deterministic for a seed") {
    auto xs = std::vector<std::vector<double>>{};
    std::vector<int> ys;
    Rng rng(3);
    for (int i = 0; i < 64; ++i) {
      xs.push_back({rng.normal(), rng.normal(), rng.normal()});
      ys.push_back(static_cast<int>(rng.below(3)));
    }
    auto d = testing::tabular(xs, ys, 3);
    Hyperparameters hp;
    hp.epochs = 3;
    ModelSpec spec{Architecture::Mlp, 3, 3, {8}};
    auto a = sgd_train(spec, d, hp, {});
    auto b = sgd_train(spec, d, hp, {});
    CHECK(a.params.bit_identical(b.params));
  }
  SUBCASE("bad hyperparameters") {
    Hyperparameters hp;
    hp.batch_size = 0;
    CHECK_THROWS_AS(hp.validate(10), ContractError);
  }
}

TEST_CASE("step decay") {
  Hyperparameters hp;
  hp.epochs = 10;
  hp.learning_rate = 1.0;
  hp.decay = step_decay_schedule();
  CHECK(hp.learning_rate_at(3) == doctest::Approx(1.0));
  CHECK(hp.learning_rate_at(4) == doctest::Approx(0.1));
  CHECK(hp.learning_rate_at(6) == doctest::Approx(0.01));
}
