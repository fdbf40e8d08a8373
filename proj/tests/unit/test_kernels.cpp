#include <omp.h>

#include <cstring>

#include "doctest.h"
#include "helpers.hpp"
#include "mlmem/deskdata.hpp"
#include "mlmem/kernels.hpp"
#include "mlmem/trainer.hpp"

using namespace mlmem;

namespace {

// Runs `fn` with several OpenMP team sizes; on a single core this still
// exercises the multi-thread code paths.
template <class Fn>
void with_threads(Fn fn) {
  for (int t : {1, 2, 3, 4}) {
    omp_set_num_threads(t);
    fn(t);
  }
  omp_set_num_threads(1);
}

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("serial and OpenMP batch gradients are bit-identical") {
  desk::DeskDatasetSpec spec;
  spec.n = 300;
  spec.classes = 4;
  auto data = desk::synth_data(spec);
  for (auto model : {ModelSpec{Architecture::Mlp, data.train.dim(), 4, {12}},
                     ModelSpec{Architecture::SoftmaxLinear, data.train.dim(), 4, {}},
                     ModelSpec{Architecture::OvaLinearSvm, data.train.dim(), 4, {}}}) {
    auto layout = layout_of(model);
    auto params = initialize_parameters(model, 5);
    std::vector<std::size_t> batch(100);
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = (i * 7) % data.train.size();
    std::vector<double> ref(layout.size);
    const double ref_loss =
        kernels::serial::batch_gradient(model, layout, params.span(), data.train, batch, ref);
    with_threads([&](int) {
      std::vector<double> got(layout.size);
      const double loss =
          kernels::omp::batch_gradient(model, layout, params.span(), data.train, batch, got);
      CHECK(std::memcmp(&loss, &ref_loss, sizeof loss) == 0);
      CHECK(same_bits(got, ref));
    });

    std::vector<int> a(data.test.size()), b(data.test.size());
    kernels::serial::predict_labels(model, layout, params.span(), data.test, a);
    with_threads([&](int) {
      kernels::omp::predict_labels(model, layout, params.span(), data.test, b);
      CHECK(a == b);
    });
  }
}

TEST_CASE("serial and OpenMP correlation search agree") {
  auto table = testing::random_reals(500 * 20, 1);
  auto segments = testing::random_reals(37 * 20, 2);
  std::vector<kernels::SlotMatch> ref(37), got(37);
  kernels::serial::correlation_search(segments, table, 20, ref);
  with_threads([&](int) {
    kernels::omp::correlation_search(segments, table, 20, got);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(got[i].best == ref[i].best);
      CHECK(got[i].worst == ref[i].worst);
      CHECK(got[i].best_corr == ref[i].best_corr);
      CHECK(got[i].worst_corr == ref[i].worst_corr);
    }
  });
}

TEST_CASE("serial and OpenMP scrub and histogram agree") {
  auto v = testing::random_reals(10000, 3);
  std::vector<float> base(v.begin(), v.end());
  auto ref = base;
  kernels::serial::randomize_low_bits(ref, 16, 99);
  with_threads([&](int) {
    auto got = base;
    kernels::omp::randomize_low_bits(got, 16, 99);
    CHECK(std::memcmp(got.data(), ref.data(), got.size() * sizeof(float)) == 0);
  });

  std::vector<std::uint64_t> h1(50), h2(50);
  kernels::serial::histogram(v, -1.0, 1.0, h1);
  with_threads([&](int) {
    std::fill(h2.begin(), h2.end(), 0);
    kernels::omp::histogram(v, -1.0, 1.0, h2);
    CHECK(h1 == h2);
  });
}

TEST_CASE("training is independent of the thread count") {
  desk::DeskDatasetSpec spec;
  spec.n = 200;
  auto data = desk::synth_data(spec);
  ModelSpec model{Architecture::Mlp, data.train.dim(), 2, {8}};
  Hyperparameters hp;
  hp.epochs = 2;
  omp_set_num_threads(1);
  auto ref = sgd_train(model, data.train, hp, {});
  omp_set_num_threads(3);
  auto got = sgd_train(model, data.train, hp, {});
  omp_set_num_threads(1);
  CHECK(got.params.bit_identical(ref.params));
}
