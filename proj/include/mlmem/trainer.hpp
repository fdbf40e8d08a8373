#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mlmem/dataset.hpp"
#include "mlmem/model.hpp"

namespace mlmem {

enum class Optimizer { Sgd, Nesterov, AdaGrad };

std::string to_string(Optimizer opt);
Optimizer optimizer_from_string(const std::string& name);

struct DecayStep {
  double at_fraction = 0.0;  // applies from epoch floor(at_fraction * T) on
  double factor = 1.0;
};

struct Hyperparameters {
  double learning_rate = 0.1;
  int epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  Optimizer optimizer = Optimizer::Sgd;
  double momentum = 0.9;  // Nesterov only
  std::vector<DecayStep> decay;

  void validate(std::size_t n) const;
  double learning_rate_at(int epoch) const;
};

// x0.1 at 40% and again at 60% of the epochs.
std::vector<DecayStep> step_decay_schedule();

struct L1 {
  double lambda = 0.0;
};
struct L2 {
  double lambda = 0.0;
};
// -lambda_c * |pearson(theta[0:k), s)| over the first k = |s| parameters.
struct Correlation {
  double lambda = 0.0;
  std::vector<double> secret;
};
// (lambda_s / k) * sum max(0, -theta_i s_i) over the first k = |s| parameters.
struct SignPenalty {
  double lambda = 0.0;
  std::vector<int> secret;  // entries in {-1, +1}
};

using RegularizerTerm = std::variant<L1, L2, Correlation, SignPenalty>;

// The trainer adds every listed term to the objective; an empty list is the
// plain ERM objective.
struct RegularizerSpec {
  std::vector<RegularizerTerm> terms;

  static RegularizerSpec none() { return {}; }
  RegularizerSpec& add(RegularizerTerm term) {
    terms.push_back(std::move(term));
    return *this;
  }
  void validate(std::size_t param_count) const;
  // Value of the malicious terms only (correlation + sign penalty).
  double malicious_value(std::span<const float> params) const;
  double value(std::span<const float> params) const;
  // Adds the gradient of all terms into grad.
  void accumulate_gradient(std::span<const float> params, std::span<double> grad) const;
};

struct TrainReport {
  ParameterVector params;
  std::vector<double> epoch_loss;     // mean data loss over the epoch's batches
  std::vector<double> epoch_penalty;  // malicious term value at epoch end
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;
  std::optional<double> gap;
  double seconds = 0.0;
};

// Uniform(-r, r) weights with r = sqrt(6 / (fan_in + fan_out)), zero biases.
ParameterVector initialize_parameters(const ModelSpec& spec, std::uint64_t seed);

// Mini-batch training. Each step applies
//   g = mean batch-loss gradient + regularizer gradient
// through the selected optimizer (plain SGD: theta <- theta - eta * g).
// Deterministic for a fixed seed. Throws DivergenceError on non-finite params.
TrainReport sgd_train(const ModelSpec& spec, const LabeledDataset& data, const Hyperparameters& hp,
                      const RegularizerSpec& reg, const LabeledDataset* test = nullptr);

// Same as above but starting from the given parameters instead of the
// seeded initialization.
TrainReport sgd_train_from(const ModelSpec& spec, ParameterVector init, const LabeledDataset& data,
                           const Hyperparameters& hp, const RegularizerSpec& reg,
                           const LabeledDataset* test = nullptr);

// Pearson correlation of two equal-length sequences. Throws ContractError
// ("degenerate correlation") when either has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

double correlation_term(std::span<const double> theta, std::span<const double> secret,
                        double lambda_c);
std::vector<double> correlation_gradient(std::span<const double> theta,
                                         std::span<const double> secret, double lambda_c);

double sign_penalty(std::span<const double> theta, std::span<const int> secret, double lambda_s);
std::vector<double> sign_penalty_gradient(std::span<const double> theta,
                                          std::span<const int> secret, double lambda_s);

}  // namespace mlmem
