#include "mlmem/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "mlmem/error.hpp"
#include "mlmem/kernels.hpp"
#include "mlmem/rng.hpp"

namespace mlmem {

std::string to_string(Optimizer opt) {
  switch (opt) {
    case Optimizer::Sgd: return "sgd";
    case Optimizer::Nesterov: return "nesterov";
    case Optimizer::AdaGrad: return "adagrad";
  }
  return "?";
}

Optimizer optimizer_from_string(const std::string& name) {
  if (name == "sgd") return Optimizer::Sgd;
  if (name == "nesterov") return Optimizer::Nesterov;
  if (name == "adagrad") return Optimizer::AdaGrad;
  throw ContractError("unknown optimizer '" + name + "'");
}

void Hyperparameters::validate(std::size_t n) const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ContractError("learning rate must be finite and positive");
  }
  if (epochs < 1) throw ContractError("epochs must be >= 1");
  if (batch_size < 1) throw ContractError("mini-batch size must be >= 1");
  if (batch_size > n) {
    throw ContractError("mini-batch size " + std::to_string(batch_size) +
                        " exceeds dataset size " + std::to_string(n));
  }
  if (optimizer == Optimizer::Nesterov && !(momentum >= 0.0 && momentum < 1.0)) {
    throw ContractError("momentum must be in [0, 1)");
  }
}

double Hyperparameters::learning_rate_at(int epoch) const {
  double lr = learning_rate;
  for (const auto& step : decay) {
    const auto at = static_cast<int>(std::floor(step.at_fraction * epochs));
    if (epoch >= at) lr *= step.factor;
  }
  return lr;
}

std::vector<DecayStep> step_decay_schedule() { return {{0.4, 0.1}, {0.6, 0.1}}; }

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("correlation of sequences with different lengths");
  if (a.size() < 2) throw ContractError("correlation needs at least two values");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) throw ContractError("degenerate correlation");
  return sab / std::sqrt(saa * sbb);
}

double correlation_term(std::span<const double> theta, std::span<const double> secret,
                        double lambda_c) {
  return -lambda_c * std::abs(pearson(theta, secret));
}

std::vector<double> correlation_gradient(std::span<const double> theta,
                                         std::span<const double> secret, double lambda_c) {
  if (theta.size() != secret.size()) {
    throw ContractError("correlation of sequences with different lengths");
  }
  if (theta.size() < 2) throw ContractError("correlation needs at least two values");
  const double n = static_cast<double>(theta.size());
  const double mt = std::accumulate(theta.begin(), theta.end(), 0.0) / n;
  const double ms = std::accumulate(secret.begin(), secret.end(), 0.0) / n;
  double sts = 0.0, stt = 0.0, sss = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double dt = theta[i] - mt;
    const double ds = secret[i] - ms;
    sts += dt * ds;
    stt += dt * dt;
    sss += ds * ds;
  }
  if (stt <= 0.0 || sss <= 0.0) throw ContractError("degenerate correlation");
  const double denom = std::sqrt(stt * sss);
  const double rho = sts / denom;
  const double sgn = rho >= 0.0 ? 1.0 : -1.0;
  // d rho / d theta_i = (s_i - s_mean) / denom - rho (theta_i - theta_mean) / stt
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double drho = (secret[i] - ms) / denom - rho * (theta[i] - mt) / stt;
    g[i] = -lambda_c * sgn * drho;
  }
  return g;
}

double sign_penalty(std::span<const double> theta, std::span<const int> secret, double lambda_s) {
  if (theta.size() != secret.size()) throw ContractError("sign secret length mismatch");
  if (secret.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    sum += std::max(0.0, -theta[i] * static_cast<double>(secret[i]));
  }
  return lambda_s / static_cast<double>(secret.size()) * sum;
}

std::vector<double> sign_penalty_gradient(std::span<const double> theta,
                                          std::span<const int> secret, double lambda_s) {
  if (theta.size() != secret.size()) throw ContractError("sign secret length mismatch");
  std::vector<double> g(theta.size(), 0.0);
  if (secret.empty()) return g;
  const double scale = lambda_s / static_cast<double>(secret.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (theta[i] * static_cast<double>(secret[i]) < 0.0) g[i] = -scale * secret[i];
  }
  return g;
}

namespace {

std::vector<double> widen(std::span<const float> v) { return {v.begin(), v.end()}; }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void RegularizerSpec::validate(std::size_t param_count) const {
  for (const auto& term : terms) {
    std::visit(overloaded{
                   [](const L1& t) {
                     if (!(t.lambda >= 0.0)) throw ContractError("l1 coefficient must be >= 0");
                   },
                   [](const L2& t) {
                     if (!(t.lambda >= 0.0)) throw ContractError("l2 coefficient must be >= 0");
                   },
                   [&](const Correlation& t) {
                     if (!(t.lambda >= 0.0)) throw ContractError("lambda_c must be >= 0");
                     if (t.secret.size() > param_count) {
                       throw CapacityError("correlation secret of length " +
                                           std::to_string(t.secret.size()) + " exceeds " +
                                           std::to_string(param_count) + " parameters");
                     }
                     if (t.secret.size() < 2) throw ContractError("correlation secret too short");
                   },
                   [&](const SignPenalty& t) {
                     if (!(t.lambda >= 0.0)) throw ContractError("lambda_s must be >= 0");
                     if (t.secret.size() > param_count) {
                       throw CapacityError("sign secret of length " +
                                           std::to_string(t.secret.size()) + " exceeds " +
                                           std::to_string(param_count) + " parameters");
                     }
                     for (int s : t.secret) {
                       if (s != 1 && s != -1) throw ContractError("sign secret entries must be +-1");
                     }
                   },
               },
               term);
  }
}

double RegularizerSpec::malicious_value(std::span<const float> params) const {
  double v = 0.0;
  for (const auto& term : terms) {
    if (const auto* c = std::get_if<Correlation>(&term)) {
      v += correlation_term(widen(params.first(c->secret.size())), c->secret, c->lambda);
    } else if (const auto* s = std::get_if<SignPenalty>(&term)) {
      v += sign_penalty(widen(params.first(s->secret.size())), s->secret, s->lambda);
    }
  }
  return v;
}

double RegularizerSpec::value(std::span<const float> params) const {
  double v = malicious_value(params);
  for (const auto& term : terms) {
    if (const auto* l1 = std::get_if<L1>(&term)) {
      double s = 0.0;
      for (float p : params) s += std::abs(static_cast<double>(p));
      v += l1->lambda * s;
    } else if (const auto* l2 = std::get_if<L2>(&term)) {
      double s = 0.0;
      for (float p : params) s += static_cast<double>(p) * p;
      v += l2->lambda * s;
    }
  }
  return v;
}

void RegularizerSpec::accumulate_gradient(std::span<const float> params,
                                          std::span<double> grad) const {
  for (const auto& term : terms) {
    std::visit(overloaded{
                   [&](const L1& t) {
                     if (t.lambda == 0.0) return;
                     for (std::size_t i = 0; i < params.size(); ++i) {
                       const double p = params[i];
                       grad[i] += t.lambda * (p > 0.0 ? 1.0 : (p < 0.0 ? -1.0 : 0.0));
                     }
                   },
                   [&](const L2& t) {
                     if (t.lambda == 0.0) return;
                     for (std::size_t i = 0; i < params.size(); ++i) {
                       grad[i] += 2.0 * t.lambda * static_cast<double>(params[i]);
                     }
                   },
                   [&](const Correlation& t) {
                     if (t.lambda == 0.0) return;
                     const auto g = correlation_gradient(widen(params.first(t.secret.size())),
                                                         t.secret, t.lambda);
                     for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
                   },
                   [&](const SignPenalty& t) {
                     if (t.lambda == 0.0) return;
                     const auto g = sign_penalty_gradient(widen(params.first(t.secret.size())),
                                                          t.secret, t.lambda);
                     for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
                   },
               },
               term);
  }
}

ParameterVector initialize_parameters(const ModelSpec& spec, std::uint64_t seed) {
  const Layout layout = layout_of(spec);
  ParameterVector params(layout.size, 0.0f);
  Rng rng(seed, "init");
  for (const auto& layer : layout.layers) {
    const double r = std::sqrt(6.0 / static_cast<double>(layer.cols + layer.rows));
    for (std::size_t i = 0; i < layer.weight_count(); ++i) {
      params[layer.weight_offset + i] = static_cast<float>(rng.uniform(-r, r));
    }
  }
  return params;
}

TrainReport sgd_train(const ModelSpec& spec, const LabeledDataset& data, const Hyperparameters& hp,
                      const RegularizerSpec& reg, const LabeledDataset* test) {
  return sgd_train_from(spec, initialize_parameters(spec, hp.seed), data, hp, reg, test);
}

TrainReport sgd_train_from(const ModelSpec& spec, ParameterVector init, const LabeledDataset& data,
                           const Hyperparameters& hp, const RegularizerSpec& reg,
                           const LabeledDataset* test) {
  const auto started = std::chrono::steady_clock::now();
  spec.validate();
  data.validate();
  if (data.dim() != spec.input_dim) {
    throw ContractError("dimension mismatch: model expects d = " + std::to_string(spec.input_dim) +
                        ", data has d = " + std::to_string(data.dim()));
  }
  if (data.classes() > spec.classes) throw ContractError("data has more classes than the model");
  const Layout layout = layout_of(spec);
  if (init.size() != layout.size) throw ContractError("initial parameter count mismatch");
  hp.validate(data.size());
  reg.validate(layout.size);

  TrainReport report;
  ParameterVector& params = report.params;
  params = std::move(init);
  const std::size_t n_params = layout.size;
  std::vector<double> grad(n_params, 0.0);
  std::vector<double> state(hp.optimizer == Optimizer::Sgd ? 0 : n_params, 0.0);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(hp.seed, "shuffle");

  std::size_t step = 0;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    const double lr = hp.learning_rate_at(epoch);
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += hp.batch_size) {
      const std::size_t end = std::min(order.size(), begin + hp.batch_size);
      std::span<const std::size_t> batch(order.data() + begin, end - begin);
      const double batch_loss =
          kernels::omp::batch_gradient(spec, layout, params.span(), data, batch, grad);
      const double inv = 1.0 / static_cast<double>(batch.size());
      for (double& g : grad) g *= inv;
      reg.accumulate_gradient(params.span(), grad);
      loss_sum += batch_loss * inv;
      ++batches;

      switch (hp.optimizer) {
        case Optimizer::Sgd:
          for (std::size_t i = 0; i < n_params; ++i) {
            params[i] = static_cast<float>(static_cast<double>(params[i]) - lr * grad[i]);
          }
          break;
        case Optimizer::Nesterov:
          for (std::size_t i = 0; i < n_params; ++i) {
            state[i] = hp.momentum * state[i] - lr * grad[i];
            params[i] = static_cast<float>(static_cast<double>(params[i]) +
                                           hp.momentum * state[i] - lr * grad[i]);
          }
          break;
        case Optimizer::AdaGrad:
          for (std::size_t i = 0; i < n_params; ++i) {
            state[i] += grad[i] * grad[i];
            params[i] = static_cast<float>(static_cast<double>(params[i]) -
                                           lr * grad[i] / (std::sqrt(state[i]) + 1e-8));
          }
          break;
      }
      ++step;
      if (!params.all_finite()) throw DivergenceError(epoch + 1, step);
    }
    report.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
    report.epoch_penalty.push_back(reg.malicious_value(params.span()));
  }

  report.train_accuracy = accuracy(spec, params, data);
  if (test != nullptr) {
    report.test_accuracy = accuracy(spec, params, *test);
    report.gap = report.train_accuracy - *report.test_accuracy;
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace mlmem
