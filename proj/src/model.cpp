#include "mlmem/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "mlmem/error.hpp"
#include "mlmem/kernels.hpp"

namespace mlmem {

std::string to_string(Architecture arch) {
  switch (arch) {
    case Architecture::BinaryLinearSvm: return "binary-linear-svm";
    case Architecture::BinaryLogistic: return "binary-lr";
    case Architecture::SoftmaxLinear: return "softmax-linear";
    case Architecture::Mlp: return "mlp";
    case Architecture::OvaLinearSvm: return "ova-linear-svm";
  }
  return "?";
}

Architecture architecture_from_string(const std::string& name) {
  if (name == "binary-linear-svm" || name == "svm") return Architecture::BinaryLinearSvm;
  if (name == "binary-lr" || name == "lr") return Architecture::BinaryLogistic;
  if (name == "softmax-linear" || name == "softmax") return Architecture::SoftmaxLinear;
  if (name == "mlp") return Architecture::Mlp;
  if (name == "ova-linear-svm" || name == "ova-svm") return Architecture::OvaLinearSvm;
  throw ContractError("unknown architecture '" + name + "'");
}

namespace {

bool is_binary(Architecture a) {
  return a == Architecture::BinaryLinearSvm || a == Architecture::BinaryLogistic;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Lowest index wins ties.
int argmax(std::span<const double> v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

void softmax_inplace(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

void check_input(const ModelSpec& spec, std::size_t nparams, std::size_t xdim) {
  if (xdim != spec.input_dim) {
    throw ContractError("dimension mismatch: expected d = " + std::to_string(spec.input_dim) +
                        ", got " + std::to_string(xdim));
  }
  if (nparams != parameter_count(spec)) {
    throw ContractError("parameter count mismatch: expected " +
                        std::to_string(parameter_count(spec)) + ", got " + std::to_string(nparams));
  }
}

void check_label(const ModelSpec& spec, int label) {
  if (label < 0 || label >= spec.classes) {
    throw ContractError("invalid label " + std::to_string(label) + " for " +
                        std::to_string(spec.classes) + " classes");
  }
}

// Fills ws.activations[l + 1] with the output of layer l (ReLU applied to
// hidden layers, raw logits for the last layer).
void forward(const Layout& layout, std::span<const float> params, std::span<const double> x,
             Workspace& ws) {
  const std::size_t L = layout.layers.size();
  if (ws.activations.size() != L + 1) ws.activations.resize(L + 1);
  std::span<const double> in = x;
  for (std::size_t l = 0; l < L; ++l) {
    const DenseLayer& layer = layout.layers[l];
    auto& out = ws.activations[l + 1];
    out.resize(layer.rows);
    const float* w = params.data() + layer.weight_offset;
    for (std::size_t r = 0; r < layer.rows; ++r) {
      double s = layer.has_bias ? static_cast<double>(params[layer.bias_offset + r]) : 0.0;
      const float* row = w + r * layer.cols;
      for (std::size_t c = 0; c < layer.cols; ++c) s += static_cast<double>(row[c]) * in[c];
      out[r] = s;
    }
    if (l + 1 < L) {
      for (double& v : out) v = v > 0.0 ? v : 0.0;
    }
    in = out;
  }
}

void scores_from_logits(const ModelSpec& spec, std::span<const double> logits,
                        PredictionOutput& out) {
  switch (spec.arch) {
    case Architecture::BinaryLinearSvm: {
      const double m = logits[0];
      out.scores = {-m, m};
      out.label = m >= 0.0 ? 1 : 0;
      return;
    }
    case Architecture::BinaryLogistic: {
      const double p = sigmoid(logits[0]);
      out.scores = {1.0 - p, p};
      out.label = p >= 0.5 ? 1 : 0;
      return;
    }
    case Architecture::OvaLinearSvm:
      out.scores.assign(logits.begin(), logits.end());
      out.label = argmax(out.scores);
      return;
    case Architecture::SoftmaxLinear:
    case Architecture::Mlp:
      out.scores.assign(logits.begin(), logits.end());
      softmax_inplace(out.scores);
      out.label = argmax(out.scores);
      return;
  }
}

}  // namespace

void ModelSpec::validate() const {
  if (input_dim == 0) throw ContractError("model input dimension must be positive");
  if (classes < 2) throw ContractError("model needs at least two classes");
  if (is_binary(arch) && classes != 2) {
    throw ContractError(to_string(arch) + " requires exactly 2 classes");
  }
  if (arch == Architecture::Mlp) {
    if (hidden.empty()) throw ContractError("mlp needs at least one hidden layer");
    for (auto h : hidden) {
      if (h == 0) throw ContractError("hidden layer width must be positive");
    }
  } else if (!hidden.empty()) {
    throw ContractError("hidden layers are only valid for mlp");
  }
}

Layout layout_of(const ModelSpec& spec) {
  spec.validate();
  Layout layout;
  std::size_t offset = 0;
  auto push = [&](std::size_t rows, std::size_t cols, bool bias) {
    DenseLayer layer{rows, cols, offset, offset + rows * cols, bias};
    offset = layer.end();
    layout.layers.push_back(layer);
  };
  const auto c = static_cast<std::size_t>(spec.classes);
  switch (spec.arch) {
    case Architecture::BinaryLinearSvm:
    case Architecture::BinaryLogistic:
      push(1, spec.input_dim, false);
      break;
    case Architecture::SoftmaxLinear:
    case Architecture::OvaLinearSvm:
      push(c, spec.input_dim, true);
      break;
    case Architecture::Mlp: {
      std::size_t in = spec.input_dim;
      for (auto h : spec.hidden) {
        push(h, in, true);
        in = h;
      }
      push(c, in, true);
      break;
    }
  }
  layout.size = offset;
  return layout;
}

std::size_t parameter_count(const ModelSpec& spec) { return layout_of(spec).size; }

ParameterLocation locate(const Layout& layout, std::size_t flat_index) {
  for (std::size_t l = 0; l < layout.layers.size(); ++l) {
    const DenseLayer& layer = layout.layers[l];
    if (flat_index < layer.bias_offset) {
      const std::size_t k = flat_index - layer.weight_offset;
      return {l, k / layer.cols, k % layer.cols, false};
    }
    if (flat_index < layer.end()) return {l, flat_index - layer.bias_offset, 0, true};
  }
  throw ContractError("parameter index " + std::to_string(flat_index) + " out of range");
}

bool ParameterVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); });
}

bool ParameterVector::bit_identical(const ParameterVector& other) const {
  return values_.size() == other.values_.size() &&
         (values_.empty() ||
          std::memcmp(values_.data(), other.values_.data(), values_.size() * sizeof(float)) == 0);
}

PredictionOutput predict(const ModelSpec& spec, const ParameterVector& params,
                         std::span<const double> x) {
  check_input(spec, params.size(), x.size());
  const Layout layout = layout_of(spec);
  Workspace ws;
  forward(layout, params.span(), x, ws);
  PredictionOutput out;
  scores_from_logits(spec, ws.activations.back(), out);
  return out;
}

int predict_label(const ModelSpec& spec, const Layout& layout, std::span<const float> params,
                  std::span<const double> x, Workspace& ws) {
  forward(layout, params, x, ws);
  const auto& z = ws.activations.back();
  switch (spec.arch) {
    case Architecture::BinaryLinearSvm:
    case Architecture::BinaryLogistic:
      // sigmoid(z) >= 0.5 exactly when z >= 0
      return z[0] >= 0.0 ? 1 : 0;
    default:
      return argmax(z);
  }
}

std::vector<double> last_layer_features(const ModelSpec& spec, const ParameterVector& params,
                                        std::span<const double> x) {
  check_input(spec, params.size(), x.size());
  const Layout layout = layout_of(spec);
  Workspace ws;
  forward(layout, params.span(), x, ws);
  if (spec.arch == Architecture::Mlp) return ws.activations[ws.activations.size() - 2];
  return ws.activations.back();
}

double accumulate_example_gradient(const ModelSpec& spec, const Layout& layout,
                                   std::span<const float> params, std::span<const double> x,
                                   int label, std::span<double> grad, Workspace& ws) {
  forward(layout, params, x, ws);
  const std::size_t L = layout.layers.size();
  if (ws.deltas.size() != L + 1) ws.deltas.resize(L + 1);
  auto& dz = ws.deltas[L];
  const auto& z = ws.activations[L];
  double loss_value = 0.0;

  switch (spec.arch) {
    case Architecture::BinaryLinearSvm: {
      const double t = label == 1 ? 1.0 : -1.0;
      const double slack = 1.0 - t * z[0];
      loss_value = std::max(0.0, slack);
      dz.assign(1, slack > 0.0 ? -t : 0.0);
      break;
    }
    case Architecture::BinaryLogistic: {
      const double p = sigmoid(z[0]);
      const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
      loss_value = label == 1 ? -std::log(pc) : -std::log(1.0 - pc);
      dz.assign(1, p - static_cast<double>(label));
      break;
    }
    case Architecture::OvaLinearSvm: {
      dz.assign(z.size(), 0.0);
      for (std::size_t k = 0; k < z.size(); ++k) {
        const double t = static_cast<int>(k) == label ? 1.0 : -1.0;
        const double slack = 1.0 - t * z[k];
        if (slack > 0.0) {
          loss_value += slack;
          dz[k] = -t;
        }
      }
      break;
    }
    case Architecture::SoftmaxLinear:
    case Architecture::Mlp: {
      ws.scores.assign(z.begin(), z.end());
      softmax_inplace(ws.scores);
      const double py = ws.scores[static_cast<std::size_t>(label)];
      loss_value = -std::log(std::max(py, kProbClamp));
      dz = ws.scores;
      dz[static_cast<std::size_t>(label)] -= 1.0;
      break;
    }
  }

  for (std::size_t l = L; l-- > 0;) {
    const DenseLayer& layer = layout.layers[l];
    const std::span<const double> in =
        l == 0 ? x : std::span<const double>(ws.activations[l]);
    const auto& delta = ws.deltas[l + 1];
    double* gw = grad.data() + layer.weight_offset;
    for (std::size_t r = 0; r < layer.rows; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      double* grow = gw + r * layer.cols;
      for (std::size_t c = 0; c < layer.cols; ++c) grow[c] += d * in[c];
      if (layer.has_bias) grad[layer.bias_offset + r] += d;
    }
    if (l == 0) break;
    // Back through W^T and the ReLU of the previous layer.
    auto& prev = ws.deltas[l];
    prev.assign(layer.cols, 0.0);
    const float* w = params.data() + layer.weight_offset;
    for (std::size_t r = 0; r < layer.rows; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const float* row = w + r * layer.cols;
      for (std::size_t c = 0; c < layer.cols; ++c) prev[c] += d * static_cast<double>(row[c]);
    }
    const auto& act = ws.activations[l];
    for (std::size_t c = 0; c < layer.cols; ++c) {
      if (act[c] <= 0.0) prev[c] = 0.0;
    }
  }
  return loss_value;
}

double loss(const ModelSpec& spec, const ParameterVector& params, std::span<const double> x,
            int label) {
  check_input(spec, params.size(), x.size());
  check_label(spec, label);
  const Layout layout = layout_of(spec);
  Workspace ws;
  std::vector<double> scratch(params.size(), 0.0);
  return accumulate_example_gradient(spec, layout, params.span(), x, label, scratch, ws);
}

double accuracy(const ModelSpec& spec, const ParameterVector& params, const LabeledDataset& data) {
  if (data.empty()) throw ContractError("accuracy of an empty dataset");
  check_input(spec, params.size(), data.dim());
  const Layout layout = layout_of(spec);
  std::vector<int> predicted(data.size());
  kernels::omp::predict_labels(spec, layout, params.span(), data, predicted);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) correct += predicted[i] == data.label(i) ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double train_test_gap(const ModelSpec& spec, const ParameterVector& params,
                      const LabeledDataset& train, const LabeledDataset& test) {
  if (train.dim() != test.dim() || train.classes() != test.classes()) {
    throw ContractError("train and test sets differ in d or c");
  }
  return accuracy(spec, params, train) - accuracy(spec, params, test);
}

}  // namespace mlmem
