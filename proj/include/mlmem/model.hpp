#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mlmem/dataset.hpp"

namespace mlmem {

enum class Architecture {
  BinaryLinearSvm,  // f(x) = sign(w.x), hinge loss, no bias
  BinaryLogistic,   // f(x) = sigmoid(w.x), cross-entropy, no bias
  SoftmaxLinear,    // dense c x d + bias, softmax, NLL
  Mlp,              // dense ReLU hidden layers, softmax output, NLL
  OvaLinearSvm,     // c one-vs-all hinge classifiers sharing one dense layer
};

std::string to_string(Architecture arch);
Architecture architecture_from_string(const std::string& name);

struct ModelSpec {
  Architecture arch = Architecture::SoftmaxLinear;
  std::size_t input_dim = 0;
  int classes = 2;
  std::vector<std::size_t> hidden;  // MLP only

  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

// One affine layer in the canonical flat order: the row-major weight matrix
// (rows = outputs, cols = inputs) followed by its bias vector. Layers are laid
// out one after another (layer-major).
struct DenseLayer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
  bool has_bias = true;

  std::size_t weight_count() const { return rows * cols; }
  std::size_t end() const { return bias_offset + (has_bias ? rows : 0); }
};

struct Layout {
  std::vector<DenseLayer> layers;
  std::size_t size = 0;
};

struct ParameterLocation {
  std::size_t layer = 0;
  std::size_t row = 0;
  std::size_t col = 0;  // meaningless for biases
  bool is_bias = false;
};

Layout layout_of(const ModelSpec& spec);
std::size_t parameter_count(const ModelSpec& spec);
ParameterLocation locate(const Layout& layout, std::size_t flat_index);

// Single-precision parameters in canonical flat order.
class ParameterVector {
 public:
  ParameterVector() = default;
  explicit ParameterVector(std::size_t n, float fill = 0.0f) : values_(n, fill) {}
  explicit ParameterVector(std::vector<float> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  float& operator[](std::size_t i) { return values_[i]; }
  float operator[](std::size_t i) const { return values_[i]; }
  std::span<float> span() { return values_; }
  std::span<const float> span() const { return values_; }
  const std::vector<float>& values() const { return values_; }
  std::vector<float>& values() { return values_; }

  bool all_finite() const;
  // Bitwise comparison; distinguishes -0.0f from 0.0f and NaN payloads.
  bool bit_identical(const ParameterVector& other) const;

 private:
  std::vector<float> values_;
};

struct PredictionOutput {
  int label = 0;
  // Probabilities for LR/softmax/MLP; (-margin, +margin) for binary SVM;
  // per-class margins for one-vs-all SVM.
  std::vector<double> scores;
};

// Scratch buffers for forward/backward passes, reused across examples.
struct Workspace {
  std::vector<std::vector<double>> activations;
  std::vector<std::vector<double>> deltas;
  std::vector<double> scores;
};

PredictionOutput predict(const ModelSpec& spec, const ParameterVector& params,
                         std::span<const double> x);

// Label only; uses the caller's workspace so batch evaluation does not allocate.
int predict_label(const ModelSpec& spec, const Layout& layout, std::span<const float> params,
                  std::span<const double> x, Workspace& ws);

// Output-layer activations (pre-softmax) for the last hidden representation;
// for MLPs this is the last hidden layer, for linear models the logits.
std::vector<double> last_layer_features(const ModelSpec& spec, const ParameterVector& params,
                                        std::span<const double> x);

double loss(const ModelSpec& spec, const ParameterVector& params, std::span<const double> x,
            int label);

// Adds d loss / d params for one example into `grad` and returns the loss.
double accumulate_example_gradient(const ModelSpec& spec, const Layout& layout,
                                   std::span<const float> params, std::span<const double> x,
                                   int label, std::span<double> grad, Workspace& ws);

double accuracy(const ModelSpec& spec, const ParameterVector& params, const LabeledDataset& data);

// acc(train) - acc(test).
double train_test_gap(const ModelSpec& spec, const ParameterVector& params,
                      const LabeledDataset& train, const LabeledDataset& test);

// Cross-entropy probabilities are clamped to [kProbClamp, 1 - kProbClamp].
inline constexpr double kProbClamp = 1e-7;

}  // namespace mlmem
