#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "melm/dataset.hpp"
#include "melm/linalg.hpp"

namespace melm {

enum class Activation { Tanh, Relu, Softlim, Hardlim, Multiquadric };

Activation parse_activation(const std::string& name);  // throws on unknown names
std::string activation_name(Activation activation);

struct ElmConfig {
    std::size_t hidden_neurons = 1024;
    Activation activation = Activation::Relu;
    double alpha = 1.0;          // kernel mix: 1 = pure MLP, 0 = pure RBF
    std::size_t fan_in = 0;      // 0 = fully connected; k = sparse connectivity
    double rbf_width_scale = 1.0;
    double ridge = 0.0;          // optional Tikhonov term, default off
    std::uint64_t seed = 0;

    // Throws std::invalid_argument naming the offending field.
    void validate() const;
};

// Frozen random input layer. Weights and biases are standard normal; when
// fan_in is sparse each unit reads exactly fan_in distinct inputs. RBF
// centers (uniform on [0,1]^n) and widths exist only when alpha < 1.
struct HiddenLayer {
    std::size_t input_dim = 0;
    std::size_t units = 0;
    Matrix weights;                            // input_dim x units, column per unit
    std::vector<double> bias;                  // units
    std::size_t fan_in = 0;                    // == input_dim when fully connected
    std::vector<std::uint32_t> mask_indices;   // units x fan_in, unit-major, ascending
    std::vector<double> mask_values;           // matching weights, derived
    bool has_rbf = false;
    Matrix centers;                            // input_dim x units when has_rbf
    std::vector<double> widths;                // units when has_rbf

    bool sparse() const { return fan_in < input_dim; }
    bool connected(std::size_t unit, std::size_t input) const;
    void rebuild_mask_values();
};

// Draw order is frozen (weights column-major, then biases, then per-unit
// mask index sets, then RBF centers): identical seeds give identical layers
// on every platform.
HiddenLayer init_hidden(const ElmConfig& config, std::size_t input_dim);

// Batch kernels; x is N x input_dim, one sample per row. Results are
// N x units.
Matrix mlp_kernel(const HiddenLayer& layer, const Matrix& x);
Matrix rbf_kernel(const HiddenLayer& layer, const Matrix& x);   // needs alpha < 1 layer
Matrix input_activation(const HiddenLayer& layer, const Matrix& x, double alpha);

void apply_activation(Activation activation, Matrix& z);

struct ElmModel {
    ElmConfig config;
    HiddenLayer hidden;
    Matrix output_weights;                // units x classes
    std::vector<std::string> class_names;
    std::size_t input_dim = 0;
    std::optional<Featurizer> featurization;  // how inputs were produced, if known

    std::size_t num_classes() const { return class_names.size(); }
};

// Fits the output weights by least squares on one-hot {0,1} targets. When
// per-class weights are given, row j of both the hidden responses and the
// targets is scaled by weights[class(j)] before solving.
ElmModel train(const Dataset& trainset, const ElmConfig& config,
               const std::vector<double>* per_class_weights = nullptr);

// Raw class scores g(C(x)) * beta; prediction is argmax with lowest-index
// tie breaking.
std::vector<double> predict_scores(const ElmModel& model, const FeatureVector& x);
std::uint32_t predict_class(const ElmModel& model, const FeatureVector& x);

Matrix score_batch(const ElmModel& model, const Matrix& x);
std::vector<std::uint32_t> predict_batch(const ElmModel& model, const Matrix& x);

double accuracy_on(const ElmModel& model, const Dataset& dataset);

}  // namespace melm
