#include "melm/elm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "melm/rng.hpp"
#include "melm/simd/kernels.hpp"

namespace melm {

using simd::active_kernels;

Activation parse_activation(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "relu") return Activation::Relu;
    if (name == "softlim") return Activation::Softlim;
    if (name == "hardlim") return Activation::Hardlim;
    if (name == "multiquadric") return Activation::Multiquadric;
    throw std::invalid_argument("unknown activation: " + name);
}

std::string activation_name(Activation activation) {
    switch (activation) {
        case Activation::Tanh: return "tanh";
        case Activation::Relu: return "relu";
        case Activation::Softlim: return "softlim";
        case Activation::Hardlim: return "hardlim";
        case Activation::Multiquadric: return "multiquadric";
    }
    throw std::invalid_argument("unknown activation enum value");
}

void ElmConfig::validate() const {
    if (hidden_neurons == 0) throw std::invalid_argument("hidden_neurons must be positive");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in [0,1]");
    if (rbf_width_scale <= 0.0) throw std::invalid_argument("rbf_width_scale must be positive");
    if (ridge < 0.0) throw std::invalid_argument("ridge must be nonnegative");
}

bool HiddenLayer::connected(std::size_t unit, std::size_t input) const {
    if (!sparse()) return true;
    const auto* begin = mask_indices.data() + unit * fan_in;
    return std::binary_search(begin, begin + fan_in, static_cast<std::uint32_t>(input));
}

void HiddenLayer::rebuild_mask_values() {
    if (!sparse()) {
        mask_values.clear();
        return;
    }
    mask_values.resize(mask_indices.size());
    for (std::size_t j = 0; j < units; ++j) {
        for (std::size_t t = 0; t < fan_in; ++t) {
            mask_values[j * fan_in + t] = weights(mask_indices[j * fan_in + t], j);
        }
    }
}

HiddenLayer init_hidden(const ElmConfig& config, std::size_t input_dim) {
    config.validate();
    if (input_dim == 0) throw std::invalid_argument("init_hidden: input_dim must be positive");
    if (config.fan_in > input_dim) {
        throw std::invalid_argument("init_hidden: fan_in " + std::to_string(config.fan_in) +
                                    " exceeds input_dim " + std::to_string(input_dim));
    }

    HiddenLayer layer;
    layer.input_dim = input_dim;
    layer.units = config.hidden_neurons;
    layer.fan_in = (config.fan_in == 0) ? input_dim : config.fan_in;

    Rng rng(config.seed);

    layer.weights = Matrix(input_dim, layer.units);
    for (std::size_t i = 0; i < layer.weights.size(); ++i) {
        layer.weights.data()[i] = rng.next_gaussian();
    }
    layer.bias.resize(layer.units);
    for (auto& b : layer.bias) b = rng.next_gaussian();

    if (layer.sparse()) {
        // Floyd's sampling: a uniform fan_in-subset of inputs per unit.
        const std::size_t k = layer.fan_in;
        layer.mask_indices.reserve(layer.units * k);
        std::vector<std::uint32_t> chosen;
        for (std::size_t j = 0; j < layer.units; ++j) {
            chosen.clear();
            for (std::size_t i = input_dim - k; i < input_dim; ++i) {
                const auto t = static_cast<std::uint32_t>(rng.next_below(i + 1));
                if (std::find(chosen.begin(), chosen.end(), t) != chosen.end()) {
                    chosen.push_back(static_cast<std::uint32_t>(i));
                } else {
                    chosen.push_back(t);
                }
            }
            std::sort(chosen.begin(), chosen.end());
            layer.mask_indices.insert(layer.mask_indices.end(), chosen.begin(), chosen.end());
        }
        layer.rebuild_mask_values();
    }

    if (config.alpha < 1.0) {
        layer.has_rbf = true;
        layer.centers = Matrix(input_dim, layer.units);
        for (std::size_t i = 0; i < layer.centers.size(); ++i) {
            layer.centers.data()[i] = rng.next_unit();
        }
        const double width =
            config.rbf_width_scale * std::sqrt(static_cast<double>(input_dim)) / 2.0;
        layer.widths.assign(layer.units, width);
    }
    return layer;
}

namespace {

void check_batch(const HiddenLayer& layer, const Matrix& x, const char* op) {
    if (x.cols() != layer.input_dim) {
        throw std::invalid_argument(std::string(op) + ": input has " + std::to_string(x.cols()) +
                                    " features but the layer expects " +
                                    std::to_string(layer.input_dim));
    }
}

}  // namespace

Matrix mlp_kernel(const HiddenLayer& layer, const Matrix& x) {
    check_batch(layer, x, "mlp_kernel");
    const std::size_t n = x.rows();
    Matrix m(n, layer.units);
    if (layer.sparse()) {
        // Each unit touches fan_in input columns; masked-out inputs are
        // never read, so perturbing them cannot change the result.
        for (std::size_t j = 0; j < layer.units; ++j) {
            double* col = m.col(j);
            std::fill(col, col + n, layer.bias[j]);
            for (std::size_t t = 0; t < layer.fan_in; ++t) {
                const std::size_t idx = layer.mask_indices[j * layer.fan_in + t];
                active_kernels().axpy(n, layer.mask_values[j * layer.fan_in + t], x.col(idx), col);
            }
        }
        return m;
    }
    if (n > 0) {
        active_kernels().gemm(n, layer.units, layer.input_dim, x.data(), n,
                              layer.weights.data(), layer.input_dim, m.data(), n, false);
    }
    for (std::size_t j = 0; j < layer.units; ++j) {
        active_kernels().shift(n, layer.bias[j], m.col(j));
    }
    return m;
}

Matrix rbf_kernel(const HiddenLayer& layer, const Matrix& x) {
    check_batch(layer, x, "rbf_kernel");
    if (!layer.has_rbf) {
        throw std::logic_error("rbf_kernel: RBF parameters absent (layer built with alpha = 1)");
    }
    const std::size_t n = x.rows();
    Matrix r(n, layer.units);
    if (n == 0) return r;
    const Matrix xt = transpose(x);  // samples become contiguous columns
    active_kernels().sqdist_matrix(layer.input_dim, n, layer.units, xt.data(), layer.input_dim,
                                   layer.centers.data(), layer.input_dim, r.data(), n);
    for (std::size_t j = 0; j < layer.units; ++j) {
        const double scale = -1.0 / (2.0 * layer.widths[j] * layer.widths[j]);
        double* col = r.col(j);
        for (std::size_t i = 0; i < n; ++i) col[i] = std::exp(col[i] * scale);
    }
    return r;
}

Matrix input_activation(const HiddenLayer& layer, const Matrix& x, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("input_activation: alpha must be in [0,1]");
    }
    if (alpha == 1.0) return mlp_kernel(layer, x);
    if (alpha == 0.0) return rbf_kernel(layer, x);
    Matrix m = mlp_kernel(layer, x);
    const Matrix r = rbf_kernel(layer, x);
    active_kernels().mix(m.size(), alpha, m.data(), 1.0 - alpha, r.data(), m.data());
    return m;
}

void apply_activation(Activation activation, Matrix& z) {
    const auto& k = active_kernels();
    switch (activation) {
        case Activation::Tanh: k.tanh_act(z.size(), z.data()); return;
        case Activation::Relu: k.relu(z.size(), z.data()); return;
        case Activation::Softlim: k.softlim(z.size(), z.data()); return;
        case Activation::Hardlim: k.hardlim(z.size(), z.data()); return;
        case Activation::Multiquadric: k.multiquadric(z.size(), z.data()); return;
    }
    throw std::invalid_argument("apply_activation: unknown activation");
}

ElmModel train(const Dataset& trainset, const ElmConfig& config,
               const std::vector<double>* per_class_weights) {
    config.validate();
    if (trainset.size() == 0) throw std::invalid_argument("train: empty training set");
    const std::size_t n = trainset.size();
    const std::size_t m = trainset.catalog.num_classes();
    if (m == 0) throw std::invalid_argument("train: dataset has no classes");
    if (trainset.features.rows() != n || trainset.features.cols() != trainset.feature_dim) {
        throw std::invalid_argument("train: dataset feature matrix is inconsistent");
    }
    if (per_class_weights) {
        if (per_class_weights->size() != m) {
            throw std::invalid_argument("train: expected " + std::to_string(m) +
                                        " class weights, got " +
                                        std::to_string(per_class_weights->size()));
        }
        for (double w : *per_class_weights) {
            if (!(w > 0.0)) throw std::invalid_argument("train: class weights must be positive");
        }
    }

    ElmModel model;
    model.config = config;
    model.input_dim = trainset.feature_dim;
    model.class_names = trainset.catalog.names;
    model.hidden = init_hidden(config, trainset.feature_dim);

    Matrix h = input_activation(model.hidden, trainset.features, config.alpha);
    apply_activation(config.activation, h);

    Matrix y(n, m);
    for (std::size_t i = 0; i < n; ++i) y(i, trainset.labels[i]) = 1.0;

    if (per_class_weights) {
        std::vector<double> row_factor(n);
        for (std::size_t i = 0; i < n; ++i) row_factor[i] = (*per_class_weights)[trainset.labels[i]];
        for (std::size_t j = 0; j < h.cols(); ++j) {
            active_kernels().hadamard(n, row_factor.data(), h.col(j));
        }
        for (std::size_t j = 0; j < m; ++j) {
            active_kernels().hadamard(n, row_factor.data(), y.col(j));
        }
    }

    model.output_weights = least_squares_solve(h, y, {config.ridge});
    return model;
}

Matrix score_batch(const ElmModel& model, const Matrix& x) {
    Matrix h = input_activation(model.hidden, x, model.config.alpha);
    apply_activation(model.config.activation, h);
    return matmul(h, model.output_weights);
}

std::vector<std::uint32_t> predict_batch(const ElmModel& model, const Matrix& x) {
    const Matrix scores = score_batch(model, x);
    const std::size_t n = scores.rows();
    std::vector<std::uint32_t> pred(n, 0);
    std::vector<double> best(n, -std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < scores.cols(); ++j) {
        const double* col = scores.col(j);
        for (std::size_t i = 0; i < n; ++i) {
            if (col[i] > best[i]) {  // strict: ties keep the lowest class index
                best[i] = col[i];
                pred[i] = static_cast<std::uint32_t>(j);
            }
        }
    }
    return pred;
}

std::vector<double> predict_scores(const ElmModel& model, const FeatureVector& x) {
    if (x.size() != model.input_dim) {
        throw std::invalid_argument("predict_scores: input has " + std::to_string(x.size()) +
                                    " features but the model expects " +
                                    std::to_string(model.input_dim));
    }
    Matrix row(1, x.size());
    std::copy(x.begin(), x.end(), row.data());
    const Matrix scores = score_batch(model, row);
    return std::vector<double>(scores.data(), scores.data() + scores.cols());
}

std::uint32_t predict_class(const ElmModel& model, const FeatureVector& x) {
    const auto scores = predict_scores(model, x);
    return static_cast<std::uint32_t>(
        std::max_element(scores.begin(), scores.end()) - scores.begin());
}

double accuracy_on(const ElmModel& model, const Dataset& dataset) {
    if (dataset.size() == 0) throw std::invalid_argument("accuracy_on: empty dataset");
    const auto pred = predict_batch(model, dataset.features);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == dataset.labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace melm
