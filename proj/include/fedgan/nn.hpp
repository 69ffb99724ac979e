#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fedgan/rng.hpp"
#include "fedgan/tensor.hpp"

// Dense feed-forward networks with exact analytic gradients, plus Adam.
// There is no autodiff graph: layer specs are plain data and the backward
// pass is written out by hand, which keeps finite-difference checks tight.

namespace fedgan {

enum class Activation { Identity, Tanh, LeakyRelu, Sigmoid };

struct DenseLayerSpec {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Activation activation = Activation::Identity;
    double leaky_slope = 0.2;
};

using LayerStack = std::vector<DenseLayerSpec>;

inline void validate_layer_stack(const LayerStack& spec) {
    if (spec.empty()) throw std::invalid_argument("layer stack is empty");
    for (std::size_t l = 0; l < spec.size(); ++l) {
        const auto& layer = spec[l];
        if (layer.in_dim == 0 || layer.out_dim == 0)
            throw std::invalid_argument("layer" + std::to_string(l) + ": zero dimension");
        if (layer.activation == Activation::LeakyRelu &&
            (layer.leaky_slope <= 0.0 || layer.leaky_slope >= 1.0))
            throw std::invalid_argument("layer" + std::to_string(l) + ": leaky slope outside (0,1)");
        if (l > 0 && spec[l - 1].out_dim != layer.in_dim)
            throw std::invalid_argument("layer" + std::to_string(l) + ": in_dim " +
                                        std::to_string(layer.in_dim) + " does not chain from " +
                                        std::to_string(spec[l - 1].out_dim));
    }
}

// Ordered, uniquely named parameter tensors of one network.
struct ModelParams {
    std::vector<std::pair<std::string, Tensor>> entries;

    Tensor& at(const std::string& name) {
        for (auto& [key, tensor] : entries)
            if (key == name) return tensor;
        throw std::invalid_argument("no parameter named " + name);
    }
    const Tensor& at(const std::string& name) const {
        for (const auto& [key, tensor] : entries)
            if (key == name) return tensor;
        throw std::invalid_argument("no parameter named " + name);
    }

    std::size_t size() const { return entries.size(); }
};

// Names and shapes must match elementwise for aggregation and optimizer use.
inline bool aggregation_compatible(const ModelParams& a, const ModelParams& b) {
    if (a.entries.size() != b.entries.size()) return false;
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        if (a.entries[i].first != b.entries[i].first) return false;
        if (a.entries[i].second.shape != b.entries[i].second.shape) return false;
    }
    return true;
}

inline std::string weight_name(std::size_t layer) { return "layer" + std::to_string(layer) + ".weight"; }
inline std::string bias_name(std::size_t layer) { return "layer" + std::to_string(layer) + ".bias"; }

// Glorot-style uniform init in [-sqrt(6/(in+out)), +sqrt(6/(in+out))], zero
// biases. Same seed gives bit-identical tensors.
inline ModelParams init_params(const LayerStack& spec, std::uint64_t seed) {
    validate_layer_stack(spec);
    Rng rng(seed);
    ModelParams params;
    for (std::size_t l = 0; l < spec.size(); ++l) {
        const std::size_t in = spec[l].in_dim, out = spec[l].out_dim;
        const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
        Tensor w = Tensor::zeros({in, out});
        for (double& v : w.data) v = rng.uniform(-bound, bound);
        params.entries.emplace_back(weight_name(l), std::move(w));
        params.entries.emplace_back(bias_name(l), Tensor::zeros({out}));
    }
    return params;
}

// The distribution's standard deviation, used by init sanity checks.
inline double init_scale(std::size_t in_dim, std::size_t out_dim) {
    return std::sqrt(6.0 / static_cast<double>(in_dim + out_dim)) / std::sqrt(3.0);
}

inline double apply_activation(Activation act, double x, double slope) {
    switch (act) {
        case Activation::Identity: return x;
        case Activation::Tanh: return std::tanh(x);
        case Activation::LeakyRelu: return x >= 0.0 ? x : slope * x;
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    }
    return x;
}

// Derivative expressed through the activation output y = f(x).
inline double activation_derivative(Activation act, double y, double slope) {
    switch (act) {
        case Activation::Identity: return 1.0;
        case Activation::Tanh: return 1.0 - y * y;
        case Activation::LeakyRelu: return y >= 0.0 ? 1.0 : slope;
        case Activation::Sigmoid: return y * (1.0 - y);
    }
    return 1.0;
}

namespace detail {

inline void check_layer_params(const ModelParams& params, const LayerStack& spec) {
    for (std::size_t l = 0; l < spec.size(); ++l) {
        const Tensor& w = params.at(weight_name(l));
        const Tensor& b = params.at(bias_name(l));
        if (w.shape != std::vector<std::size_t>{spec[l].in_dim, spec[l].out_dim})
            throw std::invalid_argument("layer" + std::to_string(l) + ": weight shape mismatch");
        if (b.shape != std::vector<std::size_t>{spec[l].out_dim})
            throw std::invalid_argument("layer" + std::to_string(l) + ": bias shape mismatch");
    }
}

// Activations per layer, index 0 is the input batch.
inline std::vector<Tensor> forward_cached(const ModelParams& params, const LayerStack& spec,
                                          const Tensor& input) {
    validate_layer_stack(spec);
    check_layer_params(params, spec);
    if (input.shape.size() != 2 || input.cols() != spec.front().in_dim)
        throw std::invalid_argument("layer0: input width " + std::to_string(input.cols()) +
                                    " != in_dim " + std::to_string(spec.front().in_dim));
    require_finite(input, "forward input");

    std::vector<Tensor> acts;
    acts.reserve(spec.size() + 1);
    acts.push_back(input);
    for (std::size_t l = 0; l < spec.size(); ++l) {
        Tensor z = matmul(acts.back(), params.at(weight_name(l)));
        const Tensor& b = params.at(bias_name(l));
        const std::size_t out = spec[l].out_dim;
        for (std::size_t i = 0; i < z.rows(); ++i)
            for (std::size_t j = 0; j < out; ++j) {
                double v = z.data[i * out + j] + b.data[j];
                z.data[i * out + j] = apply_activation(spec[l].activation, v, spec[l].leaky_slope);
            }
        require_finite(z, "layer" + std::to_string(l) + " output");
        acts.push_back(std::move(z));
    }
    return acts;
}

}  // namespace detail

inline Tensor forward(const ModelParams& params, const LayerStack& spec, const Tensor& input) {
    return detail::forward_cached(params, spec, input).back();
}

struct BackwardResult {
    ModelParams param_grads;  // same names/shapes as the forward params
    Tensor input_grad;
};

// Exact gradients of the scalar whose gradient w.r.t. the network output is
// upstream_grad.
inline BackwardResult backward(const ModelParams& params, const LayerStack& spec,
                               const Tensor& input, const Tensor& upstream_grad) {
    const std::vector<Tensor> acts = detail::forward_cached(params, spec, input);
    if (upstream_grad.shape != acts.back().shape)
        throw std::invalid_argument("upstream grad shape does not match forward output");
    require_finite(upstream_grad, "upstream grad");

    BackwardResult result;
    result.param_grads.entries.resize(2 * spec.size());

    Tensor delta = upstream_grad;
    for (std::size_t l = spec.size(); l-- > 0;) {
        const Tensor& out_act = acts[l + 1];
        const std::size_t out = spec[l].out_dim;
        // delta <- delta * f'(z), using f' expressed via the output value
        for (std::size_t i = 0; i < delta.numel(); ++i)
            delta.data[i] *= activation_derivative(spec[l].activation, out_act.data[i], spec[l].leaky_slope);

        Tensor w_grad = matmul(transpose(acts[l]), delta);
        Tensor b_grad = Tensor::zeros({out});
        for (std::size_t i = 0; i < delta.rows(); ++i)
            for (std::size_t j = 0; j < out; ++j) b_grad.data[j] += delta.data[i * out + j];

        result.param_grads.entries[2 * l] = {weight_name(l), std::move(w_grad)};
        result.param_grads.entries[2 * l + 1] = {bias_name(l), std::move(b_grad)};

        if (l > 0) delta = matmul(delta, transpose(params.at(weight_name(l))));
    }
    result.input_grad = matmul(delta, transpose(params.at(weight_name(0))));
    require_finite(result.input_grad, "input grad");
    return result;
}

struct AdamState {
    std::size_t step_count = 0;
    ModelParams first_moment;
    ModelParams second_moment;
    double learning_rate = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

inline AdamState make_adam_state(const ModelParams& params, double learning_rate) {
    AdamState state;
    state.learning_rate = learning_rate;
    for (const auto& [name, tensor] : params.entries) {
        state.first_moment.entries.emplace_back(name, Tensor::zeros(tensor.shape));
        state.second_moment.entries.emplace_back(name, Tensor::zeros(tensor.shape));
    }
    return state;
}

// Standard bias-corrected Adam; pure value-in/value-out.
inline std::pair<ModelParams, AdamState> adam_step(const ModelParams& params,
                                                   const ModelParams& grads, AdamState state) {
    if (!aggregation_compatible(params, grads))
        throw std::invalid_argument("adam: gradients incompatible with parameters");
    if (!aggregation_compatible(params, state.first_moment))
        throw std::invalid_argument("adam: state incompatible with parameters");

    ModelParams updated = params;
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bias1 = 1.0 - std::pow(state.beta1, t);
    const double bias2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t p = 0; p < params.entries.size(); ++p) {
        const auto& g = grads.entries[p].second.data;
        auto& m = state.first_moment.entries[p].second.data;
        auto& v = state.second_moment.entries[p].second.data;
        auto& w = updated.entries[p].second.data;
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            w[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
        require_finite(updated.entries[p].second, "adam update of " + params.entries[p].first);
    }
    return {std::move(updated), std::move(state)};
}

}  // namespace fedgan
