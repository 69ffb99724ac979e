#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fedgan/nn.hpp"
#include "fedgan/rng.hpp"
#include "fedgan/tensor.hpp"

// Conditional GAN built from dense layers. The discriminator is trained on
// the usual two-sided objective; the generator is trained on the
// non-saturating surrogate -E[log D(G(z|y))] while the reported telemetry
// keeps the saturating form E[log(1 - D(G(z|y)))], which is what the server
// consumes for anomaly detection. Discriminator outputs are clamped to
// [1e-7, 1-1e-7] inside every log.

namespace fedgan {

constexpr double kProbClamp = 1e-7;

inline double clamp_prob(double p) {
    return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
}

struct NoiseSpec {
    std::size_t dim = 16;  // standard Gaussian, identity covariance
};

struct CganModel {
    ModelParams generator_params;
    ModelParams discriminator_params;
    LayerStack generator_spec;
    LayerStack discriminator_spec;
    NoiseSpec noise;
    std::size_t num_classes = 2;
    std::size_t image_dim = 0;  // flattened pixel count
};

struct LossReport {
    double disc_loss = 0.0;        // minimized two-sided discriminator loss
    double gen_loss_paper = 0.0;   // mean log(1 - D(G(z|y))), the uploaded telemetry
    double gen_loss_train = 0.0;   // non-saturating surrogate -mean log D(G(z|y))
};

// Generator input width is noise.dim + num_classes (one-hot label); the
// final activations are fixed to tanh / sigmoid.
inline CganModel make_cgan(std::size_t noise_dim, std::size_t num_classes, std::size_t image_dim,
                           const std::vector<std::size_t>& gen_hidden,
                           const std::vector<std::size_t>& disc_hidden, std::uint64_t seed) {
    if (num_classes == 0 || image_dim == 0 || noise_dim == 0)
        throw std::invalid_argument("cgan: dimensions must be positive");
    CganModel model;
    model.noise.dim = noise_dim;
    model.num_classes = num_classes;
    model.image_dim = image_dim;

    std::size_t width = noise_dim + num_classes;
    for (std::size_t h : gen_hidden) {
        model.generator_spec.push_back({width, h, Activation::LeakyRelu, 0.2});
        width = h;
    }
    model.generator_spec.push_back({width, image_dim, Activation::Tanh, 0.2});

    width = image_dim + num_classes;
    for (std::size_t h : disc_hidden) {
        model.discriminator_spec.push_back({width, h, Activation::LeakyRelu, 0.2});
        width = h;
    }
    model.discriminator_spec.push_back({width, 1, Activation::Sigmoid, 0.2});

    Rng seeder(seed);
    model.generator_params = init_params(model.generator_spec, seeder.child(1).next_u64());
    model.discriminator_params = init_params(model.discriminator_spec, seeder.child(2).next_u64());
    return model;
}

inline void check_labels(const CganModel& model, const std::vector<std::size_t>& labels) {
    for (std::size_t label : labels)
        if (label >= model.num_classes)
            throw std::invalid_argument("label " + std::to_string(label) + " out of range [0, " +
                                        std::to_string(model.num_classes) + ")");
}

// Rows of `base` with a one-hot label block appended.
inline Tensor concat_one_hot(const Tensor& base, const std::vector<std::size_t>& labels,
                             std::size_t num_classes) {
    const std::size_t rows = base.rows(), cols = base.cols();
    if (labels.size() != rows)
        throw std::invalid_argument("batch size " + std::to_string(rows) + " != label count " +
                                    std::to_string(labels.size()));
    Tensor out = Tensor::zeros({rows, cols + num_classes});
    for (std::size_t i = 0; i < rows; ++i) {
        std::copy_n(&base.data[i * cols], cols, &out.data[i * (cols + num_classes)]);
        out.data[i * (cols + num_classes) + cols + labels[i]] = 1.0;
    }
    return out;
}

inline Tensor sample_noise(const NoiseSpec& noise, std::size_t batch, Rng& rng) {
    Tensor z = Tensor::zeros({batch, noise.dim});
    for (double& v : z.data) v = rng.gaussian();
    return z;
}

// Batch of synthetic flattened images in (-1, 1).
inline Tensor generate(const CganModel& model, const Tensor& z_batch,
                       const std::vector<std::size_t>& labels) {
    check_labels(model, labels);
    if (z_batch.cols() != model.noise.dim)
        throw std::invalid_argument("noise width " + std::to_string(z_batch.cols()) + " != " +
                                    std::to_string(model.noise.dim));
    return forward(model.generator_params, model.generator_spec,
                   concat_one_hot(z_batch, labels, model.num_classes));
}

inline Tensor discriminate(const CganModel& model, const Tensor& images,
                           const std::vector<std::size_t>& labels) {
    check_labels(model, labels);
    return forward(model.discriminator_params, model.discriminator_spec,
                   concat_one_hot(images, labels, model.num_classes));
}

// Telemetry formula on a given fake batch: mean log(clamp(1 - D(G(z|y)))).
inline double eval_gen_loss_paper(const CganModel& model, const Tensor& z_batch,
                                  const std::vector<std::size_t>& labels) {
    const Tensor fake = generate(model, z_batch, labels);
    const Tensor scores = discriminate(model, fake, labels);
    double total = 0.0;
    for (double p : scores.data) total += std::log(clamp_prob(1.0 - p));
    return total / static_cast<double>(scores.numel());
}

// One Adam step on the negated two-sided objective
//   -E[log D(x|y)] - E[log(1 - D(G(z|y)))]
// with the generator frozen. The reported disc_loss is measured on this
// batch before the update; the generator telemetry is measured against the
// updated discriminator so it reflects the returned model.
inline std::tuple<CganModel, AdamState, LossReport> discriminator_step(
    CganModel model, const Tensor& real_batch, const std::vector<std::size_t>& real_labels,
    AdamState opt_state, Rng& rng) {
    const std::size_t batch = real_batch.rows();
    if (batch == 0) throw std::invalid_argument("discriminator step: empty batch");
    if (real_batch.cols() != model.image_dim)
        throw std::invalid_argument("image width " + std::to_string(real_batch.cols()) + " != " +
                                    std::to_string(model.image_dim));
    check_labels(model, real_labels);

    const Tensor z = sample_noise(model.noise, batch, rng);
    const Tensor fake = generate(model, z, real_labels);

    // Stack real rows then fake rows into one discriminator pass.
    Tensor stacked = Tensor::zeros({2 * batch, model.image_dim});
    std::copy(real_batch.data.begin(), real_batch.data.end(), stacked.data.begin());
    std::copy(fake.data.begin(), fake.data.end(), stacked.data.begin() + batch * model.image_dim);
    std::vector<std::size_t> stacked_labels(real_labels);
    stacked_labels.insert(stacked_labels.end(), real_labels.begin(), real_labels.end());

    const Tensor disc_input = concat_one_hot(stacked, stacked_labels, model.num_classes);
    const Tensor scores = forward(model.discriminator_params, model.discriminator_spec, disc_input);

    LossReport report;
    Tensor upstream = Tensor::zeros(scores.shape);
    const double inv_batch = 1.0 / static_cast<double>(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        const double p = clamp_prob(scores.data[i]);
        report.disc_loss -= std::log(p) * inv_batch;
        upstream.data[i] = -inv_batch / p;
    }
    for (std::size_t i = batch; i < 2 * batch; ++i) {
        const double q = clamp_prob(1.0 - scores.data[i]);
        report.disc_loss -= std::log(q) * inv_batch;
        upstream.data[i] = inv_batch / q;
    }

    const BackwardResult grads =
        backward(model.discriminator_params, model.discriminator_spec, disc_input, upstream);
    std::tie(model.discriminator_params, opt_state) =
        adam_step(model.discriminator_params, grads.param_grads, std::move(opt_state));

    const Tensor fake_scores = discriminate(model, fake, real_labels);
    for (double p : fake_scores.data) {
        report.gen_loss_paper += std::log(clamp_prob(1.0 - p)) * inv_batch;
        report.gen_loss_train -= std::log(clamp_prob(p)) * inv_batch;
    }
    return {std::move(model), std::move(opt_state), report};
}

// One Adam step of the generator on the non-saturating surrogate with the
// discriminator frozen. gen_loss_train is the surrogate value before the
// update; gen_loss_paper is recomputed on the same (z, labels) batch with
// the updated generator, so it can be reproduced from the returned model.
// disc_loss is left at 0: a generator step sees no real images.
inline std::tuple<CganModel, AdamState, LossReport> generator_step(
    CganModel model, std::size_t batch_size, const std::vector<std::size_t>& labels,
    AdamState opt_state, Rng& rng) {
    if (batch_size == 0) throw std::invalid_argument("generator step: empty batch");
    if (labels.size() != batch_size)
        throw std::invalid_argument("generator step: label count != batch size");
    check_labels(model, labels);

    const Tensor z = sample_noise(model.noise, batch_size, rng);
    const Tensor gen_input = concat_one_hot(z, labels, model.num_classes);
    const Tensor fake = forward(model.generator_params, model.generator_spec, gen_input);
    const Tensor disc_input = concat_one_hot(fake, labels, model.num_classes);
    const Tensor scores = forward(model.discriminator_params, model.discriminator_spec, disc_input);

    LossReport report;
    Tensor upstream = Tensor::zeros(scores.shape);
    const double inv_batch = 1.0 / static_cast<double>(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
        const double p = clamp_prob(scores.data[i]);
        report.gen_loss_train -= std::log(p) * inv_batch;
        upstream.data[i] = -inv_batch / p;
    }

    const BackwardResult disc_grads =
        backward(model.discriminator_params, model.discriminator_spec, disc_input, upstream);
    // Image part of the discriminator input gradient drives the generator.
    Tensor image_grad = Tensor::zeros({batch_size, model.image_dim});
    const std::size_t in_width = model.image_dim + model.num_classes;
    for (std::size_t i = 0; i < batch_size; ++i)
        std::copy_n(&disc_grads.input_grad.data[i * in_width], model.image_dim,
                    &image_grad.data[i * model.image_dim]);

    const BackwardResult gen_grads =
        backward(model.generator_params, model.generator_spec, gen_input, image_grad);
    std::tie(model.generator_params, opt_state) =
        adam_step(model.generator_params, gen_grads.param_grads, std::move(opt_state));

    report.gen_loss_paper = [&] {
        const Tensor fake_new = forward(model.generator_params, model.generator_spec, gen_input);
        const Tensor scores_new =
            discriminate(model, fake_new, labels);
        double total = 0.0;
        for (double p : scores_new.data) total += std::log(clamp_prob(1.0 - p));
        return total * inv_batch;
    }();
    return {std::move(model), std::move(opt_state), report};
}

struct ImageShard {
    Tensor images;  // [n, image_dim]
    std::vector<std::size_t> labels;
};

struct TrainState {
    CganModel model;
    AdamState disc_opt;
    AdamState gen_opt;
};

// Optional per-batch transform of real images (the augmentation defense).
using BatchTransform = std::function<Tensor(const Tensor&, Rng&)>;

// k_iters alternating D-then-G updates (Algorithm A of the round protocol).
// Real minibatches walk a reshuffled index order; an epoch is
// ceil(shard / batch_size) iterations, the last of which may be short.
inline std::pair<TrainState, std::vector<LossReport>> local_train(
    TrainState state, const ImageShard& shard, std::size_t k_iters, std::size_t batch_size,
    Rng& rng, const BatchTransform& transform = {}) {
    const std::size_t n = shard.images.rows();
    if (n == 0) throw std::invalid_argument("local train: empty shard");
    if (batch_size == 0) throw std::invalid_argument("local train: batch size must be positive");
    if (shard.labels.size() != n)
        throw std::invalid_argument("local train: label count != shard size");

    std::vector<LossReport> reports;
    reports.reserve(k_iters);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::size_t pos = n;  // forces an initial shuffle

    const std::size_t dim = state.model.image_dim;
    for (std::size_t iter = 0; iter < k_iters; ++iter) {
        if (pos >= n) {
            rng.shuffle(order);
            pos = 0;
        }
        const std::size_t take = std::min(batch_size, n - pos);
        Tensor real = Tensor::zeros({take, dim});
        std::vector<std::size_t> labels(take);
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t src = order[pos + i];
            std::copy_n(&shard.images.data[src * dim], dim, &real.data[i * dim]);
            labels[i] = shard.labels[src];
        }
        pos += take;
        if (transform) real = transform(real, rng);

        LossReport report;
        std::tie(state.model, state.disc_opt, report) =
            discriminator_step(std::move(state.model), real, labels, std::move(state.disc_opt), rng);

        std::vector<std::size_t> gen_labels(take);
        for (auto& label : gen_labels) label = rng.below(state.model.num_classes);
        LossReport gen_report;
        std::tie(state.model, state.gen_opt, gen_report) = generator_step(
            std::move(state.model), take, gen_labels, std::move(state.gen_opt), rng);

        report.gen_loss_paper = gen_report.gen_loss_paper;
        report.gen_loss_train = gen_report.gen_loss_train;
        reports.push_back(report);
    }
    return {std::move(state), std::move(reports)};
}

}  // namespace fedgan
