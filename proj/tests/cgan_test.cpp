#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fedgan/cgan.hpp"

using namespace fedgan;

namespace {

CganModel tiny_model(std::uint64_t seed) {
    return make_cgan(/*noise_dim=*/4, /*num_classes=*/2, /*image_dim=*/9, {8}, {8}, seed);
}

void zero_params(ModelParams& params) {
    for (auto& [name, tensor] : params.entries) tensor = Tensor::zeros(tensor.shape);
}

// Eq. 4 style two-sided loss, recomputed through the public API only.
double eval_disc_loss(const CganModel& model, const Tensor& real,
                      const std::vector<std::size_t>& labels, const Tensor& z) {
    const Tensor real_scores = discriminate(model, real, labels);
    const Tensor fake_scores = discriminate(model, generate(model, z, labels), labels);
    double loss = 0.0;
    for (double p : real_scores.data) loss -= std::log(clamp_prob(p));
    for (double p : fake_scores.data) loss -= std::log(clamp_prob(1.0 - p));
    return loss / static_cast<double>(real.rows());
}

double eval_surrogate(const CganModel& model, const Tensor& z, const std::vector<std::size_t>& labels) {
    const Tensor scores = discriminate(model, generate(model, z, labels), labels);
    double loss = 0.0;
    for (double p : scores.data) loss -= std::log(clamp_prob(p));
    return loss / static_cast<double>(z.rows());
}

Tensor random_images(std::size_t n, std::size_t dim, Rng& rng) {
    Tensor t = Tensor::zeros({n, dim});
    for (double& v : t.data) v = std::tanh(rng.gaussian());
    return t;
}

}  // namespace

TEST(Generate, ZeroGeneratorEmitsZeros) {
    CganModel model = tiny_model(1);
    zero_params(model.generator_params);
    Rng rng(2);
    const Tensor z = sample_noise(model.noise, 3, rng);
    const Tensor out = generate(model, z, {0, 1, 0});
    for (double v : out.data) EXPECT_DOUBLE_EQ(v, 0.0);  // tanh(0)
}

TEST(Generate, DeterministicForSameNoise) {
    const CganModel model = tiny_model(3);
    Rng rng(4);
    const Tensor z = sample_noise(model.noise, 5, rng);
    const std::vector<std::size_t> labels{0, 1, 1, 0, 1};
    EXPECT_EQ(generate(model, z, labels).data, generate(model, z, labels).data);
}

TEST(Generate, OutOfRangeLabelRejected) {
    const CganModel model = tiny_model(5);
    Rng rng(6);
    const Tensor z = sample_noise(model.noise, 1, rng);
    EXPECT_THROW(generate(model, z, {2}), std::invalid_argument);
}

TEST(Generate, OneHotBlockHasExactlyOneActiveEntry) {
    Rng rng(7);
    const Tensor base = random_images(6, 3, rng);
    const std::vector<std::size_t> labels{2, 0, 1, 1, 2, 0};
    const Tensor out = concat_one_hot(base, labels, 3);
    for (std::size_t i = 0; i < 6; ++i) {
        double sum = 0.0;
        for (std::size_t c = 0; c < 3; ++c) sum += out.data[i * 6 + 3 + c];
        EXPECT_DOUBLE_EQ(sum, 1.0);
        EXPECT_DOUBLE_EQ(out.data[i * 6 + 3 + labels[i]], 1.0);
    }
}

TEST(DiscriminatorStep, ConstantHalfOutputGivesTwoLogTwo) {
    CganModel model = tiny_model(8);
    zero_params(model.discriminator_params);  // sigmoid(0) = 0.5 everywhere
    Rng rng(9);
    const Tensor real = random_images(4, model.image_dim, rng);
    const auto [updated, state, report] = discriminator_step(
        model, real, {0, 1, 0, 1}, make_adam_state(model.discriminator_params, 2e-4), rng);
    EXPECT_NEAR(report.disc_loss, 2.0 * std::log(2.0), 1e-12);
}

TEST(DiscriminatorStep, OneStepDecreasesLossOnSameBatch) {
    const CganModel model = tiny_model(10);
    Rng rng(11);
    const Tensor real = random_images(8, model.image_dim, rng);
    const std::vector<std::size_t> labels{0, 1, 0, 1, 1, 0, 1, 0};

    Rng replay = rng;  // the step draws z first; replay it for re-evaluation
    const auto [updated, state, report] = discriminator_step(
        model, real, labels, make_adam_state(model.discriminator_params, 1e-3), rng);
    const Tensor z = sample_noise(model.noise, 8, replay);

    const double before = eval_disc_loss(model, real, labels, z);
    const double after = eval_disc_loss(updated, real, labels, z);
    EXPECT_NEAR(report.disc_loss, before, 1e-12);
    EXPECT_LT(after, before);
}

TEST(DiscriminatorStep, ObjectiveGradientMatchesFiniteDifferences) {
    const CganModel model = tiny_model(12);
    Rng rng(13);
    const std::size_t batch = 3;
    const Tensor real = random_images(batch, model.image_dim, rng);
    const std::vector<std::size_t> labels{1, 0, 1};
    const Tensor z = sample_noise(model.noise, batch, rng);
    const Tensor fake = generate(model, z, labels);

    Tensor stacked = Tensor::zeros({2 * batch, model.image_dim});
    std::copy(real.data.begin(), real.data.end(), stacked.data.begin());
    std::copy(fake.data.begin(), fake.data.end(), stacked.data.begin() + batch * model.image_dim);
    std::vector<std::size_t> stacked_labels(labels);
    stacked_labels.insert(stacked_labels.end(), labels.begin(), labels.end());
    const Tensor disc_input = concat_one_hot(stacked, stacked_labels, model.num_classes);

    auto loss_of = [&](const ModelParams& disc) {
        const Tensor scores = forward(disc, model.discriminator_spec, disc_input);
        double loss = 0.0;
        for (std::size_t i = 0; i < batch; ++i) loss -= std::log(clamp_prob(scores.data[i]));
        for (std::size_t i = batch; i < 2 * batch; ++i)
            loss -= std::log(clamp_prob(1.0 - scores.data[i]));
        return loss / static_cast<double>(batch);
    };

    const Tensor scores = forward(model.discriminator_params, model.discriminator_spec, disc_input);
    Tensor upstream = Tensor::zeros(scores.shape);
    const double inv_batch = 1.0 / static_cast<double>(batch);
    for (std::size_t i = 0; i < batch; ++i)
        upstream.data[i] = -inv_batch / clamp_prob(scores.data[i]);
    for (std::size_t i = batch; i < 2 * batch; ++i)
        upstream.data[i] = inv_batch / clamp_prob(1.0 - scores.data[i]);
    const auto analytic =
        backward(model.discriminator_params, model.discriminator_spec, disc_input, upstream);

    ModelParams probe = model.discriminator_params;
    const double h = 1e-5;
    double max_rel = 0.0;
    for (auto& [name, tensor] : probe.entries) {
        const Tensor& grad = analytic.param_grads.at(name);
        for (std::size_t i = 0; i < tensor.numel(); ++i) {
            const double saved = tensor.data[i];
            tensor.data[i] = saved + h;
            const double up = loss_of(probe);
            tensor.data[i] = saved - h;
            const double down = loss_of(probe);
            tensor.data[i] = saved;
            const double fd = (up - down) / (2 * h);
            const double denom = std::max({std::abs(fd), std::abs(grad.data[i]), 1e-8});
            max_rel = std::max(max_rel, std::abs(fd - grad.data[i]) / denom);
        }
    }
    EXPECT_LT(max_rel, 1e-4);
}

TEST(GeneratorStep, ConstantHalfDiscriminatorGivesLogHalfTelemetry) {
    CganModel model = tiny_model(14);
    zero_params(model.discriminator_params);
    Rng rng(15);
    const auto [updated, state, report] = generator_step(
        model, 6, {0, 1, 0, 1, 0, 1}, make_adam_state(model.generator_params, 2e-4), rng);
    EXPECT_NEAR(report.gen_loss_paper, std::log(0.5), 1e-12);
}

TEST(GeneratorStep, ZeroDiscriminatorGivesZeroGradient) {
    CganModel model = tiny_model(16);
    zero_params(model.discriminator_params);  // constant as a function of its input
    Rng rng(17);
    const auto [updated, state, report] = generator_step(
        model, 4, {0, 1, 1, 0}, make_adam_state(model.generator_params, 2e-4), rng);
    for (std::size_t p = 0; p < model.generator_params.entries.size(); ++p)
        EXPECT_EQ(updated.generator_params.entries[p].second.data,
                  model.generator_params.entries[p].second.data);
}

TEST(GeneratorStep, DecreasesSurrogateOnRefreshedBatch) {
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const CganModel model = tiny_model(100 + seed);
        Rng rng(200 + seed);
        const std::vector<std::size_t> labels{0, 1, 0, 1, 0, 1, 0, 1};
        auto [updated, state, report] = generator_step(
            model, 8, labels, make_adam_state(model.generator_params, 1e-3), rng);
        const Tensor fresh_z = sample_noise(model.noise, 8, rng);
        const double before = eval_surrogate(model, fresh_z, labels);
        const double after = eval_surrogate(updated, fresh_z, labels);
        if (after < before) ++wins;
    }
    EXPECT_GE(wins, 4);
}

TEST(GeneratorStep, TelemetryReproducibleFromReturnedModel) {
    const CganModel model = tiny_model(18);
    Rng rng(19);
    Rng replay = rng;
    const std::vector<std::size_t> labels{1, 0, 1, 0, 1};
    const auto [updated, state, report] = generator_step(
        model, 5, labels, make_adam_state(model.generator_params, 1e-3), rng);
    const Tensor z = sample_noise(model.noise, 5, replay);
    EXPECT_NEAR(report.gen_loss_paper, eval_gen_loss_paper(updated, z, labels), 1e-12);
}

TEST(LocalTrain, ZeroItersIsIdentity) {
    const CganModel model = tiny_model(20);
    TrainState state{model, make_adam_state(model.discriminator_params, 2e-4),
                     make_adam_state(model.generator_params, 2e-4)};
    Rng rng(21);
    ImageShard shard;
    Rng data_rng(22);
    shard.images = random_images(10, model.image_dim, data_rng);
    shard.labels = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    const auto [out, reports] = local_train(state, shard, 0, 4, rng);
    EXPECT_TRUE(reports.empty());
    for (std::size_t p = 0; p < model.generator_params.entries.size(); ++p)
        EXPECT_EQ(out.model.generator_params.entries[p].second.data,
                  model.generator_params.entries[p].second.data);
}

TEST(LocalTrain, CountsAndAlternation) {
    const CganModel model = tiny_model(23);
    TrainState state{model, make_adam_state(model.discriminator_params, 2e-4),
                     make_adam_state(model.generator_params, 2e-4)};
    Rng rng(24);
    ImageShard shard;
    Rng data_rng(25);
    shard.images = random_images(10, model.image_dim, data_rng);
    shard.labels = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    const auto [out, reports] = local_train(state, shard, 3, 4, rng);
    EXPECT_EQ(reports.size(), 3u);
    EXPECT_EQ(out.disc_opt.step_count, 3u);
    EXPECT_EQ(out.gen_opt.step_count, 3u);
}

TEST(LocalTrain, EmptyShardRejected) {
    const CganModel model = tiny_model(26);
    TrainState state{model, make_adam_state(model.discriminator_params, 2e-4),
                     make_adam_state(model.generator_params, 2e-4)};
    Rng rng(27);
    ImageShard shard;
    shard.images = Tensor::zeros({0, model.image_dim});
    EXPECT_THROW(local_train(state, shard, 1, 4, rng), std::invalid_argument);
}

TEST(LocalTrain, DeterministicGivenSeed) {
    const CganModel model = tiny_model(28);
    ImageShard shard;
    Rng data_rng(29);
    shard.images = random_images(12, model.image_dim, data_rng);
    shard.labels = std::vector<std::size_t>{0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    auto run = [&] {
        TrainState state{model, make_adam_state(model.discriminator_params, 2e-4),
                         make_adam_state(model.generator_params, 2e-4)};
        Rng rng(30);
        return local_train(state, shard, 4, 5, rng);
    };
    const auto a = run();
    const auto b = run();
    for (std::size_t p = 0; p < a.first.model.generator_params.entries.size(); ++p)
        EXPECT_EQ(a.first.model.generator_params.entries[p].second.data,
                  b.first.model.generator_params.entries[p].second.data);
    ASSERT_EQ(a.second.size(), b.second.size());
    for (std::size_t i = 0; i < a.second.size(); ++i)
        EXPECT_DOUBLE_EQ(a.second[i].gen_loss_paper, b.second[i].gen_loss_paper);
}
