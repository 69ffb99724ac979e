#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedgan/cgan.hpp"
#include "fedgan/image_io.hpp"
#include "fedgan/rng.hpp"
#include "fedgan/tensor.hpp"

// Synthetic labeled toy corpus (filled disc vs. cross silhouettes), external
// image ingestion, and the fixed bottom-right trigger patch used to poison a
// malicious client's shard. Labels are never changed by poisoning.

namespace fedgan {

struct LabeledImage {
    Tensor pixels;  // H x W x C in [-1, 1]
    std::size_t label = 0;
};

enum class TriggerPattern { White, SeededRandom };

struct TriggerSpec {
    std::size_t size = 4;  // patch is size x size, pasted bottom-right
    TriggerPattern pattern = TriggerPattern::White;
    std::uint64_t seed = 0;  // used by SeededRandom only
};

struct ShapeCorpusSpec {
    std::size_t image_side = 16;
    std::size_t num_classes = 2;  // 0 = filled disc, 1 = cross
    std::size_t samples_per_class = 128;
    double jitter_pos = 1.5;    // center offset, pixels
    double jitter_scale = 0.15; // relative size perturbation
    std::uint64_t seed = 0;
};

namespace detail {

// Signed distance (pixels, negative inside) of the class silhouette.
inline double shape_distance(std::size_t label, double x, double y, double size) {
    switch (label) {
        case 0:  // filled disc
            return std::sqrt(x * x + y * y) - size;
        case 1: {  // plus-shaped cross, thin bars
            const double thickness = std::max(1.0, size * 0.28);
            const double horiz = std::max(std::abs(y) - thickness, std::abs(x) - size);
            const double vert = std::max(std::abs(x) - thickness, std::abs(y) - size);
            return std::min(horiz, vert);
        }
        case 2: {  // filled square
            return std::max(std::abs(x), std::abs(y)) - size;
        }
        default: {  // diamond
            return (std::abs(x) + std::abs(y)) - size * 1.35;
        }
    }
}

}  // namespace detail

// Deterministic render of one sample: (spec, label, index) fixes the image.
inline LabeledImage render_shape(const ShapeCorpusSpec& spec, std::size_t label, std::size_t index) {
    Rng rng = Rng(spec.seed).child(label * 1000003ULL + index);
    const double side = static_cast<double>(spec.image_side);
    const double cx = side / 2.0 - 0.5 + rng.uniform(-spec.jitter_pos, spec.jitter_pos);
    const double cy = side / 2.0 - 0.5 + rng.uniform(-spec.jitter_pos, spec.jitter_pos);
    const double base = side * 0.30;
    const double size = base * (1.0 + rng.uniform(-spec.jitter_scale, spec.jitter_scale));

    LabeledImage img;
    img.label = label;
    img.pixels = Tensor::zeros({spec.image_side, spec.image_side, 1});
    for (std::size_t r = 0; r < spec.image_side; ++r)
        for (std::size_t c = 0; c < spec.image_side; ++c) {
            const double d = detail::shape_distance(label, static_cast<double>(c) - cx,
                                                    static_cast<double>(r) - cy, size);
            const double coverage = std::clamp(0.5 - d, 0.0, 1.0);  // ~1px soft edge
            img.pixels.data[r * spec.image_side + c] = -0.9 + 1.8 * coverage;
        }
    return img;
}

// Balanced corpus ordered class0[0..n), class1[0..n), ...
inline std::vector<LabeledImage> generate_corpus(const ShapeCorpusSpec& spec) {
    if (spec.image_side < 8)
        throw std::invalid_argument("image_side " + std::to_string(spec.image_side) +
                                    " too small to render shapes (need >= 8)");
    if (spec.num_classes == 0 || spec.num_classes > 4)
        throw std::invalid_argument("shape corpus supports 1..4 classes");
    std::vector<LabeledImage> corpus;
    corpus.reserve(spec.num_classes * spec.samples_per_class);
    for (std::size_t label = 0; label < spec.num_classes; ++label)
        for (std::size_t i = 0; i < spec.samples_per_class; ++i)
            corpus.push_back(render_shape(spec, label, i));
    return corpus;
}

// The trigger patch pixels; drawn once per spec, identical for every image.
inline Tensor trigger_patch(const TriggerSpec& trigger, std::size_t channels) {
    Tensor patch = Tensor::full({trigger.size, trigger.size, channels}, 1.0);
    if (trigger.pattern == TriggerPattern::SeededRandom) {
        Rng rng(trigger.seed);
        for (double& v : patch.data)
            v = static_cast<double>(rng.below(256)) / 127.5 - 1.0;  // uniform bytes
    }
    return patch;
}

// Pastes the trigger onto the bottom-right corner; label untouched.
inline LabeledImage poison(LabeledImage image, const TriggerSpec& trigger) {
    if (image.pixels.shape.size() != 3)
        throw std::invalid_argument("poison: image tensor must be HxWxC");
    const std::size_t h = image.pixels.shape[0], w = image.pixels.shape[1],
                      c = image.pixels.shape[2];
    if (trigger.size > std::min(h, w))
        throw std::invalid_argument("trigger size " + std::to_string(trigger.size) +
                                    " exceeds image side " + std::to_string(std::min(h, w)));
    const Tensor patch = trigger_patch(trigger, c);
    const std::size_t s = trigger.size;
    for (std::size_t r = 0; r < s; ++r)
        for (std::size_t col = 0; col < s; ++col)
            for (std::size_t ch = 0; ch < c; ++ch)
                image.pixels.data[((h - s + r) * w + (w - s + col)) * c + ch] =
                    patch.data[(r * s + col) * c + ch];
    return image;
}

// Random near-equal partition; any size excess goes to the last shards.
inline std::vector<std::vector<LabeledImage>> shard(const std::vector<LabeledImage>& corpus,
                                                    std::size_t n_clients, std::uint64_t seed) {
    if (n_clients == 0) throw std::invalid_argument("shard: need at least one client");
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    const std::size_t base = corpus.size() / n_clients;
    const std::size_t extra = corpus.size() % n_clients;
    std::vector<std::vector<LabeledImage>> shards(n_clients);
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < n_clients; ++i) {
        const std::size_t take = base + (i >= n_clients - extra ? 1 : 0);
        shards[i].reserve(take);
        for (std::size_t k = 0; k < take; ++k) shards[i].push_back(corpus[order[cursor++]]);
    }
    return shards;
}

// Flattens a list of images into the [n, image_dim] layout cgan trains on.
inline ImageShard to_image_shard(const std::vector<LabeledImage>& images) {
    ImageShard out;
    if (images.empty()) {
        out.images = Tensor::zeros({0, 0});
        return out;
    }
    const std::size_t dim = images.front().pixels.numel();
    out.images = Tensor::zeros({images.size(), dim});
    out.labels.resize(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].pixels.numel() != dim)
            throw std::invalid_argument("inconsistent image geometry in shard");
        std::copy(images[i].pixels.data.begin(), images[i].pixels.data.end(),
                  &out.images.data[i * dim]);
        out.labels[i] = images[i].label;
    }
    return out;
}

// Loads a directory of per-class subfolders of PGM/PPM files, rescaled to
// image_side and normalized; subfolder (sorted) order defines class ids.
inline std::vector<LabeledImage> ingest_directory(const std::string& path, std::size_t image_side) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(path)) throw std::runtime_error("not a directory: " + path);

    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(path))
        if (entry.is_directory()) class_dirs.push_back(entry.path());
    std::sort(class_dirs.begin(), class_dirs.end());

    std::vector<LabeledImage> corpus;
    std::size_t channels = 0;
    for (std::size_t label = 0; label < class_dirs.size(); ++label) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(class_dirs[label]))
            if (entry.is_regular_file()) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            const RawImage raw = read_pnm(file.string());
            if (channels == 0) channels = raw.channels;
            if (raw.channels != channels)
                throw std::runtime_error("mixed channel counts: " + file.string());
            LabeledImage img;
            img.label = label;
            img.pixels = bilinear_resample(normalize_image(raw), image_side, image_side);
            corpus.push_back(std::move(img));
        }
    }
    return corpus;
}

}  // namespace fedgan
