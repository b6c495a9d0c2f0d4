#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "melm/image.hpp"
#include "melm/linalg.hpp"

namespace melm {

// Class names (unique, lexicographically sorted so label indices are
// portable) with per-class sample counts.
struct ClassCatalog {
    std::vector<std::string> names;
    std::vector<std::size_t> counts;

    std::size_t total() const {
        std::size_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }
    std::size_t num_classes() const { return names.size(); }
};

// Labeled feature vectors. Features are stored as an N x dim column-major
// matrix (row per sample) so training consumes them without copying.
struct Dataset {
    Matrix features;              // size() x feature_dim
    std::vector<std::uint32_t> labels;
    ClassCatalog catalog;
    std::size_t feature_dim = 0;

    std::size_t size() const { return labels.size(); }

    FeatureVector feature_row(std::size_t i) const {
        FeatureVector v(feature_dim);
        for (std::size_t j = 0; j < feature_dim; ++j) v[j] = features(i, j);
        return v;
    }
};

// How images become fixed-length vectors: either resize to a fixed 2-D size
// and flatten, or flatten the raw pixel stream and block-average it down to
// a fixed 1-D length.
struct Featurizer {
    enum class Mode { Image2d, Vector1d };
    Mode mode = Mode::Image2d;
    std::size_t image_width = 64;
    std::size_t image_height = 64;
    std::size_t vector_length = 1024;
    ResizeMethod resize_method = ResizeMethod::Bilinear;

    std::size_t dim() const {
        return mode == Mode::Image2d ? image_width * image_height : vector_length;
    }
    FeatureVector apply(const GrayImage& image) const;
    std::string describe() const;
};

// Loads a class-per-directory image corpus (<root>/<class>/<images>).
// Unreadable images are skipped with a warning on stderr; an empty class
// directory (or one whose every file failed) is an error naming the class.
Dataset load_corpus(const std::filesystem::path& root, const Featurizer& featurizer);

// Seed-deterministic stratified split; per class round(fraction * count)
// samples go to test, clamped to [1, count-1]. Classes with fewer than two
// samples are an error. Returns {train, test}.
std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double test_fraction,
                                             std::uint64_t seed);

// Imbalance weights c_j = sqrt(total / count_j); zero counts are an error.
std::vector<double> class_weights(const ClassCatalog& catalog);

// CSV manifest with columns class,count,weight.
std::string catalog_manifest_csv(const ClassCatalog& catalog);

// Reference layout of the standard 25-family Malimg distribution, used for
// an advisory count check at load time and available to experiments.
struct MalimgFamily {
    const char* name;
    std::size_t count;
};
const std::vector<MalimgFamily>& malimg_reference();

}  // namespace melm
