#include "melm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "melm/image_io.hpp"
#include "melm/rng.hpp"

namespace melm {

namespace fs = std::filesystem;

FeatureVector Featurizer::apply(const GrayImage& image) const {
    if (mode == Mode::Image2d) {
        return flatten_2d(resize(image, image_width, image_height, resize_method));
    }
    return resample_1d(flatten_2d(image), vector_length);
}

std::string Featurizer::describe() const {
    std::ostringstream os;
    if (mode == Mode::Image2d) {
        os << "2d " << image_width << "x" << image_height
           << (resize_method == ResizeMethod::Bilinear ? " bilinear" : " nearest");
    } else {
        os << "1d " << vector_length;
    }
    return os.str();
}

Dataset load_corpus(const fs::path& root, const Featurizer& featurizer) {
    if (!fs::exists(root) || !fs::is_directory(root)) {
        throw std::runtime_error("corpus root not found: " + root.string());
    }

    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) class_dirs.push_back(entry.path());
    }
    if (class_dirs.empty()) {
        throw std::runtime_error("corpus root has no class directories: " + root.string());
    }
    std::sort(class_dirs.begin(), class_dirs.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

    Dataset ds;
    ds.feature_dim = featurizer.dim();

    std::vector<FeatureVector> rows;
    for (std::size_t cls = 0; cls < class_dirs.size(); ++cls) {
        const fs::path& dir = class_dirs[cls];
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file()) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());

        std::size_t loaded = 0;
        for (const fs::path& file : files) {
            try {
                rows.push_back(featurizer.apply(load_image(file)));
                ds.labels.push_back(static_cast<std::uint32_t>(cls));
                ++loaded;
            } catch (const std::exception& e) {
                std::cerr << "warning: skipping " << file.string() << ": " << e.what() << "\n";
            }
        }
        if (loaded == 0) {
            throw std::runtime_error("class directory has no readable images: " +
                                     dir.filename().string());
        }
        ds.catalog.names.push_back(dir.filename().string());
        ds.catalog.counts.push_back(loaded);
    }

    ds.features = Matrix(rows.size(), ds.feature_dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < ds.feature_dim; ++j) ds.features(i, j) = rows[i][j];
    }

    // Advisory check against the published Malimg layout.
    const auto& ref = malimg_reference();
    if (ds.catalog.num_classes() == ref.size()) {
        bool names_match = true;
        for (std::size_t i = 0; i < ref.size(); ++i) {
            if (ds.catalog.names[i] != ref[i].name) {
                names_match = false;
                break;
            }
        }
        if (names_match) {
            for (std::size_t i = 0; i < ref.size(); ++i) {
                if (ds.catalog.counts[i] != ref[i].count) {
                    std::cerr << "warning: class " << ref[i].name << " has "
                              << ds.catalog.counts[i] << " samples, reference layout has "
                              << ref[i].count << "\n";
                }
            }
        }
    }
    return ds;
}

namespace {

Dataset take_rows(const Dataset& src, const std::vector<std::size_t>& indices) {
    Dataset out;
    out.catalog = src.catalog;
    out.feature_dim = src.feature_dim;
    out.features = Matrix(indices.size(), src.feature_dim);
    out.labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        out.labels.push_back(src.labels[indices[i]]);
        for (std::size_t j = 0; j < src.feature_dim; ++j) {
            out.features(i, j) = src.features(indices[i], j);
        }
    }
    return out;
}

}  // namespace

std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double test_fraction,
                                             std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("stratified_split: test_fraction must be in (0,1)");
    }
    const std::size_t m = dataset.catalog.num_classes();
    std::vector<std::vector<std::size_t>> by_class(m);
    for (std::size_t i = 0; i < dataset.size(); ++i) by_class[dataset.labels[i]].push_back(i);

    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t cls = 0; cls < m; ++cls) {
        auto& members = by_class[cls];
        if (members.size() < 2) {
            throw std::runtime_error("stratified_split: class " + dataset.catalog.names[cls] +
                                     " has fewer than 2 samples");
        }
        // Per-class generator so the split does not depend on class order.
        Rng rng(derive_seed(seed, cls));
        for (std::size_t i = members.size(); i-- > 1;) {
            std::swap(members[i], members[rng.next_below(i + 1)]);
        }
        auto n_test = static_cast<std::size_t>(
            std::llround(test_fraction * static_cast<double>(members.size())));
        n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
        for (std::size_t i = 0; i < members.size(); ++i) {
            (i < n_test ? test_idx : train_idx).push_back(members[i]);
        }
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    auto recount = [&](Dataset& ds) {
        std::fill(ds.catalog.counts.begin(), ds.catalog.counts.end(), 0);
        for (auto label : ds.labels) ++ds.catalog.counts[label];
    };
    std::pair<Dataset, Dataset> result{take_rows(dataset, train_idx), take_rows(dataset, test_idx)};
    recount(result.first);
    recount(result.second);
    return result;
}

std::vector<double> class_weights(const ClassCatalog& catalog) {
    const auto total = static_cast<double>(catalog.total());
    std::vector<double> weights;
    weights.reserve(catalog.counts.size());
    for (std::size_t j = 0; j < catalog.counts.size(); ++j) {
        if (catalog.counts[j] == 0) {
            throw std::invalid_argument("class_weights: class " + catalog.names[j] +
                                        " has zero samples");
        }
        weights.push_back(std::sqrt(total / static_cast<double>(catalog.counts[j])));
    }
    return weights;
}

std::string catalog_manifest_csv(const ClassCatalog& catalog) {
    const auto weights = class_weights(catalog);
    std::ostringstream os;
    os << "class,count,weight\n";
    for (std::size_t j = 0; j < catalog.num_classes(); ++j) {
        os << catalog.names[j] << "," << catalog.counts[j] << ",";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", weights[j]);
        os << buf << "\n";
    }
    return os.str();
}

const std::vector<MalimgFamily>& malimg_reference() {
    static const std::vector<MalimgFamily> table = {
        {"Adialer.C", 125},      {"Agent.FYI", 116},     {"Allaple.A", 2949},
        {"Allaple.L", 1591},     {"Alueron.gen!J", 198}, {"Autorun.K", 106},
        {"C2LOP.P", 146},        {"C2LOP.gen!g", 200},   {"Dialplatform.B", 177},
        {"Dontovo.A", 162},      {"Fakerean", 381},      {"Instantaccess", 431},
        {"Lolyda.AA1", 213},     {"Lolyda.AA2", 184},    {"Lolyda.AA3", 123},
        {"Lolyda.AT", 159},      {"Malex.gen!J", 136},   {"Obfuscator.AD", 142},
        {"Rbot!gen", 158},       {"Skintrim.N", 80},     {"Swizzor.gen!E", 128},
        {"Swizzor.gen!I", 132},  {"VB.AT", 408},         {"Wintrim.BX", 97},
        {"Yuner.A", 800},
    };
    return table;
}

}  // namespace melm
