#include "melm/model_io.hpp"

#include <bit>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "melm/image_io.hpp"

namespace melm {

using nlohmann::json;

namespace {

constexpr char kModelMagic[4] = {'E', 'L', 'M', '1'};
constexpr char kEnsembleMagic[4] = {'E', 'L', 'M', 'E'};
constexpr std::uint32_t kFormatVersion = 1;

void append_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t read_u32(const std::string& bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
    }
    return v;
}

void append_f64_block(std::string& out, const double* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        out.append(reinterpret_cast<const char*>(data), count * sizeof(double));
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, &data[i], 8);
            for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
        }
    }
}

class Reader {
public:
    Reader(const std::string& bytes, std::size_t offset) : bytes_(bytes), offset_(offset) {}

    void read_f64_block(double* data, std::size_t count, const char* what) {
        need(count * sizeof(double), what);
        if constexpr (std::endian::native == std::endian::little) {
            std::memcpy(data, bytes_.data() + offset_, count * sizeof(double));
        } else {
            for (std::size_t i = 0; i < count; ++i) {
                std::uint64_t bits = 0;
                for (int b = 0; b < 8; ++b) {
                    bits |= static_cast<std::uint64_t>(
                                static_cast<unsigned char>(bytes_[offset_ + i * 8 + b]))
                            << (8 * b);
                }
                std::memcpy(&data[i], &bits, 8);
            }
        }
        offset_ += count * sizeof(double);
    }

    std::string_view read_raw(std::size_t count, const char* what) {
        need(count, what);
        std::string_view view(bytes_.data() + offset_, count);
        offset_ += count;
        return view;
    }

    std::size_t offset() const { return offset_; }

private:
    void need(std::size_t count, const char* what) const {
        if (offset_ + count > bytes_.size()) {
            throw std::runtime_error(std::string("truncated model file while reading ") + what);
        }
    }

    const std::string& bytes_;
    std::size_t offset_;
};

json featurizer_to_json(const Featurizer& f) {
    json j;
    if (f.mode == Featurizer::Mode::Image2d) {
        j["mode"] = "2d";
        j["image_width"] = f.image_width;
        j["image_height"] = f.image_height;
        j["resize"] = (f.resize_method == ResizeMethod::Bilinear) ? "bilinear" : "nearest";
    } else {
        j["mode"] = "1d";
        j["vector_length"] = f.vector_length;
    }
    return j;
}

Featurizer featurizer_from_json(const json& j) {
    Featurizer f;
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "2d") {
        f.mode = Featurizer::Mode::Image2d;
        f.image_width = j.at("image_width").get<std::size_t>();
        f.image_height = j.at("image_height").get<std::size_t>();
        f.resize_method = (j.value("resize", "bilinear") == std::string("nearest"))
                              ? ResizeMethod::NearestNeighbor
                              : ResizeMethod::Bilinear;
    } else if (mode == "1d") {
        f.mode = Featurizer::Mode::Vector1d;
        f.vector_length = j.at("vector_length").get<std::size_t>();
    } else {
        throw std::runtime_error("model header: unknown featurization mode " + mode);
    }
    return f;
}

json header_json(const ElmModel& model) {
    const auto& cfg = model.config;
    json header;
    header["format_version"] = kFormatVersion;
    header["kind"] = "elm-model";
    header["config"] = {
        {"hidden_neurons", cfg.hidden_neurons},
        {"activation", activation_name(cfg.activation)},
        {"alpha", cfg.alpha},
        {"fan_in", cfg.fan_in == 0 ? json("full") : json(cfg.fan_in)},
        {"rbf_width_scale", cfg.rbf_width_scale},
        {"ridge", cfg.ridge},
        {"seed", cfg.seed},
    };
    header["input_dim"] = model.input_dim;
    header["class_names"] = model.class_names;
    header["has_rbf"] = model.hidden.has_rbf;
    if (model.featurization) header["featurization"] = featurizer_to_json(*model.featurization);
    return header;
}

// Connectivity bitmap: bit (unit * input_dim + input), LSB first.
std::string mask_bits(const HiddenLayer& layer) {
    const std::size_t nbits = layer.units * layer.input_dim;
    std::string bits((nbits + 7) / 8, '\0');
    auto set_bit = [&bits](std::size_t pos) {
        bits[pos / 8] |= static_cast<char>(1u << (pos % 8));
    };
    if (!layer.sparse()) {
        for (std::size_t i = 0; i < nbits; ++i) set_bit(i);
        return bits;
    }
    for (std::size_t j = 0; j < layer.units; ++j) {
        for (std::size_t t = 0; t < layer.fan_in; ++t) {
            set_bit(j * layer.input_dim + layer.mask_indices[j * layer.fan_in + t]);
        }
    }
    return bits;
}

}  // namespace

std::string serialize_model(const ElmModel& model) {
    const json header = header_json(model);
    const std::string header_text = header.dump();

    std::string out;
    out.append(kModelMagic, 4);
    append_u32(out, static_cast<std::uint32_t>(header_text.size()));
    out += header_text;

    const HiddenLayer& layer = model.hidden;
    append_f64_block(out, layer.weights.data(), layer.weights.size());
    append_f64_block(out, layer.bias.data(), layer.bias.size());
    out += mask_bits(layer);
    append_f64_block(out, model.output_weights.data(), model.output_weights.size());
    if (layer.has_rbf) {
        append_f64_block(out, layer.centers.data(), layer.centers.size());
        append_f64_block(out, layer.widths.data(), layer.widths.size());
    }
    return out;
}

ElmModel deserialize_model(const std::string& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kModelMagic, 4) != 0) {
        throw std::runtime_error("not a model file (bad magic)");
    }
    const std::uint32_t header_len = read_u32(bytes, 4);
    if (8 + static_cast<std::size_t>(header_len) > bytes.size()) {
        throw std::runtime_error("truncated model file while reading header");
    }
    json header;
    try {
        header = json::parse(bytes.substr(8, header_len));
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("model header is not valid JSON: ") + e.what());
    }
    if (header.value("format_version", 0u) != kFormatVersion) {
        throw std::runtime_error("unsupported model format version");
    }

    ElmModel model;
    const json& cfg = header.at("config");
    model.config.hidden_neurons = cfg.at("hidden_neurons").get<std::size_t>();
    model.config.activation = parse_activation(cfg.at("activation").get<std::string>());
    model.config.alpha = cfg.at("alpha").get<double>();
    model.config.fan_in =
        cfg.at("fan_in").is_string() ? 0 : cfg.at("fan_in").get<std::size_t>();
    model.config.rbf_width_scale = cfg.at("rbf_width_scale").get<double>();
    model.config.ridge = cfg.value("ridge", 0.0);
    model.config.seed = cfg.at("seed").get<std::uint64_t>();
    model.input_dim = header.at("input_dim").get<std::size_t>();
    model.class_names = header.at("class_names").get<std::vector<std::string>>();
    if (header.contains("featurization")) {
        model.featurization = featurizer_from_json(header.at("featurization"));
    }
    const bool has_rbf = header.at("has_rbf").get<bool>();

    if (model.input_dim == 0 || model.config.hidden_neurons == 0 || model.class_names.empty()) {
        throw std::runtime_error("model header has inconsistent dimensions");
    }

    HiddenLayer& layer = model.hidden;
    layer.input_dim = model.input_dim;
    layer.units = model.config.hidden_neurons;
    layer.fan_in = (model.config.fan_in == 0) ? layer.input_dim : model.config.fan_in;
    layer.has_rbf = has_rbf;

    Reader reader(bytes, 8 + header_len);
    layer.weights = Matrix(layer.input_dim, layer.units);
    reader.read_f64_block(layer.weights.data(), layer.weights.size(), "input weights");
    layer.bias.resize(layer.units);
    reader.read_f64_block(layer.bias.data(), layer.bias.size(), "biases");

    const std::size_t nbits = layer.units * layer.input_dim;
    const auto bitmap = reader.read_raw((nbits + 7) / 8, "connectivity mask");
    if (layer.sparse()) {
        layer.mask_indices.clear();
        layer.mask_indices.reserve(layer.units * layer.fan_in);
        for (std::size_t j = 0; j < layer.units; ++j) {
            std::size_t row_ones = 0;
            for (std::size_t d = 0; d < layer.input_dim; ++d) {
                const std::size_t pos = j * layer.input_dim + d;
                if (bitmap[pos / 8] & (1u << (pos % 8))) {
                    layer.mask_indices.push_back(static_cast<std::uint32_t>(d));
                    ++row_ones;
                }
            }
            if (row_ones != layer.fan_in) {
                throw std::runtime_error("connectivity mask does not match fan_in");
            }
        }
        layer.rebuild_mask_values();
    }

    model.output_weights = Matrix(layer.units, model.class_names.size());
    reader.read_f64_block(model.output_weights.data(), model.output_weights.size(),
                          "output weights");
    if (has_rbf) {
        layer.centers = Matrix(layer.input_dim, layer.units);
        reader.read_f64_block(layer.centers.data(), layer.centers.size(), "rbf centers");
        layer.widths.resize(layer.units);
        reader.read_f64_block(layer.widths.data(), layer.widths.size(), "rbf widths");
    }
    return model;
}

void save_model(const ElmModel& model, const std::filesystem::path& path) {
    atomic_write_file(path, serialize_model(model));
}

ElmModel load_model(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return deserialize_model(std::string(bytes.begin(), bytes.end()));
}

std::string serialize_ensemble(const Ensemble& ensemble) {
    ensemble.validate();
    std::vector<std::string> blobs;
    blobs.reserve(ensemble.count());
    json sizes = json::array();
    for (const auto& member : ensemble.members) {
        blobs.push_back(serialize_model(member));
        sizes.push_back(blobs.back().size());
    }
    json header;
    header["format_version"] = kFormatVersion;
    header["kind"] = "elm-ensemble";
    header["count"] = ensemble.count();
    header["base_seed"] = ensemble.base_seed;
    header["member_sizes"] = sizes;
    const std::string header_text = header.dump();

    std::string out;
    out.append(kEnsembleMagic, 4);
    append_u32(out, static_cast<std::uint32_t>(header_text.size()));
    out += header_text;
    for (const auto& blob : blobs) out += blob;
    return out;
}

Ensemble deserialize_ensemble(const std::string& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kEnsembleMagic, 4) != 0) {
        throw std::runtime_error("not an ensemble file (bad magic)");
    }
    const std::uint32_t header_len = read_u32(bytes, 4);
    if (8 + static_cast<std::size_t>(header_len) > bytes.size()) {
        throw std::runtime_error("truncated ensemble file while reading header");
    }
    json header;
    try {
        header = json::parse(bytes.substr(8, header_len));
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("ensemble header is not valid JSON: ") + e.what());
    }
    if (header.value("format_version", 0u) != kFormatVersion) {
        throw std::runtime_error("unsupported ensemble format version");
    }
    const auto count = header.at("count").get<std::size_t>();
    const auto sizes = header.at("member_sizes").get<std::vector<std::size_t>>();
    if (sizes.size() != count || count == 0) {
        throw std::runtime_error("ensemble header index table is inconsistent");
    }

    Ensemble ensemble;
    ensemble.base_seed = header.at("base_seed").get<std::uint64_t>();
    std::size_t offset = 8 + header_len;
    for (std::size_t i = 0; i < count; ++i) {
        if (offset + sizes[i] > bytes.size()) {
            throw std::runtime_error("truncated ensemble file while reading member " +
                                     std::to_string(i));
        }
        ensemble.members.push_back(deserialize_model(bytes.substr(offset, sizes[i])));
        offset += sizes[i];
    }
    ensemble.validate();
    return ensemble;
}

void save_ensemble(const Ensemble& ensemble, const std::filesystem::path& path) {
    atomic_write_file(path, serialize_ensemble(ensemble));
}

Ensemble load_ensemble(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return deserialize_ensemble(std::string(bytes.begin(), bytes.end()));
}

std::string describe_model_file(const std::filesystem::path& path) {
    const auto raw = read_file_bytes(path);
    const std::string bytes(raw.begin(), raw.end());
    if (bytes.size() < 8) throw std::runtime_error("file too short: " + path.string());

    std::ostringstream os;
    const std::uint32_t header_len = read_u32(bytes, 4);
    if (8 + static_cast<std::size_t>(header_len) > bytes.size()) {
        throw std::runtime_error("truncated header: " + path.string());
    }
    const json header = json::parse(bytes.substr(8, header_len));

    if (std::memcmp(bytes.data(), kModelMagic, 4) == 0) {
        os << "model file: " << path.string() << "\n";
        os << header.dump(2) << "\n";
        os << "total bytes: " << bytes.size() << "\n";
        return os.str();
    }
    if (std::memcmp(bytes.data(), kEnsembleMagic, 4) == 0) {
        os << "ensemble file: " << path.string() << "\n";
        os << header.dump(2) << "\n";
        // First member's header carries the shared configuration.
        const std::size_t member_off = 8 + header_len;
        if (member_off + 8 <= bytes.size() &&
            std::memcmp(bytes.data() + member_off, kModelMagic, 4) == 0) {
            const std::uint32_t mlen = read_u32(bytes, member_off + 4);
            if (member_off + 8 + mlen <= bytes.size()) {
                os << "member[0] header:\n"
                   << json::parse(bytes.substr(member_off + 8, mlen)).dump(2) << "\n";
            }
        }
        os << "total bytes: " << bytes.size() << "\n";
        return os.str();
    }
    throw std::runtime_error("unrecognized container magic: " + path.string());
}

}  // namespace melm
