#include "tcwunet/weights_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "le_bytes.hpp"

namespace tcwunet {

namespace {

constexpr char kMagic[4] = {'T', 'C', 'W', 'U'};

std::string format_float(float v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    return buf;
}

std::string join_ints(const std::vector<int>& values, char sep) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out.push_back(sep);
        out += std::to_string(values[i]);
    }
    return out;
}

std::string config_lines(const ModelConfig& c) {
    std::ostringstream out;
    out << "config input_channels " << c.input_channels << '\n';
    out << "config num_levels " << c.num_levels << '\n';
    out << "config encoder_kernel " << c.encoder_kernel << '\n';
    out << "config decoder_kernel " << c.decoder_kernel << '\n';
    out << "config channel_ladder " << join_ints(c.channel_ladder, ',') << '\n';
    out << "config bottleneck_channels " << c.bottleneck_channels << '\n';
    out << "config dilations " << join_ints(c.dilations, ',') << '\n';
    out << "config bn_eps " << format_float(c.bn_eps) << '\n';
    return out.str();
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(std::stoi(item));
    return out;
}

} // namespace

std::string container_manifest(const ModelWeights& model) {
    std::ostringstream out;
    out << config_lines(model.config);
    std::uint64_t offset = 0;
    for_each_tensor(model, [&](const std::string& name, const std::vector<int>& shape,
                               std::span<const float> values) {
        out << "tensor " << name << ' ' << join_ints(shape, 'x') << ' ' << offset << '\n';
        offset += values.size() * 4;
    });
    return out.str();
}

void save_weights(const std::filesystem::path& path, const ModelWeights& model) {
    check_finite(model);
    const std::string manifest = container_manifest(model);

    std::vector<std::uint8_t> bytes;
    bytes.insert(bytes.end(), kMagic, kMagic + 4);
    detail::put_u32_le(bytes, kWeightsFormatVersion);
    detail::put_u64_le(bytes, manifest.size());
    bytes.insert(bytes.end(), manifest.begin(), manifest.end());
    for_each_tensor(model, [&](const std::string&, const std::vector<int>&,
                               std::span<const float> values) {
        detail::put_f32_block_le(bytes, values.data(), values.size());
    });

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

ModelWeights load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());

    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw WeightsError(path.string() + ": not a TCWU weight container");
    const std::uint32_t version = detail::get_u32_le(bytes.data() + 4);
    if (version != kWeightsFormatVersion)
        throw WeightsError(path.string() + ": unsupported container version " +
                           std::to_string(version));
    const std::uint64_t manifest_len = detail::get_u64_le(bytes.data() + 8);
    if (16 + manifest_len > bytes.size())
        throw WeightsError(path.string() + ": truncated manifest");
    const std::string manifest(bytes.begin() + 16, bytes.begin() + 16 + manifest_len);
    const std::uint8_t* blob = bytes.data() + 16 + manifest_len;
    const std::uint64_t blob_size = bytes.size() - 16 - manifest_len;

    ModelConfig config;
    struct Entry {
        std::vector<int> shape;
        std::uint64_t offset;
    };
    std::map<std::string, Entry> entries;

    std::istringstream lines(manifest);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        try {
            if (kind == "config") {
                std::string key, value;
                ls >> key >> value;
                if (key == "input_channels") config.input_channels = std::stoi(value);
                else if (key == "num_levels") config.num_levels = std::stoi(value);
                else if (key == "encoder_kernel") config.encoder_kernel = std::stoi(value);
                else if (key == "decoder_kernel") config.decoder_kernel = std::stoi(value);
                else if (key == "channel_ladder") config.channel_ladder = parse_int_list(value);
                else if (key == "bottleneck_channels") config.bottleneck_channels = std::stoi(value);
                else if (key == "dilations") config.dilations = parse_int_list(value);
                else if (key == "bn_eps") config.bn_eps = std::stof(value);
                else throw WeightsError(path.string() + ": unknown config key " + key);
            } else if (kind == "tensor") {
                std::string name, shape_text, offset_text;
                ls >> name >> shape_text >> offset_text;
                Entry e;
                std::stringstream ss(shape_text);
                std::string dim;
                while (std::getline(ss, dim, 'x')) e.shape.push_back(std::stoi(dim));
                e.offset = std::stoull(offset_text);
                if (!entries.emplace(name, std::move(e)).second)
                    throw WeightsError(path.string() + ": duplicate tensor " + name);
            } else {
                throw WeightsError(path.string() + ": unknown manifest line: " + line);
            }
        } catch (const WeightsError&) {
            throw;
        } catch (const std::exception&) {
            throw WeightsError(path.string() + ": malformed manifest line: " + line);
        }
    }

    try {
        require_valid(config);
    } catch (const ConfigError& e) {
        throw WeightsError(path.string() + ": " + e.what());
    }

    ModelWeights model = allocate_weights(config);
    std::size_t matched = 0;
    for_each_tensor(model, [&](const std::string& name, const std::vector<int>& shape,
                               std::span<float> values) {
        auto it = entries.find(name);
        if (it == entries.end())
            throw WeightsError(path.string() + ": missing tensor " + name);
        if (it->second.shape != shape)
            throw WeightsError(path.string() + ": shape mismatch for tensor " + name);
        const std::uint64_t need = values.size() * 4;
        if (it->second.offset > blob_size || it->second.offset + need > blob_size)
            throw WeightsError(path.string() + ": tensor " + name + " outside data section");
        detail::get_f32_block_le(blob + it->second.offset, values.data(), values.size());
        ++matched;
    });
    if (matched != entries.size())
        throw WeightsError(path.string() + ": container holds tensors unknown to this model");

    check_finite(model);
    return model;
}

} // namespace tcwunet
