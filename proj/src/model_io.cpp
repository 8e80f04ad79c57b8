#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mmf/model.hpp"
#include "mmf/tensor_io.hpp"

namespace mmf {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'M', 'M', 'D', 'L'};
constexpr unsigned char kVersion = 1;

json config_to_json(const ModelConfig& c) {
    return json{{"num_classes", c.num_classes},
                {"d_model", c.d_model},
                {"heads", c.heads},
                {"pos_mode", pos_mode_name(c.pos_mode)},
                {"mlp_hidden", {c.mlp_hidden.first, c.mlp_hidden.second}},
                {"encoder",
                 {{"image_size", c.encoder.image_size},
                  {"stem_patch", c.encoder.stem_patch},
                  {"channels", c.encoder.channels},
                  {"blocks", c.encoder.blocks}}}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.num_classes = j.at("num_classes").get<int>();
    c.d_model = j.at("d_model").get<int64_t>();
    c.heads = j.at("heads").get<int>();
    c.pos_mode = pos_mode_from_name(j.at("pos_mode").get<std::string>());
    c.mlp_hidden = {j.at("mlp_hidden").at(0).get<int64_t>(),
                    j.at("mlp_hidden").at(1).get<int64_t>()};
    c.encoder.image_size = j.at("encoder").at("image_size").get<int64_t>();
    c.encoder.stem_patch = j.at("encoder").at("stem_patch").get<int64_t>();
    c.encoder.channels = j.at("encoder").at("channels").get<int64_t>();
    c.encoder.blocks = j.at("encoder").at("blocks").get<int>();
    c.validate();
    return c;
}

}  // namespace

void save_model(const ModelParams& params, const ModelConfig& config,
                const std::filesystem::path& path) {
    auto& mutable_params = const_cast<ModelParams&>(params);
    std::vector<std::string> names = {"pos_table"};
    std::string blobs;
    append_tensor_bytes(blobs, params.pos_table.table);
    visit_params<float>(mutable_params, [&](const std::string& name, ad::Value& v) {
        names.push_back(name);
        append_tensor_bytes(blobs, v->value);
    });

    json header = {{"version", kVersion}, {"config", config_to_json(config)}, {"tensors", names}};
    const std::string header_str = header.dump();

    std::string bytes;
    bytes.append(kMagic, 4);
    bytes.push_back(static_cast<char>(kVersion));
    const auto len = static_cast<uint32_t>(header_str.size());
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((len >> (8 * i)) & 0xFF));
    bytes += header_str;
    bytes += blobs;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.is_open()) throw io_error("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) throw io_error("write to " + path.string() + " failed");
}

std::pair<ModelParams, ModelConfig> load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) throw io_error("cannot open model file " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (bytes.size() < 9) {
        throw format_error("model file truncated at byte offset " + std::to_string(bytes.size()));
    }
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw format_error("model file malformed at byte offset 0: bad magic");
    }
    const auto version = static_cast<unsigned char>(bytes[4]);
    if (version != kVersion) {
        throw version_error("model file version " + std::to_string(version) +
                            " unsupported (expected " + std::to_string(kVersion) + ")");
    }
    uint32_t len = 0;
    for (int i = 0; i < 4; ++i)
        len |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[5 + i])) << (8 * i);
    if (bytes.size() < 9 + static_cast<size_t>(len)) {
        throw format_error("model file header truncated at byte offset " +
                           std::to_string(bytes.size()));
    }

    json header;
    try {
        header = json::parse(bytes.substr(9, len));
    } catch (const json::exception& e) {
        throw format_error(std::string("model header is not valid JSON: ") + e.what());
    }
    ModelConfig config = config_from_json(header.at("config"));
    const auto names = header.at("tensors").get<std::vector<std::string>>();

    // Build a parameter skeleton from the config, then overwrite each tensor
    // from the file in header order.
    ModelParams params = init_model(config, 0);
    std::vector<std::pair<std::string, ad::Value>> slots;
    slots.emplace_back("pos_table", nullptr);
    visit_params<float>(params,
                        [&](const std::string& name, ad::Value& v) { slots.emplace_back(name, v); });
    if (names.size() != slots.size()) {
        throw format_error("model file lists " + std::to_string(names.size()) + " tensors, " +
                           "expected " + std::to_string(slots.size()));
    }

    size_t offset = 9 + len;
    for (size_t i = 0; i < names.size(); ++i) {
        if (names[i] != slots[i].first) {
            throw format_error("model tensor " + std::to_string(i) + " is '" + names[i] +
                               "', expected '" + slots[i].first + "'");
        }
        Tensor t = parse_tensor_bytes(bytes, offset);
        if (i == 0) {
            if (t.shape != params.pos_table.table.shape) {
                throw format_error("pos_table shape " + t.shape_string() + " does not match " +
                                   params.pos_table.table.shape_string());
            }
            params.pos_table.table = std::move(t);
        } else {
            if (t.shape != slots[i].second->value.shape) {
                throw format_error("tensor '" + names[i] + "' shape " + t.shape_string() +
                                   " does not match expected " +
                                   slots[i].second->value.shape_string());
            }
            slots[i].second->value = std::move(t);
        }
    }
    if (offset != bytes.size()) {
        throw format_error("model file has " + std::to_string(bytes.size() - offset) +
                           " trailing bytes");
    }
    return {std::move(params), config};
}

}  // namespace mmf
