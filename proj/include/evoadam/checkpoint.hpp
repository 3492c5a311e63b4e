#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "evoadam/params.hpp"

namespace evoadam {

inline constexpr int kCheckpointVersion = 1;

// Self-describing model snapshot. Parameters are stored as 16 hex characters
// per value: the IEEE-754 bit pattern of the double, most significant nibble
// first (i.e. the in-memory little-endian bytes read as one 64-bit integer).
// That guarantees a bit-exact save/load roundtrip.
struct Checkpoint {
    int format_version = kCheckpointVersion;
    std::string role;  // generator | discriminator | regressor | fused | decision-vector
    MlpSpec spec;
    FlatParams params;
    double lambda = 0.0;
    std::string config_hash;
    std::size_t epoch = 0;
};

inline std::string encode_payload(const std::vector<double>& data) {
    std::string out;
    out.reserve(16 * data.size());
    char buf[17];
    for (double v : data) {
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(v)));
        out += buf;
    }
    return out;
}

inline std::vector<double> decode_payload(const std::string& hex) {
    if (hex.size() % 16 != 0)
        throw std::runtime_error("checkpoint: payload length is not a multiple of 16 hex chars");
    std::vector<double> out(hex.size() / 16);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        for (std::size_t k = 0; k < 16; ++k) {
            const char c = hex[16 * i + k];
            std::uint64_t nibble = 0;
            if (c >= '0' && c <= '9') nibble = static_cast<std::uint64_t>(c - '0');
            else if (c >= 'a' && c <= 'f') nibble = static_cast<std::uint64_t>(c - 'a' + 10);
            else if (c >= 'A' && c <= 'F') nibble = static_cast<std::uint64_t>(c - 'A' + 10);
            else throw std::runtime_error("checkpoint: malformed hex in payload");
            bits = (bits << 4) | nibble;
        }
        out[i] = std::bit_cast<double>(bits);
    }
    return out;
}

inline void save_checkpoint(const Checkpoint& cp, const std::string& path) {
    nlohmann::json j;
    j["format_version"] = cp.format_version;
    j["role"] = cp.role;
    j["spec"] = {{"widths", cp.spec.widths},
                 {"hidden", activation_name(cp.spec.hidden)},
                 {"output", activation_name(cp.spec.output)},
                 {"slope", cp.spec.slope}};
    nlohmann::json layout = nlohmann::json::array();
    for (const LayerLayout& l : cp.params.layout)
        layout.push_back({{"name", l.name}, {"offset", l.offset}, {"length", l.length},
                          {"shape", l.shape}});
    j["layout"] = layout;
    j["lambda"] = cp.lambda;
    j["provenance"] = {{"config_hash", cp.config_hash}, {"epoch", cp.epoch}};
    j["payload"] = encode_payload(cp.params.data);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("checkpoint: " + path + ": " + e.what());
    }
    Checkpoint cp;
    cp.format_version = j.at("format_version").get<int>();
    if (cp.format_version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: version " + std::to_string(cp.format_version) +
                                 " not understood (expected " + std::to_string(kCheckpointVersion) + ")");
    cp.role = j.at("role").get<std::string>();
    cp.spec.widths = j.at("spec").at("widths").get<std::vector<std::size_t>>();
    cp.spec.hidden = activation_from(j.at("spec").at("hidden").get<std::string>());
    cp.spec.output = activation_from(j.at("spec").at("output").get<std::string>());
    cp.spec.slope = j.at("spec").at("slope").get<double>();
    for (const auto& l : j.at("layout")) {
        LayerLayout ll;
        ll.name = l.at("name").get<std::string>();
        ll.offset = l.at("offset").get<std::size_t>();
        ll.length = l.at("length").get<std::size_t>();
        ll.shape = l.at("shape").get<std::vector<std::size_t>>();
        cp.params.layout.push_back(ll);
    }
    cp.lambda = j.at("lambda").get<double>();
    cp.config_hash = j.at("provenance").at("config_hash").get<std::string>();
    cp.epoch = j.at("provenance").at("epoch").get<std::size_t>();
    cp.params.data = decode_payload(j.at("payload").get<std::string>());
    cp.params.validate();  // payload length must match the layout
    return cp;
}

}  // namespace evoadam
