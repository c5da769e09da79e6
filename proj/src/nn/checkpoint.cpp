#include "hdrt/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "hdrt/imgio.hpp"

namespace hdrt::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

struct Entry {
    std::string name;
    Tensor tensor;
    bool buffer;
};

std::vector<Entry> entries(const Module& m) {
    std::vector<Entry> out;
    for (auto& p : m.parameters()) out.push_back({p.name, p.tensor, false});
    for (auto& b : m.buffers()) out.push_back({b.name, b.tensor, true});
    return out;
}

nlohmann::json read_manifest(const std::string& base) {
    std::ifstream in(base + ".json");
    if (!in) throw NnError("checkpoint: cannot open " + base + ".json");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw NnError("checkpoint: bad manifest " + base + ".json: " + e.what());
    }
}

}  // namespace

void save_checkpoint(const Module& m, const std::string& base, const nlohmann::json& meta) {
    nlohmann::json man;
    man["format"] = "hdrt-f32-v1";
    man["meta"] = meta;
    auto& list = man["tensors"] = nlohmann::json::array();
    std::vector<std::uint8_t> blob;
    std::size_t offset = 0;
    for (const auto& e : entries(m)) {
        list.push_back({{"name", e.name},
                        {"shape", e.tensor.shape()},
                        {"offset", offset},
                        {"kind", e.buffer ? "buffer" : "parameter"},
                        {"frozen", !e.buffer && !e.tensor.requires_grad()}});
        const auto d = e.tensor.data();
        const auto* bytes = reinterpret_cast<const std::uint8_t*>(d.data());
        blob.insert(blob.end(), bytes, bytes + d.size() * sizeof(float));
        offset += d.size();
    }
    man["count"] = offset;
    io::write_file(base + ".bin", blob);
    const std::string text = man.dump(2);
    io::write_file(base + ".json", std::vector<std::uint8_t>(text.begin(), text.end()));
}

nlohmann::json load_checkpoint(Module& m, const std::string& base) {
    const auto man = read_manifest(base);
    const auto blob = io::read_file(base + ".bin");
    const auto& list = man.at("tensors");
    auto ents = entries(m);
    if (list.size() != ents.size())
        throw NnError("checkpoint: " + base + " has " + std::to_string(list.size()) + " tensors, model has " +
                      std::to_string(ents.size()));
    for (std::size_t i = 0; i < ents.size(); ++i) {
        const auto& j = list[i];
        auto& e = ents[i];
        if (j.at("name").get<std::string>() != e.name) throw NnError("checkpoint: tensor name mismatch at " + e.name);
        if (j.at("shape").get<Shape>() != e.tensor.shape()) throw NnError("checkpoint: shape mismatch at " + e.name);
        const std::size_t off = j.at("offset").get<std::size_t>();
        const std::size_t n = e.tensor.size();
        if ((off + n) * sizeof(float) > blob.size()) throw NnError("checkpoint: truncated data at " + e.name);
        std::memcpy(e.tensor.data().data(), blob.data() + off * sizeof(float), n * sizeof(float));
        if (!e.buffer) e.tensor.set_requires_grad(!j.value("frozen", false));
    }
    return man.value("meta", nlohmann::json::object());
}

nlohmann::json read_checkpoint_meta(const std::string& base) {
    return read_manifest(base).value("meta", nlohmann::json::object());
}

}  // namespace hdrt::nn
