#include "uaic/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "uaic/errors.hpp"

namespace uaic::ckpt {

using nlohmann::json;

std::string kind_name(ModelKind kind) {
    switch (kind) {
    case ModelKind::UE: return "ue";
    case ModelKind::Insertion: return "insertion";
    case ModelKind::AR: return "ar";
    case ModelKind::NAIC: return "naic";
    }
    return "?";
}

ModelKind parse_kind(const std::string& name) {
    if (name == "ue") return ModelKind::UE;
    if (name == "insertion") return ModelKind::Insertion;
    if (name == "ar") return ModelKind::AR;
    if (name == "naic") return ModelKind::NAIC;
    throw DataError("checkpoint: unknown model kind '" + name + "'");
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

namespace {

constexpr const char* kMagic = "uaic-checkpoint";

std::uint64_t fnv1a(const unsigned char* p, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

void put_f32_le(std::string& out, float f) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>(bits & 0xff));
        bits >>= 8;
    }
}

std::string manifest_digest(const json& manifest) {
    const std::string text = manifest.dump();
    return hex64(fnv1a(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

float get_f32_le(const unsigned char* p) {
    std::uint32_t bits = 0;
    for (int i = 3; i >= 0; --i) {
        bits = (bits << 8) | p[i];
    }
    return std::bit_cast<float>(bits);
}

} // namespace

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path) {
    std::string blob;
    json tensors = json::array();
    for (const auto& p : ckpt.params) {
        const std::size_t offset = blob.size();
        for (double v : p.value.data()) {
            put_f32_le(blob, static_cast<float>(v));
        }
        const std::size_t bytes = blob.size() - offset;
        tensors.push_back({{"name", p.name},
                           {"dtype", "f32"},
                           {"shape", p.value.shape()},
                           {"offset", offset},
                           {"bytes", bytes},
                           {"fnv1a", hex64(fnv1a(reinterpret_cast<const unsigned char*>(blob.data()) + offset, bytes))}});
    }
    json manifest = {{"format", kMagic},
                     {"version", kFormatVersion},
                     {"kind", kind_name(ckpt.kind)},
                     {"dims", ckpt.dims},
                     {"config", ckpt.config},
                     {"vocab", ckpt.vocab.tokens()},
                     {"vocab_hash", hex64(ckpt.vocab.content_hash())},
                     {"u_avg", ckpt.u_avg},
                     {"seed", ckpt.seed},
                     {"tensors", tensors},
                     {"blob_bytes", blob.size()}};
    manifest["manifest_fnv1a"] = manifest_digest(manifest);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write checkpoint " + path.string());
    }
    out << manifest.dump() << '\n';
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) {
        throw DataError("failed writing checkpoint " + path.string());
    }
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path, std::optional<ModelKind> expected,
                                const corpus::Vocabulary* expected_vocab) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open checkpoint " + path.string());
    }
    std::string header;
    if (!std::getline(in, header)) {
        throw DataError("checkpoint " + path.string() + ": missing manifest");
    }
    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    json manifest;
    try {
        manifest = json::parse(header);
    } catch (const json::exception& e) {
        throw DataError("checkpoint " + path.string() + ": manifest is not JSON: " + e.what());
    }
    ModelCheckpoint ckpt;
    try {
        if (manifest.at("format").get<std::string>() != kMagic) {
            throw DataError("checkpoint " + path.string() + ": not a uaic checkpoint");
        }
        const int version = manifest.at("version").get<int>();
        if (version != kFormatVersion) {
            throw DataError("checkpoint " + path.string() + ": unsupported format version " +
                            std::to_string(version));
        }
        json body = manifest;
        const auto digest = body.at("manifest_fnv1a").get<std::string>();
        body.erase("manifest_fnv1a");
        if (manifest_digest(body) != digest) {
            throw DataError("checkpoint " + path.string() + ": manifest checksum mismatch (edited?)");
        }
        ckpt.kind = parse_kind(manifest.at("kind").get<std::string>());
        if (expected && *expected != ckpt.kind) {
            throw DataError("checkpoint " + path.string() + ": expected a " + kind_name(*expected) +
                            " model, found " + kind_name(ckpt.kind));
        }
        ckpt.dims = manifest.at("dims");
        ckpt.config = manifest.at("config");
        ckpt.vocab = corpus::Vocabulary(manifest.at("vocab").get<std::vector<std::string>>());
        if (hex64(ckpt.vocab.content_hash()) != manifest.at("vocab_hash").get<std::string>()) {
            throw DataError("checkpoint " + path.string() + ": embedded vocabulary does not match its hash");
        }
        if (expected_vocab && expected_vocab->content_hash() != ckpt.vocab.content_hash()) {
            throw DataError("checkpoint " + path.string() + ": vocabulary hash mismatch (checkpoint " +
                            hex64(ckpt.vocab.content_hash()) + ", supplied " +
                            hex64(expected_vocab->content_hash()) + ")");
        }
        ckpt.u_avg = manifest.at("u_avg").get<double>();
        ckpt.seed = manifest.at("seed").get<std::uint64_t>();
        const std::size_t blob_bytes = manifest.at("blob_bytes").get<std::size_t>();
        if (blob.size() != blob_bytes) {
            throw DataError("checkpoint " + path.string() + ": blob is " + std::to_string(blob.size()) +
                            " bytes, manifest says " + std::to_string(blob_bytes) + " (truncated?)");
        }
        const auto* base = reinterpret_cast<const unsigned char*>(blob.data());
        for (const auto& t : manifest.at("tensors")) {
            const auto name = t.at("name").get<std::string>();
            if (t.at("dtype").get<std::string>() != "f32") {
                throw DataError("checkpoint: tensor " + name + " has unsupported dtype");
            }
            const auto shape = t.at("shape").get<nc::Shape>();
            const auto offset = t.at("offset").get<std::size_t>();
            const auto bytes = t.at("bytes").get<std::size_t>();
            std::size_t n = 1;
            for (auto d : shape) {
                n *= d;
            }
            if (bytes != 4 * n || offset + bytes > blob.size()) {
                throw DataError("checkpoint: tensor " + name + " extends past the blob");
            }
            if (hex64(fnv1a(base + offset, bytes)) != t.at("fnv1a").get<std::string>()) {
                throw DataError("checkpoint " + path.string() + ": checksum mismatch in tensor " + name);
            }
            std::vector<double> data(n);
            for (std::size_t i = 0; i < n; ++i) {
                data[i] = static_cast<double>(get_f32_le(base + offset + 4 * i));
            }
            ckpt.params.add(name, nc::Tensor(shape, std::move(data)));
        }
    } catch (const json::exception& e) {
        throw DataError("checkpoint " + path.string() + ": malformed manifest: " + e.what());
    } catch (const nc::ShapeError& e) {
        throw DataError("checkpoint " + path.string() + ": " + e.what());
    }
    return ckpt;
}

void assign_parameters(nc::ParameterSet& dst, const nc::ParameterSet& src) {
    if (dst.size() != src.size()) {
        throw DataError("checkpoint: expected " + std::to_string(dst.size()) + " tensors, found " +
                        std::to_string(src.size()));
    }
    for (std::size_t i = 0; i < dst.size(); ++i) {
        auto id = src.find(dst[i].name);
        if (!id) {
            throw DataError("checkpoint: missing tensor " + dst[i].name);
        }
        if (src[*id].value.shape() != dst[i].value.shape()) {
            throw DataError("checkpoint: tensor " + dst[i].name + " has shape " +
                            nc::shape_str(src[*id].value.shape()) + ", model expects " +
                            nc::shape_str(dst[i].value.shape()));
        }
        dst[i].value = src[*id].value;
    }
}

} // namespace uaic::ckpt
