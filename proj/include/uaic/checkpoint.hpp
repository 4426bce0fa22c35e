#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "uaic/corpus.hpp"
#include "uaic/graph.hpp"

namespace uaic::ckpt {

enum class ModelKind { UE, Insertion, AR, NAIC };

std::string kind_name(ModelKind kind);
ModelKind parse_kind(const std::string& name);

inline constexpr int kFormatVersion = 2;

/// Architecture manifest plus named parameter tensors.
///
/// On disk: one line of JSON (the manifest, no raw newlines) terminated by
/// '\n', followed by a raw little-endian blob of 32-bit floats. The manifest
/// lists every tensor's name, dtype, shape, byte offset, byte length and an
/// FNV-1a checksum of its bytes. `manifest_fnv1a` covers the rest of the
/// manifest, so edits to the configuration echo or the dims are refused too.
struct ModelCheckpoint {
    ModelKind kind = ModelKind::UE;
    nlohmann::json dims = nlohmann::json::object();   // architecture sizes
    nlohmann::json config = nlohmann::json::object(); // run configuration echo
    corpus::Vocabulary vocab;
    double u_avg = 0.0;
    std::uint64_t seed = 0;
    nc::ParameterSet params;
};

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path);

/// Throws DataError on: bad magic/version, truncated blob, checksum
/// mismatch, kind different from `expected`, or vocabulary hash different
/// from `expected_vocab`.
ModelCheckpoint load_checkpoint(const std::filesystem::path& path,
                                std::optional<ModelKind> expected = std::nullopt,
                                const corpus::Vocabulary* expected_vocab = nullptr);

std::string hex64(std::uint64_t v);

/// Copies tensors by name from `src` into `dst`; names and shapes must match
/// exactly.
void assign_parameters(nc::ParameterSet& dst, const nc::ParameterSet& src);

} // namespace uaic::ckpt
