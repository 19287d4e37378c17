#pragma once

#include <filesystem>

#include "rdfs/det/detector.hpp"

namespace rdfs::det {

/// Model container: JSON header (format version, architecture, task, seed, N,
/// training metadata, payload checksum) followed by the parameters in
/// declaration order and then each batch-norm layer's running mean and
/// variance, as little-endian f32.
void save_model(const std::filesystem::path& path, const CnnDetector& detector);

/// Throws rdfs::FormatError on a corrupted or truncated file.
CnnDetector load_model(const std::filesystem::path& path);

/// Checksum of the parameters and batch-norm statistics; identifies a trained model.
std::uint64_t model_fingerprint(const CnnDetector& detector);

}  // namespace rdfs::det
