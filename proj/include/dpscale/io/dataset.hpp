#pragma once

#include <filesystem>

#include "dpscale/io/json_io.hpp"
#include "dpscale/synthetic.hpp"

namespace dpscale::io {

/// Writes a rendered scene in the layout `estimate` reads: per view a
/// 16-bit PNG pair and a PFM depth map, plus manifest.json (with the ground
/// truth scale), truth.json and scene.json. Returns the manifest written.
Manifest write_dataset(const std::filesystem::path& dir, const SceneSpec& spec, const SyntheticDataset& data);

}  // namespace dpscale::io
