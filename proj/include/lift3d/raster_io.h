#pragma once

#include <map>
#include <string>

#include "lift3d/geometry.h"

namespace lift3d {

// Raster files are a raw little-endian row-major payload at `path` plus a
// sidecar text header at `path + ".json"`:
//
//   {"width": W, "height": H, "channels": 1, "dtype": "float32" | "uint16"}
//
// Depth maps use float32 meters, instance masks uint16 ids.

std::string raster_header_path(const std::string& payload_path);

DepthMap read_depth(const std::string& path);
void write_depth(const std::string& path, const DepthMap& depth);

InstanceMask read_mask(const std::string& path,
                       std::map<int, int> labels = {});
void write_mask(const std::string& path, const InstanceMask& mask);

}  // namespace lift3d
