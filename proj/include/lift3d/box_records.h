#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lift3d/eval3d.h"
#include "lift3d/geometry.h"

namespace lift3d {

// One line of a box file (JSON Lines):
//
//   {"image_id": str, "instance_id": int, "class_id": int,
//    "center": [x, y, z], "dims": [w, h, l], "R": [9 numbers, row-major],
//    "n_points": int, "score": number}
//
// `score` is present for predictions only. `instance_id` and `n_points` are
// optional when reading ground truth.
struct BoxRecord {
  std::string image_id;
  int instance_id = 0;
  int class_id = 0;
  OrientedBox3D box;
  size_t n_points = 0;
  std::optional<double> score;
};

std::string to_json_line(const BoxRecord& record);

// Throws ValidationError naming the line number on schema violations.
// Rotations within 1e-6 of orthonormal are accepted and re-orthonormalized.
BoxRecord parse_box_record(const std::string& line, size_t line_no = 0);
std::vector<BoxRecord> read_box_records(const std::string& path);

DetectionRecord to_detection(const BoxRecord& record);

}  // namespace lift3d
