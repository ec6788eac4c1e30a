#pragma once

// Analytic depth rendering of gravity-aligned boxes for end-to-end tests.

#include <random>
#include <string>
#include <vector>

#include "lift3d/geometry.h"

namespace lift3d::testing {

struct SceneObject {
  OrientedBox3D box;
  int class_id = 1;
};

struct SyntheticScene {
  std::string image_id;
  CameraIntrinsics K;
  std::vector<SceneObject> objects;  // instance id = index + 1
  DepthMap depth;
  InstanceMask mask;
};

// Level camera high above the floor; the principal point sits above the
// image so every row looks downward and box tops are sampled densely.
struct SceneSpec {
  int width = 640;
  int height = 480;
  CameraIntrinsics K{400.0, 400.0, 320.0, -150.0};
  double camera_height = 4.0;  // floor plane at y = +camera_height
  double yaw_min = 0.0;        // radians
  double yaw_max = 1.5707963267948966;
  double lateral = 2.5;        // |x| bound of box centers
  double near = 3.5;
  double far = 6.0;
};

// Ray-casts every pixel center; depth 0 where nothing is hit.
void render(SyntheticScene& scene, const SceneSpec& spec);

// `num_objects` boxes resting on the floor, fully inside the image, with
// disjoint image footprints (placed one at a time).
SyntheticScene random_scene(std::mt19937_64& rng, const SceneSpec& spec,
                            int num_objects, const std::string& image_id);

struct SyntheticDataset {
  std::string manifest_path;
  std::string gt_path;
  std::vector<SyntheticScene> scenes;
};

// Writes rasters, manifest, ground-truth boxes, embeddings and reference
// counts under `dir`.
SyntheticDataset write_dataset(const std::string& dir,
                               std::vector<SyntheticScene> scenes);

}  // namespace lift3d::testing
