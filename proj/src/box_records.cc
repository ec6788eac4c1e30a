#include "lift3d/box_records.h"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "lift3d/error.h"

namespace lift3d {
namespace {

Eigen::Vector3d vec3(const nlohmann::json& j, const char* key) {
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 3) throw ValidationError(std::string(key) + " must have 3 entries");
  return {v[0], v[1], v[2]};
}

}  // namespace

std::string to_json_line(const BoxRecord& r) {
  const Eigen::Matrix3d& R = r.box.rotation;
  nlohmann::ordered_json j;
  j["image_id"] = r.image_id;
  j["instance_id"] = r.instance_id;
  j["class_id"] = r.class_id;
  j["center"] = {r.box.center.x(), r.box.center.y(), r.box.center.z()};
  j["dims"] = {r.box.dims.x(), r.box.dims.y(), r.box.dims.z()};
  j["R"] = {R(0, 0), R(0, 1), R(0, 2), R(1, 0), R(1, 1),
            R(1, 2), R(2, 0), R(2, 1), R(2, 2)};
  j["n_points"] = r.n_points;
  if (r.score) j["score"] = *r.score;
  return j.dump();
}

BoxRecord parse_box_record(const std::string& line, size_t line_no) {
  const std::string where = "box record line " + std::to_string(line_no) + ": ";
  try {
    const nlohmann::json j = nlohmann::json::parse(line);
    BoxRecord r;
    r.image_id = j.at("image_id").is_string()
                     ? j.at("image_id").get<std::string>()
                     : j.at("image_id").dump();
    r.class_id = j.at("class_id").get<int>();
    if (j.contains("instance_id")) r.instance_id = j.at("instance_id").get<int>();
    if (j.contains("n_points")) r.n_points = j.at("n_points").get<size_t>();
    r.box.center = vec3(j, "center");
    r.box.dims = vec3(j, "dims");
    const auto rot = j.at("R").get<std::vector<double>>();
    if (rot.size() != 9) throw ValidationError("R must have 9 entries");
    Eigen::Matrix3d R;
    R << rot[0], rot[1], rot[2], rot[3], rot[4], rot[5], rot[6], rot[7], rot[8];
    if (!is_rotation(R, 1e-6)) {
      throw ValidationError("R is not a rotation matrix");
    }
    Vector6d p;
    p << R.col(0), R.col(1);
    r.box.rotation = rotation_from_6d(p);
    if (j.contains("score")) {
      const double s = j.at("score").get<double>();
      if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
        throw ValidationError("score must lie in [0, 1]");
      }
      r.score = s;
    }
    r.box.validate();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(where + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(where + e.what());
  }
}

std::vector<BoxRecord> read_box_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open box file " + path);
  std::vector<BoxRecord> records;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(parse_box_record(line, line_no));
  }
  return records;
}

DetectionRecord to_detection(const BoxRecord& r) {
  return {r.image_id, r.class_id, r.score.value_or(1.0), r.box};
}

}  // namespace lift3d
