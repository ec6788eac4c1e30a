#include "lift3d/raster_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "lift3d/error.h"

namespace lift3d {
namespace {

static_assert(std::endian::native == std::endian::little,
              "raster I/O assumes a little-endian host");

struct RasterHeader {
  int width = 0;
  int height = 0;
  std::string dtype;
};

RasterHeader read_header(const std::string& payload_path,
                         const std::string& expected_dtype) {
  const std::string path = raster_header_path(payload_path);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open raster header " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed raster header " + path + ": " + e.what());
  }
  RasterHeader h;
  try {
    h.width = j.at("width").get<int>();
    h.height = j.at("height").get<int>();
    h.dtype = j.at("dtype").get<std::string>();
    if (j.at("channels").get<int>() != 1) {
      throw ValidationError("raster " + path + ": only 1 channel supported");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("raster header " + path + ": " + e.what());
  }
  if (h.dtype != expected_dtype) {
    throw ValidationError("raster " + path + ": dtype " + h.dtype +
                          ", expected " + expected_dtype);
  }
  if (h.width <= 0 || h.height <= 0) {
    throw ValidationError("raster " + path + ": non-positive size");
  }
  return h;
}

void write_header(const std::string& payload_path, int width, int height,
                  const std::string& dtype) {
  const std::string path = raster_header_path(payload_path);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write raster header " + path);
  nlohmann::json j = {{"width", width},
                      {"height", height},
                      {"channels", 1},
                      {"dtype", dtype}};
  out << j.dump() << "\n";
  if (!out) throw IoError("failed writing " + path);
}

template <typename T>
std::vector<T> read_payload(const std::string& path, size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open raster payload " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() != count * sizeof(T)) {
    throw ValidationError("raster payload " + path + " has " +
                          std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(count * sizeof(T)));
  }
  std::vector<T> values(count);
  std::memcpy(values.data(), bytes.data(), bytes.size());
  return values;
}

template <typename T>
void write_payload(const std::string& path, const std::vector<T>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write raster payload " + path);
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(T)));
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace

std::string raster_header_path(const std::string& payload_path) {
  return payload_path + ".json";
}

DepthMap read_depth(const std::string& path) {
  const RasterHeader h = read_header(path, "float32");
  auto values =
      read_payload<float>(path, static_cast<size_t>(h.width) * h.height);
  return DepthMap(h.width, h.height, std::move(values));
}

void write_depth(const std::string& path, const DepthMap& depth) {
  write_header(path, depth.width, depth.height, "float32");
  write_payload(path, depth.values);
}

InstanceMask read_mask(const std::string& path, std::map<int, int> labels) {
  const RasterHeader h = read_header(path, "uint16");
  auto ids =
      read_payload<uint16_t>(path, static_cast<size_t>(h.width) * h.height);
  return InstanceMask(h.width, h.height, std::move(ids), std::move(labels));
}

void write_mask(const std::string& path, const InstanceMask& mask) {
  write_header(path, mask.width, mask.height, "uint16");
  write_payload(path, mask.ids);
}

}  // namespace lift3d
