#pragma once

// File formats.
//
// Scene JSON:
//   objects: [{center: [x,y,z], size: [sx,sy,sz], heading, class_id, albedo: [r,g,b]}]
//   camera:  {f, cu, cv, R: [9 numbers, row-major camera->upright]}
//   floor_z, points: [x0,y0,z0, x1,...], labels: [...]
//   image:   {width, height, rgb: base64 of raw row-major RGB bytes}
//   detections (optional): [{box: [umin,vmin,umax,vmax], class_id, score}]
//
// Checkpoint (little-endian):
//   "IMVK1", u32 layer count, then per layer: u32 rows, u32 cols,
//   rows*cols f64 weights (row-major), rows f64 biases.
//   Layers follow Model::for_each_mlp order.

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "imvote/scene_sim.hpp"
#include "imvote/votenet.hpp"

namespace imvote {

using json = nlohmann::json;

inline std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  using namespace boost::archive::iterators;
  using It = base64_from_binary<transform_width<std::vector<std::uint8_t>::const_iterator, 6, 8>>;
  std::string out(It(bytes.begin()), It(bytes.end()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string s) {
  using namespace boost::archive::iterators;
  using It = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
  std::size_t pad = 0;
  while (!s.empty() && s.back() == '=') {
    s.pop_back();
    ++pad;
  }
  if (pad > 2) throw FormatError("bad base64 padding");
  std::vector<std::uint8_t> out;
  try {
    for (It it(s.cbegin()), end(s.cend()); it != end; ++it) out.push_back(static_cast<std::uint8_t>(*it));
  } catch (const std::exception&) {
    throw FormatError("invalid base64 payload");
  }
  // the final partial group decodes to padding bits
  const std::size_t expected = s.size() * 6 / 8;
  out.resize(expected);
  return out;
}

namespace detail {
inline json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

inline Vec3 json_vec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}
}  // namespace detail

inline json scene_to_json(const SceneGT& s, const std::vector<Detection2D>* detections = nullptr) {
  json j;
  j["objects"] = json::array();
  for (const auto& o : s.objects) {
    j["objects"].push_back({{"center", detail::vec_json(o.box.center)},
                            {"size", detail::vec_json(o.box.size)},
                            {"heading", o.box.heading},
                            {"class_id", o.class_id},
                            {"albedo", o.albedo}});
  }
  const Eigen::Matrix3d& r = s.rig.extrinsics.rotation();
  json rot = json::array();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) rot.push_back(r(i, k));
  j["camera"] = {{"f", s.rig.intrinsics.f}, {"cu", s.rig.intrinsics.cu}, {"cv", s.rig.intrinsics.cv}, {"R", rot}};
  j["floor_z"] = s.floor_z;
  json pts = json::array();
  for (const auto& p : s.points) {
    pts.push_back(p.x);
    pts.push_back(p.y);
    pts.push_back(p.z);
  }
  j["points"] = std::move(pts);
  j["labels"] = s.labels;
  j["image"] = {{"width", s.image.width()}, {"height", s.image.height()}, {"rgb", base64_encode(s.image.data())}};
  if (detections) {
    json d = json::array();
    for (const auto& det : *detections) {
      d.push_back({{"box", {det.box.umin, det.box.vmin, det.box.umax, det.box.vmax}},
                   {"class_id", det.class_id},
                   {"score", det.score}});
    }
    j["detections"] = std::move(d);
  }
  return j;
}

struct LoadedScene {
  SceneGT scene;
  std::vector<Detection2D> detections;
  bool has_detections = false;
};

// Dense points are not serialized; the loaded scene's dense cloud is the
// sampled cloud.
inline LoadedScene scene_from_json(const json& j) {
  LoadedScene out;
  SceneGT& s = out.scene;
  try {
    for (const auto& o : j.at("objects")) {
      SceneObject so;
      so.box.center = detail::json_vec(o.at("center"));
      so.box.size = detail::json_vec(o.at("size"));
      so.box.heading = o.at("heading").get<double>();
      so.class_id = o.at("class_id").get<int>();
      if (o.contains("albedo")) so.albedo = o.at("albedo").get<std::array<double, 3>>();
      s.objects.push_back(so);
    }
    const json& cam = j.at("camera");
    s.rig.intrinsics = CameraIntrinsics(cam.at("f").get<double>(), cam.at("cu").get<double>(),
                                        cam.at("cv").get<double>());
    const auto rot = cam.at("R").get<std::vector<double>>();
    if (rot.size() != 9) throw FormatError("camera.R must have 9 entries");
    Eigen::Matrix3d r;
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) r(i, k) = rot[3 * i + k];
    s.rig.extrinsics = CameraExtrinsics(r);
    s.floor_z = j.value("floor_z", 0.0);
    const auto pts = j.at("points").get<std::vector<double>>();
    if (pts.size() % 3 != 0) throw FormatError("points must be a flat xyz array");
    for (std::size_t i = 0; i < pts.size(); i += 3) s.points.push_back({pts[i], pts[i + 1], pts[i + 2]});
    s.labels = j.contains("labels") ? j.at("labels").get<std::vector<int>>()
                                    : std::vector<int>(s.points.size(), kBackground);
    if (s.labels.size() != s.points.size()) throw FormatError("labels and points differ in length");
    for (int l : s.labels)
      if (l < kBackground || l >= static_cast<int>(s.objects.size())) throw FormatError("label out of range");
    const json& img = j.at("image");
    s.image = RgbImage(img.at("width").get<int>(), img.at("height").get<int>(),
                       base64_decode(img.at("rgb").get<std::string>()));
    if (j.contains("detections")) {
      out.has_detections = true;
      for (const auto& d : j.at("detections")) {
        const auto b = d.at("box").get<std::array<double, 4>>();
        Detection2D det{{b[0], b[1], b[2], b[3]}, d.at("class_id").get<int>(), d.at("score").get<double>()};
        if (!det.valid()) throw FormatError("invalid detection");
        out.detections.push_back(det);
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("scene json: ") + e.what());
  }
  s.dense_points = s.points;
  s.dense_labels = s.labels;
  return out;
}

inline void save_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << j.dump() << '\n';
}

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

// --- checkpoints -------------------------------------------------------------

inline constexpr char kCheckpointMagic[5] = {'I', 'M', 'V', 'K', '1'};

namespace detail {
template <class T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("truncated checkpoint");
  return v;
}
}  // namespace detail

inline void write_checkpoint(const Model& m, std::ostream& out) {
  std::vector<const nn::Linear*> layers;
  m.for_each_mlp([&](const nn::Mlp& mlp) {
    for (const auto& l : mlp.layers) layers.push_back(&l);
  });
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_raw(out, static_cast<std::uint32_t>(layers.size()));
  for (const nn::Linear* l : layers) {
    detail::write_raw(out, static_cast<std::uint32_t>(l->out()));
    detail::write_raw(out, static_cast<std::uint32_t>(l->in()));
    out.write(reinterpret_cast<const char*>(l->weight.data()),
              static_cast<std::streamsize>(l->weight.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(l->bias.data()),
              static_cast<std::streamsize>(l->bias.size() * sizeof(double)));
  }
}

// Reads weights into a model built from `cfg`; layer shapes must match.
inline Model read_checkpoint(std::istream& in, const NetConfig& cfg) {
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) throw FormatError("not an IMVK1 checkpoint");
  Model m = make_model(cfg, 0);
  std::vector<nn::Linear*> layers;
  m.for_each_mlp([&](nn::Mlp& mlp) {
    for (auto& l : mlp.layers) layers.push_back(&l);
  });
  const auto count = detail::read_raw<std::uint32_t>(in);
  if (count != layers.size()) throw FormatError("checkpoint layer count does not match the network config");
  for (nn::Linear* l : layers) {
    const auto rows = detail::read_raw<std::uint32_t>(in);
    const auto cols = detail::read_raw<std::uint32_t>(in);
    if (static_cast<int>(rows) != l->out() || static_cast<int>(cols) != l->in())
      throw FormatError("checkpoint layer shape does not match the network config");
    in.read(reinterpret_cast<char*>(l->weight.data()), static_cast<std::streamsize>(l->weight.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(l->bias.data()), static_cast<std::streamsize>(l->bias.size() * sizeof(double)));
    if (!in) throw FormatError("truncated checkpoint");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in checkpoint");
  return m;
}

inline void save_checkpoint(const Model& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  write_checkpoint(m, out);
}

inline Model load_checkpoint(const std::string& path, const NetConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read '" + path + "'");
  return read_checkpoint(in, cfg);
}

}  // namespace imvote
