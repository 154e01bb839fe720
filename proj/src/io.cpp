#include "radarflow/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace radarflow {
namespace io {

namespace {

using nlohmann::json;

constexpr float kFloMagic = 202021.25f;

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

void expect_keys(const json& object, std::initializer_list<const char*> allowed,
                 const std::string& context) {
  for (const auto& [key, value] : object.items()) {
    (void)value;
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) throw IoError(context + ": unknown key '" + key + "'");
  }
}

json transform_to_json(const RigidTransform& t) {
  json rotation = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rotation.push_back(t.rotation()(r, c));
  }
  return {{"rotation", rotation},
          {"translation", {t.translation().x(), t.translation().y(), t.translation().z()}}};
}

RigidTransform transform_from_json(const json& j, const std::string& context) {
  expect_keys(j, {"rotation", "translation"}, context);
  const auto& rot = j.at("rotation");
  const auto& tr = j.at("translation");
  if (rot.size() != 9 || tr.size() != 3) {
    throw IoError(context + ": rotation needs 9 entries and translation 3");
  }
  Mat3 r;
  for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = rot.at(i).get<double>();
  Vec3 t(tr.at(0).get<double>(), tr.at(1).get<double>(), tr.at(2).get<double>());
  try {
    return RigidTransform(r, t);
  } catch (const ValidationError& e) {
    throw IoError(context + ": " + e.what());
  }
}

json vec3_to_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 vec3_from_json(const json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 3) throw IoError(context + ": expected a 3-vector");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto res = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, res.ptr);
}

void write_flo(const std::filesystem::path& path, const FlowField& flow) {
  auto out = open_out(path, std::ios::binary);
  const std::int32_t w = flow.width();
  const std::int32_t h = flow.height();
  out.write(reinterpret_cast<const char*>(&kFloMagic), sizeof(kFloMagic));
  out.write(reinterpret_cast<const char*>(&w), sizeof(w));
  out.write(reinterpret_cast<const char*>(&h), sizeof(h));
  std::vector<float> payload(flow.data().size());
  for (std::size_t i = 0; i < payload.size(); ++i) {
    payload[i] = static_cast<float>(flow.data()[i]);
  }
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

FlowField read_flo(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  float magic = 0;
  std::int32_t w = 0, h = 0;
  in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
  if (!in) throw IoError("truncated flow file '" + path.string() + "': missing header");
  if (magic != kFloMagic) {
    throw IoError("bad magic in flow file '" + path.string() + "' (got " +
                  format_double(magic) + ", expected 202021.25)");
  }
  in.read(reinterpret_cast<char*>(&w), sizeof(w));
  in.read(reinterpret_cast<char*>(&h), sizeof(h));
  if (!in) throw IoError("truncated flow file '" + path.string() + "': missing dimensions");
  if (w < 1 || h < 1 || w > 1 << 20 || h > 1 << 20) {
    throw IoError("dimension mismatch in flow file '" + path.string() + "': " +
                  std::to_string(w) + "x" + std::to_string(h));
  }
  FlowField flow(w, h);
  std::vector<float> payload(flow.data().size());
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(payload.size() * sizeof(float))) {
    throw IoError("truncated flow file '" + path.string() + "': body shorter than " +
                  std::to_string(w) + "x" + std::to_string(h));
  }
  for (std::size_t i = 0; i < payload.size(); ++i) flow.data()[i] = payload[i];
  return flow;
}

void write_npy(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
               std::span<const float> data) {
  std::size_t expected = 1;
  for (const std::size_t d : shape) expected *= d;
  if (expected != data.size()) throw ValidationError("npy shape does not match the data size");

  std::ostringstream shape_text;
  shape_text << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    shape_text << shape[i];
    if (i + 1 < shape.size() || shape.size() == 1) shape_text << (i + 1 < shape.size() ? ", " : ",");
  }
  shape_text << ")";
  std::string header =
      "{'descr': '<f4', 'fortran_order': False, 'shape': " + shape_text.str() + ", }";
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');

  auto out = open_out(path, std::ios::binary);
  const char magic[8] = {'\x93', 'N', 'U', 'M', 'P', 'Y', '\x01', '\x00'};
  out.write(magic, sizeof(magic));
  const std::uint16_t len = static_cast<std::uint16_t>(header.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

NpyArray read_npy(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, "\x93NUMPY", 6) != 0) {
    throw IoError("'" + path.string() + "' is not an npy file");
  }
  if (magic[6] != 1) throw IoError("unsupported npy version in '" + path.string() + "'");
  std::uint16_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header(len, '\0');
  in.read(header.data(), len);
  if (!in) throw IoError("truncated npy header in '" + path.string() + "'");

  if (header.find("'<f4'") == std::string::npos) {
    throw IoError("'" + path.string() + "': only little-endian float32 npy is supported");
  }
  if (header.find("False") == std::string::npos) {
    throw IoError("'" + path.string() + "': fortran-order npy is not supported");
  }
  const std::size_t open = header.find('(');
  const std::size_t close = header.find(')', open);
  if (open == std::string::npos || close == std::string::npos) {
    throw IoError("'" + path.string() + "': malformed npy shape");
  }

  NpyArray array;
  std::size_t expected = 1;
  std::string token;
  std::istringstream dims(header.substr(open + 1, close - open - 1));
  while (std::getline(dims, token, ',')) {
    const std::size_t first = token.find_first_not_of(' ');
    if (first == std::string::npos) continue;
    std::size_t dim = 0;
    const auto res =
        std::from_chars(token.data() + first, token.data() + token.size(), dim);
    if (res.ec != std::errc()) throw IoError("'" + path.string() + "': malformed npy shape");
    array.shape.push_back(dim);
    expected *= dim;
  }

  array.data.resize(expected);
  in.read(reinterpret_cast<char*>(array.data.data()),
          static_cast<std::streamsize>(expected * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(expected * sizeof(float))) {
    throw IoError("truncated npy data in '" + path.string() + "'");
  }
  return array;
}

void write_scene_sequence(const std::filesystem::path& directory,
                          std::span<const SceneFrame> frames,
                          const std::string& container_name) {
  std::filesystem::create_directories(directory);
  json root;
  root["format"] = "radarflow-scene-v1";
  json out_frames = json::array();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const SceneFrame& f = frames[i];
    json jf;
    jf["timestamp"] = f.timestamp;
    jf["ego_pose"] = transform_to_json(f.camera_from_world);
    jf["radar_extrinsics"] = transform_to_json(f.camera_from_radar);
    jf["intrinsics"] = {{"fx", f.intrinsics.fx}, {"fy", f.intrinsics.fy},
                        {"cx", f.intrinsics.cx}, {"cy", f.intrinsics.cy},
                        {"width", f.intrinsics.width}, {"height", f.intrinsics.height}};
    jf["ego_velocity"] = vec3_to_json(f.ego_velocity);

    json returns = json::array();
    for (std::size_t j = 0; j < f.returns.size(); ++j) {
      const RadarReturn& r = f.returns[j];
      json jr = {{"x", r.position.x()}, {"y", r.position.y()}, {"z", r.position.z()},
                 {"radial_speed", r.radial_speed},
                 {"doppler_kind",
                  r.doppler_kind == DopplerKind::Raw ? "raw" : "ego_compensated"}};
      if (j < f.gt.size() && f.gt[j].body_id >= 0) {
        jr["gt_body_id"] = f.gt[j].body_id;
        jr["gt_velocity"] = vec3_to_json(f.gt[j].velocity);
        jr["gt_occluded"] = f.gt[j].camera_occluded;
      }
      returns.push_back(std::move(jr));
    }
    jf["returns"] = std::move(returns);

    json boxes = json::array();
    for (const GtBox& b : f.boxes) {
      boxes.push_back({{"body_id", b.body_id},
                       {"center", vec3_to_json(b.center)},
                       {"half_extents", vec3_to_json(b.half_extents)},
                       {"yaw", b.yaw},
                       {"velocity", vec3_to_json(b.velocity)},
                       {"moving", b.moving}});
    }
    jf["boxes"] = std::move(boxes);

    if (f.flow) {
      char name[32];
      std::snprintf(name, sizeof(name), "flow_%04zu.flo", i);
      jf["flow"] = name;
      write_flo(directory / name, *f.flow);
    }
    out_frames.push_back(std::move(jf));
  }
  root["frames"] = std::move(out_frames);

  auto out = open_out(directory / container_name, std::ios::out);
  out << root.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + (directory / container_name).string() + "'");
}

std::vector<SceneFrame> read_scene_sequence(const std::filesystem::path& container_path) {
  auto in = open_in(container_path, std::ios::in);
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw IoError("'" + container_path.string() + "': " + e.what());
  }
  expect_keys(root, {"format", "frames"}, container_path.string());
  if (root.value("format", "") != "radarflow-scene-v1") {
    throw IoError("'" + container_path.string() + "': not a radarflow-scene-v1 container");
  }

  const std::filesystem::path base = container_path.parent_path();
  std::vector<SceneFrame> frames;
  double previous_timestamp = 0;
  for (std::size_t i = 0; i < root.at("frames").size(); ++i) {
    const std::string context = container_path.string() + ": frame " + std::to_string(i);
    const json& jf = root.at("frames").at(i);
    expect_keys(jf,
                {"timestamp", "ego_pose", "radar_extrinsics", "intrinsics", "ego_velocity",
                 "returns", "boxes", "flow"},
                context);

    SceneFrame f;
    f.timestamp = jf.at("timestamp").get<double>();
    if (i > 0 && !(f.timestamp > previous_timestamp)) {
      throw IoError(context + ": timestamps must be strictly increasing");
    }
    previous_timestamp = f.timestamp;
    f.camera_from_world = transform_from_json(jf.at("ego_pose"), context + " ego_pose");
    f.camera_from_radar =
        transform_from_json(jf.at("radar_extrinsics"), context + " radar_extrinsics");

    const json& jk = jf.at("intrinsics");
    expect_keys(jk, {"fx", "fy", "cx", "cy", "width", "height"}, context + " intrinsics");
    f.intrinsics = {jk.at("fx").get<double>(), jk.at("fy").get<double>(),
                    jk.at("cx").get<double>(), jk.at("cy").get<double>(),
                    jk.at("width").get<int>(), jk.at("height").get<int>()};
    try {
      f.intrinsics.validate();
    } catch (const ValidationError& e) {
      throw IoError(context + ": " + e.what());
    }
    f.ego_velocity = vec3_from_json(jf.at("ego_velocity"), context + " ego_velocity");

    bool any_gt = false;
    for (const json& jr : jf.at("returns")) {
      expect_keys(jr,
                  {"x", "y", "z", "radial_speed", "doppler_kind", "gt_body_id", "gt_velocity",
                   "gt_occluded"},
                  context + " return");
      RadarReturn r;
      r.position = {jr.at("x").get<double>(), jr.at("y").get<double>(), jr.at("z").get<double>()};
      r.radial_speed = jr.at("radial_speed").get<double>();
      const std::string kind = jr.at("doppler_kind").get<std::string>();
      if (kind == "raw") {
        r.doppler_kind = DopplerKind::Raw;
      } else if (kind == "ego_compensated") {
        r.doppler_kind = DopplerKind::EgoCompensated;
      } else {
        throw IoError(context + ": unknown doppler_kind '" + kind + "'");
      }
      r.timestamp = f.timestamp;

      ReturnGroundTruth gt;
      if (jr.contains("gt_body_id")) {
        gt.body_id = jr.at("gt_body_id").get<int>();
        gt.velocity = vec3_from_json(jr.at("gt_velocity"), context + " gt_velocity");
        gt.camera_occluded = jr.value("gt_occluded", false);
        any_gt = true;
      }
      f.returns.push_back(r);
      f.gt.push_back(gt);
    }
    if (!any_gt) f.gt.clear();

    for (const json& jb : jf.at("boxes")) {
      expect_keys(jb, {"body_id", "center", "half_extents", "yaw", "velocity", "moving"},
                  context + " box");
      GtBox b;
      b.body_id = jb.at("body_id").get<int>();
      b.center = vec3_from_json(jb.at("center"), context + " box center");
      b.half_extents = vec3_from_json(jb.at("half_extents"), context + " box half_extents");
      b.yaw = jb.at("yaw").get<double>();
      b.velocity = vec3_from_json(jb.at("velocity"), context + " box velocity");
      b.moving = jb.at("moving").get<bool>();
      f.boxes.push_back(b);
    }

    if (jf.contains("flow") && !jf.at("flow").is_null()) {
      const std::filesystem::path flow_path = base / jf.at("flow").get<std::string>();
      if (!std::filesystem::exists(flow_path)) {
        throw IoError(context + ": flow file '" + flow_path.string() + "' does not exist");
      }
      f.flow = read_flo(flow_path);
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_score_maps(const std::filesystem::path& path, std::span<const ScoreMapRecord> records,
                      const NeighborhoodSpec& spec) {
  auto out = open_out(path, std::ios::out);
  out << "# radarflow scores v1 left=" << spec.left << " right=" << spec.right
      << " top=" << spec.top << " bottom=" << spec.bottom << " stride=" << spec.stride
      << " n=" << spec.count() << "\n";
  for (const auto& record : records) {
    out << record.frame << ' ' << record.map.point_index << ' ' << record.map.raw_projection.x()
        << ' ' << record.map.raw_projection.y();
    for (const double s : record.map.scores) out << ' ' << format_double(s);
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<ScoreMapRecord> load_predicted_associations(const std::filesystem::path& path,
                                                        const NeighborhoodSpec& spec) {
  auto in = open_in(path, std::ios::in);
  std::vector<ScoreMapRecord> records;
  std::string line;
  std::size_t line_number = 0;
  const int n = spec.count();
  bool saw_header = false;

  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.rfind("# radarflow scores v1", 0) != 0) {
        throw IoError(path.string() + ":" + std::to_string(line_number) +
                      ": unrecognized header");
      }
      const std::size_t at = line.find(" n=");
      if (at != std::string::npos) {
        const int file_n = std::atoi(line.c_str() + at + 3);
        if (file_n != n) {
          throw IoError(path.string() + ": file has " + std::to_string(file_n) +
                        " scores per record, neighborhood expects " + std::to_string(n));
        }
      }
      saw_header = true;
      continue;
    }
    if (!saw_header) {
      throw IoError(path.string() + ":" + std::to_string(line_number) +
                    ": missing '# radarflow scores v1' header");
    }

    std::istringstream fields(line);
    ScoreMapRecord record;
    int x = 0, y = 0;
    if (!(fields >> record.frame >> record.map.point_index >> x >> y)) {
      throw IoError(path.string() + ":" + std::to_string(line_number) +
                    ": malformed record prefix");
    }
    record.map.raw_projection = {x, y};
    record.map.scores.reserve(n);
    for (int k = 0; k < n; ++k) {
      double score = 0;
      if (!(fields >> score)) {
        throw IoError(path.string() + ":" + std::to_string(line_number) + ": record " +
                      std::to_string(records.size()) + " truncated at score " + std::to_string(k));
      }
      if (!(score >= 0 && score <= 1)) {
        throw IoError(path.string() + ":" + std::to_string(line_number) +
                      ": score outside [0, 1]");
      }
      record.map.scores.push_back(score);
    }
    double extra = 0;
    if (fields >> extra) {
      throw IoError(path.string() + ":" + std::to_string(line_number) +
                    ": trailing fields after " + std::to_string(n) + " scores");
    }
    records.push_back(std::move(record));
  }
  return records;
}

void export_training_sample(const std::filesystem::path& directory, const std::string& stem,
                            const SceneFrame& frame, std::span<const AssociationScoreMap> maps,
                            const NeighborhoodSpec& spec) {
  std::filesystem::create_directories(directory);
  const TrainingTensors tensors = build_training_tensors(frame, maps, spec);
  const auto h = static_cast<std::size_t>(tensors.height);
  const auto w = static_cast<std::size_t>(tensors.width);
  write_npy(directory / (stem + "_input.npy"), {8, h, w}, tensors.input);
  write_npy(directory / (stem + "_labels.npy"),
            {static_cast<std::size_t>(tensors.label_channels), h, w}, tensors.labels);
}

}  // namespace io
}  // namespace radarflow
