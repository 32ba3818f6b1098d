#include "forge/io/standard_format.hpp"

#include "forge/core/error.hpp"
#include "forge/io/binary.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

namespace forge::io {

namespace fs = std::filesystem;

SamplePaths::SamplePaths(const fs::path& dir, const std::string& sample_id)
    : points(dir / (sample_id + ".points")),
      semantic(dir / (sample_id + ".sem")),
      instance(dir / (sample_id + ".inst")),
      color(dir / (sample_id + ".rgb")) {}

std::string read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

namespace {

template <typename T>
void append_le(std::string& buf, T v) {
  v = to_little(v);
  const auto* b = reinterpret_cast<const char*>(&v);
  buf.append(b, sizeof(T));
}

template <typename T>
T get_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return from_little(v);
}

}  // namespace

void write_standard(const LabeledCloud& cloud, const fs::path& dir, const std::string& sample_id) {
  validate(cloud);
  const SamplePaths paths(dir, sample_id);
  const std::size_t n = cloud.size();

  std::string pts;
  pts.reserve(n * 12);
  for (const auto& p : cloud.points) {
    append_le(pts, p.x());
    append_le(pts, p.y());
    append_le(pts, p.z());
  }
  std::string sem;
  std::string inst;
  sem.reserve(n * 4);
  inst.reserve(n * 4);
  for (std::size_t i = 0; i < n; ++i) {
    append_le(sem, static_cast<std::int32_t>(cloud.semantic[i]));
    append_le(inst, static_cast<std::int32_t>(cloud.instance[i]));
  }
  write_file_bytes(paths.points, pts);
  write_file_bytes(paths.semantic, sem);
  write_file_bytes(paths.instance, inst);
  if (cloud.color) {
    std::string rgb;
    rgb.reserve(n * 3);
    for (const auto& c : *cloud.color) rgb.append(reinterpret_cast<const char*>(c.data()), 3);
    write_file_bytes(paths.color, rgb);
  } else if (fs::exists(paths.color)) {
    fs::remove(paths.color);
  }
}

LabeledCloud load_standard(const fs::path& dir, const std::string& sample_id) {
  const SamplePaths paths(dir, sample_id);
  for (const auto* p : {&paths.points, &paths.semantic, &paths.instance}) {
    if (!fs::exists(*p)) fail(ErrorCode::CorruptSample, sample_id + ": missing " + p->filename().string());
  }
  const std::string pts = read_file_bytes(paths.points);
  const std::string sem = read_file_bytes(paths.semantic);
  const std::string inst = read_file_bytes(paths.instance);
  if (pts.size() % 12 != 0) fail(ErrorCode::CorruptSample, sample_id + ": points file is not a whole number of triples");
  const std::size_t n = pts.size() / 12;
  if (sem.size() != n * 4 || inst.size() != n * 4) {
    fail(ErrorCode::CorruptSample, sample_id + ": label files do not match " + std::to_string(n) + " points");
  }

  LabeledCloud cloud;
  cloud.points.resize(n);
  cloud.semantic.resize(n);
  cloud.instance.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const char* p = pts.data() + 12 * i;
    cloud.points[i] = Vec3f(get_le<float>(p), get_le<float>(p + 4), get_le<float>(p + 8));
    cloud.semantic[i] = get_le<std::int32_t>(sem.data() + 4 * i);
    cloud.instance[i] = get_le<std::int32_t>(inst.data() + 4 * i);
  }
  if (fs::exists(paths.color)) {
    const std::string rgb = read_file_bytes(paths.color);
    if (rgb.size() != n * 3) fail(ErrorCode::CorruptSample, sample_id + ": color file does not match point count");
    auto& colors = cloud.color.emplace(n);
    for (std::size_t i = 0; i < n; ++i) std::memcpy(colors[i].data(), rgb.data() + 3 * i, 3);
  }
  return cloud;
}

std::pair<fs::path, std::string> split_sample_prefix(const fs::path& prefix) {
  fs::path dir = prefix.parent_path();
  if (dir.empty()) dir = ".";
  return {dir, prefix.filename().string()};
}

bool sample_exists(const fs::path& dir, const std::string& sample_id) {
  const SamplePaths paths(dir, sample_id);
  return fs::exists(paths.points) && fs::exists(paths.semantic) && fs::exists(paths.instance);
}

}  // namespace forge::io
