#include <bit>
#include <cstring>
#include <sstream>

#include "wfov/dataset_io.hpp"

namespace wfov {

static_assert(std::endian::native == std::endian::little, "PLY codec assumes a little-endian host");

namespace {

int type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

bool is_float32(const std::string& t) { return t == "float" || t == "float32"; }
bool is_uint8(const std::string& t) { return t == "uchar" || t == "uint8"; }
bool is_uint16(const std::string& t) { return t == "ushort" || t == "uint16"; }

[[noreturn]] void fail(const fs::path& path, std::uint64_t offset, const std::string& what) {
  throw DataError("ply: " + path.string() + ": " + what + " at byte " + std::to_string(offset));
}

}  // namespace

PlyReader::PlyReader(const fs::path& path) : in_(path, std::ios::binary), path_(path) {
  if (!in_) throw DataError("cannot open " + path.string());

  std::uint64_t offset = 0;
  std::string line;
  const auto next_line = [&]() -> bool {
    if (!std::getline(in_, line)) return false;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line() || line != "ply") fail(path, 0, "missing 'ply' magic");
  bool have_format = false, in_vertex = false, seen_vertex = false, ended = false;
  std::size_t stride = 0;
  while (next_line()) {
    const std::uint64_t line_start = offset - line.size() - 1;
    std::istringstream ss(line);
    std::string kw;
    ss >> kw;
    if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
    if (kw == "end_header") {
      ended = true;
      break;
    }
    if (kw == "format") {
      std::string fmt, ver;
      ss >> fmt >> ver;
      if (fmt == "ascii") throw DataError("ply: " + path.string() + ": ASCII PLY is not supported");
      if (fmt != "binary_little_endian") fail(path, line_start, "unsupported format '" + fmt + "'");
      have_format = true;
    } else if (kw == "element") {
      std::string name;
      long long n = -1;
      ss >> name >> n;
      if (!ss || n < 0) fail(path, line_start, "malformed element line");
      if (seen_vertex) {
        in_vertex = false;  // later elements are never read
        continue;
      }
      if (name != "vertex") fail(path, line_start, "element '" + name + "' precedes the vertex element");
      in_vertex = seen_vertex = true;
      count_ = std::size_t(n);
    } else if (kw == "property") {
      if (!in_vertex) {
        if (!seen_vertex) fail(path, line_start, "property outside an element");
        continue;
      }
      std::string type, name;
      ss >> type;
      if (type == "list") fail(path, line_start, "list properties on vertices are not supported");
      ss >> name;
      const int size = type_size(type);
      if (size == 0 || name.empty()) fail(path, line_start, "bad property '" + line + "'");
      const int at = int(stride);
      const auto expect = [&](bool ok) {
        if (!ok) fail(path, line_start, "property '" + name + "' has unexpected type " + type);
      };
      if (name == "x" || name == "y" || name == "z") {
        expect(is_float32(type));
        xyz_offset_[name[0] - 'x'] = at;
      } else if (name == "red" || name == "green" || name == "blue") {
        expect(is_uint8(type));
        rgb_offset_[name == "red" ? 0 : name == "green" ? 1 : 2] = at;
      } else if (name == "scan_id") {
        expect(is_uint16(type));
        scan_id_offset_ = at;
      } else if (name == "reflective") {
        expect(is_uint8(type));
        reflective_offset_ = at;
      }
      stride += std::size_t(size);
    } else {
      fail(path, line_start, "unknown header keyword '" + kw + "'");
    }
  }
  if (!ended) fail(path, offset, "header has no end_header");
  if (!have_format) fail(path, offset, "header has no format line");
  if (!seen_vertex) fail(path, offset, "no vertex element");
  for (int i = 0; i < 3; ++i) {
    if (xyz_offset_[i] < 0) fail(path, offset, "vertex lacks x/y/z");
    if (rgb_offset_[i] < 0) fail(path, offset, "vertex lacks red/green/blue");
  }
  stride_ = stride;
  data_offset_ = offset;

  const auto file_size = std::uint64_t(fs::file_size(path));
  if (file_size < data_offset_ + std::uint64_t(count_) * stride_)
    fail(path, file_size, "truncated vertex data (need " + std::to_string(data_offset_ + count_ * stride_) + " bytes)");
}

std::size_t PlyReader::read(PointCloud& out, std::size_t max_points) {
  const std::size_t n = std::min(max_points, remaining());
  if (n == 0) return 0;
  const Eigen::Index n0 = out.size();
  const Eigen::Index total = n0 + Eigen::Index(n);
  out.positions.conservativeResize(3, total);
  out.colors.conservativeResize(3, total);
  out.scan_id.resize(std::size_t(total), 0);
  out.point_index.resize(std::size_t(total));
  if (reflective_offset_ >= 0 || !out.reflective.empty()) out.reflective.resize(std::size_t(total), 0);
  return read_into(out, n0, n);
}

std::size_t PlyReader::read_into(PointCloud& out, Eigen::Index at, std::size_t max_points) {
  const std::size_t n = std::min(max_points, remaining());
  if (n == 0) return 0;
  if (at < 0 || at + Eigen::Index(n) > out.size()) throw ContractError("ply: destination too small");
  std::vector<char> buf(n * stride_);
  in_.read(buf.data(), std::streamsize(buf.size()));
  if (std::size_t(in_.gcount()) != buf.size())
    fail(path_, data_offset_ + consumed_ * stride_ + std::uint64_t(in_.gcount()), "unexpected end of vertex data");

  const Eigen::Index n0 = at;
  const auto load = [](const char* p, auto& v) {
    std::memcpy(&v, p, sizeof v);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const char* rec = buf.data() + i * stride_;
    const Eigen::Index j = n0 + Eigen::Index(i);
    for (int k = 0; k < 3; ++k) {
      std::uint32_t bits;
      load(rec + xyz_offset_[k], bits);
      out.positions(k, j) = std::bit_cast<float>(bits);
      out.colors(k, j) = std::uint8_t(rec[rgb_offset_[k]]);
    }
    if (scan_id_offset_ >= 0) {
      std::uint16_t s;
      load(rec + scan_id_offset_, s);
      out.scan_id[std::size_t(j)] = s;
    }
    if (reflective_offset_ >= 0) out.reflective[std::size_t(j)] = std::uint8_t(rec[reflective_offset_]);
    out.point_index[std::size_t(j)] = next_index_++;
  }
  consumed_ += n;
  return n;
}

PointCloud read_ply(const fs::path& path, std::uint16_t default_scan_id) {
  PlyReader reader(path);
  PointCloud cloud;
  cloud.resize(Eigen::Index(reader.vertex_count()));
  if (reader.has_reflective()) cloud.reflective.assign(reader.vertex_count(), 0);
  constexpr std::size_t kChunk = 1 << 16;
  Eigen::Index at = 0;
  while (const std::size_t got = reader.read_into(cloud, at, kChunk)) at += Eigen::Index(got);
  if (!reader.has_scan_id()) std::fill(cloud.scan_id.begin(), cloud.scan_id.end(), default_scan_id);
  if (!cloud.positions.allFinite()) throw DataError("ply: " + path.string() + ": non-finite vertex position");
  return cloud;
}

void write_ply(const fs::path& path, const PointCloud& cloud) {
  validate(cloud);
  const bool refl = !cloud.reflective.empty();
  std::string header = "ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(cloud.size()) +
                       "\nproperty float x\nproperty float y\nproperty float z\n"
                       "property uchar red\nproperty uchar green\nproperty uchar blue\n"
                       "property ushort scan_id\n";
  if (refl) header += "property uchar reflective\n";
  header += "end_header\n";
  const std::size_t stride = 12 + 3 + 2 + (refl ? 1 : 0);
  std::string bytes = header;
  bytes.resize(header.size() + stride * std::size_t(cloud.size()));
  char* dst = bytes.data() + header.size();
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(cloud.positions(k, i));
      std::memcpy(dst + 4 * k, &bits, 4);
    }
    for (int k = 0; k < 3; ++k) dst[12 + k] = char(cloud.colors(k, i));
    const std::uint16_t s = cloud.scan_id[std::size_t(i)];
    std::memcpy(dst + 15, &s, 2);
    if (refl) dst[17] = char(cloud.reflective[std::size_t(i)]);
    dst += stride;
  }
  write_file_atomically(path, bytes);
}

}  // namespace wfov
