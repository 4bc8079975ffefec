#include <png.h>

#include <atomic>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <sstream>
#include <unistd.h>

#include "wfov/dataset_io.hpp"

namespace wfov {

void write_atomically(const fs::path& path, const std::function<void(const fs::path&)>& write) {
  static std::atomic<unsigned> counter{0};
  fs::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  try {
    write(tmp);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw DataError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  } catch (...) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw;
  }
}

void write_file_atomically(const fs::path& path, const std::string& bytes) {
  write_atomically(path, [&](const fs::path& tmp) {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    out.close();
    if (!out) throw DataError("write failed: " + tmp.string());
  });
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- PFM ----

std::string encode_pfm(const Plane<float>& values, const Mask& valid) {
  if (valid.rows() != values.rows() || valid.cols() != values.cols()) throw ContractError("pfm: mask shape mismatch");
  std::string out = "Pf\n" + std::to_string(values.cols()) + " " + std::to_string(values.rows()) + "\n-1\n";
  const std::size_t header = out.size();
  out.resize(header + std::size_t(values.size()) * 4);
  char* dst = out.data() + header;
  for (Eigen::Index r = values.rows() - 1; r >= 0; --r)
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const float v = valid(r, c) ? values(r, c) : -1.0f;
      std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      std::memcpy(dst, &bits, 4);
      dst += 4;
    }
  return out;
}

void write_pfm(const fs::path& path, const Plane<float>& values, const Mask& valid) {
  write_file_atomically(path, encode_pfm(values, valid));
}

PfmImage decode_pfm(const std::string& bytes) {
  std::size_t pos = 0;
  const auto skip_space = [&] {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  };
  const auto token = [&](const char* what) {
    skip_space();
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw DataError(std::string("pfm: missing ") + what + " at byte " + std::to_string(start));
    return std::pair{bytes.substr(start, pos - start), start};
  };

  const auto [magic, magic_at] = token("magic");
  if (magic == "PF") throw DataError("pfm: three-channel PF files are not supported");
  if (magic != "Pf") throw DataError("pfm: bad magic at byte " + std::to_string(magic_at));
  long dims[2];
  for (int i = 0; i < 2; ++i) {
    const auto [tok, at] = token(i == 0 ? "width" : "height");
    char* end = nullptr;
    dims[i] = std::strtol(tok.c_str(), &end, 10);
    if (*end != '\0' || dims[i] <= 0) throw DataError("pfm: bad dimension at byte " + std::to_string(at));
  }
  const auto [scale_tok, scale_at] = token("scale");
  char* end = nullptr;
  const double scale = std::strtod(scale_tok.c_str(), &end);
  if (*end != '\0' || scale == 0 || !std::isfinite(scale))
    throw DataError("pfm: bad scale at byte " + std::to_string(scale_at));
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw DataError("pfm: truncated header at byte " + std::to_string(pos));
  ++pos;

  const long w = dims[0], h = dims[1];
  const std::size_t need = std::size_t(w) * std::size_t(h) * 4;
  if (bytes.size() - pos < need)
    throw DataError("pfm: truncated data at byte " + std::to_string(bytes.size()) + ", expected " +
                    std::to_string(pos + need));
  const bool little = scale < 0;

  PfmImage img{Plane<float>::Zero(h, w), Mask::Constant(h, w, false)};
  const char* src = bytes.data() + pos;
  for (long r = h - 1; r >= 0; --r)
    for (long c = 0; c < w; ++c) {
      std::uint32_t bits;
      std::memcpy(&bits, src, 4);
      src += 4;
      if ((std::endian::native == std::endian::little) != little) bits = __builtin_bswap32(bits);
      const float v = std::bit_cast<float>(bits);
      if (std::isfinite(v) && !(v < 0.0f)) {
        img.values(r, c) = v;
        img.valid(r, c) = true;
      }
    }
  return img;
}

PfmImage read_pfm(const fs::path& path) { return decode_pfm(read_file(path)); }

void write_disparity_pfm(const fs::path& path, const DisparityMap& disp) { write_pfm(path, disp.values, disp.valid); }

DisparityMap read_disparity_pfm(const fs::path& path, double baseline_m) {
  auto img = read_pfm(path);
  const int h = int(img.values.rows());
  return {std::move(img.values), std::move(img.valid), {h, baseline_m}};
}

void write_depth_pfm(const fs::path& path, const DepthMap& depth) {
  write_pfm(path, depth.values, depth.valid && (depth.values > 0.0f));
}

DepthMap read_depth_pfm(const fs::path& path, double baseline_m) {
  auto img = read_pfm(path);
  img.valid = img.valid && (img.values > 0.0f);
  img.values = img.valid.select(img.values, 0.0f);
  const int h = int(img.values.rows());
  return {std::move(img.values), std::move(img.valid), {h, baseline_m}};
}

// ---- PNG ----

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(png_structp, png_const_charp msg) { throw DataError(std::string("png: ") + msg); }
void png_warn(png_structp, png_const_charp) {}

// Rows of `bytes_per_row`, filled by `fill(row, dst)`.
void write_png_rows(const fs::path& path, int width, int height, int bit_depth, int color_type,
                    const std::function<void(int, png_bytep)>& fill) {
  write_atomically(path, [&](const fs::path& tmp) {
    FilePtr fp(std::fopen(tmp.c_str(), "wb"));
    if (!fp) throw DataError("cannot open " + tmp.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    png_infop info = png_create_info_struct(png);
    try {
      png_init_io(png, fp.get());
      png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), bit_depth, color_type, PNG_INTERLACE_NONE,
                   PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
      png_write_info(png, info);
      if (bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
      const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
      std::vector<png_byte> row(std::size_t(width) * std::size_t(channels) * std::size_t(bit_depth / 8));
      for (int r = 0; r < height; ++r) {
        fill(r, row.data());
        png_write_row(png, row.data());
      }
      png_write_end(png, nullptr);
    } catch (...) {
      png_destroy_write_struct(&png, &info);
      throw;
    }
    png_destroy_write_struct(&png, &info);
    if (std::fflush(fp.get()) != 0) throw DataError("write failed: " + tmp.string());
  });
}

struct PngPixels {
  PngInfo info;
  std::vector<std::uint16_t> samples;  // row-major, channels interleaved
};

PngPixels read_png_pixels(const fs::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw DataError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw DataError("png: " + path.string() + " is not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  PngPixels out;
  try {
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
    png_read_update_info(png, info);

    out.info.width = int(png_get_image_width(png, info));
    out.info.height = int(png_get_image_height(png, info));
    out.info.bit_depth = png_get_bit_depth(png, info);
    out.info.channels = png_get_channels(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<png_byte> row(rowbytes);
    const std::size_t per_row = std::size_t(out.info.width) * std::size_t(out.info.channels);
    out.samples.resize(per_row * std::size_t(out.info.height));
    for (int r = 0; r < out.info.height; ++r) {
      png_read_row(png, row.data(), nullptr);
      for (std::size_t i = 0; i < per_row; ++i) {
        std::uint16_t v;
        if (out.info.bit_depth == 16)
          std::memcpy(&v, row.data() + 2 * i, 2);
        else
          v = row[i];
        out.samples[std::size_t(r) * per_row + i] = v;
      }
    }
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace

PngInfo probe_png(const fs::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw DataError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw DataError("png: " + path.string() + " is not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  PngInfo out;
  try {
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    out.width = int(png_get_image_width(png, info));
    out.height = int(png_get_image_height(png, info));
    out.bit_depth = png_get_bit_depth(png, info);
    out.channels = png_get_channels(png, info);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

std::uint16_t depth_to_mm(float range_m, bool& clamped) {
  if (!(range_m > 0) || !std::isfinite(range_m)) return 0;
  const double mm = std::floor(double(range_m) * 1000.0 + 0.5);
  if (mm > 65535.0) {
    clamped = true;
    return 65535;
  }
  return std::uint16_t(std::max(mm, 1.0));
}

bool write_depth_png(const fs::path& path, const DepthMap& depth) {
  bool clamped = false;
  const int w = int(depth.values.cols()), h = int(depth.values.rows());
  write_png_rows(path, w, h, 16, PNG_COLOR_TYPE_GRAY, [&](int r, png_bytep dst) {
    for (int c = 0; c < w; ++c) {
      const std::uint16_t mm = depth.valid(r, c) ? depth_to_mm(depth.values(r, c), clamped) : 0;
      std::memcpy(dst + 2 * c, &mm, 2);
    }
  });
  return clamped;
}

DepthMap read_depth_png(const fs::path& path, double baseline_m) {
  const PngPixels px = read_png_pixels(path);
  if (px.info.channels != 1 || px.info.bit_depth != 16)
    throw DataError("depth png: " + path.string() + " is not 16-bit grayscale");
  const int w = px.info.width, h = px.info.height;
  DepthMap d{Plane<float>::Zero(h, w), Mask::Constant(h, w, false), {h, baseline_m}};
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const std::uint16_t mm = px.samples[std::size_t(r) * std::size_t(w) + std::size_t(c)];
      if (mm == 0) continue;
      d.values(r, c) = float(double(mm) / 1000.0);
      d.valid(r, c) = true;
    }
  return d;
}

void write_rgb_png(const fs::path& path, const RgbImage& rgb) {
  const int w = int(rgb.cols()), h = int(rgb.rows());
  write_png_rows(path, w, h, 8, PNG_COLOR_TYPE_RGB, [&](int r, png_bytep dst) {
    for (int c = 0; c < w; ++c)
      for (int ch = 0; ch < 3; ++ch) dst[3 * c + ch] = rgb.channel[ch](r, c);
  });
}

RgbImage read_rgb_png(const fs::path& path) {
  const PngPixels px = read_png_pixels(path);
  if (px.info.bit_depth != 8) throw DataError("rgb png: " + path.string() + " is not 8-bit");
  const int w = px.info.width, h = px.info.height, nc = px.info.channels;
  RgbImage img(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int ch = 0; ch < 3; ++ch) {
        const std::size_t at = (std::size_t(r) * std::size_t(w) + std::size_t(c)) * std::size_t(nc);
        img.channel[ch](r, c) = std::uint8_t(px.samples[at + (nc == 1 ? 0 : std::size_t(ch))]);
      }
  return img;
}

void write_mask_png(const fs::path& path, const Mask& mask) {
  const int w = int(mask.cols()), h = int(mask.rows());
  write_png_rows(path, w, h, 8, PNG_COLOR_TYPE_GRAY, [&](int r, png_bytep dst) {
    for (int c = 0; c < w; ++c) dst[c] = mask(r, c) ? 255 : 0;
  });
}

Mask read_mask_png(const fs::path& path) {
  const PngPixels px = read_png_pixels(path);
  const int w = px.info.width, h = px.info.height, nc = px.info.channels;
  Mask m(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) m(r, c) = px.samples[(std::size_t(r) * std::size_t(w) + std::size_t(c)) * std::size_t(nc)] != 0;
  return m;
}

}  // namespace wfov
