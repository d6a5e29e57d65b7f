#pragma once

#include <png.h>

#include <array>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "curvrec/error.hpp"
#include "curvrec/pipeline.hpp"
#include "curvrec/raster.hpp"

namespace curvrec::io {

namespace fs = std::filesystem;
using TextChunks = std::map<std::string, std::string>;

enum class Channel { luma, green };

/// Decoded raster with samples scaled to [0, 1] per channel.
struct DecodedImage {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 gray, 2 gray+alpha, 3 rgb, 4 rgba
  int bit_depth = 8;
  std::vector<double> samples;
  TextChunks text;
};

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::uint64_t parse_hash_hex(const std::string& s) {
  if (s.empty() || s.size() > 16) throw InvalidInput("malformed config hash '" + s + "'");
  std::uint64_t v = 0;
  for (char c : s) {
    const int d = std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
                  : (c >= 'a' && c <= 'f')                    ? c - 'a' + 10
                                                              : -1;
    if (d < 0) throw InvalidInput("malformed config hash '" + s + "'");
    v = v * 16 + static_cast<std::uint64_t>(d);
  }
  return v;
}

inline std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// PNG

namespace detail {

// libpng reports errors by longjmp to the setjmp point of the calling
// function. Everything that function mutates after setjmp lives in a heap
// object reached through a pointer fixed before the jump target.
struct PngState {
  const unsigned char* data = nullptr;
  std::size_t size = 0;
  std::size_t pos = 0;
  std::vector<unsigned char>* sink = nullptr;
  char message[256] = "unknown error";
};

inline void png_fail(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngState*>(png_get_error_ptr(png));
  std::snprintf(st->message, sizeof st->message, "%s", msg);
  png_longjmp(png, 1);
}
inline void png_warn(png_structp, png_const_charp) {}

inline void png_read_mem(png_structp png, png_bytep out, png_size_t n) {
  auto* st = static_cast<PngState*>(png_get_io_ptr(png));
  if (st->pos + n > st->size) png_error(png, "truncated file");
  std::memcpy(out, st->data + st->pos, n);
  st->pos += n;
}

inline void png_write_mem(png_structp png, png_bytep in, png_size_t n) {
  auto* st = static_cast<PngState*>(png_get_io_ptr(png));
  st->sink->insert(st->sink->end(), in, in + n);
}
inline void png_flush_mem(png_structp) {}

struct PngReadJob {
  PngState state;
  DecodedImage img;
  std::vector<unsigned char> raw;
  std::vector<png_bytep> rows;
};

inline bool run_png_read(png_structp png, png_infop info, PngReadJob* job) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_read_fn(png, &job->state, png_read_mem);
  png_read_info(png, info);
  png_set_expand(png);  // palette -> rgb, low-bit gray -> 8 bit, tRNS -> alpha
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  job->img.width = static_cast<int>(png_get_image_width(png, info));
  job->img.height = static_cast<int>(png_get_image_height(png, info));
  job->img.channels = png_get_channels(png, info);
  job->img.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  job->raw.resize(rowbytes * static_cast<std::size_t>(job->img.height));
  job->rows.resize(static_cast<std::size_t>(job->img.height));
  for (std::size_t r = 0; r < job->rows.size(); ++r) job->rows[r] = job->raw.data() + rowbytes * r;
  png_read_image(png, job->rows.data());
  png_read_end(png, info);
  png_textp text = nullptr;
  int n_text = 0;
  png_get_text(png, info, &text, &n_text);
  for (int k = 0; k < n_text; ++k) job->img.text[text[k].key] = text[k].text ? text[k].text : "";
  return true;
}

struct PngWriteJob {
  PngState state;
  std::vector<unsigned char> out;
  std::vector<png_text> chunks;
};

inline bool run_png_write(png_structp png, png_infop info, PngWriteJob* job, int width, int height, int channels,
                          const unsigned char* samples) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_write_fn(png, &job->state, png_write_mem, png_flush_mem);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (!job->chunks.empty()) png_set_text(png, info, job->chunks.data(), static_cast<int>(job->chunks.size()));
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  for (int r = 0; r < height; ++r)
    png_write_row(png, const_cast<png_bytep>(samples + stride * static_cast<std::size_t>(r)));
  png_write_end(png, info);
  return true;
}

}  // namespace detail

inline DecodedImage decode_png(const std::vector<unsigned char>& bytes, const std::string& name) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8)) throw InvalidInput("'" + name + "' is not a PNG file");
  auto job = std::make_unique<detail::PngReadJob>();
  job->state.data = bytes.data();
  job->state.size = bytes.size();
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &job->state, detail::png_fail, detail::png_warn);
  if (!png) throw Error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  const bool ok = info && detail::run_png_read(png, info, job.get());
  png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  if (!ok) throw InvalidInput("'" + name + "': PNG: " + job->state.message);

  DecodedImage img = std::move(job->img);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height * img.channels;
  img.samples.resize(n);
  const auto& raw = job->raw;
  if (img.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) img.samples[i] = ((raw[2 * i] << 8) | raw[2 * i + 1]) / 65535.0;
  } else {
    for (std::size_t i = 0; i < n; ++i) img.samples[i] = raw[i] / 255.0;
  }
  return img;
}

/// Encodes 8-bit gray (channels = 1) or RGB (channels = 3) samples.
inline std::vector<unsigned char> encode_png(int width, int height, int channels,
                                             const std::vector<unsigned char>& samples, const TextChunks& text = {}) {
  if (channels != 1 && channels != 3) throw InvalidParameter("encode_png: 1 or 3 channels");
  if (samples.size() != static_cast<std::size_t>(width) * height * channels)
    throw InvalidInput("encode_png: sample count does not match the image size");
  auto job = std::make_unique<detail::PngWriteJob>();
  job->state.sink = &job->out;
  std::vector<std::string> keys, values;
  for (const auto& [k, v] : text) keys.push_back(k), values.push_back(v);
  job->chunks.resize(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    job->chunks[i].compression = PNG_TEXT_COMPRESSION_NONE;
    job->chunks[i].key = keys[i].data();
    job->chunks[i].text = values[i].data();
    job->chunks[i].text_length = values[i].size();
  }
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &job->state, detail::png_fail, detail::png_warn);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  const bool ok = info && detail::run_png_write(png, info, job.get(), width, height, channels, samples.data());
  png_destroy_write_struct(&png, info ? &info : nullptr);
  if (!ok) throw Error(std::string("PNG encode failed: ") + job->state.message);
  return std::move(job->out);
}

// ---------------------------------------------------------------------------
// PGM (P2 ascii / P5 binary, 8 or 16 bit)

inline DecodedImage decode_pgm(const std::vector<unsigned char>& bytes, const std::string& name) {
  std::size_t pos = 0;
  auto token = [&]() -> std::string {
    for (;;) {
      while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
    return t;
  };
  auto number = [&](const char* what) {
    const std::string t = token();
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos)
      throw InvalidInput("'" + name + "': bad PGM " + what);
    return std::stol(t);
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P2") throw InvalidInput("'" + name + "' is not a PGM file");
  DecodedImage img;
  img.channels = 1;
  img.width = static_cast<int>(number("width"));
  img.height = static_cast<int>(number("height"));
  const long maxval = number("maxval");
  if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 65535)
    throw InvalidInput("'" + name + "': unsupported PGM header");
  img.bit_depth = maxval > 255 ? 16 : 8;
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  img.samples.resize(n);
  if (magic == "P2") {
    for (std::size_t i = 0; i < n; ++i) img.samples[i] = static_cast<double>(number("sample")) / maxval;
    return img;
  }
  ++pos;  // single whitespace after maxval
  const std::size_t bps = maxval > 255 ? 2 : 1;
  if (bytes.size() < pos + n * bps) throw InvalidInput("'" + name + "': truncated PGM data");
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned v = bps == 2 ? (bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1] : bytes[pos + i];
    img.samples[i] = static_cast<double>(v) / maxval;
  }
  return img;
}

inline DecodedImage read_decoded(const fs::path& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() >= 8 && !png_sig_cmp(bytes.data(), 0, 8)) return decode_png(bytes, path.string());
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '2'))
    return decode_pgm(bytes, path.string());
  throw InvalidInput("'" + path.string() + "': unsupported image format (expected PNG or PGM)");
}

/// Grayscale intensities in [0, 1]. Colour inputs use luma
/// 0.299 R + 0.587 G + 0.114 B, or the green channel alone.
inline GrayImage to_gray(const DecodedImage& d, Channel channel = Channel::luma) {
  GrayImage out(d.width, d.height);
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double* px = d.samples.data() + i * d.channels;
    if (d.channels <= 2) {
      out.values()[i] = px[0];
    } else if (channel == Channel::green) {
      out.values()[i] = px[1];
    } else {
      out.values()[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
  }
  return out;
}

inline GrayImage read_image(const fs::path& path, Channel channel = Channel::luma) {
  return to_gray(read_decoded(path), channel);
}

/// Nonzero samples (any colour channel) are structure.
inline BinaryMap read_mask(const fs::path& path) {
  const auto d = read_decoded(path);
  BinaryMap out(d.width, d.height, 0);
  for (std::size_t i = 0; i < out.size(); ++i)
    for (int c = 0; c < std::min(d.channels, 3); ++c)
      if (d.samples[i * d.channels + c] > 0) out.values()[i] = 1;
  return out;
}

inline unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline void write_gray_png(const fs::path& path, const GrayImage& img, const TextChunks& text = {}) {
  std::vector<unsigned char> s(img.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = to_byte(img.values()[i]);
  write_bytes(path, encode_png(img.width(), img.height(), 1, s, text));
}

/// Min-max stretched to 0..255 for inspection.
template <typename T>
void write_normalized_png(const fs::path& path, const Raster<T>& r, const TextChunks& text = {}) {
  const auto range = value_range(r);
  const double span = range.hi - range.lo;
  GrayImage g(r.width(), r.height(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    g.values()[i] = span > 0 ? (static_cast<double>(r.values()[i]) - range.lo) / span : 0.0;
  write_gray_png(path, g, text);
}

inline void write_mask_png(const fs::path& path, const BinaryMap& mask, const TextChunks& text = {}) {
  std::vector<unsigned char> s(mask.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = mask.values()[i] ? 255 : 0;
  write_bytes(path, encode_png(mask.width(), mask.height(), 1, s, text));
}

inline void write_pgm(const fs::path& path, const GrayImage& img) {
  std::ostringstream head;
  head << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  const std::string h = head.str();
  std::vector<unsigned char> bytes(h.begin(), h.end());
  for (double v : img.values()) bytes.push_back(to_byte(v));
  write_bytes(path, bytes);
}

// ---------------------------------------------------------------------------
// Little-endian binary helpers

namespace detail {

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void tag(const char (&t)[5]) { bytes.insert(bytes.end(), t, t + 4); }
  std::vector<unsigned char> bytes;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& b, std::string name) : bytes_(b), name_(std::move(name)) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  bool tag(const char (&t)[5]) {
    need(4);
    const bool ok = std::memcmp(bytes_.data() + pos_, t, 4) == 0;
    pos_ += 4;
    return ok;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw InvalidInput("'" + name_ + "': truncated file");
  }

 private:
  const std::vector<unsigned char>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// CFM1 float rasters: "CFM1", u32 width, u32 height, u32 reserved, then
// width*height little-endian float32 values in row-major order. The reserved
// word carries the low 32 bits of the producing configuration's hash.

struct FloatRasterFile {
  Raster<double> raster;
  std::uint32_t reserved = 0;
};

inline std::vector<unsigned char> encode_cfm1(const Raster<double>& r, std::uint32_t reserved) {
  detail::Writer w;
  w.tag("CFM1");
  w.u32(static_cast<std::uint32_t>(r.width()));
  w.u32(static_cast<std::uint32_t>(r.height()));
  w.u32(reserved);
  for (double v : r.values()) w.f32(static_cast<float>(v));
  return std::move(w.bytes);
}

inline FloatRasterFile decode_cfm1(const std::vector<unsigned char>& bytes, const std::string& name) {
  detail::Reader rd(bytes, name);
  if (!rd.tag("CFM1")) throw InvalidInput("'" + name + "' is not a CFM1 raster");
  const auto w = rd.u32(), h = rd.u32();
  FloatRasterFile out;
  out.reserved = rd.u32();
  if (w > 1u << 16 || h > 1u << 16) throw InvalidInput("'" + name + "': implausible raster size");
  if (rd.remaining() != static_cast<std::size_t>(w) * h * 4) throw InvalidInput("'" + name + "': size mismatch");
  out.raster = Raster<double>(static_cast<int>(w), static_cast<int>(h));
  for (auto& v : out.raster.values()) v = rd.f32();
  return out;
}

inline void write_cfm1(const fs::path& path, const Raster<double>& r, std::uint64_t config_hash) {
  write_bytes(path, encode_cfm1(r, static_cast<std::uint32_t>(config_hash)));
}

inline FloatRasterFile read_cfm1(const fs::path& path) { return decode_cfm1(read_bytes(path), path.string()); }

// ---------------------------------------------------------------------------
// CRSV model: "CRSV", u32 version, u32 N, f64 C, f64[N] w, f64[N] mean,
// f64[N] std, u32 side, u32 tau, u32 n_theta, f64[n_theta] theta,
// f64 rho, u32 margin mode, u64 config hash.

inline constexpr std::uint32_t kModelVersion = 1;

struct ModelFile {
  TrainedModel model;
  std::uint64_t config_hash = 0;
};

inline std::vector<unsigned char> encode_model(const TrainedModel& m, std::uint64_t config_hash) {
  const std::size_t n = m.ranking.dimension();
  const auto std_ = m.ranking.standardizer.empty() ? Standardizer::identity(n) : m.ranking.standardizer;
  detail::Writer w;
  w.tag("CRSV");
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(n));
  w.f64(m.ranking.C);
  for (double v : m.ranking.w) w.f64(v);
  for (double v : std_.mean) w.f64(v);
  for (double v : std_.stddev) w.f64(v);
  w.u32(static_cast<std::uint32_t>(m.patch_side));
  w.u32(static_cast<std::uint32_t>(m.thickness));
  w.u32(static_cast<std::uint32_t>(m.thetas.size()));
  for (double t : m.thetas) w.f64(t);
  w.f64(m.rho);
  w.u32(m.ranking.margin == MarginMode::unit ? 1u : 0u);
  w.u64(config_hash);
  return std::move(w.bytes);
}

inline ModelFile decode_model(const std::vector<unsigned char>& bytes, const std::string& name) {
  detail::Reader rd(bytes, name);
  if (!rd.tag("CRSV")) throw InvalidInput("'" + name + "' is not a CRSV model");
  if (const auto v = rd.u32(); v != kModelVersion)
    throw InvalidInput("'" + name + "': unsupported model version " + std::to_string(v));
  const std::size_t n = rd.u32();
  rd.need(n * 24);
  ModelFile f;
  auto& m = f.model;
  m.ranking.C = rd.f64();
  m.ranking.w.resize(n);
  m.ranking.standardizer = Standardizer::identity(n);
  for (auto& v : m.ranking.w) v = rd.f64();
  for (auto& v : m.ranking.standardizer.mean) v = rd.f64();
  for (auto& v : m.ranking.standardizer.stddev) v = rd.f64();
  m.patch_side = static_cast<int>(rd.u32());
  m.thickness = static_cast<int>(rd.u32());
  const std::size_t nt = rd.u32();
  rd.need(nt * 8);
  m.thetas.resize(nt);
  for (auto& t : m.thetas) t = rd.f64();
  m.rho = rd.f64();
  m.ranking.margin = rd.u32() == 1 ? MarginMode::unit : MarginMode::loss_scaled;
  f.config_hash = rd.u64();
  if (rd.remaining() != 0) throw InvalidInput("'" + name + "': trailing bytes after model");
  if (static_cast<std::size_t>(m.patch_side) * m.thickness != n)
    throw InvalidInput("'" + name + "': weight dimension does not match patch side and thickness");
  return f;
}

inline void write_model(const fs::path& path, const TrainedModel& m, std::uint64_t config_hash) {
  write_bytes(path, encode_model(m, config_hash));
}

inline ModelFile read_model(const fs::path& path) { return decode_model(read_bytes(path), path.string()); }

inline nlohmann::ordered_json model_stats_json(const TrainedModel& m, std::uint64_t config_hash) {
  const auto& s = m.ranking.stats;
  nlohmann::ordered_json j;
  j["config_hash"] = hash_hex(config_hash);
  j["dimension"] = m.ranking.dimension();
  j["C"] = m.ranking.C;
  j["margin"] = to_string(m.ranking.margin);
  j["iterations"] = s.iterations;
  j["converged"] = s.converged;
  j["slack"] = s.slack;
  j["cached_slack"] = s.cached_slack;
  j["objective"] = s.objective;
  j["lower_bound"] = s.lower_bound;
  j["pair_count"] = s.pair_count;
  j["constraint_count"] = s.constraint_count;
  j["rho"] = m.rho;
  if (!m.calibration.grid.empty()) j["rho_calibration_f1"] = m.calibration.mean_f1;
  return j;
}

// ---------------------------------------------------------------------------
// Reconstruction JSON and overlay

inline nlohmann::ordered_json reconstruction_json(const ImageReconstruction& r, std::uint64_t config_hash,
                                                  const std::string& image_name) {
  nlohmann::ordered_json j;
  j["config_hash"] = hash_hex(config_hash);
  j["image"] = image_name;
  j["width"] = r.mask.width();
  j["height"] = r.mask.height();
  j["sweeps"] = r.reconstruction.sweeps;
  if (!r.structured.warning.empty()) j["warning"] = r.structured.warning;
  j["paths"] = nlohmann::ordered_json::array();
  for (const auto& p : r.reconstruction.paths) {
    nlohmann::ordered_json jp;
    jp["iteration"] = p.iteration;
    jp["weighted_length"] = p.weighted_length;
    jp["vertex_count"] = p.vertices.size();
    jp["new_vertex_count"] = p.new_vertex_count;
    auto pix = nlohmann::ordered_json::array();
    for (const auto& x : r.path_pixels(p)) pix.push_back({x.row, x.col});
    jp["pixels"] = std::move(pix);
    j["paths"].push_back(std::move(jp));
  }
  return j;
}

inline void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  const std::string s = j.dump(1) + "\n";
  write_bytes(path, std::vector<unsigned char>(s.begin(), s.end()));
}

inline nlohmann::json read_json(const fs::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("'" + path.string() + "': " + e.what());
  }
}

/// Prediction mask rasterized from a reconstruction JSON document.
inline BinaryMap mask_from_reconstruction(const nlohmann::json& j, const std::string& name) {
  try {
    BinaryMap mask(j.at("width").get<int>(), j.at("height").get<int>(), 0);
    for (const auto& p : j.at("paths"))
      for (const auto& px : p.at("pixels")) {
        const int r = px.at(0).get<int>(), c = px.at(1).get<int>();
        if (!mask.contains(r, c)) throw InvalidInput("'" + name + "': path pixel outside the image");
        mask(r, c) = 1;
      }
    return mask;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("'" + name + "': " + e.what());
  }
}

inline constexpr std::array<std::array<unsigned char, 3>, 8> kPathColors{{
    {230, 25, 75},
    {60, 180, 75},
    {0, 130, 200},
    {245, 130, 48},
    {145, 30, 180},
    {70, 240, 240},
    {240, 50, 230},
    {255, 225, 25},
}};

/// The input image in gray with each path drawn in its iteration's colour;
/// later iterations do not overwrite earlier ones.
inline std::vector<unsigned char> overlay_rgb(const GrayImage& image, const ImageReconstruction& r) {
  std::vector<unsigned char> rgb(image.size() * 3);
  for (std::size_t i = 0; i < image.size(); ++i) rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = to_byte(image.values()[i]);
  std::vector<std::uint8_t> painted(image.size(), 0);
  for (const auto& p : r.reconstruction.paths) {
    const auto& col = kPathColors[static_cast<std::size_t>(p.iteration - 1) % kPathColors.size()];
    for (const auto& x : r.path_pixels(p)) {
      const std::size_t i = image.index(x.row, x.col);
      if (painted[i]) continue;
      painted[i] = 1;
      std::copy(col.begin(), col.end(), rgb.begin() + static_cast<std::ptrdiff_t>(3 * i));
    }
  }
  return rgb;
}

inline void write_overlay_png(const fs::path& path, const GrayImage& image, const ImageReconstruction& r,
                              const TextChunks& text = {}) {
  require_same_shape(image, r.mask, "write_overlay_png");
  write_bytes(path, encode_png(image.width(), image.height(), 3, overlay_rgb(image, r), text));
}

}  // namespace curvrec::io
