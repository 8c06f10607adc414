#include "odp/io.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bytes.hpp"
#include "odp/error.hpp"

namespace odp {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open for reading");
  std::ostringstream os;
  os << in.rdbuf();
  if (!in.good() && !in.eof()) throw DataError(path + ": read failure");
  return os.str();
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(tmp + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) throw DataError(tmp + ": write failure");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError(path + ": rename failed: " + ec.message());
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                  nullptr))
    throw DataError("sha256: digest failure");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  return sha256_hex(read_file(path));
}

// --- PGM ---------------------------------------------------------------------

namespace {

// Skips whitespace and '#' comments between PGM header tokens.
int next_pgm_int(const std::string& data, std::size_t& pos,
                 const std::string& path) {
  while (pos < data.size()) {
    const char ch = data[pos];
    if (ch == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(ch))) {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= data.size() || !std::isdigit(static_cast<unsigned char>(data[pos])))
    throw DataError(path + ": malformed PGM header at byte offset " +
                    std::to_string(pos));
  int value = 0;
  while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) {
    value = value * 10 + (data[pos] - '0');
    ++pos;
  }
  return value;
}

}  // namespace

ImageGrid read_pgm(const std::string& path) {
  const std::string data = read_file(path);
  if (data.size() < 2 || data[0] != 'P' || data[1] != '5')
    throw DataError(path + ": not a binary PGM (P5) file");
  std::size_t pos = 2;
  const int width = next_pgm_int(data, pos, path);
  const int height = next_pgm_int(data, pos, path);
  const int maxval = next_pgm_int(data, pos, path);
  if (width <= 0 || height <= 0)
    throw DataError(path + ": non-positive PGM dimensions");
  if (maxval <= 0 || maxval > 255)
    throw DataError(path + ": only 8-bit PGM (maxval <= 255) is supported");
  ++pos;  // single whitespace after maxval
  const std::size_t need = static_cast<std::size_t>(width) * height;
  if (pos + need > data.size())
    throw DataError(path + ": truncated at byte offset " +
                    std::to_string(data.size()) + " while reading pixels");
  ImageGrid img(width, height);
  const double inv = 1.0 / maxval;
  for (std::size_t i = 0; i < need; ++i)
    img.values[i] = static_cast<unsigned char>(data[pos + i]) * inv;
  return img;
}

void write_pgm(const std::string& path, const ImageGrid& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  out.reserve(out.size() + image.values.size());
  for (double v : image.values) {
    const double c = std::clamp(v, 0.0, 1.0);
    out.push_back(static_cast<char>(
        static_cast<unsigned char>(std::lround(c * 255.0))));
  }
  write_file_atomic(path, out);
}

// --- PNG ---------------------------------------------------------------------

ImageGrid read_png(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw DataError(path + ": cannot open for reading");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw DataError(path + ": libpng initialization failed");
  }
  std::vector<std::vector<png_byte>> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw DataError(path + ": malformed PNG");
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  // Normalize to 8-bit RGB or gray.
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE)
    png_set_palette_to_rgb(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY &&
      png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  rows.assign(static_cast<std::size_t>(height),
              std::vector<png_byte>(png_get_rowbytes(png, info)));
  std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(height));
  for (int r = 0; r < height; ++r) row_ptrs[static_cast<std::size_t>(r)] = rows[static_cast<std::size_t>(r)].data();
  png_read_image(png, row_ptrs.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  if (channels != 1 && channels != 3)
    throw DataError(path + ": unsupported PNG channel count " +
                    std::to_string(channels));
  ImageGrid img(width, height);
  constexpr double inv = 1.0 / 255.0;
  for (int r = 0; r < height; ++r) {
    const png_byte* row = rows[static_cast<std::size_t>(r)].data();
    for (int c = 0; c < width; ++c) {
      double v;
      if (channels == 1) {
        v = row[c] * inv;
      } else {
        v = (0.299 * row[3 * c] + 0.587 * row[3 * c + 1] +
             0.114 * row[3 * c + 2]) *
            inv;
      }
      img.at(r, c) = v;
    }
  }
  return img;
}

ImageGrid read_image(const std::string& path) {
  const std::string head = read_file(path).substr(0, 8);
  static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (head.size() >= 8 &&
      std::equal(png_sig, png_sig + 8,
                 reinterpret_cast<const unsigned char*>(head.data())))
    return read_png(path);
  if (head.size() >= 2 && head[0] == 'P' && head[1] == '5')
    return read_pgm(path);
  throw DataError(path + ": unrecognized image format (expected PGM P5 or PNG)");
}

// --- ODPS ---------------------------------------------------------------------

namespace {

std::string encode_spectrum(int width, int height,
                            const std::vector<double>& values) {
  std::string out = "ODPS";
  bytes::put_u32(out, 1);
  bytes::put_u32(out, static_cast<std::uint32_t>(height));
  bytes::put_u32(out, static_cast<std::uint32_t>(width));
  for (double v : values) bytes::put_f32(out, static_cast<float>(v));
  return out;
}

void render_pgm(const std::string& path, int width, int height,
                const std::vector<double>& values) {
  double lo = values.empty() ? 0.0 : values[0];
  double hi = lo;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  ImageGrid img(width, height);
  for (std::size_t i = 0; i < values.size(); ++i)
    img.values[i] = (values[i] - lo) / span;
  write_pgm(path, img);
}

}  // namespace

void save_spectrum(const std::string& path, const SpectrumMap& s) {
  write_file_atomic(path, encode_spectrum(s.width, s.height, s.values));
}

void save_spectrum(const std::string& path, const ArtifactMap& s) {
  write_file_atomic(path, encode_spectrum(s.width, s.height, s.values));
}

SpectrumMap load_spectrum(const std::string& path) {
  bytes::Reader r(read_file(path), path);
  r.magic("ODPS");
  const std::uint32_t version = r.u32("version");
  if (version != 1)
    throw DataError(path + ": unsupported ODPS version " +
                    std::to_string(version));
  const std::uint32_t height = r.u32("height");
  const std::uint32_t width = r.u32("width");
  SpectrumMap s(static_cast<int>(width), static_cast<int>(height));
  for (std::size_t i = 0; i < s.values.size(); ++i)
    s.values[i] = r.f32("spectrum values");
  if (!r.at_end())
    throw DataError(path + ": trailing bytes after spectrum payload");
  return s;
}

void write_spectrum_pgm(const std::string& path, const SpectrumMap& s) {
  render_pgm(path, s.width, s.height, s.values);
}

void write_spectrum_pgm(const std::string& path, const ArtifactMap& s) {
  render_pgm(path, s.width, s.height, s.values);
}

// --- ODPD ---------------------------------------------------------------------

void save_dataset(const std::string& path, const Dataset& ds) {
  std::string out = "ODPD";
  bytes::put_u32(out, 1);
  bytes::put_u32(out, static_cast<std::uint32_t>(ds.size()));
  bytes::put_u32(out, static_cast<std::uint32_t>(ds.dim));
  bytes::put_u32(out, static_cast<std::uint32_t>(ds.n_generators));
  bytes::put_u32(out, static_cast<std::uint32_t>(ds.n_semantic));
  bytes::put_u32(out, ds.flags);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const float* row = ds.row(i);
    for (int d = 0; d < ds.dim; ++d) bytes::put_f32(out, row[d]);
    bytes::put_u8(out, ds.y[i]);
    bytes::put_u16(out, ds.g[i]);
    bytes::put_u16(out, ds.c[i]);
  }
  write_file_atomic(path, out);
}

Dataset load_dataset(const std::string& path) {
  bytes::Reader r(read_file(path), path);
  r.magic("ODPD");
  const std::uint32_t version = r.u32("version");
  if (version != 1)
    throw DataError(path + ": unsupported ODPD version " +
                    std::to_string(version));
  const std::uint32_t n = r.u32("sample count");
  Dataset ds;
  ds.dim = static_cast<int>(r.u32("feature dim"));
  ds.n_generators = static_cast<int>(r.u32("generator count"));
  ds.n_semantic = static_cast<int>(r.u32("semantic count"));
  ds.flags = r.u32("flags");
  if (ds.dim <= 0) throw DataError(path + ": non-positive feature dim");
  ds.features.resize(static_cast<std::size_t>(n) * ds.dim);
  ds.y.resize(n);
  ds.g.resize(n);
  ds.c.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    float* row = &ds.features[static_cast<std::size_t>(i) * ds.dim];
    for (int d = 0; d < ds.dim; ++d) row[d] = r.f32("features");
    ds.y[i] = r.u8("label y");
    ds.g[i] = r.u16("generator id");
    ds.c[i] = r.u16("semantic id");
  }
  if (!r.at_end())
    throw DataError(path + ": trailing bytes after sample payload");
  return ds;
}

void save_subspaces(const std::string& path, const GroundTruthSubspaces& gt) {
  auto dump = [](const std::vector<std::uint32_t>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s.push_back(',');
      s += std::to_string(v[i]);
    }
    s.push_back(']');
    return s;
  };
  write_file_atomic(path, "{\"U\":" + dump(gt.u) + ",\"S\":" + dump(gt.s) +
                              ",\"N\":" + dump(gt.n) + "}\n");
}

GroundTruthSubspaces load_subspaces(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": invalid subspace JSON: " + e.what());
  }
  GroundTruthSubspaces gt;
  try {
    gt.u = j.at("U").get<std::vector<std::uint32_t>>();
    gt.s = j.at("S").get<std::vector<std::uint32_t>>();
    gt.n = j.at("N").get<std::vector<std::uint32_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": subspace JSON must carry U, S, N arrays: " +
                    e.what());
  }
  return gt;
}

// --- reports -------------------------------------------------------------------

namespace {
std::string fmt17(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}
}  // namespace

std::string additivity_csv(const std::vector<AdditivityReport>& reports) {
  std::string out = "pair_name,pcc,cosine_similarity,n_bins\n";
  for (const AdditivityReport& r : reports) {
    out += r.pair_name + "," + fmt17(r.pcc) + "," + fmt17(r.cosine_similarity) +
           "," + std::to_string(r.n_bins) + "\n";
  }
  return out;
}

std::string additivity_json(const std::vector<AdditivityReport>& reports) {
  std::string out = "[";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const AdditivityReport& r = reports[i];
    if (i) out.push_back(',');
    out += "{\"pair_name\":\"" + r.pair_name + "\",\"pcc\":" + fmt17(r.pcc) +
           ",\"cosine_similarity\":" + fmt17(r.cosine_similarity) +
           ",\"n_bins\":" + std::to_string(r.n_bins) + "}";
  }
  out += "]\n";
  return out;
}

}  // namespace odp
