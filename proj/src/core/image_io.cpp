#include "medq/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include "medq/error.hpp"

namespace medq {

namespace {

struct PngReadState {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_callback(png_structp png, png_bytep out, png_size_t count) {
  auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (state->offset + count > state->bytes.size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, state->bytes.data() + state->offset, count);
  state->offset += count;
}

void png_write_callback(png_structp png, png_bytep data, png_size_t count) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + count);
}

void png_flush_callback(png_structp) {}

[[noreturn]] void png_error_callback(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  *err = msg;
  png_longjmp(png, 1);
}

void png_warning_callback(png_structp, png_const_charp) {}

std::uint8_t to_u8(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

std::uint16_t to_u16(float v) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 65535.0f));
}

}  // namespace

Image decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw ParseError("not a PNG stream");
  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_callback,
                                           png_warning_callback);
  if (!png) throw Error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png_create_info_struct failed");
  }
  PngReadState state{bytes, 0};
  std::vector<std::uint8_t> raw;
  std::vector<png_bytep> rows;
  int width = 0;
  int height = 0;
  int channels = 0;
  int depth = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("PNG decode failed: " + error);
  }
  png_set_read_fn(png, &state, png_read_callback);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_alpha(png);
  png_set_swap(png);  // 16-bit samples in host (little-endian) order
  png_read_update_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  std::size_t row_bytes = png_get_rowbytes(png, info);
  raw.resize(row_bytes * height);
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = raw.data() + row_bytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (channels != 1 && channels != 3) throw ParseError("unsupported PNG channel layout");
  Image img(width, height, channels);
  auto px = img.pixels();
  if (depth == 16) {
    for (std::size_t i = 0; i < px.size(); ++i) {
      std::uint16_t v;
      std::memcpy(&v, raw.data() + 2 * i, 2);
      px[i] = static_cast<float>(v) / 65535.0f;
    }
  } else {
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<float>(raw[i]) / 255.0f;
  }
  return img;
}

std::vector<std::uint8_t> encode_png(const Image& img, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw InvalidArgument("PNG bit depth must be 8 or 16");
  std::vector<std::uint8_t> out;
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_callback,
                                            png_warning_callback);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png_create_info_struct failed");
  }
  const int bytes_per_sample = bit_depth / 8;
  const std::size_t row_bytes =
      static_cast<std::size_t>(img.width()) * img.channels() * bytes_per_sample;
  std::vector<std::uint8_t> raw(row_bytes * img.height());
  auto px = img.pixels();
  if (bit_depth == 8) {
    for (std::size_t i = 0; i < px.size(); ++i) raw[i] = to_u8(px[i]);
  } else {
    for (std::size_t i = 0; i < px.size(); ++i) {
      std::uint16_t v = to_u16(px[i]);
      raw[2 * i] = static_cast<std::uint8_t>(v >> 8);  // PNG is big-endian
      raw[2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
  }
  std::vector<png_bytep> rows(img.height());
  for (int y = 0; y < img.height(); ++y) rows[y] = raw.data() + row_bytes * y;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("PNG encode failed: " + error);
  }
  png_set_write_fn(png, &out, png_write_callback, png_flush_callback);
  png_set_IHDR(png, info, img.width(), img.height(), bit_depth,
               img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

namespace {

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, mgr->message);
  std::longjmp(mgr->jump, 1);
}

}  // namespace

Image decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> raw;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw ParseError(std::string("JPEG decode failed: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.num_components != 1) cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const int width = static_cast<int>(cinfo.output_width);
  const int height = static_cast<int>(cinfo.output_height);
  const int channels = cinfo.output_components;
  raw.resize(static_cast<std::size_t>(width) * height * channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = raw.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);

  Image img(width, height, channels);
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<float>(raw[i]) / 255.0f;
  return img;
}

namespace {

std::string npy_field(const std::string& header, const std::string& key) {
  auto pos = header.find("'" + key + "'");
  if (pos == std::string::npos) throw ParseError("npy header missing " + key);
  pos = header.find(':', pos);
  if (pos == std::string::npos) throw ParseError("npy header malformed");
  ++pos;
  while (pos < header.size() && header[pos] == ' ') ++pos;
  if (header[pos] == '\'') {
    auto end = header.find('\'', pos + 1);
    return header.substr(pos + 1, end - pos - 1);
  }
  if (header[pos] == '(') {
    auto end = header.find(')', pos);
    return header.substr(pos + 1, end - pos - 1);
  }
  auto end = header.find_first_of(",}", pos);
  return header.substr(pos, end - pos);
}

}  // namespace

Image decode_npy(std::span<const std::uint8_t> bytes) {
  static constexpr char kMagic[] = "\x93NUMPY";
  if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, 6) != 0) {
    throw ParseError("not an .npy stream");
  }
  const int major = bytes[6];
  std::size_t header_len = 0;
  std::size_t header_start = 0;
  if (major == 1) {
    header_len = bytes[8] | (bytes[9] << 8);
    header_start = 10;
  } else {
    if (bytes.size() < 12) throw ParseError("truncated .npy header");
    header_len = bytes[8] | (bytes[9] << 8) | (bytes[10] << 16) | (static_cast<std::size_t>(bytes[11]) << 24);
    header_start = 12;
  }
  if (header_start + header_len > bytes.size()) throw ParseError("truncated .npy header");
  std::string header(reinterpret_cast<const char*>(bytes.data() + header_start), header_len);
  const std::string descr = npy_field(header, "descr");
  if (npy_field(header, "fortran_order").find("True") != std::string::npos) {
    throw ParseError(".npy in Fortran order is not supported");
  }
  std::vector<long> shape;
  {
    std::string s = npy_field(header, "shape");
    std::size_t pos = 0;
    while (pos < s.size()) {
      while (pos < s.size() && (s[pos] == ' ' || s[pos] == ',')) ++pos;
      if (pos >= s.size()) break;
      std::size_t used = 0;
      shape.push_back(std::stol(s.substr(pos), &used));
      pos += used;
    }
  }
  if (shape.size() != 2 && shape.size() != 3) throw ParseError(".npy must be 2-D or 3-D");
  const int height = static_cast<int>(shape[0]);
  const int width = static_cast<int>(shape[1]);
  const int channels = shape.size() == 3 ? static_cast<int>(shape[2]) : 1;
  if (descr.size() < 3 || descr[0] == '>') throw ParseError("unsupported .npy dtype " + descr);
  const std::string kind = descr.substr(1);
  std::size_t item = 0;
  if (kind == "u1") item = 1;
  else if (kind == "u2") item = 2;
  else if (kind == "f4") item = 4;
  else if (kind == "f8") item = 8;
  else throw ParseError("unsupported .npy dtype " + descr);

  const std::uint8_t* data = bytes.data() + header_start + header_len;
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  if (header_start + header_len + count * item > bytes.size()) throw ParseError("truncated .npy data");
  Image img(width, height, channels);
  auto px = img.pixels();
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* p = data + i * item;
    if (item == 1) {
      px[i] = static_cast<float>(*p) / 255.0f;
    } else if (item == 2) {
      std::uint16_t v;
      std::memcpy(&v, p, 2);
      px[i] = static_cast<float>(v) / 65535.0f;
    } else if (item == 4) {
      std::memcpy(&px[i], p, 4);
    } else {
      double v;
      std::memcpy(&v, p, 8);
      px[i] = static_cast<float>(v);
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_npy(const Image& img) {
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': (" +
                       std::to_string(img.height()) + ", " + std::to_string(img.width());
  header += img.channels() == 1 ? "), }" : ", " + std::to_string(img.channels()) + "), }";
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  std::vector<std::uint8_t> out = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
  out.push_back(static_cast<std::uint8_t>(header.size() & 0xff));
  out.push_back(static_cast<std::uint8_t>(header.size() >> 8));
  out.insert(out.end(), header.begin(), header.end());
  const auto* p = reinterpret_cast<const std::uint8_t*>(img.pixels().data());
  out.insert(out.end(), p, p + img.size() * sizeof(float));
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::string ext = lower_extension(path);
  if (ext == ".png") return decode_png(bytes);
  if (ext == ".jpg" || ext == ".jpeg") return decode_jpeg(bytes);
  if (ext == ".npy") return decode_npy(bytes);
  throw InvalidArgument("unsupported image format: " + path.string());
}

void save_image(const Image& img, const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_file(path, encode_png(img));
  } else if (ext == ".npy") {
    write_file(path, encode_npy(img));
  } else {
    throw InvalidArgument("unsupported output format: " + path.string());
  }
}

}  // namespace medq
