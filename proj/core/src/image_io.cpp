#include "affordmap/image_io.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include <jpeglib.h>
#include <png.h>

#include "affordmap/error.hpp"

namespace affordmap::io {
namespace fs = std::filesystem;
namespace {

void require_exists(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec))
    raise(ErrorCode::kMissingInput, "missing image " + path.string());
}

std::vector<unsigned char> read_png_as(const fs::path& path, png_uint_32 format, int& h, int& w) {
  require_exists(path);
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    raise(ErrorCode::kFormat, path.string() + ": " + image.message);
  image.format = format;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    raise(ErrorCode::kCorrupt, path.string() + ": " + image.message);
  }
  h = static_cast<int>(image.height);
  w = static_cast<int>(image.width);
  return buffer;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void on_jpeg_error(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

RgbImage read_jpeg(const fs::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) raise(ErrorCode::kIo, "cannot open " + path.string());

  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = on_jpeg_error;
  RgbImage out;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    raise(ErrorCode::kCorrupt, path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.h = static_cast<int>(cinfo.output_height);
  out.w = static_cast<int>(cinfo.output_width);
  out.rgb.resize(static_cast<std::size_t>(out.h) * out.w * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * out.w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

}  // namespace

GrayImage read_gray_png(const fs::path& path) {
  GrayImage g;
  g.pixels = read_png_as(path, PNG_FORMAT_GRAY, g.h, g.w);
  return g;
}

RgbImage read_image(const fs::path& path) {
  require_exists(path);
  unsigned char sig[8] = {};
  {
    std::ifstream in(path, std::ios::binary);
    in.read(reinterpret_cast<char*>(sig), sizeof sig);
  }
  if (png_sig_cmp(sig, 0, 8) == 0) {
    RgbImage img;
    img.rgb = read_png_as(path, PNG_FORMAT_RGB, img.h, img.w);
    return img;
  }
  if (sig[0] == 0xFF && sig[1] == 0xD8) return read_jpeg(path);
  raise(ErrorCode::kFormat, path.string() + ": unrecognized image format (expected PNG or JPEG)");
}

void write_png(const fs::path& path, const RgbImage& img) {
  if (img.h < 1 || img.w < 1 || img.rgb.size() != static_cast<std::size_t>(img.h) * img.w * 3)
    raise(ErrorCode::kArgument, "invalid RGB image buffer");
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.w);
  image.height = static_cast<png_uint_32>(img.h);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.rgb.data(), 0, nullptr))
    raise(ErrorCode::kIo, path.string() + ": " + image.message);
}

}  // namespace affordmap::io
