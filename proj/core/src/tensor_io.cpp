#include "affordmap/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "affordmap/error.hpp"
#include "affordmap/image_io.hpp"

namespace affordmap::io {
namespace fs = std::filesystem;
namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kAlign = 64;
// numpy reserves room so the leading axis can grow in place.
constexpr std::size_t kGrowthAxisDigits = 21;

std::string read_file(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec))
    raise(ErrorCode::kMissingInput, "missing file " + path.filename().string() +
                                        " (" + path.string() + ")");
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(ErrorCode::kIo, "short write to " + path.string());
}

// Minimal reader for the Python dict literal that forms an NPY header.
class HeaderParser {
 public:
  explicit HeaderParser(std::string_view text) : text_(text) {}

  struct Fields {
    std::string descr;
    bool fortran_order = false;
    std::vector<std::size_t> shape;
    bool has_descr = false, has_order = false, has_shape = false;
  };

  Fields parse() {
    Fields f;
    skip_ws();
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') { ++pos_; break; }
      const std::string key = parse_string();
      skip_ws();
      expect(':');
      skip_ws();
      if (key == "descr") {
        f.descr = parse_string();
        f.has_descr = true;
      } else if (key == "fortran_order") {
        f.fortran_order = parse_bool();
        f.has_order = true;
      } else if (key == "shape") {
        f.shape = parse_tuple();
        f.has_shape = true;
      } else {
        fail("unexpected header key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') ++pos_;
    }
    skip_ws();
    if (pos_ != text_.size()) fail("trailing bytes after header dict");
    if (!f.has_descr || !f.has_order || !f.has_shape) fail("header lacks a required key");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    raise(ErrorCode::kFormat, "malformed NPY header: " + what);
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  std::string parse_string() {
    const char quote = peek();
    if (quote != '\'' && quote != '"') fail("expected quoted string");
    ++pos_;
    const auto end = text_.find(quote, pos_);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string out(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
  }
  bool parse_bool() {
    if (text_.substr(pos_, 4) == "True") { pos_ += 4; return true; }
    if (text_.substr(pos_, 5) == "False") { pos_ += 5; return false; }
    fail("expected True or False");
  }
  std::vector<std::size_t> parse_tuple() {
    expect('(');
    std::vector<std::size_t> dims;
    while (true) {
      skip_ws();
      if (peek() == ')') { ++pos_; break; }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected dimension");
      std::size_t value = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        const std::size_t digit = static_cast<std::size_t>(text_[pos_++] - '0');
        if (value > (std::numeric_limits<std::size_t>::max() - digit) / 10) fail("dimension overflow");
        value = value * 10 + digit;
      }
      dims.push_back(value);
      skip_ws();
      if (peek() == ',') ++pos_;
      else if (peek() != ')') fail("expected ',' or ')' in shape");
    }
    return dims;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::size_t checked_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d != 0 && n > std::numeric_limits<std::size_t>::max() / d)
      raise(ErrorCode::kFormat, "shape product overflows");
    n *= d;
  }
  return n;
}

template <typename UInt>
UInt load_uint(const unsigned char* p, bool little) {
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    const std::size_t shift = little ? i : sizeof(UInt) - 1 - i;
    v |= static_cast<UInt>(p[i]) << (8 * shift);
  }
  return v;
}

std::string shape_repr(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  if (shape.size() == 1) s += ",";
  return s + ")";
}

std::string require_lower_token(const nlohmann::json& j, const char* key) {
  const std::string v = j.at(key).get<std::string>();
  if (v.empty()) raise(ErrorCode::kFormat, fmt::format("meta.json: '{}' must be non-empty", key));
  for (unsigned char c : v)
    if (std::isupper(c))
      raise(ErrorCode::kFormat, fmt::format("meta.json: '{}' must be lowercase, got '{}'", key, v));
  return v;
}

}  // namespace

std::size_t NpyArray::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

NpyArray parse_array(const std::string& bytes) {
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < kMagicLen + 4 || std::memcmp(bytes.data(), kMagic, kMagicLen) != 0)
    raise(ErrorCode::kFormat, "missing NPY magic header");
  const int major = raw[6];
  std::size_t header_len = 0;
  std::size_t offset = 0;
  if (major == 1) {
    header_len = load_uint<std::uint16_t>(raw + 8, true);
    offset = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) raise(ErrorCode::kFormat, "truncated NPY preamble");
    header_len = load_uint<std::uint32_t>(raw + 8, true);
    offset = 12;
  } else {
    raise(ErrorCode::kFormat, fmt::format("unsupported NPY version {}.{}", major, raw[7]));
  }
  if (bytes.size() < offset + header_len) raise(ErrorCode::kFormat, "truncated NPY header");

  const auto fields =
      HeaderParser(std::string_view(bytes).substr(offset, header_len)).parse();
  if (fields.fortran_order) raise(ErrorCode::kFormat, "Fortran-ordered arrays are not supported");
  if (fields.shape.empty()) raise(ErrorCode::kFormat, "rank-0 arrays are not supported");

  std::size_t item = 0;
  bool little = true;
  const std::string& d = fields.descr;
  if (d == "<f4" || d == "=f4") item = 4;
  else if (d == ">f4") { item = 4; little = false; }
  else if (d == "<f8" || d == "=f8") item = 8;
  else if (d == ">f8") { item = 8; little = false; }
  else raise(ErrorCode::kFormat, "unsupported dtype '" + d + "'");

  const std::size_t count = checked_product(fields.shape);
  const std::size_t payload = bytes.size() - offset - header_len;
  if (count > std::numeric_limits<std::size_t>::max() / item || payload != count * item)
    raise(ErrorCode::kCorrupt,
          fmt::format("payload holds {} bytes but shape {} needs {}", payload,
                      shape_repr(fields.shape), count * item));

  NpyArray arr;
  arr.shape = fields.shape;
  arr.values.resize(count);
  const unsigned char* p = raw + offset + header_len;
  for (std::size_t i = 0; i < count; ++i, p += item) {
    if (item == 4)
      arr.values[i] = std::bit_cast<float>(load_uint<std::uint32_t>(p, little));
    else
      arr.values[i] = static_cast<float>(std::bit_cast<double>(load_uint<std::uint64_t>(p, little)));
  }
  return arr;
}

NpyArray read_array(const fs::path& path) {
  try {
    return parse_array(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kFormat || e.code() == ErrorCode::kCorrupt)
      throw Error(e.code(), path.string() + ": " + e.detail());
    throw;
  }
}

std::string serialize_array(const NpyArray& arr) {
  if (arr.shape.empty()) raise(ErrorCode::kFormat, "rank-0 arrays cannot be written");
  if (checked_product(arr.shape) != arr.values.size())
    raise(ErrorCode::kShapeMismatch,
          fmt::format("shape {} does not match {} values", shape_repr(arr.shape), arr.values.size()));

  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': " +
                       shape_repr(arr.shape) + ", }";
  header.append(kGrowthAxisDigits - std::to_string(arr.shape.front()).size(), ' ');
  const std::size_t hlen = header.size() + 1;
  const std::size_t pad = kAlign - ((kMagicLen + 2 + 2 + hlen) % kAlign);
  header.append(pad, ' ');
  header.push_back('\n');
  if (header.size() > std::numeric_limits<std::uint16_t>::max())
    raise(ErrorCode::kFormat, "header too large for NPY v1.0");

  std::string out;
  out.reserve(10 + header.size() + arr.values.size() * 4);
  out.append(kMagic, kMagicLen);
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(header.size() & 0xff));
  out.push_back(static_cast<char>((header.size() >> 8) & 0xff));
  out += header;
  for (float v : arr.values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
  return out;
}

void write_array(const fs::path& path, const NpyArray& arr) {
  write_file(path, serialize_array(arr));
}

NpyArray to_array(const SpatialMap& map) {
  return {{static_cast<std::size_t>(map.h()), static_cast<std::size_t>(map.w())},
          {map.values().begin(), map.values().end()}};
}

NpyArray to_array(const DenseFeatureMap& f) {
  return {{static_cast<std::size_t>(f.grid_h()), static_cast<std::size_t>(f.grid_w()),
           static_cast<std::size_t>(f.channels())},
          {f.values().begin(), f.values().end()}};
}

NpyArray to_array(const AttentionStack& s) {
  return {{static_cast<std::size_t>(s.layers()), static_cast<std::size_t>(s.grid_h()),
           static_cast<std::size_t>(s.grid_w())},
          {s.values().begin(), s.values().end()}};
}

SpatialMap to_spatial_map(const NpyArray& arr) {
  std::vector<std::size_t> dims = arr.shape;
  if (dims.size() == 3 && dims.front() == 1) dims.erase(dims.begin());
  if (dims.size() != 2)
    raise(ErrorCode::kShapeMismatch, fmt::format("expected a rank-2 map, got shape {}", shape_repr(arr.shape)));
  return SpatialMap(static_cast<int>(dims[0]), static_cast<int>(dims[1]), arr.values);
}

DenseFeatureMap to_feature_map(const NpyArray& arr) {
  if (arr.shape.size() != 3)
    raise(ErrorCode::kShapeMismatch, fmt::format("features must be [H, W, C], got {}", shape_repr(arr.shape)));
  return DenseFeatureMap(static_cast<int>(arr.shape[0]), static_cast<int>(arr.shape[1]),
                         static_cast<int>(arr.shape[2]), arr.values);
}

AttentionStack to_attention_stack(const NpyArray& arr) {
  if (arr.shape.size() == 2)
    return AttentionStack(1, static_cast<int>(arr.shape[0]), static_cast<int>(arr.shape[1]), arr.values);
  if (arr.shape.size() != 3)
    raise(ErrorCode::kShapeMismatch, fmt::format("attention must be [L, H, W], got {}", shape_repr(arr.shape)));
  return AttentionStack(static_cast<int>(arr.shape[0]), static_cast<int>(arr.shape[1]),
                        static_cast<int>(arr.shape[2]), arr.values);
}

SampleMeta parse_meta(const std::string& json_text) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    SampleMeta m;
    m.image_path = j.value("image_path", std::string{});
    m.verb = require_lower_token(j, "verb");
    m.object = require_lower_token(j, "object");
    m.prompt = j.value("prompt", std::string{});
    m.layer_ids = j.value("layer_ids", std::vector<int>{});
    m.grid_h = j.at("grid_h").get<int>();
    m.grid_w = j.at("grid_w").get<int>();
    m.source_model = j.value("source_model", std::string{});
    if (m.grid_h < 1 || m.grid_w < 1) raise(ErrorCode::kFormat, "meta.json: grid dims must be >= 1");
    return m;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kFormat, std::string("meta.json: ") + e.what());
  }
}

SampleMeta read_meta(const fs::path& path) { return parse_meta(read_file(path)); }

std::string serialize_meta(const SampleMeta& m) {
  nlohmann::ordered_json j;
  j["image_path"] = m.image_path;
  j["verb"] = m.verb;
  j["object"] = m.object;
  j["prompt"] = m.prompt;
  j["layer_ids"] = m.layer_ids;
  j["grid_h"] = m.grid_h;
  j["grid_w"] = m.grid_w;
  j["source_model"] = m.source_model;
  return j.dump(2) + "\n";
}

void write_meta(const fs::path& path, const SampleMeta& meta) {
  write_file(path, serialize_meta(meta));
}

SampleBundle read_sample_bundle(const fs::path& dir) {
  for (const char* name : {kFeaturesFile, kVerbAttentionFile, kObjectAttentionFile, kMetaFile}) {
    std::error_code ec;
    if (!fs::is_regular_file(dir / name, ec))
      raise(ErrorCode::kMissingInput, fmt::format("bundle {} is missing {}", dir.string(), name));
  }
  SampleBundle b{to_feature_map(read_array(dir / kFeaturesFile)),
                 to_attention_stack(read_array(dir / kVerbAttentionFile)),
                 to_attention_stack(read_array(dir / kObjectAttentionFile)),
                 read_meta(dir / kMetaFile)};

  const auto check = [&](const char* name, int h, int w) {
    if (h != b.meta.grid_h || w != b.meta.grid_w)
      raise(ErrorCode::kShapeMismatch,
            fmt::format("{} grid {}x{} disagrees with meta.json grid {}x{}", name, h, w,
                        b.meta.grid_h, b.meta.grid_w));
  };
  check(kFeaturesFile, b.features.grid_h(), b.features.grid_w());
  check(kVerbAttentionFile, b.verb_attention.grid_h(), b.verb_attention.grid_w());
  check(kObjectAttentionFile, b.object_attention.grid_h(), b.object_attention.grid_w());
  return b;
}

void write_sample_bundle(const fs::path& dir, const SampleBundle& b) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) raise(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  write_array(dir / kFeaturesFile, to_array(b.features));
  write_array(dir / kVerbAttentionFile, to_array(b.verb_attention));
  write_array(dir / kObjectAttentionFile, to_array(b.object_attention));
  write_meta(dir / kMetaFile, b.meta);
}

SpatialMap read_ground_truth(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") {
    const GrayImage gray = read_gray_png(path);
    std::vector<float> values(gray.pixels.size());
    std::transform(gray.pixels.begin(), gray.pixels.end(), values.begin(),
                   [](unsigned char v) { return static_cast<float>(v) / 255.0f; });
    return SpatialMap(gray.h, gray.w, std::move(values));
  }
  return to_spatial_map(read_array(path));
}

}  // namespace affordmap::io
