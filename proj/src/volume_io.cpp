#include "cldice/volume_io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

namespace cldice {

const char* volume_io_code_name(VolumeIoCode code) {
  switch (code) {
    case VolumeIoCode::open_failed: return "open_failed";
    case VolumeIoCode::bad_magic: return "bad_magic";
    case VolumeIoCode::invalid_ndim: return "invalid_ndim";
    case VolumeIoCode::invalid_dtype: return "invalid_dtype";
    case VolumeIoCode::truncated_payload: return "truncated_payload";
    case VolumeIoCode::bad_binary_byte: return "bad_binary_byte";
    case VolumeIoCode::bad_pgm: return "bad_pgm";
    case VolumeIoCode::write_failed: return "write_failed";
    case VolumeIoCode::not_2d_pgm: return "not_2d_pgm";
  }
  return "unknown";
}

namespace {

[[noreturn]] void fail(VolumeIoCode code, const std::string& msg) {
  throw VolumeIoError(code, std::string(volume_io_code_name(code)) + ": " + msg);
}

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32le(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v & 0xff),
      static_cast<unsigned char>((v >> 8) & 0xff),
      static_cast<unsigned char>((v >> 16) & 0xff),
      static_cast<unsigned char>((v >> 24) & 0xff),
  };
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::vector<unsigned char> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(VolumeIoCode::open_failed, path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

Volume load_pgm(const std::vector<unsigned char>& bytes, const std::string& path) {
  // P5, whitespace/comment tolerant header, maxval 255, raw 8-bit
  std::size_t pos = 2;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    long v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      ++pos;
      any = true;
    }
    if (!any) fail(VolumeIoCode::bad_pgm, path);
    return v;
  };
  const long width = read_int();
  const long height = read_int();
  const long maxval = read_int();
  if (width < 1 || height < 1 || maxval != 255) fail(VolumeIoCode::bad_pgm, path);
  if (pos >= bytes.size() || !std::isspace(bytes[pos]))
    fail(VolumeIoCode::bad_pgm, path);
  ++pos;  // single whitespace after maxval
  const std::size_t need = static_cast<std::size_t>(width) * height;
  if (bytes.size() - pos < need) fail(VolumeIoCode::truncated_payload, path);
  std::vector<double> data(need);
  for (std::size_t i = 0; i < need; ++i) data[i] = bytes[pos + i] / 255.0;
  return ScalarField(Shape::of2d(static_cast<int>(height), static_cast<int>(width)),
                     std::move(data));
}

}  // namespace

Volume load_volume(const std::string& path) {
  const std::vector<unsigned char> bytes = read_all(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5')
    return load_pgm(bytes, path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "CTV1", 4) != 0)
    fail(VolumeIoCode::bad_magic, path);
  std::size_t pos = 4;
  if (bytes.size() < pos + 1) fail(VolumeIoCode::truncated_payload, path);
  const int ndim = bytes[pos++];
  if (ndim != 2 && ndim != 3) fail(VolumeIoCode::invalid_ndim, path);
  if (bytes.size() < pos + 4 * static_cast<std::size_t>(ndim))
    fail(VolumeIoCode::truncated_payload, path);
  Shape shape;
  shape.nd = ndim;
  for (int a = 0; a < ndim; ++a) {
    shape.d[a] = static_cast<int>(read_u32le(bytes.data() + pos));
    pos += 4;
    if (shape.d[a] < 1) fail(VolumeIoCode::invalid_ndim, path);
  }
  if (bytes.size() < pos + 1) fail(VolumeIoCode::truncated_payload, path);
  const int dtype = bytes[pos++];
  const std::size_t n = shape.size();
  if (dtype == 0) {
    if (bytes.size() - pos < n) fail(VolumeIoCode::truncated_payload, path);
    std::vector<std::uint8_t> bits(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (bytes[pos + i] > 1) fail(VolumeIoCode::bad_binary_byte, path);
      bits[i] = bytes[pos + i];
    }
    return BinaryMask(shape, std::move(bits));
  }
  if (dtype == 1) {
    if (bytes.size() - pos < n * 4) fail(VolumeIoCode::truncated_payload, path);
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t u = read_u32le(bytes.data() + pos + i * 4);
      data[i] = static_cast<double>(std::bit_cast<float>(u));
    }
    return ScalarField(shape, std::move(data));
  }
  fail(VolumeIoCode::invalid_dtype, path);
}

namespace {

bool wants_pgm(const std::string& path) {
  return path.size() >= 4 && path.substr(path.size() - 4) == ".pgm";
}

void write_header(std::ostream& out, const Shape& s, std::uint8_t dtype) {
  out.write("CTV1", 4);
  const std::uint8_t nd = static_cast<std::uint8_t>(s.nd);
  out.write(reinterpret_cast<const char*>(&nd), 1);
  for (int a = 0; a < s.nd; ++a)
    write_u32le(out, static_cast<std::uint32_t>(s.d[a]));
  out.write(reinterpret_cast<const char*>(&dtype), 1);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(VolumeIoCode::write_failed, path);
  return out;
}

void save_pgm(const std::string& path, const ScalarField& f) {
  if (f.shape().nd != 2) fail(VolumeIoCode::not_2d_pgm, path);
  std::ofstream out = open_out(path);
  out << "P5\n" << f.shape().d[1] << " " << f.shape().d[0] << "\n255\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    const unsigned char b =
        static_cast<unsigned char>(std::lround(f[i] * 255.0));
    out.write(reinterpret_cast<const char*>(&b), 1);
  }
  if (!out) fail(VolumeIoCode::write_failed, path);
}

}  // namespace

void save_volume(const std::string& path, const ScalarField& f) {
  if (wants_pgm(path)) {
    save_pgm(path, f);
    return;
  }
  std::ofstream out = open_out(path);
  write_header(out, f.shape(), 1);
  for (std::size_t i = 0; i < f.size(); ++i)
    write_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(f[i])));
  if (!out) fail(VolumeIoCode::write_failed, path);
}

void save_volume(const std::string& path, const BinaryMask& m) {
  if (wants_pgm(path)) {
    save_pgm(path, to_field(m));
    return;
  }
  std::ofstream out = open_out(path);
  write_header(out, m.shape(), 0);
  out.write(reinterpret_cast<const char*>(m.bits().data()),
            static_cast<std::streamsize>(m.size()));
  if (!out) fail(VolumeIoCode::write_failed, path);
}

ScalarField as_field(const Volume& v) {
  if (std::holds_alternative<ScalarField>(v)) return std::get<ScalarField>(v);
  return to_field(std::get<BinaryMask>(v));
}

BinaryMask as_mask(const Volume& v, double thresh) {
  if (std::holds_alternative<BinaryMask>(v)) return std::get<BinaryMask>(v);
  return threshold(std::get<ScalarField>(v), thresh);
}

}  // namespace cldice
