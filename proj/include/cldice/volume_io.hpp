#pragma once

#include <string>
#include <variant>

#include "cldice/grid.hpp"

namespace cldice {

// Volume container, magic "CTV1":
//   magic   4 bytes "CTV1"
//   ndim    u8, 2 or 3
//   dims    ndim x u32 little-endian
//   dtype   u8: 0 = 1-byte binary {0,1}, 1 = 4-byte little-endian float
//   payload row-major, last axis fastest
// 2D grayscale is also accepted as binary PGM (P5, maxval 255), scaled to
// [0,1]; paths ending in .pgm are written in that format.

enum class VolumeIoCode {
  open_failed,
  bad_magic,
  invalid_ndim,
  invalid_dtype,
  truncated_payload,
  bad_binary_byte,
  bad_pgm,
  write_failed,
  not_2d_pgm,
};

class VolumeIoError : public std::runtime_error {
 public:
  VolumeIoError(VolumeIoCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  VolumeIoCode code() const { return code_; }

 private:
  VolumeIoCode code_;
};

const char* volume_io_code_name(VolumeIoCode code);

using Volume = std::variant<ScalarField, BinaryMask>;

Volume load_volume(const std::string& path);
void save_volume(const std::string& path, const ScalarField& f);
void save_volume(const std::string& path, const BinaryMask& m);

// Convenience coercions for commands that need one specific kind.
ScalarField as_field(const Volume& v);
BinaryMask as_mask(const Volume& v, double thresh);

}  // namespace cldice
