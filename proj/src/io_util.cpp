#include "adseal/io_util.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include <sodium.h>

#include "adseal/errors.hpp"

namespace adseal {

void put_i32_le(std::vector<unsigned char>& out, int32_t v) {
  const uint32_t u = static_cast<uint32_t>(v);
  out.push_back(static_cast<unsigned char>(u & 0xff));
  out.push_back(static_cast<unsigned char>((u >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((u >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((u >> 24) & 0xff));
}

void put_f64_le(std::vector<unsigned char>& out, double v) {
  uint64_t u = 0;
  static_assert(sizeof(u) == sizeof(v));
  std::memcpy(&u, &v, sizeof(u));
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((u >> (8 * i)) & 0xff));
}

int32_t get_i32_le(const std::vector<unsigned char>& buf, size_t& pos) {
  if (pos + 4 > buf.size()) throw DataError("binary read past end (i32)");
  uint32_t u = 0;
  for (int i = 0; i < 4; ++i) u |= static_cast<uint32_t>(buf[pos + i]) << (8 * i);
  pos += 4;
  return static_cast<int32_t>(u);
}

double get_f64_le(const std::vector<unsigned char>& buf, size_t& pos) {
  if (pos + 8 > buf.size()) throw DataError("binary read past end (f64)");
  uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<uint64_t>(buf[pos + i]) << (8 * i);
  pos += 8;
  double v = 0.0;
  std::memcpy(&v, &u, sizeof(v));
  return v;
}

std::vector<unsigned char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  return std::vector<unsigned char>((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw DataError("cannot rename " + tmp + " to " + path);
  }
}

void atomic_write_file(const std::string& path, const std::string& contents) {
  std::vector<unsigned char> bytes(contents.begin(), contents.end());
  write_file_bytes(path, bytes);
}

std::string sha256_hex(const std::string& data) {
  unsigned char hash[crypto_hash_sha256_BYTES];
  crypto_hash_sha256(hash, reinterpret_cast<const unsigned char*>(data.data()), data.size());
  static const char* digits = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * sizeof(hash));
  for (unsigned char b : hash) {
    hex.push_back(digits[b >> 4]);
    hex.push_back(digits[b & 0xf]);
  }
  return hex;
}

}  // namespace adseal
