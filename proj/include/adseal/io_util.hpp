#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace adseal {

// Little-endian scalar encoding used by the checkpoint and wire payloads.
void put_i32_le(std::vector<unsigned char>& out, int32_t v);
void put_f64_le(std::vector<unsigned char>& out, double v);
int32_t get_i32_le(const std::vector<unsigned char>& buf, size_t& pos);
double get_f64_le(const std::vector<unsigned char>& buf, size_t& pos);

std::vector<unsigned char> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<unsigned char>& bytes);

// Writes to <path>.tmp then renames, so readers never see partial files.
void atomic_write_file(const std::string& path, const std::string& contents);

std::string sha256_hex(const std::string& data);

}  // namespace adseal
