#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace noetic::io::detail {

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

inline void put_u32(std::string& out, std::uint32_t v) { put_le(out, v); }
inline void put_i32(std::string& out, std::int32_t v) { put_le(out, static_cast<std::uint32_t>(v)); }
inline void put_f32(std::string& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

template <typename U>
U get_le(std::string_view in, std::size_t pos) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    value |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return value;
}

inline std::uint32_t get_u32(std::string_view in, std::size_t pos) { return get_le<std::uint32_t>(in, pos); }
inline std::int32_t get_i32(std::string_view in, std::size_t pos) {
  return static_cast<std::int32_t>(get_le<std::uint32_t>(in, pos));
}
inline float get_f32(std::string_view in, std::size_t pos) { return std::bit_cast<float>(get_le<std::uint32_t>(in, pos)); }
inline double get_f64(std::string_view in, std::size_t pos) { return std::bit_cast<double>(get_le<std::uint64_t>(in, pos)); }

}  // namespace noetic::io::detail
