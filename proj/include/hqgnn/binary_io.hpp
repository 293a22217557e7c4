#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string_view>
#include <type_traits>

namespace hqgnn::binary {

void check(std::istream& in, std::string_view what);
void put_magic(std::ostream& out, std::string_view magic);
void expect_magic(std::istream& in, std::string_view magic);

// All artifacts are little-endian regardless of host.
template <typename T>
void put(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<char, sizeof(T)> bytes;
    in.read(bytes.data(), sizeof(T));
    check(in, "truncated file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

}  // namespace hqgnn::binary
