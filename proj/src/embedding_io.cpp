#include "hqgnn/binary_io.hpp"
#include "hqgnn/encoder.hpp"

#include <fstream>

namespace hqgnn {

namespace {
constexpr std::string_view kMagic = "HQEM";
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kTagF64 = 1;
}  // namespace

void write_embeddings(std::ostream& out, const RowMatrix<double>& m) {
    binary::put_magic(out, kMagic);
    binary::put<std::uint32_t>(out, kVersion);
    binary::put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    binary::put<std::uint32_t>(out, kTagF64);
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) binary::put<double>(out, m(r, c));
}

RowMatrix<double> read_embeddings(std::istream& in) {
    binary::expect_magic(in, kMagic);
    const auto version = binary::get<std::uint32_t>(in);
    if (version != kVersion) throw FormatError("unsupported HQEM version " + std::to_string(version));
    const auto rows = binary::get<std::uint64_t>(in);
    const auto cols = binary::get<std::uint32_t>(in);
    const auto tag = binary::get<std::uint32_t>(in);
    if (tag != kTagF64) throw FormatError("unsupported HQEM element type " + std::to_string(tag));
    RowMatrix<double> m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) m(r, c) = binary::get<double>(in);
    return m;
}

void write_embeddings(const std::filesystem::path& path, const RowMatrix<double>& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    write_embeddings(out, m);
}

RowMatrix<double> read_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return read_embeddings(in);
}

}  // namespace hqgnn
