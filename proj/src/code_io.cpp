#include "hqgnn/binary_io.hpp"
#include "hqgnn/quantizer.hpp"

#include <fstream>
#include <limits>
#include <vector>

namespace hqgnn {

namespace {
constexpr std::string_view kMagic = "HQCD";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void write_codes(std::ostream& out, const QuantizedTable& table) {
    const auto& p = table.params;
    binary::put_magic(out, kMagic);
    binary::put<std::uint32_t>(out, kVersion);
    binary::put<std::uint64_t>(out, static_cast<std::uint64_t>(table.rows()));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(table.dim()));
    binary::put<std::uint8_t>(out, static_cast<std::uint8_t>(p.bits));
    binary::put<double>(out, p.l);
    binary::put<double>(out, p.u);
    binary::put<double>(out, p.delta);

    const Index d = table.dim();
    if (p.bits == 1) {
        std::vector<char> packed(static_cast<std::size_t>((d + 7) / 8));
        for (Index r = 0; r < table.rows(); ++r) {
            std::fill(packed.begin(), packed.end(), 0);
            for (Index c = 0; c < d; ++c)
                if (table.codes(r, c)) packed[static_cast<std::size_t>(c / 8)] |= static_cast<char>(1u << (c % 8));
            out.write(packed.data(), static_cast<std::streamsize>(packed.size()));
        }
    } else if (p.bits <= 8) {
        for (Index r = 0; r < table.rows(); ++r)
            for (Index c = 0; c < d; ++c) binary::put<std::uint8_t>(out, static_cast<std::uint8_t>(table.codes(r, c)));
    } else {
        for (Index r = 0; r < table.rows(); ++r)
            for (Index c = 0; c < d; ++c) binary::put<std::uint16_t>(out, static_cast<std::uint16_t>(table.codes(r, c)));
    }
    for (Index r = 0; r < table.rows(); ++r) {
        if (table.row_sums(r) > std::numeric_limits<std::uint32_t>::max())
            throw InputError("row sum exceeds the u32 range of the code format");
        binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(table.row_sums(r)));
    }
}

QuantizedTable read_codes(std::istream& in) {
    binary::expect_magic(in, kMagic);
    const auto version = binary::get<std::uint32_t>(in);
    if (version != kVersion) throw FormatError("unsupported HQCD version " + std::to_string(version));
    const auto rows = static_cast<Index>(binary::get<std::uint64_t>(in));
    const auto d = static_cast<Index>(binary::get<std::uint32_t>(in));
    QuantizedTable t;
    t.params.bits = binary::get<std::uint8_t>(in);
    t.params.l = binary::get<double>(in);
    t.params.u = binary::get<double>(in);
    t.params.delta = binary::get<double>(in);
    try {
        t.params.validate();
    } catch (const InputError& e) {
        throw FormatError(std::string("bad HQCD parameters: ") + e.what());
    }

    t.codes.resize(rows, d);
    if (t.params.bits == 1) {
        std::vector<char> packed(static_cast<std::size_t>((d + 7) / 8));
        for (Index r = 0; r < rows; ++r) {
            in.read(packed.data(), static_cast<std::streamsize>(packed.size()));
            binary::check(in, "truncated HQCD codes");
            for (Index c = 0; c < d; ++c)
                t.codes(r, c) = (static_cast<unsigned char>(packed[static_cast<std::size_t>(c / 8)]) >> (c % 8)) & 1u;
        }
    } else if (t.params.bits <= 8) {
        for (Index r = 0; r < rows; ++r)
            for (Index c = 0; c < d; ++c) t.codes(r, c) = binary::get<std::uint8_t>(in);
    } else {
        for (Index r = 0; r < rows; ++r)
            for (Index c = 0; c < d; ++c) t.codes(r, c) = binary::get<std::uint16_t>(in);
    }
    t.row_sums.resize(rows);
    for (Index r = 0; r < rows; ++r) t.row_sums(r) = binary::get<std::uint32_t>(in);
    t.validate();
    return t;
}

void write_codes(const std::filesystem::path& path, const QuantizedTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    write_codes(out, table);
}

QuantizedTable read_codes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return read_codes(in);
}

}  // namespace hqgnn
