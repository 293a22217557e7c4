#include "hqgnn/binary_io.hpp"

#include "hqgnn/error.hpp"

#include <string>

namespace hqgnn::binary {

void check(std::istream& in, std::string_view what) {
    if (!in) throw FormatError(std::string(what));
}

void put_magic(std::ostream& out, std::string_view magic) { out.write(magic.data(), static_cast<std::streamsize>(magic.size())); }

void expect_magic(std::istream& in, std::string_view magic) {
    std::string got(magic.size(), '\0');
    in.read(got.data(), static_cast<std::streamsize>(got.size()));
    if (!in || got != magic) throw FormatError("bad magic, expected \"" + std::string(magic) + "\"");
}

}  // namespace hqgnn::binary
