#ifndef LSMP_TEXT_IO_HPP
#define LSMP_TEXT_IO_HPP

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsmp {

// I/O and parse failures carry the offending line when known.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
    ParseError(const std::string& what, int line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")") {}
};

// All reals are serialized with 17 significant digits so text round trips
// are lossless for doubles.
std::string fmt_real(double v);
std::string fmt_reals(const std::vector<double>& v, char sep = ' ');

double parse_real(const std::string& tok, int line = 0);
std::vector<double> parse_reals(const std::string& text, int line = 0);

std::vector<std::string> split_ws(const std::string& s);

// FNV-1a, used for config/problem digests.
std::uint64_t fnv1a(const std::string& s);
std::string digest_hex(std::uint64_t h);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace lsmp

#endif
