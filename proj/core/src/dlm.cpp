#include "spikedict/dlm.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace spikedict {

namespace {

static_assert(sizeof(double) == 8, "DLM1 requires 64-bit doubles");

std::uint64_t byteswap64(std::uint64_t v) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xffULL);
    return r;
}

void to_le(double* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t i = 0; i < count; ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, data + i, 8);
            bits = byteswap64(bits);
            std::memcpy(data + i, &bits, 8);
        }
    } else {
        (void)data;
        (void)count;
    }
}

}  // namespace

void write_dlm(const std::string& path, const Matrix& m) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "DLM1 " << m.rows() << " " << m.cols() << "\n";
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
        to_le(row.data(), row.size());
        f.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * 8));
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

Matrix read_dlm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string magic;
    long long rows = -1, cols = -1;
    f >> magic >> rows >> cols;
    if (magic != "DLM1") throw std::runtime_error("bad magic in " + path);
    if (!f || rows < 1 || cols < 1)
        throw std::runtime_error("bad header in " + path);
    f.get();  // the single newline terminating the header
    Matrix m(rows, cols);
    std::vector<double> row(static_cast<std::size_t>(cols));
    for (long long i = 0; i < rows; ++i) {
        f.read(reinterpret_cast<char*>(row.data()),
               static_cast<std::streamsize>(row.size() * 8));
        if (f.gcount() != static_cast<std::streamsize>(row.size() * 8))
            throw std::runtime_error("truncated: " + path);
        to_le(row.data(), row.size());
        for (long long j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
    }
    return m;
}

}  // namespace spikedict
