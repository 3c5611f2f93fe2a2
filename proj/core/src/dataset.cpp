#include "gcl/dataset.hpp"

#include "gcl/errors.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace gcl {

namespace {

constexpr char kMagic[9] = "GCLDATA1";

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void write_matrix(std::ostream& os, const Matrix& m) {
    // Eigen's default storage is column-major, matching the container spec.
    os.write(reinterpret_cast<const char*>(m.data()),
             static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Matrix read_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    is.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    return m;
}

}  // namespace

void save_dataset(const SourceDataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("save_dataset: cannot open " + path);
    os.write(kMagic, 8);
    bool has_x = ds.X.size() > 0;
    write_u64(os, static_cast<std::uint64_t>(ds.S.rows()));
    write_u64(os, static_cast<std::uint64_t>(ds.n));
    write_u64(os, static_cast<std::uint64_t>(ds.m));
    write_u64(os, has_x ? 1 : 0);
    write_matrix(os, ds.S);
    if (has_x) write_matrix(os, ds.X);
    write_matrix(os, ds.U);
    if (!os) throw IoError("save_dataset: write failed for " + path);

    std::ofstream sidecar(path + ".json");
    if (!sidecar) throw IoError("save_dataset: cannot open sidecar for " + path);
    sidecar << ds.generator_spec.dump(2) << "\n";
}

SourceDataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("load_dataset: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw IoError("load_dataset: bad magic in " + path);

    SourceDataset ds;
    auto T = static_cast<Eigen::Index>(read_u64(is));
    ds.n = static_cast<int>(read_u64(is));
    ds.m = static_cast<int>(read_u64(is));
    bool has_x = read_u64(is) != 0;
    ds.S = read_matrix(is, T, ds.n);
    if (has_x) ds.X = read_matrix(is, T, ds.n);
    ds.U = read_matrix(is, T, ds.m);
    if (!is) throw IoError("load_dataset: truncated file " + path);

    std::ifstream sidecar(path + ".json");
    if (sidecar) sidecar >> ds.generator_spec;
    return ds;
}

}  // namespace gcl
