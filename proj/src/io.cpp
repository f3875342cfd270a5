#include "mfgpi/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mfgpi/errors.hpp"

namespace mfgpi {

static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'F', 'G', 'P', 'D', 'E', '0', '1'};

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header) : columns_(header.size()) {
    f_ = std::fopen(path.c_str(), "wb");
    if (!f_) throw InputError("cannot open " + path + " for writing");
    for (std::size_t k = 0; k < header.size(); ++k) std::fprintf(f_, k ? ",%s" : "%s", header[k].c_str());
    std::fputc('\n', f_);
}

CsvWriter::~CsvWriter() { close(); }

void CsvWriter::close() {
    if (f_) std::fclose(f_);
    f_ = nullptr;
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != columns_) throw InputError("csv row has the wrong number of columns");
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (k) std::fputc(',', f_);
        std::fputs(format_double(values[k]).c_str(), f_);
    }
    std::fputc('\n', f_);
}

void CsvWriter::row(unsigned long long id, const std::vector<double>& values) {
    if (values.size() + 1 != columns_) throw InputError("csv row has the wrong number of columns");
    std::fprintf(f_, "%llu", id);
    for (double v : values) {
        std::fputc(',', f_);
        std::fputs(format_double(v).c_str(), f_);
    }
    std::fputc('\n', f_);
}

void write_field_csv(const FieldSurface& f, const std::string& path, const std::string& value_name,
                     const std::string& param_name, std::size_t stride) {
    if (stride < 1) throw InputError("write_field_csv: stride must be >= 1");
    const auto& g = f.grid();
    std::vector<std::string> header{"y", "t"};
    if (f.stacked()) header.push_back(param_name);
    header.push_back(value_name);
    CsvWriter w(path, header);
    for (std::size_t p = 0; p < f.np(); p += stride)
        for (std::size_t n = 0; n < g.nt; n += stride)
            for (std::size_t i = 0; i < g.ny; i += stride) {
                if (f.stacked())
                    w.row({g.y(i), g.t(n), f.param().at(p), f(i, n, p)});
                else
                    w.row({g.y(i), g.t(n), f(i, n)});
            }
}

void write_field_binary(const FieldSurface& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open " + path + " for writing");
    const auto& g = f.grid();
    const Axis a = f.stacked() ? f.param() : Axis{0.0, 0.0, 1};
    const std::vector<double> head{g.y_lo, g.y_hi, double(g.ny), g.T, double(g.nt), a.lo, a.hi, double(a.n)};
    const std::uint64_t count = head.size() + f.values().size();
    out.write(kMagic, 8);
    out.write(reinterpret_cast<const char*>(&count), 8);
    out.write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(8 * head.size()));
    out.write(reinterpret_cast<const char*>(f.values().data()), static_cast<std::streamsize>(8 * f.values().size()));
    if (!out) throw InputError("write failed for " + path);
}

FieldSurface read_field_binary(const std::string& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < 16 + 64 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw InputError(path + ": not an MFGPDE01 dump");
    std::uint64_t count = 0;
    std::memcpy(&count, bytes.data() + 8, 8);
    if (bytes.size() != 16 + 8 * count) throw InputError(path + ": size does not match the header count");
    std::vector<double> v(count);
    std::memcpy(v.data(), bytes.data() + 16, 8 * count);
    SpaceTimeGrid g;
    g.y_lo = v[0];
    g.y_hi = v[1];
    g.ny = static_cast<std::size_t>(v[2]);
    g.T = v[3];
    g.nt = static_cast<std::size_t>(v[4]);
    const Axis a{v[5], v[6], static_cast<std::size_t>(v[7])};
    const bool stacked = a.n > 1 || a.lo != a.hi;
    FieldSurface f = stacked ? FieldSurface(g, a) : FieldSurface(g);
    if (f.values().size() + 8 != count) throw InputError(path + ": value count does not match the grid");
    for (std::size_t p = 0; p < f.np(); ++p)
        for (std::size_t n = 0; n < g.nt; ++n)
            for (std::size_t i = 0; i < g.ny; ++i) f(i, n, p) = v[8 + (p * g.nt + n) * g.ny + i];
    return f;
}

unsigned long long fnv1a64(const std::string& data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace mfgpi
