#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "mfgpi/field.hpp"

namespace mfgpi {

// Text with every double written as %.17g so values round-trip exactly.
std::string format_double(double v);

// CSV writer. Throws InputError if the file cannot be opened.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void row(const std::vector<double>& values);
    // Leading integer column (path id, N, ...) followed by doubles.
    void row(unsigned long long id, const std::vector<double>& values);
    void close();

private:
    std::FILE* f_ = nullptr;
    std::size_t columns_ = 0;
};

// Columns y,t[,param_name],value_name; `stride` keeps every stride-th node in each direction.
void write_field_csv(const FieldSurface& f, const std::string& path, const std::string& value_name,
                     const std::string& param_name = "param", std::size_t stride = 1);

// Binary dump: 8-byte magic MFGPDE01, uint64 count of the doubles that follow,
// then y_lo, y_hi, ny, T, nt, param_lo, param_hi, np and the values in storage order.
// All little-endian.
void write_field_binary(const FieldSurface& f, const std::string& path);
FieldSurface read_field_binary(const std::string& path);

// FNV-1a 64-bit hash.
unsigned long long fnv1a64(const std::string& data);

// Whole file as bytes; InputError if unreadable.
std::string read_file(const std::string& path);

}  // namespace mfgpi
