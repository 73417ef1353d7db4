#pragma once

#include <complex>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace mist {

// Shortest round-trip decimal; "nan"/"inf" for non-finite values.
std::string format_number(double x);
std::string format_number(long long x);

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    CsvWriter& cell(double x);
    CsvWriter& cell(long long x);
    CsvWriter& cell(int x) { return cell(static_cast<long long>(x)); }
    CsvWriter& cell(std::string_view s);
    void end_row();
    // gnuplot-style block separator
    void blank_line();

    const std::string& str() const { return buf_; }
    void save(const std::filesystem::path& path) const;

private:
    std::string buf_;
    std::size_t columns_;
    std::size_t filled_ = 0;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    int column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::string_view text);

void write_text(const std::filesystem::path& path, std::string_view text);

// 16-byte header (rows, cols as little-endian uint64) then row-major complex128.
void write_matrix_dump(const std::filesystem::path& path, const Eigen::MatrixXcd& m);
Eigen::MatrixXcd read_matrix_dump(const std::filesystem::path& path);

}  // namespace mist
