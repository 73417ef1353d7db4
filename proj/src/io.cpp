#include "mist/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mist {

std::string format_number(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string format_number(long long x)
{
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size())
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i)
            buf_ += ',';
        buf_ += header[i];
    }
    buf_ += '\n';
}

CsvWriter& CsvWriter::cell(double x) { return cell(std::string_view(format_number(x))); }
CsvWriter& CsvWriter::cell(long long x) { return cell(std::string_view(format_number(x))); }

CsvWriter& CsvWriter::cell(std::string_view s)
{
    if (filled_ == columns_)
        throw std::logic_error("CsvWriter: too many cells in row");
    if (filled_)
        buf_ += ',';
    buf_ += s;
    ++filled_;
    return *this;
}

void CsvWriter::end_row()
{
    if (filled_ != columns_)
        throw std::logic_error("CsvWriter: incomplete row");
    buf_ += '\n';
    filled_ = 0;
}

void CsvWriter::blank_line() { buf_ += '\n'; }

void CsvWriter::save(const std::filesystem::path& path) const { write_text(path, buf_); }

int CsvTable::column(std::string_view name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return static_cast<int>(i);
    return -1;
}

CsvTable parse_csv(std::string_view text)
{
    CsvTable t;
    std::istringstream in{std::string(text)};
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ','))
            cells.push_back(c);
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != t.header.size())
                throw std::invalid_argument("csv: row width differs from header: " + line);
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

CsvTable read_csv(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f)
        throw std::runtime_error("cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str());
}

void write_text(const std::filesystem::path& path, std::string_view text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + path.string());
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f)
        throw std::runtime_error("write failed: " + path.string());
}

namespace {

void put_u64(std::ofstream& f, std::uint64_t v)
{
    unsigned char b[8];
    for (int i = 0; i < 8; ++i)
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    f.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::ifstream& f)
{
    unsigned char b[8];
    f.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}

void put_f64(std::ofstream& f, double x) { put_u64(f, std::bit_cast<std::uint64_t>(x)); }
double get_f64(std::ifstream& f) { return std::bit_cast<double>(get_u64(f)); }

}  // namespace

void write_matrix_dump(const std::filesystem::path& path, const Eigen::MatrixXcd& m)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + path.string());
    put_u64(f, static_cast<std::uint64_t>(m.rows()));
    put_u64(f, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            put_f64(f, m(r, c).real());
            put_f64(f, m(r, c).imag());
        }
}

Eigen::MatrixXcd read_matrix_dump(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open " + path.string());
    auto rows = get_u64(f);
    auto cols = get_u64(f);
    if (!f || rows > (1u << 20) || cols > (1u << 20))
        throw std::runtime_error("bad matrix dump header: " + path.string());
    Eigen::MatrixXcd m(rows, cols);
    for (std::uint64_t r = 0; r < rows; ++r)
        for (std::uint64_t c = 0; c < cols; ++c) {
            double re = get_f64(f);
            double im = get_f64(f);
            m(r, c) = {re, im};
        }
    if (!f)
        throw std::runtime_error("truncated matrix dump: " + path.string());
    return m;
}

}  // namespace mist
