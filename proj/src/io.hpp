#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"

namespace jumplab {

// Full round-trip formatting (17 significant digits, '.' decimal, locale-free).
std::string format_full(double v);
// Shortest round-trip formatting, for plot coordinates and labels.
std::string format_short(double v);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);
bool file_exists(const std::string& path);

// CSV with a digest comment line; all numeric cells at full precision.
class CsvBuilder {
public:
    explicit CsvBuilder(std::vector<std::string> header) : header_(std::move(header)) {}
    void add(std::vector<std::string> row);
    std::string str(std::uint64_t digest) const;
    static std::string cell(double v) { return format_full(v); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::uint64_t digest = 0;
    bool has_digest = false;

    int col(const std::string& name) const;  // -1 when absent
};
CsvTable parse_csv(const std::string& text);

struct PlotSeries {
    std::string name;
    std::string color;
    std::vector<double> x, y;
    bool points_only = false;
    bool dashed = false;
};

struct PlotSpan {  // horizontal annotated span (regime windows)
    std::string label;
    double x0 = 0.0, x1 = 0.0;
    int lane = 0;  // stacking row at the top of the plot
    std::string color;
};

struct PlotSpec {
    std::string title, xlabel, ylabel;
    bool logx = false, logy = false;
    std::vector<PlotSeries> series;
    std::vector<PlotSpan> spans;
};

// Deterministic SVG (byte-identical for identical inputs); errors on an empty
// series list.
std::string render_svg(const PlotSpec& spec, std::uint64_t digest);

// Path persistence: compact binary block and CSV.
struct PathsFile {
    std::uint64_t digest = 0;
    int d = 1;
    std::vector<double> times;
    std::uint64_t n_paths = 0;
    std::vector<double> data;  // n_paths * times.size() * d, row-major

    const double* path(std::uint64_t p) const { return &data[p * times.size() * std::size_t(d)]; }
    const double* at(std::uint64_t p, std::size_t ti) const {
        return &data[(p * times.size() + ti) * std::size_t(d)];
    }
};

void write_paths_binary(const std::string& path, const PathsFile& pf);
PathsFile read_paths_binary(const std::string& path);
std::string paths_to_csv(const PathsFile& pf);

}  // namespace jumplab
