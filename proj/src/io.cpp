#include "io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace jumplab {

std::string format_full(double v) {
    char buf[48];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::string format_short(double v) {
    char buf[48];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 6);
    return std::string(buf, res.ptr);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    require(bool(out), Err::io, "cannot open " + path + " for writing");
    out.write(content.data(), std::streamsize(content.size()));
    require(bool(out), Err::io, "write failed for " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(bool(in), Err::io, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool file_exists(const std::string& path) {
    std::ifstream in(path);
    return bool(in);
}

void CsvBuilder::add(std::vector<std::string> row) {
    require(row.size() == header_.size(), Err::domain, "csv row width mismatch");
    rows_.push_back(std::move(row));
}

std::string CsvBuilder::str(std::uint64_t digest) const {
    std::ostringstream os;
    os << "# config_digest=";
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
    os << buf << "\n";
    for (std::size_t i = 0; i < header_.size(); ++i)
        os << header_[i] << (i + 1 == header_.size() ? "\n" : ",");
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << row[i] << (i + 1 == row.size() ? "\n" : ",");
    }
    return os.str();
}

int CsvTable::col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return int(i);
    return -1;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("# config_digest=", 0) == 0) {
            t.digest = std::strtoull(line.c_str() + 16, nullptr, 16);
            t.has_digest = true;
            continue;
        }
        if (line[0] == '#') continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
        } else {
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

namespace {

struct Axis {
    double lo = 0.0, hi = 1.0;
    bool log = false;

    double map(double v, double px0, double px1) const {
        double a = lo, b = hi, x = v;
        if (log) {
            a = std::log10(lo);
            b = std::log10(hi);
            x = std::log10(v);
        }
        if (b == a) return px0;
        return px0 + (x - a) / (b - a) * (px1 - px0);
    }
};

const char* kPalette[] = {"#1f6fb4", "#d45500", "#2b8a3e", "#a11d33",
                          "#6a4fa3", "#8a6d1f", "#1d7a8a", "#555555"};

std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '&') o += "&amp;";
        else if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else o += c;
    }
    return o;
}

}  // namespace

std::string render_svg(const PlotSpec& spec, std::uint64_t digest) {
    require(!spec.series.empty(), Err::domain, "plot needs at least one series");
    for (const auto& s : spec.series)
        require(s.x.size() == s.y.size(), Err::domain, "series x/y length mismatch");

    const double W = 960, H = 640, ml = 80, mr = 24, mt = 48, mb = 56;
    const double px0 = ml, px1 = W - mr, py0 = H - mb, py1 = mt;

    Axis xa, ya;
    xa.log = spec.logx;
    ya.log = spec.logy;
    bool any = false;
    double xlo = 0, xhi = 0, ylo = 0, yhi = 0;
    for (const auto& s : spec.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double x = s.x[i], y = s.y[i];
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            if (spec.logx && x <= 0.0) continue;
            if (spec.logy && y <= 0.0) continue;
            if (!any) {
                xlo = xhi = x;
                ylo = yhi = y;
                any = true;
            }
            xlo = std::min(xlo, x);
            xhi = std::max(xhi, x);
            ylo = std::min(ylo, y);
            yhi = std::max(yhi, y);
        }
    require(any, Err::domain, "plot series contain no drawable points");
    if (xlo == xhi) {
        xlo = spec.logx ? xlo * 0.5 : xlo - 1.0;
        xhi = spec.logx ? xhi * 2.0 : xhi + 1.0;
    }
    if (ylo == yhi) {
        ylo = spec.logy ? ylo * 0.5 : ylo - 1.0;
        yhi = spec.logy ? yhi * 2.0 : yhi + 1.0;
    }
    xa.lo = xlo;
    xa.hi = xhi;
    ya.lo = ylo;
    ya.hi = yhi;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    os << "<!-- config_digest=";
    {
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
        os << buf;
    }
    os << " -->\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
          "font-family=\"sans-serif\">"
       << esc(spec.title) << "</text>\n";

    auto tick_values = [](const Axis& a) {
        std::vector<double> v;
        if (a.log) {
            const int e0 = int(std::floor(std::log10(a.lo)));
            const int e1 = int(std::ceil(std::log10(a.hi)));
            for (int e = e0; e <= e1; ++e) v.push_back(std::pow(10.0, e));
        } else {
            const double span = a.hi - a.lo;
            const double step = std::pow(10.0, std::floor(std::log10(span / 5.0)));
            const double s2 = span / step > 10.0 ? step * 2.0 : step;
            double t = std::ceil(a.lo / s2) * s2;
            for (; t <= a.hi + 1e-12 * span; t += s2) v.push_back(t);
        }
        return v;
    };

    for (double tx : tick_values(xa)) {
        if (tx < xa.lo || tx > xa.hi) continue;
        const double px = xa.map(tx, px0, px1);
        os << "<line x1=\"" << format_short(px) << "\" y1=\"" << py0 << "\" x2=\""
           << format_short(px) << "\" y2=\"" << py1 << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << format_short(px) << "\" y=\"" << py0 + 18
           << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
           << format_short(tx) << "</text>\n";
    }
    for (double ty : tick_values(ya)) {
        if (ty < ya.lo || ty > ya.hi) continue;
        const double py = py0 - (ya.map(ty, 0, 1)) * (py0 - py1);
        os << "<line x1=\"" << px0 << "\" y1=\"" << format_short(py) << "\" x2=\"" << px1
           << "\" y2=\"" << format_short(py) << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << px0 - 6 << "\" y=\"" << format_short(py + 4)
           << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
           << format_short(ty) << "</text>\n";
    }
    os << "<rect x=\"" << px0 << "\" y=\"" << py1 << "\" width=\"" << px1 - px0 << "\" height=\""
       << py0 - py1 << "\" fill=\"none\" stroke=\"#333333\"/>\n";
    os << "<text x=\"" << (px0 + px1) / 2 << "\" y=\"" << H - 14
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">"
       << esc(spec.xlabel) << "</text>\n";
    os << "<text x=\"20\" y=\"" << (py0 + py1) / 2
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
          "transform=\"rotate(-90 20 "
       << (py0 + py1) / 2 << ")\">" << esc(spec.ylabel) << "</text>\n";

    for (const auto& sp : spec.spans) {
        const double y = py1 + 14 + 14 * sp.lane;
        const double a = xa.map(std::max(sp.x0, xa.lo), px0, px1);
        const double b = xa.map(std::min(sp.x1, xa.hi), px0, px1);
        if (!(b > a)) continue;
        os << "<line x1=\"" << format_short(a) << "\" y1=\"" << format_short(y) << "\" x2=\""
           << format_short(b) << "\" y2=\"" << format_short(y) << "\" stroke=\""
           << (sp.color.empty() ? "#888888" : sp.color) << "\" stroke-width=\"3\"/>\n";
        os << "<text x=\"" << format_short((a + b) / 2) << "\" y=\"" << format_short(y - 3)
           << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">"
           << esc(sp.label) << "</text>\n";
    }

    int ci = 0;
    double legend_y = py1 + 16;
    for (const auto& s : spec.series) {
        const std::string color = s.color.empty() ? kPalette[ci % 8] : s.color;
        ++ci;
        auto px = [&](double v) { return xa.map(v, px0, px1); };
        auto py = [&](double v) { return py0 - ya.map(v, 0, 1) * (py0 - py1); };
        if (s.points_only) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (spec.logx && s.x[i] <= 0.0) continue;
                if (spec.logy && s.y[i] <= 0.0) continue;
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                os << "<circle cx=\"" << format_short(px(s.x[i])) << "\" cy=\""
                   << format_short(py(s.y[i])) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
            }
        } else {
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
            if (s.dashed) os << " stroke-dasharray=\"6 4\"";
            os << " points=\"";
            bool first = true;
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (spec.logx && s.x[i] <= 0.0) continue;
                if (spec.logy && s.y[i] <= 0.0) continue;
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                if (!first) os << " ";
                first = false;
                os << format_short(px(s.x[i])) << "," << format_short(py(s.y[i]));
            }
            os << "\"/>\n";
        }
        os << "<text x=\"" << px1 - 8 << "\" y=\"" << format_short(legend_y)
           << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\" fill=\"" << color
           << "\">" << esc(s.name) << "</text>\n";
        legend_y += 14;
    }
    os << "</svg>\n";
    return os.str();
}

void write_paths_binary(const std::string& path, const PathsFile& pf) {
    std::ofstream out(path, std::ios::binary);
    require(bool(out), Err::io, "cannot open " + path + " for writing");
    const char magic[4] = {'J', 'L', 'P', 'B'};
    std::uint32_t version = 1;
    std::uint32_t d = std::uint32_t(pf.d);
    std::uint32_t nt = std::uint32_t(pf.times.size());
    out.write(magic, 4);
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&pf.digest), 8);
    out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(&pf.n_paths), 8);
    out.write(reinterpret_cast<const char*>(&nt), 4);
    out.write(reinterpret_cast<const char*>(pf.times.data()), std::streamsize(8 * pf.times.size()));
    out.write(reinterpret_cast<const char*>(pf.data.data()), std::streamsize(8 * pf.data.size()));
    require(bool(out), Err::io, "write failed for " + path);
}

PathsFile read_paths_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(bool(in), Err::missing_input, "missing paths file " + path);
    char magic[4];
    in.read(magic, 4);
    require(bool(in) && std::memcmp(magic, "JLPB", 4) == 0, Err::parse,
            path + " is not a paths file");
    std::uint32_t version = 0, d = 0, nt = 0;
    PathsFile pf;
    in.read(reinterpret_cast<char*>(&version), 4);
    require(version == 1, Err::parse, "unsupported paths file version");
    in.read(reinterpret_cast<char*>(&pf.digest), 8);
    in.read(reinterpret_cast<char*>(&d), 4);
    in.read(reinterpret_cast<char*>(&pf.n_paths), 8);
    in.read(reinterpret_cast<char*>(&nt), 4);
    require(bool(in), Err::parse, "truncated paths file header");
    pf.d = int(d);
    pf.times.resize(nt);
    in.read(reinterpret_cast<char*>(pf.times.data()), std::streamsize(8 * nt));
    pf.data.resize(pf.n_paths * std::size_t(nt) * d);
    in.read(reinterpret_cast<char*>(pf.data.data()), std::streamsize(8 * pf.data.size()));
    require(bool(in), Err::parse, "truncated paths file payload");
    return pf;
}

std::string paths_to_csv(const PathsFile& pf) {
    std::vector<std::string> header{"path_index", "t"};
    for (int c = 1; c <= pf.d; ++c) header.push_back("x_" + std::to_string(c));
    CsvBuilder csv(std::move(header));
    for (std::uint64_t p = 0; p < pf.n_paths; ++p)
        for (std::size_t ti = 0; ti < pf.times.size(); ++ti) {
            std::vector<std::string> row{std::to_string(p), format_full(pf.times[ti])};
            const double* x = pf.at(p, ti);
            for (int c = 0; c < pf.d; ++c) row.push_back(format_full(x[c]));
            csv.add(std::move(row));
        }
    return csv.str(pf.digest);
}

}  // namespace jumplab
