#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace andlab {

inline constexpr const char* kLibraryVersion = "0.3.0";

using Json = nlohmann::json;

// Writes to a sibling temp file and renames over the target, so readers never see a partial file.
inline void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), std::streamsize(bytes.size()));
        out.flush();
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("rename to " + path.string() + " failed: " + ec.message());
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Shortest text that round-trips, so outputs are reproducible byte for byte.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

// Fixed significant digits; hides last-bit noise from dense eigensolvers.
inline std::string fmt_sig(double v, int digits = 15) {
    if (!std::isfinite(v)) return fmt(v);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) {
        require(row.size() == header.size(), "csv row width differs from header");
        rows.push_back(std::move(row));
    }

    // leading '#' lines carry the provenance header; the rest is plain RFC 4180 with CRLF
    std::string str(const Json& meta = nullptr) const {
        std::string out;
        if (!meta.is_null()) out += "# " + meta.dump() + "\r\n";
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + csv_field(r[i]);
            out += "\r\n";
        };
        line(header);
        for (const auto& r : rows) line(r);
        return out;
    }
};

// ALAB1: 5-byte magic, u64 rows, u64 cols, then row-major little-endian float64.
inline std::string alab1_encode(const Eigen::MatrixXd& M) {
    static_assert(std::endian::native == std::endian::little, "ALAB1 writer assumes a little-endian host");
    std::string out = "ALAB1";
    auto put64 = [&](std::uint64_t v) {
        char b[8];
        std::memcpy(b, &v, 8);
        out.append(b, 8);
    };
    put64(std::uint64_t(M.rows()));
    put64(std::uint64_t(M.cols()));
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) put64(std::bit_cast<std::uint64_t>(M(i, j)));
    return out;
}

inline Eigen::MatrixXd alab1_decode(const std::string& bytes) {
    if (bytes.size() < 21 || bytes.compare(0, 5, "ALAB1") != 0) throw FormatError("not an ALAB1 stream");
    auto get64 = [&](std::size_t off) {
        std::uint64_t v;
        std::memcpy(&v, bytes.data() + off, 8);
        return v;
    };
    const std::uint64_t r = get64(5), c = get64(13);
    if (r > (1u << 20) || c > (1u << 20) || bytes.size() != 21 + 8 * r * c) throw FormatError("ALAB1 size mismatch");
    Eigen::MatrixXd M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    std::size_t off = 21;
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j, off += 8) M(i, j) = std::bit_cast<double>(get64(off));
    return M;
}

// Minimal standalone SVG: scatter points plus optional polylines.
struct SvgPlot {
    std::string title, xlabel, ylabel;
    struct Series {
        std::vector<double> x, y;
        std::string colour = "#1f77b4";
        bool line = false;
    };
    std::vector<Series> series;
    std::string comment;  // embedded as an XML comment (resolved config)

    std::string str() const {
        const double W = 640, H = 440, ml = 70, mr = 20, mt = 40, mb = 55;
        double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
        for (const auto& s : series)
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                x0 = std::min(x0, s.x[i]);
                x1 = std::max(x1, s.x[i]);
                y0 = std::min(y0, s.y[i]);
                y1 = std::max(y1, s.y[i]);
            }
        if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
        if (x1 == x0) x1 = x0 + 1;
        if (y1 == y0) y1 = y0 + 1;
        auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
        auto py = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };
        auto esc = [](const std::string& s) {
            std::string o;
            for (char c : s) o += c == '<' ? "&lt;" : c == '>' ? "&gt;" : c == '&' ? "&amp;" : std::string(1, c);
            return o;
        };
        std::ostringstream o;
        o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
        if (!comment.empty()) {
            std::string c = comment;
            for (std::size_t p; (p = c.find("--")) != std::string::npos;) c.replace(p, 2, "- -");
            o << "<!-- " << c << " -->\n";
        }
        o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
          << esc(title) << "</text>\n";
        o << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
          << "\" stroke=\"black\"/>\n";
        o << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
        for (int k = 0; k <= 4; ++k) {
            const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
            o << "<text x=\"" << px(xv) << "\" y=\"" << H - mb + 16
              << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(std::round(xv * 1000) / 1000)
              << "</text>\n";
            o << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 4
              << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(std::round(yv * 1000) / 1000)
              << "</text>\n";
        }
        o << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
          << esc(xlabel) << "</text>\n";
        o << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
          << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << esc(ylabel) << "</text>\n";
        for (const auto& s : series) {
            if (s.line) {
                o << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\"1.5\" points=\"";
                for (std::size_t i = 0; i < s.x.size(); ++i)
                    if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) o << px(s.x[i]) << "," << py(s.y[i]) << " ";
                o << "\"/>\n";
            } else {
                for (std::size_t i = 0; i < s.x.size(); ++i)
                    if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
                        o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"1.6\" fill=\"" << s.colour
                          << "\" fill-opacity=\"0.5\"/>\n";
            }
        }
        o << "</svg>\n";
        return o.str();
    }
};

}  // namespace andlab
