#include "lagmc/grid.hpp"

#include "lagmc/error.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace lagmc {

static_assert(std::endian::native == std::endian::little, "binary field format assumes a little-endian host");

Grid::Grid(std::vector<double> lo, std::vector<double> hi, std::vector<int> points)
    : n_(static_cast<int>(points.size())), lo_(std::move(lo)), hi_(std::move(hi)), points_(std::move(points)) {
    if (n_ < 2 || n_ > 3) throw InvalidArgument("grid dimension must be 2 or 3");
    if (lo_.size() != points_.size() || hi_.size() != points_.size())
        throw InvalidArgument("grid extent and point counts differ in length");
    h_.resize(points_.size());
    stride_.assign(points_.size(), 1);
    size_ = 1;
    for (std::size_t a = 0; a < points_.size(); ++a) {
        if (points_[a] < 5) throw InvalidArgument("grid needs at least 5 points per axis");
        if (!(hi_[a] > lo_[a]) || !std::isfinite(lo_[a]) || !std::isfinite(hi_[a]))
            throw InvalidArgument("grid extent must satisfy lo < hi");
        h_[a] = (hi_[a] - lo_[a]) / (points_[a] - 1);
        size_ *= static_cast<std::size_t>(points_[a]);
    }
    for (int a = n_ - 2; a >= 0; --a)
        stride_[static_cast<std::size_t>(a)] = stride_[static_cast<std::size_t>(a) + 1] * static_cast<std::size_t>(points_[static_cast<std::size_t>(a) + 1]);
}

Grid Grid::cube(int n, double lo, double hi, int points) {
    return Grid(std::vector<double>(static_cast<std::size_t>(n), lo), std::vector<double>(static_cast<std::size_t>(n), hi),
                std::vector<int>(static_cast<std::size_t>(n), points));
}

int Grid::max_points() const { return *std::max_element(points_.begin(), points_.end()); }

std::size_t Grid::index(const MultiIndex& m) const {
    std::size_t idx = 0;
    for (int a = 0; a < n_; ++a) idx += static_cast<std::size_t>(m[static_cast<std::size_t>(a)]) * stride_[static_cast<std::size_t>(a)];
    return idx;
}

MultiIndex Grid::multi(std::size_t node) const {
    MultiIndex m{0, 0, 0};
    for (int a = 0; a < n_; ++a) {
        m[static_cast<std::size_t>(a)] = static_cast<int>(node / stride_[static_cast<std::size_t>(a)]);
        node %= stride_[static_cast<std::size_t>(a)];
    }
    return m;
}

Point Grid::coord(std::size_t node) const {
    const MultiIndex m = multi(node);
    Point p{0.0, 0.0, 0.0};
    for (int a = 0; a < n_; ++a) {
        const auto s = static_cast<std::size_t>(a);
        // Exact endpoints on the last node.
        p[s] = m[s] == points_[s] - 1 ? hi_[s] : lo_[s] + m[s] * h_[s];
    }
    return p;
}

bool Grid::interior(std::size_t node, int layers) const {
    const MultiIndex m = multi(node);
    for (int a = 0; a < n_; ++a) {
        const auto s = static_cast<std::size_t>(a);
        if (m[s] < layers || m[s] > points_[s] - 1 - layers) return false;
    }
    return true;
}

Point Grid::center() const {
    Point c{0.0, 0.0, 0.0};
    for (int a = 0; a < n_; ++a) c[static_cast<std::size_t>(a)] = 0.5 * (lo(a) + hi(a));
    return c;
}

std::size_t Grid::center_node() const {
    MultiIndex m{0, 0, 0};
    const Point c = center();
    for (int a = 0; a < n_; ++a) {
        const auto s = static_cast<std::size_t>(a);
        m[s] = std::clamp(static_cast<int>(std::lround((c[s] - lo_[s]) / h_[s])), 0, points_[s] - 1);
    }
    return index(m);
}

double Grid::circumradius() const {
    double r2 = 0.0;
    for (int a = 0; a < n_; ++a) r2 += 0.25 * (hi(a) - lo(a)) * (hi(a) - lo(a));
    return std::sqrt(r2);
}

double Grid::inradius() const {
    double r = std::numeric_limits<double>::infinity();
    for (int a = 0; a < n_; ++a) r = std::min(r, 0.5 * (hi(a) - lo(a)));
    return r;
}

bool Grid::operator==(const Grid& o) const { return lo_ == o.lo_ && hi_ == o.hi_ && points_ == o.points_; }

GridField::GridField(Grid grid, double fill) : grid_(std::move(grid)), data_(grid_.size(), fill) {}

GridField::GridField(Grid grid, std::vector<double> data) : grid_(std::move(grid)), data_(std::move(data)) {
    if (data_.size() != grid_.size()) throw InvalidArgument("field data length does not match the grid");
}

double GridField::max() const { return *std::max_element(data_.begin(), data_.end()); }
double GridField::min() const { return *std::min_element(data_.begin(), data_.end()); }
double GridField::sup_norm() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_difference(const GridField& a, const GridField& b) {
    if (!(a.grid() == b.grid())) throw InvalidArgument("fields live on different grids");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

namespace {

std::string shortest(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string seventeen(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw InvalidArgument("malformed number in field file: '" + std::string(s) + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

std::string field_of(const std::string& header, const std::string& key) {
    const std::string tag = key + "=";
    for (auto part : split(header, ';')) {
        const auto pos = part.find_first_not_of(' ');
        if (pos == std::string::npos) continue;
        part = part.substr(pos);
        if (part.rfind(tag, 0) == 0) return part.substr(tag.size());
    }
    throw InvalidArgument("field header lacks '" + key + "'");
}

}  // namespace

void write_field_text(std::ostream& os, const GridField& f) {
    const Grid& g = f.grid();
    os << "LAGMC-FIELD v1; n=" << g.dim() << "; points=";
    for (int a = 0; a < g.dim(); ++a) os << (a ? "," : "") << g.points(a);
    os << "; extent=";
    for (int a = 0; a < g.dim(); ++a) os << (a ? ";" : "") << shortest(g.lo(a)) << "," << shortest(g.hi(a));
    os << "\n";
    for (double v : f.data()) os << seventeen(v) << "\n";
}

GridField read_field_text(std::istream& is) {
    std::string header;
    if (!std::getline(is, header) || header.rfind("LAGMC-FIELD v1;", 0) != 0)
        throw InvalidArgument("not a LAGMC-FIELD v1 text file");
    const int n = static_cast<int>(parse_double(field_of(header, "n")));
    std::vector<int> points;
    for (const auto& p : split(field_of(header, "points"), ',')) points.push_back(static_cast<int>(parse_double(p)));
    // extent=lo,hi;lo,hi: the ';' separators collide with the header's, so
    // take everything after "extent=".
    const auto epos = header.find("extent=");
    if (epos == std::string::npos) throw InvalidArgument("field header lacks 'extent'");
    std::vector<double> lo, hi;
    for (const auto& pair : split(header.substr(epos + 7), ';')) {
        auto v = split(pair, ',');
        if (v.size() != 2) throw InvalidArgument("malformed extent in field header");
        lo.push_back(parse_double(v[0]));
        hi.push_back(parse_double(v[1]));
    }
    if (static_cast<int>(points.size()) != n) throw InvalidArgument("points list length differs from n");
    Grid g(lo, hi, points);
    std::vector<double> data;
    data.reserve(g.size());
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        data.push_back(parse_double(line));
    }
    return GridField(g, std::move(data));
}

void write_field_binary(std::ostream& os, const GridField& f) {
    const Grid& g = f.grid();
    os.write("LMC1", 4);
    const auto n = static_cast<std::uint32_t>(g.dim());
    os.write(reinterpret_cast<const char*>(&n), 4);
    for (int a = 0; a < g.dim(); ++a) {
        const auto p = static_cast<std::uint32_t>(g.points(a));
        os.write(reinterpret_cast<const char*>(&p), 4);
    }
    for (int a = 0; a < g.dim(); ++a) {
        const double lo = g.lo(a), hi = g.hi(a);
        os.write(reinterpret_cast<const char*>(&lo), 8);
        os.write(reinterpret_cast<const char*>(&hi), 8);
    }
    os.write(reinterpret_cast<const char*>(f.data().data()), static_cast<std::streamsize>(8 * f.size()));
}

GridField read_field_binary(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "LMC1", 4) != 0) throw InvalidArgument("not an LMC1 binary field");
    std::uint32_t n = 0;
    is.read(reinterpret_cast<char*>(&n), 4);
    if (!is || n < 2 || n > 3) throw InvalidArgument("binary field has invalid dimension");
    std::vector<int> points(n);
    for (auto& p : points) {
        std::uint32_t v = 0;
        is.read(reinterpret_cast<char*>(&v), 4);
        p = static_cast<int>(v);
    }
    std::vector<double> lo(n), hi(n);
    for (std::uint32_t a = 0; a < n; ++a) {
        is.read(reinterpret_cast<char*>(&lo[a]), 8);
        is.read(reinterpret_cast<char*>(&hi[a]), 8);
    }
    if (!is) throw InvalidArgument("truncated binary field header");
    Grid g(lo, hi, points);
    std::vector<double> data(g.size());
    if (!is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(8 * data.size())))
        throw InvalidArgument("truncated binary field data");
    return GridField(g, std::move(data));
}

void write_field_file(const std::string& path, const GridField& f, bool binary) {
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) throw Error("cannot open " + path + " for writing");
    if (binary) write_field_binary(os, f);
    else write_field_text(os, f);
    if (!os) throw Error("write failed for " + path);
}

GridField read_field_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    char magic[4] = {};
    is.read(magic, 4);
    is.seekg(0);
    if (is && std::memcmp(magic, "LMC1", 4) == 0) return read_field_binary(is);
    return read_field_text(is);
}

}  // namespace lagmc
