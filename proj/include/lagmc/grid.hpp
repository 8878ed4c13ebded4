#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lagmc {

using Point = std::array<double, 3>;  // unused trailing coordinates are 0
using MultiIndex = std::array<int, 3>;

// Uniform rectangular grid in 2 or 3 dimensions, row-major with the first
// axis varying slowest.
class Grid {
public:
    Grid(std::vector<double> lo, std::vector<double> hi, std::vector<int> points);
    static Grid cube(int n, double lo, double hi, int points);

    int dim() const { return n_; }
    int points(int axis) const { return points_[static_cast<std::size_t>(axis)]; }
    double lo(int axis) const { return lo_[static_cast<std::size_t>(axis)]; }
    double hi(int axis) const { return hi_[static_cast<std::size_t>(axis)]; }
    double spacing(int axis) const { return h_[static_cast<std::size_t>(axis)]; }
    std::size_t stride(int axis) const { return stride_[static_cast<std::size_t>(axis)]; }
    std::size_t size() const { return size_; }
    int max_points() const;

    std::size_t index(const MultiIndex& m) const;
    MultiIndex multi(std::size_t node) const;
    Point coord(std::size_t node) const;
    // At least `layers` nodes away from every face.
    bool interior(std::size_t node, int layers = 1) const;
    // Nearest node to the box center.
    std::size_t center_node() const;
    // Center of the box and half-diagonal (circumscribed radius).
    Point center() const;
    double circumradius() const;
    double inradius() const;  // half of the shortest side

    bool operator==(const Grid& other) const;

private:
    int n_;
    std::vector<double> lo_, hi_, h_;
    std::vector<int> points_;
    std::vector<std::size_t> stride_;
    std::size_t size_;
};

class GridField {
public:
    explicit GridField(Grid grid, double fill = 0.0);
    GridField(Grid grid, std::vector<double> data);

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return data_.size(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    double max() const;
    double min() const;
    double sup_norm() const;

private:
    Grid grid_;
    std::vector<double> data_;
};

template <class F>
GridField sample(const Grid& g, F&& f) {
    GridField out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = f(g.coord(i));
    return out;
}

double max_abs_difference(const GridField& a, const GridField& b);

// Text format: header line, then one value per line with 17 significant digits.
void write_field_text(std::ostream& os, const GridField& f);
GridField read_field_text(std::istream& is);
// Binary twin: "LMC1", uint32 n, uint32 points[n], f64 (lo, hi)[n], f64 values; little-endian.
void write_field_binary(std::ostream& os, const GridField& f);
GridField read_field_binary(std::istream& is);

void write_field_file(const std::string& path, const GridField& f, bool binary = false);
GridField read_field_file(const std::string& path);

}  // namespace lagmc
