#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace coagfrag {

/// Uniform cell-centered grid on an interval (dim 1) or rectangle (dim 2),
/// with homogeneous Neumann boundary conditions handled by reflective ghost
/// cells in every operator.
class Grid {
public:
    Grid() = default;
    static Grid interval(double length, int cells);
    static Grid rectangle(double length_x, double length_y, int cells_x, int cells_y);

    int dim() const { return dim_; }
    double length(int axis) const { return lengths_[std::size_t(axis)]; }
    int cells(int axis) const { return cells_[std::size_t(axis)]; }
    int cell_count() const { return cells_[0] * cells_[1]; }
    double spacing(int axis) const { return lengths_[std::size_t(axis)] / cells_[std::size_t(axis)]; }
    double cell_volume() const { return volume_; }

    /// Center coordinate of cell `index` along `axis` (row-major, x fastest).
    double center(int index, int axis) const;

    bool operator==(const Grid&) const = default;

private:
    int dim_ = 1;
    std::array<double, 2> lengths_{1.0, 1.0};
    std::array<int, 2> cells_{1, 1};
    double volume_ = 1.0;
};

/// Spatial sample of one scalar quantity, one value per grid cell.
struct Field {
    std::vector<double> v;

    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0) : v(std::size_t(g.cell_count()), fill) {}
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
    std::size_t size() const { return v.size(); }
};

/// Midpoint-rule integral over the domain: cell_volume * sum of values,
/// accumulated in index order.
double integrate(const Grid& g, const Field& f);

/// Second-order Neumann Laplacian (3-point in 1D, 5-point in 2D, reflective
/// ghosts). The result sums to zero over the domain up to roundoff.
Field laplacian(const Grid& g, const Field& f);

/// One backward-Euler diffusion step: solves (I - dt*d*Lap) g = f.
/// 1D: direct tridiagonal solve. 2D: two alternating-direction 1D solves
/// (x then y), each an M-matrix solve, so nonnegativity and the cell sum are
/// preserved. Throws std::invalid_argument on non-finite input or
/// nonpositive d, dt.
Field diffuse(const Grid& g, const Field& f, double d, double dt);

namespace detail {

/// Scratch for repeated in-place diffusion solves (no allocation per call).
struct DiffusionWorkspace {
    std::vector<double> scratch, line;
};

/// In-place variant of diffuse() without the finiteness check.
void diffuse_inplace(const Grid& g, std::vector<double>& values, double d, double dt,
                     DiffusionWorkspace& ws);

/// Solves (I - mu*Lap_1d) x = rhs on a strided line of length m; rhs and x
/// may alias. Neumann rows: ends carry diagonal 1+mu, interior 1+2*mu.
void neumann_heat_line_solve(double* x, int m, std::ptrdiff_t stride, double mu,
                             std::vector<double>& scratch);

}

}
