#include "coagfrag/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace coagfrag {

Grid Grid::interval(double length, int cells) {
    if (!(length > 0.0) || cells < 1) throw std::invalid_argument("Grid: positive length and cells required");
    Grid g;
    g.dim_ = 1;
    g.lengths_ = {length, 1.0};
    g.cells_ = {cells, 1};
    g.volume_ = length / cells;
    return g;
}

Grid Grid::rectangle(double length_x, double length_y, int cells_x, int cells_y) {
    if (!(length_x > 0.0) || !(length_y > 0.0) || cells_x < 1 || cells_y < 1)
        throw std::invalid_argument("Grid: positive lengths and cells required");
    Grid g;
    g.dim_ = 2;
    g.lengths_ = {length_x, length_y};
    g.cells_ = {cells_x, cells_y};
    g.volume_ = (length_x / cells_x) * (length_y / cells_y);
    return g;
}

double Grid::center(int index, int axis) const {
    const int nx = cells_[0];
    const int along = (axis == 0) ? index % nx : index / nx;
    return (along + 0.5) * spacing(axis);
}

double integrate(const Grid& g, const Field& f) {
    double s = 0.0;
    for (double v : f.v) s += v;
    return g.cell_volume() * s;
}

Field laplacian(const Grid& g, const Field& f) {
    Field out(g);
    const int nx = g.cells(0);
    const double ix2 = 1.0 / (g.spacing(0) * g.spacing(0));
    if (g.dim() == 1) {
        for (int i = 0; i < nx; ++i) {
            const double left = f[std::size_t(i > 0 ? i - 1 : 0)];          // reflective ghost
            const double right = f[std::size_t(i < nx - 1 ? i + 1 : nx - 1)];
            out[std::size_t(i)] = (left - 2.0 * f[std::size_t(i)] + right) * ix2;
        }
        return out;
    }
    const int ny = g.cells(1);
    const double iy2 = 1.0 / (g.spacing(1) * g.spacing(1));
    for (int jy = 0; jy < ny; ++jy) {
        for (int jx = 0; jx < nx; ++jx) {
            const std::size_t c = std::size_t(jy) * nx + jx;
            const double w = f[c - (jx > 0 ? 1 : 0)];
            const double e = f[c + (jx < nx - 1 ? 1 : 0)];
            const double s = f[c - std::size_t(jy > 0 ? nx : 0)];
            const double nn = f[c + std::size_t(jy < ny - 1 ? nx : 0)];
            out[c] = (w - 2.0 * f[c] + e) * ix2 + (s - 2.0 * f[c] + nn) * iy2;
        }
    }
    return out;
}

namespace detail {

void neumann_heat_line_solve(double* x, int m, std::ptrdiff_t stride, double mu,
                             std::vector<double>& scratch) {
    // Thomas algorithm for the M-matrix with diagonal 1+2mu (1+mu at the two
    // Neumann ends) and off-diagonals -mu. Row sums are 1, so the cell sum of
    // the solution equals the cell sum of the input up to roundoff.
    if (m == 1) return;
    scratch.resize(std::size_t(m));
    double diag = 1.0 + mu;
    scratch[0] = -mu / diag;
    x[0] /= diag;
    for (int i = 1; i < m; ++i) {
        const double b = (i == m - 1) ? 1.0 + mu : 1.0 + 2.0 * mu;
        diag = b + mu * scratch[std::size_t(i - 1)];
        scratch[std::size_t(i)] = -mu / diag;
        x[i * stride] = (x[i * stride] + mu * x[(i - 1) * stride]) / diag;
    }
    for (int i = m - 2; i >= 0; --i)
        x[i * stride] -= scratch[std::size_t(i)] * x[(i + 1) * stride];
}

void diffuse_inplace(const Grid& g, std::vector<double>& values, double d, double dt,
                     DiffusionWorkspace& ws) {
    const int nx = g.cells(0);
    const double mux = d * dt / (g.spacing(0) * g.spacing(0));
    if (g.dim() == 1) {
        neumann_heat_line_solve(values.data(), nx, 1, mux, ws.scratch);
        return;
    }
    const int ny = g.cells(1);
    const double muy = d * dt / (g.spacing(1) * g.spacing(1));
    for (int jy = 0; jy < ny; ++jy)
        neumann_heat_line_solve(values.data() + std::size_t(jy) * nx, nx, 1, mux, ws.scratch);
    for (int jx = 0; jx < nx; ++jx)
        neumann_heat_line_solve(values.data() + jx, ny, nx, muy, ws.scratch);
}

}

Field diffuse(const Grid& g, const Field& f, double d, double dt) {
    if (!(d > 0.0) || !(dt > 0.0)) throw std::invalid_argument("diffuse: d > 0 and dt > 0 required");
    for (double v : f.v)
        if (!std::isfinite(v)) throw std::invalid_argument("diffuse: non-finite input field");
    Field out = f;
    detail::DiffusionWorkspace ws;
    detail::diffuse_inplace(g, out.v, d, dt, ws);
    return out;
}

}
