#include "eulermix/grid.hpp"

#include <cmath>

namespace eulermix {

Grid::Grid(int dim, int nx, int ny) : dim_(dim), nx_(nx), ny_(ny) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("grid: cell counts must be >= 1");
    hx_ = 1.0 / nx;
    hy_ = dim == 1 ? 1.0 : 1.0 / ny;
    const int n = nx * ny;
    volumes_.assign(n, 1.0 / n);
    centers_.resize(n);
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            centers_[iy * nx + ix] = {(ix + 0.5) * hx_, dim == 1 ? 0.0 : (iy + 0.5) * hy_};
        }
    }
}

std::shared_ptr<const Grid> Grid::interval(int cells) {
    return std::shared_ptr<const Grid>(new Grid(1, cells, 1));
}

std::shared_ptr<const Grid> Grid::box(int nx, int ny) {
    return std::shared_ptr<const Grid>(new Grid(2, nx, ny));
}

GridMeasure::GridMeasure(GridPtr grid, std::vector<double> masses)
    : grid_(std::move(grid)), masses_(std::move(masses)) {
    if (!grid_) throw std::invalid_argument("measure: null grid");
    if (static_cast<int>(masses_.size()) != grid_->cell_count())
        throw std::invalid_argument("measure: mass vector size does not match grid");
    double total = 0.0;
    for (double m : masses_) {
        if (!(m >= 0.0)) throw std::invalid_argument("measure: negative or NaN mass");
        total += m;
    }
    if (std::abs(total - 1.0) > 1e-10)
        throw std::invalid_argument("measure: masses sum to " + std::to_string(total) +
                                    ", expected 1");
}

GridMeasure lebesgue(const GridPtr& grid) {
    return GridMeasure(grid, grid->volumes());
}

double entropy(const GridMeasure& mu) {
    double acc = 0.0;
    for (int i = 0; i < mu.size(); ++i) {
        const double m = mu.mass(i);
        if (m <= 0.0) continue;
        const double v = mu.grid().volume(i);
        // m*log(m/v) = m*log1p((m-v)/v); the subtraction m-v is exact for
        // m near v, which keeps the sum accurate close to equilibrium.
        acc += m * std::log1p((m - v) / v);
    }
    return acc;
}

double congestion(const GridMeasure& mu, double q) {
    if (!(q > 1.0)) throw std::invalid_argument("congestion: requires q > 1");
    double acc = 0.0;
    for (int i = 0; i < mu.size(); ++i) {
        const double m = mu.mass(i);
        const double v = mu.grid().volume(i);
        if (m <= 0.0) {
            acc -= v;  // v*(0^q - 1)
        } else {
            acc += v * std::expm1(q * std::log1p((m - v) / v));
        }
    }
    return acc;
}

double l1_distance(const GridMeasure& mu, const GridMeasure& nu) {
    if (!mu.same_grid(nu)) throw std::invalid_argument("l1_distance: grid mismatch");
    double acc = 0.0;
    for (int i = 0; i < mu.size(); ++i) acc += std::abs(mu.mass(i) - nu.mass(i));
    return acc;
}

GridMeasure mix(const GridMeasure& mu, const GridMeasure& nu, double s) {
    if (!mu.same_grid(nu)) throw std::invalid_argument("mix: grid mismatch");
    if (s < 0.0 || s > 1.0) throw std::invalid_argument("mix: s outside [0,1]");
    std::vector<double> m(mu.size());
    for (int i = 0; i < mu.size(); ++i) m[i] = (1.0 - s) * mu.mass(i) + s * nu.mass(i);
    return GridMeasure(mu.grid_ptr(), std::move(m));
}

}  // namespace eulermix
