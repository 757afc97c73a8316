#pragma once

#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace eulermix {

/// Uniform rectangular discretization of the unit interval [0,1] or the
/// unit box [0,1]^2. Cell volumes sum to 1 so that the uniform measure is
/// a probability measure.
class Grid {
public:
    static std::shared_ptr<const Grid> interval(int cells);
    static std::shared_ptr<const Grid> box(int nx, int ny);

    int dim() const { return dim_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int cell_count() const { return nx_ * ny_; }

    double cell_width_x() const { return hx_; }
    double cell_width_y() const { return hy_; }
    /// Largest cell extent, the resolution scale h used in tolerances.
    double max_cell_width() const { return dim_ == 1 ? hx_ : std::max(hx_, hy_); }

    double volume(int i) const { return volumes_[i]; }
    const std::vector<double>& volumes() const { return volumes_; }
    std::array<double, 2> center(int i) const { return centers_[i]; }

    int index(int ix, int iy) const { return iy * nx_ + ix; }

    bool operator==(const Grid& other) const {
        return dim_ == other.dim_ && nx_ == other.nx_ && ny_ == other.ny_;
    }

private:
    Grid(int dim, int nx, int ny);

    int dim_;
    int nx_, ny_;
    double hx_, hy_;
    std::vector<double> volumes_;
    std::vector<std::array<double, 2>> centers_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Nonnegative cell masses summing to 1 on a shared grid.
class GridMeasure {
public:
    GridMeasure(GridPtr grid, std::vector<double> masses);

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    const std::vector<double>& masses() const { return masses_; }
    double mass(int i) const { return masses_[i]; }
    int size() const { return static_cast<int>(masses_.size()); }

    /// Density of cell i relative to the uniform measure.
    double density(int i) const { return masses_[i] / grid_->volume(i); }

    bool same_grid(const GridMeasure& other) const { return *grid_ == other.grid(); }

private:
    GridPtr grid_;
    std::vector<double> masses_;
};

/// The uniform probability measure: masses equal to cell volumes.
GridMeasure lebesgue(const GridPtr& grid);

/// Boltzmann entropy relative to the uniform measure,
/// sum_i m_i log(m_i / v_i) with 0 log 0 = 0. Nonnegative, zero exactly
/// at the uniform measure. Evaluated through log1p of the density excess
/// so near-uniform measures resolve below the naive cancellation floor.
double entropy(const GridMeasure& mu);

/// Congestion sum_i v_i (m_i/v_i)^q - 1 for q > 1. Nonnegative, zero iff
/// the measure is uniform. Throws std::invalid_argument for q <= 1.
double congestion(const GridMeasure& mu, double q);

/// L1 distance between mass vectors on the same grid.
double l1_distance(const GridMeasure& mu, const GridMeasure& nu);

/// Convex mixture (1-s) mu + s nu of two measures on the same grid.
GridMeasure mix(const GridMeasure& mu, const GridMeasure& nu, double s);

}  // namespace eulermix
