#include "eulermix/heat.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <stdexcept>

#include "eulermix/transport.hpp"

namespace eulermix {

namespace {

// Neighbor stencil of the mass-form Laplacian: on uniform grids the mass
// and density formulations coincide up to the shared volume factor.
struct Stencil {
    double wx, wy;
    int nx, ny, dim;

    template <typename F>
    void for_each_neighbor(int i, F&& f) const {
        const int ix = i % nx, iy = i / nx;
        if (ix > 0) f(i - 1, wx);
        if (ix + 1 < nx) f(i + 1, wx);
        if (dim == 2) {
            if (iy > 0) f(i - nx, wy);
            if (iy + 1 < ny) f(i + nx, wy);
        }
    }
};

Stencil make_stencil(const Grid& g) {
    Stencil st;
    st.nx = g.nx();
    st.ny = g.ny();
    st.dim = g.dim();
    st.wx = 1.0 / (g.cell_width_x() * g.cell_width_x());
    st.wy = g.dim() == 2 ? 1.0 / (g.cell_width_y() * g.cell_width_y()) : 0.0;
    return st;
}

Eigen::SparseMatrix<double> build_system(const Grid& g, double sigma) {
    const Stencil st = make_stencil(g);
    const int n = g.cell_count();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(5 * n);
    for (int i = 0; i < n; ++i) {
        double diag = 1.0;
        st.for_each_neighbor(i, [&](int j, double w) {
            trips.emplace_back(i, j, -sigma * w);
            diag += sigma * w;
        });
        trips.emplace_back(i, i, diag);
    }
    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
}

std::vector<double> solve_with(const Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>& chol,
                               const std::vector<double>& m) {
    Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    Eigen::VectorXd x = chol.solve(rhs);
    if (chol.info() != Eigen::Success)
        throw std::runtime_error("heat: linear solve failed");
    std::vector<double> out(m.size());
    for (int i = 0; i < (int)m.size(); ++i) out[i] = std::max(x[i], 0.0);
    return out;
}

}  // namespace

struct HeatOperator::Factorization {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol;
};

HeatOperator::HeatOperator(GridPtr grid, double substep)
    : grid_(std::move(grid)), substep_(substep), factorization_(new Factorization) {
    if (!(substep > 0.0)) throw std::invalid_argument("heat: substep must be positive");
    factorization_->chol.compute(build_system(*grid_, substep_));
    if (factorization_->chol.info() != Eigen::Success)
        throw std::runtime_error("heat: factorization failed");
}

HeatOperator::~HeatOperator() = default;
HeatOperator::HeatOperator(HeatOperator&&) noexcept = default;
HeatOperator& HeatOperator::operator=(HeatOperator&&) noexcept = default;

std::vector<double> HeatOperator::laplacian_apply(const std::vector<double>& m) const {
    const Stencil st = make_stencil(*grid_);
    const int n = grid_->cell_count();
    std::vector<double> out(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        st.for_each_neighbor(i, [&](int j, double w) { acc += w * (m[i] - m[j]); });
        out[i] = acc;
    }
    return out;
}

std::vector<double> HeatOperator::laplacian_dense() const {
    const Stencil st = make_stencil(*grid_);
    const int n = grid_->cell_count();
    std::vector<double> L(n * n, 0.0);
    for (int i = 0; i < n; ++i) {
        st.for_each_neighbor(i, [&](int j, double w) {
            L[i * n + j] -= w;
            L[i * n + i] += w;
        });
    }
    return L;
}

std::vector<double> HeatOperator::solve_substeps(const std::vector<double>& m, int count) const {
    std::vector<double> x = m;
    for (int k = 0; k < count; ++k) x = solve_with(factorization_->chol, x);
    return x;
}

std::vector<double> HeatOperator::solve_once(const std::vector<double>& m, double sigma) const {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol;
    chol.compute(build_system(*grid_, sigma));
    if (chol.info() != Eigen::Success) throw std::runtime_error("heat: factorization failed");
    return solve_with(chol, m);
}

GridMeasure heat_step(const HeatOperator& op, const GridMeasure& mu, double s) {
    if (s < 0.0) throw std::invalid_argument("heat_step: negative duration");
    if (!(mu.grid() == op.grid())) throw std::invalid_argument("heat_step: grid mismatch");
    if (s == 0.0) return mu;
    if (mu.masses() == mu.grid().volumes()) return mu;  // equilibrium, exactly

    const double sigma = op.substep();
    long long full = (long long)std::llround(s / sigma);
    double rem;
    if (full >= 1 && std::abs((double)full * sigma - s) <= 1e-12 * std::max(1.0, s)) {
        rem = 0.0;  // s is a whole number of substeps
    } else {
        full = (long long)std::floor(s / sigma);
        rem = s - (double)full * sigma;
    }
    std::vector<double> x = op.solve_substeps(mu.masses(), (int)full);
    if (rem > 0.0) x = op.solve_once(x, rem);
    return GridMeasure(mu.grid_ptr(), std::move(x));
}

EntropyFlowReport check_entropy_decrease(const HeatOperator& op, const GridMeasure& mu,
                                         const std::vector<double>& s_list) {
    for (size_t i = 0; i < s_list.size(); ++i) {
        if (s_list[i] < 0.0 || (i > 0 && s_list[i] < s_list[i - 1]))
            throw std::invalid_argument("check_entropy_decrease: s_list must be increasing");
    }
    EntropyFlowReport rep;
    GridMeasure state = mu;
    double prev_s = 0.0;
    for (double s : s_list) {
        state = heat_step(op, state, s - prev_s);
        prev_s = s;
        rep.s.push_back(s);
        rep.entropy.push_back(entropy(state));
        double sup = 0.0;
        for (int i = 0; i < state.size(); ++i) sup = std::max(sup, state.density(i));
        rep.sup_density.push_back(sup);
        const size_t k = rep.entropy.size();
        if (k >= 2 && rep.entropy[k - 1] > rep.entropy[k - 2]) rep.monotone = false;
    }
    return rep;
}

EviReport check_evi(const HeatOperator& op, const GridMeasure& mu, const GridMeasure& nu,
                    double h, int lp_cap) {
    if (!(h > 0.0)) throw std::invalid_argument("check_evi: h must be positive");
    const GridMeasure moved = heat_step(op, mu, h);
    const double before = w2sq_exact(mu, nu, lp_cap);
    const double after = w2sq_exact(moved, nu, lp_cap);
    EviReport rep;
    rep.lhs = (after - before) / (2.0 * h);
    rep.rhs = entropy(nu) - entropy(mu);
    rep.gap = rep.rhs - rep.lhs;
    return rep;
}

ContractionReport check_contraction(const HeatOperator& op, const GridMeasure& mu,
                                    const GridMeasure& nu, double s, int lp_cap) {
    const GridMeasure mu_s = heat_step(op, mu, s);
    const GridMeasure nu_s = heat_step(op, nu, s);
    auto lq = [](const GridMeasure& w, double q) {
        return std::pow(congestion(w, q) + 1.0, 1.0 / q);
    };
    ContractionReport rep;
    rep.before = w2_exact(mu, nu, lp_cap).distance;
    rep.after = w2_exact(mu_s, nu_s, lp_cap).distance;
    rep.l2_before = lq(mu, 2.0);
    rep.l2_after = lq(mu_s, 2.0);
    rep.l4_before = lq(mu, 4.0);
    rep.l4_after = lq(mu_s, 4.0);
    return rep;
}

double evi_tolerance(double h, const Grid& grid) {
    // Calibration constant from the refinement study in the test suite
    // (16..128 cells, h in [1e-4, 1e-2]); measured worst gap stays below
    // 0.4*(h + width), frozen with a 2.5x margin.
    constexpr double kCalibration = 1.0;
    return kCalibration * (h + grid.max_cell_width());
}

}  // namespace eulermix
