#include "eulermix/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace eulermix {

namespace {

double sq_center_dist(const Grid& g, int i, int j) {
    const auto a = g.center(i);
    const auto b = g.center(j);
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    return dx * dx + dy * dy;
}

struct Basic {
    int row, col;
    double flow;
};

// Dense transportation simplex. Rows/cols with zero mass are dropped by the
// caller, so supplies and demands are strictly positive on entry.
class TransportSimplex {
public:
    TransportSimplex(std::vector<double> supply, std::vector<double> demand,
                     const std::vector<double>& cost, int ncols)
        : a_(std::move(supply)), b_(std::move(demand)), c_(cost), m_((int)a_.size()), n_(ncols) {
        double cmax = 0.0;
        for (double v : c_) cmax = std::max(cmax, std::abs(v));
        tol_ = 1e-12 * (cmax + 1.0);
    }

    void solve() {
        northwest_corner();
        const int max_pivots = 200 * (m_ + n_) * (m_ + n_) + 1000;
        int degenerate_streak = 0;
        bool bland = false;
        for (int pivot = 0; pivot < max_pivots; ++pivot) {
            compute_potentials();
            int ei = -1, ej = -1;
            double best = -tol_;
            for (int i = 0; i < m_ && !(bland && ei >= 0); ++i) {
                for (int j = 0; j < n_; ++j) {
                    const double rc = c_[i * n_ + j] - u_[i] - v_[j];
                    if (rc < best) {
                        best = rc;
                        ei = i;
                        ej = j;
                        if (bland) break;  // first eligible arc
                    }
                }
            }
            if (ei < 0) return;  // optimal
            const double theta = pivot_cycle(ei, ej);
            if (theta < 1e-15) {
                if (++degenerate_streak > 2 * (m_ + n_)) bland = true;
            } else {
                degenerate_streak = 0;
                bland = false;
            }
        }
        throw std::runtime_error("transport simplex: pivot limit exceeded");
    }

    const std::vector<Basic>& basics() const { return basics_; }
    const std::vector<double>& row_potentials() const { return u_; }
    const std::vector<double>& col_potentials() const { return v_; }

private:
    void northwest_corner() {
        std::vector<double> ra = a_, rb = b_;
        int i = 0, j = 0;
        while (i < m_ && j < n_) {
            const double t = std::min(ra[i], rb[j]);
            basics_.push_back({i, j, t});
            ra[i] -= t;
            rb[j] -= t;
            const bool row_done = ra[i] <= rb[j];
            if (row_done) {
                ra[i] = 0.0;
                ++i;
            } else {
                rb[j] = 0.0;
                ++j;
            }
            // keep exactly m+n-1 basics: when both exhaust at once the next
            // move would drop one; the min() above already recorded a basic,
            // and advancing only one index leaves a degenerate zero next turn.
        }
        // Pad with degenerate basics if the last step exhausted both at once.
        while ((int)basics_.size() < m_ + n_ - 1) {
            const auto& last = basics_.back();
            if (last.row + 1 < m_)
                basics_.push_back({last.row + 1, last.col, 0.0});
            else
                basics_.push_back({last.row, last.col + 1, 0.0});
        }
    }

    void compute_potentials() {
        u_.assign(m_, std::numeric_limits<double>::quiet_NaN());
        v_.assign(n_, std::numeric_limits<double>::quiet_NaN());
        // Adjacency over the basis tree: nodes 0..m-1 rows, m..m+n-1 cols.
        std::vector<std::vector<int>> adj(m_ + n_);
        for (int k = 0; k < (int)basics_.size(); ++k) {
            adj[basics_[k].row].push_back(k);
            adj[m_ + basics_[k].col].push_back(k);
        }
        std::vector<int> stack = {0};
        u_[0] = 0.0;
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            for (int k : adj[node]) {
                const auto& bk = basics_[k];
                if (node < m_) {
                    if (std::isnan(v_[bk.col])) {
                        v_[bk.col] = c_[bk.row * n_ + bk.col] - u_[bk.row];
                        stack.push_back(m_ + bk.col);
                    }
                } else {
                    if (std::isnan(u_[bk.row])) {
                        u_[bk.row] = c_[bk.row * n_ + bk.col] - v_[bk.col];
                        stack.push_back(bk.row);
                    }
                }
            }
        }
    }

    // Introduce arc (ei,ej), cancel along the unique basis cycle, drop the
    // first minimal leaving arc. Returns the pivot amount.
    double pivot_cycle(int ei, int ej) {
        // Path from row ei to col ej through the basis tree (BFS).
        std::vector<std::vector<int>> adj(m_ + n_);
        for (int k = 0; k < (int)basics_.size(); ++k) {
            adj[basics_[k].row].push_back(k);
            adj[m_ + basics_[k].col].push_back(k);
        }
        std::vector<int> prev_arc(m_ + n_, -1), prev_node(m_ + n_, -1);
        std::vector<char> seen(m_ + n_, 0);
        std::vector<int> queue = {ei};
        seen[ei] = 1;
        for (size_t qh = 0; qh < queue.size(); ++qh) {
            const int node = queue[qh];
            if (node == m_ + ej) break;
            for (int k : adj[node]) {
                const auto& bk = basics_[k];
                const int other = (node < m_) ? m_ + bk.col : bk.row;
                if (!seen[other]) {
                    seen[other] = 1;
                    prev_arc[other] = k;
                    prev_node[other] = node;
                    queue.push_back(other);
                }
            }
        }
        if (!seen[m_ + ej]) throw std::runtime_error("transport simplex: basis not connected");

        // Arcs along the cycle alternate +/-, starting with + on (ei,ej).
        std::vector<int> path;  // basics indices from col ej back to row ei
        for (int node = m_ + ej; node != ei; node = prev_node[node]) path.push_back(prev_arc[node]);
        double theta = std::numeric_limits<double>::infinity();
        int leave = -1;
        for (size_t p = 0; p < path.size(); p += 2) {  // odd positions get -theta
            if (basics_[path[p]].flow < theta) {
                theta = basics_[path[p]].flow;
                leave = path[p];
            }
        }
        for (size_t p = 0; p < path.size(); ++p) {
            basics_[path[p]].flow += (p % 2 == 0) ? -theta : theta;
        }
        basics_[leave] = {ei, ej, theta};
        for (auto& bk : basics_)
            if (bk.flow < 0.0) bk.flow = 0.0;
        return theta;
    }

    std::vector<double> a_, b_;
    const std::vector<double>& c_;
    int m_, n_;
    double tol_;
    std::vector<Basic> basics_;
    std::vector<double> u_, v_;
};

double log_sum_exp(const std::vector<double>& terms) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double t : terms) mx = std::max(mx, t);
    if (!std::isfinite(mx)) return mx;
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - mx);
    return mx + std::log(acc);
}

// Mix in a sliver of the uniform measure so logarithms stay finite.
GridMeasure presmooth(const GridMeasure& mu) {
    bool has_zero = false;
    for (int i = 0; i < mu.size(); ++i)
        if (mu.mass(i) <= 0.0) has_zero = true;
    if (!has_zero) return mu;
    return mix(mu, lebesgue(mu.grid_ptr()), 1e-12);
}

struct SinkhornState {
    std::vector<double> f, g;
    double residual = 0.0;
    int iterations = 0;
};

// One asymmetric Sinkhorn solve at fixed epsilon; f and g warm-start.
void sinkhorn_at_epsilon(const std::vector<double>& lmu, const std::vector<double>& lnu,
                         const std::vector<double>& cost, int n, double eps, double tol,
                         int max_iters, SinkhornState& st) {
    std::vector<double> terms(n);
    for (int it = 0; it < max_iters; ++it) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) terms[j] = lnu[j] + (st.g[j] - cost[i * n + j]) / eps;
            st.f[i] = -eps * log_sum_exp(terms);
        }
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) terms[i] = lmu[i] + (st.f[i] - cost[i * n + j]) / eps;
            st.g[j] = -eps * log_sum_exp(terms);
        }
        st.iterations++;
        // Columns are exact after the g-update; the row violation is the
        // fixed-point residual.
        double res = 0.0;
        for (int i = 0; i < n; ++i) {
            double row = 0.0;
            for (int j = 0; j < n; ++j)
                row += std::exp(lmu[i] + lnu[j] + (st.f[i] + st.g[j] - cost[i * n + j]) / eps);
            res += std::abs(row - std::exp(lmu[i]));
        }
        st.residual = res;
        if (res < tol) return;
    }
}

// Symmetric fixed point for the self term OT_eps(mu, mu).
void sinkhorn_self(const std::vector<double>& lmu, const std::vector<double>& cost, int n,
                   double eps, double tol, int max_iters, SinkhornState& st) {
    std::vector<double> terms(n);
    for (int it = 0; it < max_iters; ++it) {
        double change = 0.0;
        std::vector<double> p = st.f;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) terms[j] = lmu[j] + (st.f[j] - cost[i * n + j]) / eps;
            p[i] = 0.5 * (st.f[i] - eps * log_sum_exp(terms));
            change += std::abs(p[i] - st.f[i]);
        }
        st.f = p;
        st.iterations++;
        if (change < 0.5 * tol * eps) {
            st.residual = change;
            return;
        }
        st.residual = change;
    }
}

}  // namespace

W2Exact w2_exact(const GridMeasure& mu, const GridMeasure& nu, int lp_cap) {
    if (!mu.same_grid(nu)) throw std::invalid_argument("w2_exact: grid mismatch");
    const int total = mu.size();
    if (total > lp_cap)
        throw std::invalid_argument("w2_exact: " + std::to_string(total) +
                                    " cells exceeds LP cap " + std::to_string(lp_cap));
    // Drop empty cells; the simplex wants strictly positive supplies.
    std::vector<int> rows, cols;
    for (int i = 0; i < total; ++i)
        if (mu.mass(i) > 0.0) rows.push_back(i);
    for (int j = 0; j < total; ++j)
        if (nu.mass(j) > 0.0) cols.push_back(j);
    const int m = (int)rows.size(), n = (int)cols.size();
    std::vector<double> supply(m), demand(n), cost(m * n);
    for (int i = 0; i < m; ++i) supply[i] = mu.mass(rows[i]);
    for (int j = 0; j < n; ++j) demand[j] = nu.mass(cols[j]);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) cost[i * n + j] = sq_center_dist(mu.grid(), rows[i], cols[j]);

    TransportSimplex simplex(supply, demand, cost, n);
    simplex.solve();

    TransportPlan plan{mu, nu, {}, 0.0, {}, {}};
    double total_cost = 0.0;
    std::vector<Basic> sorted = simplex.basics();
    std::sort(sorted.begin(), sorted.end(), [](const Basic& x, const Basic& y) {
        return x.row != y.row ? x.row < y.row : x.col < y.col;
    });
    for (const auto& bk : sorted) {
        if (bk.flow <= 0.0) continue;
        plan.entries.push_back({rows[bk.row], cols[bk.col], bk.flow});
        total_cost += bk.flow * cost[bk.row * n + bk.col];
    }
    plan.cost = total_cost;

    plan.potential_source.assign(total, 0.0);
    plan.potential_target.assign(total, 0.0);
    const auto& u = simplex.row_potentials();
    const auto& v = simplex.col_potentials();
    for (int j = 0; j < n; ++j) plan.potential_target[cols[j]] = v[j];
    for (int i = 0; i < m; ++i) plan.potential_source[rows[i]] = u[i];
    // Dual values for empty cells: tightest feasible completion.
    for (int i = 0; i < total; ++i) {
        if (mu.mass(i) > 0.0) continue;
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j)
            best = std::min(best, sq_center_dist(mu.grid(), i, cols[j]) - v[j]);
        plan.potential_source[i] = best;
    }
    for (int j = 0; j < total; ++j) {
        if (nu.mass(j) > 0.0) continue;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i)
            best = std::min(best, sq_center_dist(mu.grid(), rows[i], j) - u[i]);
        plan.potential_target[j] = best;
    }
    return {std::sqrt(std::max(total_cost, 0.0)), std::move(plan)};
}

double w2sq_exact(const GridMeasure& mu, const GridMeasure& nu, int lp_cap) {
    return w2_exact(mu, nu, lp_cap).plan.cost;
}

double w2sq_1d(const GridMeasure& mu, const GridMeasure& nu) {
    if (!mu.same_grid(nu)) throw std::invalid_argument("w2sq_1d: grid mismatch");
    if (mu.grid().dim() != 1) throw std::invalid_argument("w2sq_1d: requires a 1-D grid");
    const int n = mu.size();
    double cost = 0.0;
    int i = 0, j = 0;
    double rem_a = mu.mass(0), rem_b = nu.mass(0);
    while (i < n && j < n) {
        if (rem_a <= 0.0) {
            if (++i >= n) break;
            rem_a = mu.mass(i);
            continue;
        }
        if (rem_b <= 0.0) {
            if (++j >= n) break;
            rem_b = nu.mass(j);
            continue;
        }
        const double t = std::min(rem_a, rem_b);
        const double d = mu.grid().center(i)[0] - nu.grid().center(j)[0];
        cost += t * d * d;
        rem_a -= t;
        rem_b -= t;
    }
    return cost;
}

TransportPlan monotone_plan_1d(const GridMeasure& mu, const GridMeasure& nu) {
    if (!mu.same_grid(nu)) throw std::invalid_argument("monotone_plan_1d: grid mismatch");
    if (mu.grid().dim() != 1) throw std::invalid_argument("monotone_plan_1d: requires a 1-D grid");
    const int n = mu.size();
    TransportPlan plan{mu, nu, {}, 0.0, {}, {}};
    int i = 0, j = 0;
    double rem_a = mu.mass(0), rem_b = nu.mass(0);
    while (i < n && j < n) {
        if (rem_a <= 0.0) {
            if (++i >= n) break;
            rem_a = mu.mass(i);
            continue;
        }
        if (rem_b <= 0.0) {
            if (++j >= n) break;
            rem_b = nu.mass(j);
            continue;
        }
        const double t = std::min(rem_a, rem_b);
        const double d = mu.grid().center(i)[0] - nu.grid().center(j)[0];
        plan.entries.push_back({i, j, t});
        plan.cost += t * d * d;
        rem_a -= t;
        rem_b -= t;
    }
    return plan;
}

EntropicResult w2_entropic(const GridMeasure& mu_in, const GridMeasure& nu_in, double epsilon,
                           const EntropicOptions& opts) {
    if (!mu_in.same_grid(nu_in)) throw std::invalid_argument("w2_entropic: grid mismatch");
    if (!(epsilon > 0.0)) throw std::invalid_argument("w2_entropic: epsilon must be positive");
    const GridMeasure mu = presmooth(mu_in);
    const GridMeasure nu = presmooth(nu_in);
    const int n = mu.size();

    std::vector<double> cost(n * n);
    double cmax = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            cost[i * n + j] = sq_center_dist(mu.grid(), i, j);
            cmax = std::max(cmax, cost[i * n + j]);
        }
    std::vector<double> lmu(n), lnu(n);
    for (int i = 0; i < n; ++i) lmu[i] = std::log(mu.mass(i));
    for (int j = 0; j < n; ++j) lnu[j] = std::log(nu.mass(j));

    std::vector<double> levels;
    if (opts.epsilon_scaling && cmax > 0.0) {
        for (double e = std::max(epsilon, 0.1 * cmax); e > epsilon * 1.000001; e *= 0.5)
            levels.push_back(e);
    }
    levels.push_back(epsilon);

    SinkhornState st;
    st.f.assign(n, 0.0);
    st.g.assign(n, 0.0);
    for (size_t l = 0; l < levels.size(); ++l) {
        const bool last = l + 1 == levels.size();
        const double tol = last ? opts.marginal_tol : std::max(opts.marginal_tol, 1e-6);
        sinkhorn_at_epsilon(lmu, lnu, cost, n, levels[l], tol, opts.max_iterations, st);
        if (last && st.residual >= opts.marginal_tol)
            throw std::runtime_error("w2_entropic: no convergence, marginal residual " +
                                     std::to_string(st.residual));
    }

    EntropicResult out;
    out.potential_source = st.f;
    out.potential_target = st.g;
    out.marginal_residual = st.residual;
    out.iterations = st.iterations;
    double value = 0.0;
    for (int i = 0; i < n; ++i) value += st.f[i] * mu.mass(i);
    for (int j = 0; j < n; ++j) value += st.g[j] * nu.mass(j);

    if (opts.debias) {
        auto self_value = [&](const std::vector<double>& lw, const GridMeasure& w) {
            SinkhornState ss;
            ss.f.assign(n, 0.0);
            for (size_t l = 0; l < levels.size(); ++l)
                sinkhorn_self(lw, cost, n, levels[l], opts.marginal_tol, opts.max_iterations, ss);
            double val = 0.0;
            for (int i = 0; i < n; ++i) val += 2.0 * ss.f[i] * w.mass(i);
            return val;
        };
        value -= 0.5 * self_value(lmu, mu) + 0.5 * self_value(lnu, nu);
    }
    out.value = value;
    return out;
}

GridMeasure displacement_interpolate(const TransportPlan& plan, double t) {
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("displacement_interpolate: t outside [0,1]");
    if (t == 0.0) return plan.source;
    if (t == 1.0) return plan.target;
    const Grid& g = plan.source.grid();
    const int n = g.cell_count();
    std::vector<double> acc(n, 0.0);

    // Linear split of a point mass between the two enclosing cell centers
    // on one axis. Returns (low index, weight on the high neighbor).
    auto axis_split = [](double z, double h, int cells) {
        double kf = z / h - 0.5;
        int a = (int)std::floor(kf);
        double w = kf - a;
        if (a < 0) {
            a = 0;
            w = 0.0;
        }
        if (a >= cells - 1) {
            a = cells - 1;
            w = 0.0;
        }
        return std::pair<int, double>(a, w);
    };

    for (const auto& e : plan.entries) {
        const auto p = g.center(e.src);
        const auto q = g.center(e.dst);
        const double zx = (1.0 - t) * p[0] + t * q[0];
        if (g.dim() == 1) {
            auto [a, w] = axis_split(zx, g.cell_width_x(), g.nx());
            acc[a] += e.mass * (1.0 - w);
            if (w > 0.0) acc[a + 1] += e.mass * w;
        } else {
            const double zy = (1.0 - t) * p[1] + t * q[1];
            auto [ax, wx] = axis_split(zx, g.cell_width_x(), g.nx());
            auto [ay, wy] = axis_split(zy, g.cell_width_y(), g.ny());
            acc[g.index(ax, ay)] += e.mass * (1.0 - wx) * (1.0 - wy);
            if (wx > 0.0) acc[g.index(ax + 1, ay)] += e.mass * wx * (1.0 - wy);
            if (wy > 0.0) acc[g.index(ax, ay + 1)] += e.mass * (1.0 - wx) * wy;
            if (wx > 0.0 && wy > 0.0) acc[g.index(ax + 1, ay + 1)] += e.mass * wx * wy;
        }
    }
    return GridMeasure(plan.source.grid_ptr(), std::move(acc));
}

}  // namespace eulermix
