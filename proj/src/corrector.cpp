#include "vrh/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "vrh/simd.hpp"

namespace vrh {

std::string to_string(SolverMethod m) { return m == SolverMethod::cg ? "cg" : "jacobi"; }

SolverMethod solver_method_from_string(const std::string& s) {
  if (s == "cg") return SolverMethod::cg;
  if (s == "jacobi") return SolverMethod::jacobi;
  throw std::invalid_argument("unknown solver method '" + s + "' (expected cg|jacobi)");
}

Point HarmonicField::chi(const MarkedPointSet& env, std::size_t i) const noexcept {
  Point c{0.0, 0.0, 0.0};
  for (int k = 0; k < dim; ++k) c[k] = phi[i][k] - env.point(i)[k];
  return c;
}

namespace {

// Interior system over the unknowns U: for x in U,
//   (w(x) - c(x,x)) Phi(x) - sum_{y in U, y != x} c(x,y) Phi(y) = sum_{y fixed} c(x,y) Phi(y).
struct InteriorSystem {
  std::vector<std::uint32_t> unknown;  // point index of each unknown
  std::vector<std::int32_t> slot;      // point -> unknown slot or -1
  std::vector<std::uint32_t> row_start;
  std::vector<std::uint32_t> cols;
  std::vector<double> values;
  std::vector<double> diag;
  std::vector<double> weight;  // w(x) per unknown, for the residual in probability units
};

InteriorSystem assemble(const JumpTable& table, std::span<const std::uint8_t> free_point) {
  InteriorSystem sys;
  const std::size_t n = table.size();
  sys.slot.assign(n, -1);
  for (std::size_t x = 0; x < n; ++x)
    if (free_point[x]) {
      sys.slot[x] = static_cast<std::int32_t>(sys.unknown.size());
      sys.unknown.push_back(static_cast<std::uint32_t>(x));
    }
  sys.row_start.push_back(0);
  for (std::uint32_t x : sys.unknown) {
    const auto nb = table.neighbours(x);
    const auto cs = table.neighbour_conductances(x);
    double self = 0.0;
    for (std::size_t k = 0; k < nb.size(); ++k) {
      if (nb[k] == x) {
        self += cs[k];
        continue;
      }
      if (sys.slot[nb[k]] >= 0) {
        sys.cols.push_back(static_cast<std::uint32_t>(sys.slot[nb[k]]));
        sys.values.push_back(-cs[k]);
      }
    }
    sys.diag.push_back(table.weight(x) - self);
    sys.weight.push_back(table.weight(x));
    sys.row_start.push_back(static_cast<std::uint32_t>(sys.cols.size()));
  }
  return sys;
}

// y = A x with A = diag + offdiag.
void apply(const InteriorSystem& sys, const simd::Kernels& kern, const std::vector<double>& x,
           std::vector<double>& y) {
  kern.csr_matvec(sys.row_start.data(), sys.cols.data(), sys.values.data(), sys.unknown.size(), x.data(),
                  y.data());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += sys.diag[i] * x[i];
}

double scaled_max(const InteriorSystem& sys, const std::vector<double>& r) {
  double m = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) m = std::max(m, std::fabs(r[i]) / sys.weight[i]);
  return m;
}

// Jacobi-preconditioned conjugate gradients; stops on the scaled residual.
std::size_t solve_cg(const InteriorSystem& sys, const std::vector<double>& b, std::vector<double>& x,
                     const SolverOptions& opts, double& resid) {
  const simd::Kernels& kern = simd::active();
  const std::size_t n = b.size();
  std::vector<double> r(n), z(n), p(n), q(n);
  apply(sys, kern, x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / sys.diag[i];
  p = z;
  double rz = kern.dot(r.data(), z.data(), n);
  std::size_t it = 0;
  // A margin below tol absorbs the drift between recursive and true residuals.
  const double target = 0.5 * opts.tol;
  resid = scaled_max(sys, r);
  while (resid > target && it < opts.max_iter) {
    apply(sys, kern, p, q);
    const double pq = kern.dot(p.data(), q.data(), n);
    if (!(pq > 0.0)) break;
    const double a = rz / pq;
    kern.axpy(a, p.data(), x.data(), n);
    kern.axpy(-a, q.data(), r.data(), n);
    ++it;
    if (it % 50 == 0) {  // refresh against accumulated rounding
      apply(sys, kern, x, q);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
    }
    resid = scaled_max(sys, r);
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / sys.diag[i];
    const double rz_new = kern.dot(r.data(), z.data(), n);
    kern.xpby(z.data(), rz_new / rz, p.data(), n);
    rz = rz_new;
  }
  return it;
}

std::size_t solve_jacobi(const InteriorSystem& sys, const std::vector<double>& b, std::vector<double>& x,
                         const SolverOptions& opts, double& resid) {
  const simd::Kernels& kern = simd::active();
  const std::size_t n = b.size();
  std::vector<double> ax(n), r(n);
  std::size_t it = 0;
  while (true) {
    apply(sys, kern, x, ax);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ax[i];
    resid = scaled_max(sys, r);
    if (resid <= opts.tol || it >= opts.max_iter) break;
    for (std::size_t i = 0; i < n; ++i) x[i] += opts.damping * r[i] / sys.diag[i];
    ++it;
  }
  return it;
}

}  // namespace

HarmonicField solve_harmonic(const MarkedPointSet& env, const JumpTable& table, double layer,
                             const SolverOptions& opts) {
  const WindowSpec& win = env.window();
  if (win.boundary != Boundary::free) throw std::invalid_argument("corrector solves need a free window");
  if (table.size() != env.size()) throw std::invalid_argument("jump table does not match environment");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  if (!(opts.damping > 0.0 && opts.damping <= 1.0)) throw std::invalid_argument("damping must lie in (0, 1]");
  const std::size_t n = env.size();
  HarmonicField f;
  f.dim = win.dim;
  f.phi.assign(env.points().begin(), env.points().end());
  f.interior.assign(n, 0);
  f.pinned.assign(n, 0);
  for (std::size_t x = 0; x < n; ++x) f.interior[x] = win.edge_distance(env.point(x)) >= layer;
  f.interior_count = static_cast<std::size_t>(std::count(f.interior.begin(), f.interior.end(), 1));
  if (f.interior_count == 0) throw std::invalid_argument("corrector window has no interior points");

  // Interior points connected to the boundary layer are unknowns; the rest
  // (isolated points, enclosed components) keep Phi = x.
  std::vector<std::uint8_t> reached(n, 0);
  std::deque<std::uint32_t> queue;
  for (std::size_t x = 0; x < n; ++x)
    if (!f.interior[x]) {
      reached[x] = 1;
      queue.push_back(static_cast<std::uint32_t>(x));
    }
  while (!queue.empty()) {
    const std::uint32_t x = queue.front();
    queue.pop_front();
    for (std::uint32_t y : table.neighbours(x))
      if (!reached[y]) {
        reached[y] = 1;
        queue.push_back(y);
      }
  }
  std::vector<std::uint8_t> unknown(n, 0);
  for (std::size_t x = 0; x < n; ++x) {
    if (!f.interior[x]) continue;
    if (reached[x]) {
      unknown[x] = 1;
    } else {
      f.pinned[x] = 1;
      ++f.pinned_count;
    }
  }
  const InteriorSystem sys = assemble(table, unknown);
  const std::size_t m = sys.unknown.size();

  f.converged = true;
  for (int k = 0; k < win.dim; ++k) {
    std::vector<double> b(m, 0.0), x(m);
    for (std::size_t i = 0; i < m; ++i) {
      const std::uint32_t p = sys.unknown[i];
      x[i] = env.point(p)[k];
      const auto nb = table.neighbours(p);
      const auto cs = table.neighbour_conductances(p);
      for (std::size_t j = 0; j < nb.size(); ++j)
        if (sys.slot[nb[j]] < 0) b[i] += cs[j] * env.point(nb[j])[k];
    }
    double resid = 0.0;
    const std::size_t it = opts.method == SolverMethod::cg ? solve_cg(sys, b, x, opts, resid)
                                                            : solve_jacobi(sys, b, x, opts, resid);
    f.iterations = std::max(f.iterations, it);
    for (std::size_t i = 0; i < m; ++i) f.phi[sys.unknown[i]][k] = x[i];
  }
  f.residual = harmonic_residual(env, table, f);
  f.converged = f.residual <= opts.tol;
  return f;
}

double harmonic_residual(const MarkedPointSet& env, const JumpTable& table, const HarmonicField& field) {
  double worst = 0.0;
  for (std::size_t x = 0; x < env.size(); ++x) {
    if (!field.interior[x] || field.pinned[x]) continue;
    const auto nb = table.neighbours(x);
    const auto cs = table.neighbour_conductances(x);
    for (int k = 0; k < field.dim; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < nb.size(); ++j) s += cs[j] * (field.phi[nb[j]][k] - field.phi[x][k]);
      worst = std::max(worst, std::fabs(s) / table.weight(x));
    }
  }
  return worst;
}

SublinearityRow sublinearity(const MarkedPointSet& env, const HarmonicField& field, double n) {
  SublinearityRow row;
  row.n = n;
  for (std::size_t x = 0; x < env.size(); ++x) {
    if (!field.interior[x]) continue;
    const Point& p = env.point(x);
    bool inside = true;
    for (int k = 0; k < field.dim; ++k) inside = inside && std::fabs(p[k]) <= 0.5 * n;
    if (!inside) continue;
    ++row.points;
    const double c = std::sqrt(norm2(field.chi(env, x), field.dim)) / n;
    if (c > row.s) {
      row.s = c;
      row.argmax = x;
    }
  }
  return row;
}

VariationalSample variational_sample(const MarkedPointSet& env, const JumpTable& table,
                                     const HarmonicField& field, double central_half_side) {
  const int dim = field.dim;
  const double r_cut = table.certificate().r_cut;
  VariationalSample s;
  auto add = [&](std::size_t x) {
    if (env.window().edge_distance(env.point(x)) < r_cut)
      throw std::invalid_argument("central point too close to the window edge for the cutoff");
    const auto nb = table.neighbours(x);
    const auto cs = table.neighbour_conductances(x);
    for (std::size_t j = 0; j < nb.size(); ++j) {
      Point d{0.0, 0.0, 0.0};
      for (int k = 0; k < dim; ++k) d[k] = field.phi[nb[j]][k] - field.phi[x][k];
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) s.energy[static_cast<std::size_t>(3 * a + b)] += cs[j] * d[a] * d[b];
    }
    s.weight += table.weight(x);
    s.count += 1.0;
  };
  if (central_half_side < 0.0) {
    if (!env.origin_pinned()) throw std::invalid_argument("Palm origin requested on a non-Palm environment");
    add(0);
    return s;
  }
  for (std::size_t x = 0; x < env.size(); ++x) {
    const Point& p = env.point(x);
    bool inside = true;
    for (int k = 0; k < dim; ++k) inside = inside && std::fabs(p[k]) <= central_half_side;
    if (inside) add(x);
  }
  return s;
}

VariationalD variational_d(std::span<const VariationalSample> samples, int dim) {
  VariationalD out;
  out.dtrw.dim = out.ctrw.dim = dim;
  out.dtrw.method = out.ctrw.method = "variational";
  out.dtrw.samples = out.ctrw.samples = samples.size();
  std::vector<double> weight, count, num;
  for (const auto& s : samples) {
    weight.push_back(s.weight);
    count.push_back(s.count);
  }
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) {
      const auto idx = static_cast<std::size_t>(3 * a + b);
      num.clear();
      for (const auto& s : samples) num.push_back(0.5 * s.energy[idx]);
      const stats::Estimate d = stats::ratio_of_means(num, weight);
      const stats::Estimate c = stats::ratio_of_means(num, count);
      out.dtrw.value[idx] = d.value;
      out.dtrw.std_error[idx] = d.std_error;
      out.ctrw.value[idx] = c.value;
      out.ctrw.std_error[idx] = c.std_error;
    }
  out.ew0 = stats::ratio_of_means(weight, count);
  return out;
}

double shift_covariance_defect(const MarkedPointSet& env, const HarmonicField& field,
                               std::span<const std::array<std::size_t, 3>> triples) {
  auto chi = [&](std::size_t a, std::size_t b, int k) {
    return field.phi[b][k] - field.phi[a][k] - (env.point(b)[k] - env.point(a)[k]);
  };
  double worst = 0.0;
  for (const auto& t : triples)
    for (int k = 0; k < field.dim; ++k)
      worst = std::max(worst, std::fabs(chi(t[0], t[1], k) + chi(t[1], t[2], k) - chi(t[0], t[2], k)));
  return worst;
}

}  // namespace vrh
