#include "anm/power_flow.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "anm/error.hpp"

namespace anm {

namespace {

constexpr double kPolishFloor = 1e-13;
constexpr double kVMinGuard = 0.01;
constexpr double kVMaxGuard = 10.0;

struct BranchAdmittance {
  Complex ff, ft, tf, tt;
  Complex y_series;
};

BranchAdmittance branch_admittance(const BranchSpec& br) {
  Complex z(br.r, br.x);
  Complex y = 1.0 / z;
  Complex shunt(0.0, br.b / 2.0);
  double tau = br.tap;
  Complex a = std::polar(tau, br.shift);
  return {(y + shunt) / (tau * tau), -y / std::conj(a), -y / a, y + shunt, y};
}

}  // namespace

AdmittanceMatrix build_admittance(const NetworkSpec& spec) {
  const std::size_t n = spec.buses.size();
  std::unordered_map<std::int64_t, int> pos;
  for (std::size_t i = 0; i < n; ++i) pos[spec.buses[i].id] = static_cast<int>(i);

  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(n + 4 * spec.branches.size());
  for (std::size_t i = 0; i < n; ++i) trip.emplace_back(i, i, Complex{});

  for (std::size_t k = 0; k < spec.branches.size(); ++k) {
    const auto& br = spec.branches[k];
    if (br.r == 0.0 && br.x == 0.0) {
      throw Error(ErrorCode::SingularBranch, "branch[" + std::to_string(k) + "] has r = x = 0");
    }
    auto fi = pos.find(br.from_bus);
    auto ti = pos.find(br.to_bus);
    if (fi == pos.end() || ti == pos.end()) {
      throw Error(ErrorCode::InvalidConfig, "branch[" + std::to_string(k) + "] references an unknown bus");
    }
    int f = fi->second;
    int t = ti->second;
    auto adm = branch_admittance(br);
    trip.emplace_back(f, f, adm.ff);
    trip.emplace_back(f, t, adm.ft);
    trip.emplace_back(t, f, adm.tf);
    trip.emplace_back(t, t, adm.tt);
  }

  AdmittanceMatrix out;
  out.n = n;
  out.y.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  out.y.setFromTriplets(trip.begin(), trip.end());
  out.y.makeCompressed();
  return out;
}

PowerFlowSolver::PowerFlowSolver(AdmittanceMatrix y, std::size_t slack_bus)
    : y_(std::move(y)), slack_(slack_bus) {
  const std::size_t n = y_.n;
  if (slack_ >= n) throw Error(ErrorCode::InvalidConfig, "slack bus index out of range");
  m_ = n - 1;
  pos_.assign(n, -1);
  int p = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != slack_) pos_[i] = p++;
  }
  current_.assign(n, Complex{});
  power_.assign(n, Complex{});
  diag_entry_.assign(n, -1);
  if (m_ == 0) return;

  const int m = static_cast<int>(m_);
  std::vector<Eigen::Triplet<double>> trip;
  for (int col = 0; col < y_.y.outerSize(); ++col) {
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(y_.y, col); it; ++it) {
      int row = static_cast<int>(it.row());
      int pi = pos_[row];
      int pj = pos_[col];
      if (pi < 0 || pj < 0) continue;
      trip.emplace_back(pi, pj, 1.0);
      trip.emplace_back(pi, m + pj, 1.0);
      trip.emplace_back(m + pi, pj, 1.0);
      trip.emplace_back(m + pi, m + pj, 1.0);
    }
  }
  jac_.resize(2 * m, 2 * m);
  jac_.setFromTriplets(trip.begin(), trip.end());
  jac_.makeCompressed();

  auto offset = [this](int r, int c) {
    const int* inner = jac_.innerIndexPtr();
    const int* outer = jac_.outerIndexPtr();
    const int* hit = std::lower_bound(inner + outer[c], inner + outer[c + 1], r);
    return static_cast<int>(hit - inner);
  };
  for (int col = 0; col < y_.y.outerSize(); ++col) {
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(y_.y, col); it; ++it) {
      int row = static_cast<int>(it.row());
      int pi = pos_[row];
      int pj = pos_[col];
      if (pi < 0 || pj < 0) continue;
      if (row == col) diag_entry_[row] = static_cast<int>(slots_.size());
      slots_.push_back({row, col, offset(pi, pj), offset(pi, m + pj), offset(m + pi, pj),
                        offset(m + pi, m + pj)});
    }
  }
  rhs_.resize(2 * m);
  dx_.resize(2 * m);
}

void PowerFlowSolver::compute_power(const std::vector<Complex>& v) {
  std::fill(current_.begin(), current_.end(), Complex{});
  const Complex* val = y_.y.valuePtr();
  const int* inner = y_.y.innerIndexPtr();
  const int* outer = y_.y.outerIndexPtr();
  for (std::size_t col = 0; col < y_.n; ++col) {
    const Complex vj = v[col];
    for (int k = outer[col]; k < outer[col + 1]; ++k) current_[inner[k]] += val[k] * vj;
  }
  for (std::size_t i = 0; i < y_.n; ++i) power_[i] = v[i] * std::conj(current_[i]);
}

double PowerFlowSolver::fill_mismatch(std::span<const Complex> injections) {
  double worst = 0.0;
  for (std::size_t i = 0; i < y_.n; ++i) {
    int p = pos_[i];
    if (p < 0) continue;
    Complex d = power_[i] - injections[i];
    rhs_[p] = d.real();
    rhs_[static_cast<Eigen::Index>(m_) + p] = d.imag();
    worst = std::max({worst, std::fabs(d.real()), std::fabs(d.imag())});
  }
  return worst;
}

void PowerFlowSolver::fill_jacobian(const std::vector<Complex>& v) {
  double* jv = jac_.valuePtr();
  const Complex* yv = y_.y.valuePtr();
  const Complex j1(0.0, 1.0);
  // Slots are stored in the same order as the PQ-restricted Y entries.
  std::size_t s = 0;
  for (std::size_t col = 0; col < y_.n; ++col) {
    for (int k = y_.y.outerIndexPtr()[col]; k < y_.y.outerIndexPtr()[col + 1]; ++k) {
      const int row = y_.y.innerIndexPtr()[k];
      if (pos_[row] < 0 || pos_[col] < 0) continue;
      const Slots& sl = slots_[s++];
      const Complex yv_j = yv[k] * v[col];
      const double vm = std::abs(v[col]);
      Complex d_ang = -j1 * v[row] * std::conj(yv_j);
      Complex d_mag = v[row] * std::conj(yv_j / vm);
      jv[sl.pa] = d_ang.real();
      jv[sl.qa] = d_ang.imag();
      jv[sl.pm] = d_mag.real();
      jv[sl.qm] = d_mag.imag();
    }
  }
  for (std::size_t i = 0; i < y_.n; ++i) {
    if (pos_[i] < 0) continue;
    const Slots& sl = slots_[diag_entry_[i]];
    const Complex vi = v[i];
    Complex d_ang = j1 * vi * std::conj(current_[i]);
    Complex d_mag = std::conj(current_[i]) * vi / std::abs(vi);
    jv[sl.pa] += d_ang.real();
    jv[sl.qa] += d_ang.imag();
    jv[sl.pm] += d_mag.real();
    jv[sl.qm] += d_mag.imag();
  }
}

PowerFlowSolution PowerFlowSolver::solve(std::span<const Complex> injections,
                                         const SolverOptions& opts) {
  if (injections.size() != y_.n) {
    throw Error(ErrorCode::ArityMismatch, "injection vector has " + std::to_string(injections.size()) +
                                              " entries, expected " + std::to_string(y_.n));
  }
  if (!(opts.tol > 0.0) || opts.max_iter < 1) {
    throw Error(ErrorCode::InvalidConfig, "solver options require tol > 0 and max_iter >= 1");
  }

  PowerFlowSolution sol;
  sol.v.assign(y_.n, Complex(1.0, 0.0));
  std::vector<double> vm(y_.n, 1.0);
  std::vector<double> va(y_.n, 0.0);

  compute_power(sol.v);
  double mis = fill_mismatch(injections);
  sol.mismatch_trace.push_back(mis);
  if (!std::isfinite(mis)) throw Error(ErrorCode::Diverged, "non-finite injections");

  const Eigen::Index m = static_cast<Eigen::Index>(m_);
  // One extra step after reaching tol pushes the residual to round-off, so
  // power balance holds well below tol when summed over all buses.
  bool polished = false;
  while (true) {
    if (mis <= opts.tol) {
      if (polished || sol.iterations == 0 || mis <= kPolishFloor) break;
      polished = true;
    } else if (sol.iterations >= opts.max_iter) {
      throw Error(ErrorCode::Diverged, "mismatch " + std::to_string(mis) + " after " +
                                           std::to_string(sol.iterations) + " iterations");
    }
    fill_jacobian(sol.v);
    if (!analyzed_) {
      lu_.analyzePattern(jac_);
      analyzed_ = true;
    }
    lu_.factorize(jac_);
    if (lu_.info() != Eigen::Success) throw Error(ErrorCode::Diverged, "singular Jacobian");
    dx_ = lu_.solve(rhs_);

    for (std::size_t i = 0; i < y_.n; ++i) {
      int p = pos_[i];
      if (p < 0) continue;
      va[i] -= dx_[p];
      vm[i] -= dx_[m + p];
      if (!(vm[i] > kVMinGuard && vm[i] < kVMaxGuard) || !std::isfinite(va[i])) {
        throw Error(ErrorCode::Diverged, "voltage magnitude left the admissible range");
      }
      sol.v[i] = std::polar(vm[i], va[i]);
    }
    ++sol.iterations;
    compute_power(sol.v);
    mis = fill_mismatch(injections);
    sol.mismatch_trace.push_back(mis);
    if (!std::isfinite(mis)) throw Error(ErrorCode::Diverged, "non-finite mismatch");
  }

  sol.max_mismatch = mis;
  sol.slack_injection = power_[slack_] - injections[slack_];
  return sol;
}

PowerFlowSolution solve(const AdmittanceMatrix& y, std::span<const Complex> injections,
                        std::size_t slack_bus, const SolverOptions& opts) {
  PowerFlowSolver solver(y, slack_bus);
  return solver.solve(injections, opts);
}

BranchFlowSet branch_flows(std::span<const Complex> v, const NetworkSpec& spec,
                           const NetworkIndex& index) {
  BranchFlowSet out(spec.branches.size());
  for (std::size_t k = 0; k < spec.branches.size(); ++k) {
    const auto& br = spec.branches[k];
    auto adm = branch_admittance(br);
    const Complex vf = v[index.branch_from[k]];
    const Complex vt = v[index.branch_to[k]];
    out[k].s_from = vf * std::conj(adm.ff * vf + adm.ft * vt);
    out[k].s_to = vt * std::conj(adm.tf * vf + adm.tt * vt);
    Complex i_series = adm.y_series * (vf / std::polar(br.tap, br.shift) - vt);
    out[k].loss = br.r * std::norm(i_series);
  }
  return out;
}

BranchFlowSet branch_flows(const PowerFlowSolution& sol, const NetworkSpec& spec) {
  return branch_flows(sol.v, spec, NetworkIndex::build(spec));
}

double total_losses(const BranchFlowSet& flows) {
  double sum = 0.0;
  for (const auto& f : flows) sum += f.loss;
  return sum;
}

}  // namespace anm
