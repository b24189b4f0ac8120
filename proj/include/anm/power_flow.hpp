#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "anm/network.hpp"

namespace anm {

using Complex = std::complex<double>;

/// Bus admittance matrix in per-unit. Every diagonal entry is stored, even
/// when zero, and the off-diagonal pattern is structurally symmetric.
struct AdmittanceMatrix {
  std::size_t n = 0;
  Eigen::SparseMatrix<Complex> y;  // column-major, compressed

  Complex at(std::size_t row, std::size_t col) const { return y.coeff(row, col); }
};

/// Builds Y from the conventional pi model with the tap on the from side.
/// Throws Error{SingularBranch} for a branch with r = x = 0.
AdmittanceMatrix build_admittance(const NetworkSpec& spec);

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 50;
};

struct PowerFlowSolution {
  std::vector<Complex> v;
  int iterations = 0;
  double max_mismatch = 0.0;
  Complex slack_injection{};
  // max |mismatch| before the first step and after every step
  std::vector<double> mismatch_trace;
};

/// Newton-Raphson power-flow solver in polar coordinates with a reusable
/// workspace. The Jacobian sparsity pattern and its symbolic LU analysis are
/// computed once at construction; each solve only refactorizes numerically.
///
/// All buses other than `slack_bus` are PQ. The slack is held at 1.0 p.u.
/// with zero angle. Not thread-safe; use one solver per environment.
class PowerFlowSolver {
 public:
  PowerFlowSolver(AdmittanceMatrix y, std::size_t slack_bus);

  /// `injections` holds the net complex injection per bus, slack device
  /// excluded. The slack bus entry is treated as fixed load/generation at the
  /// slack bus when reporting `slack_injection`.
  /// Throws Error{Diverged} on non-convergence, a singular Jacobian, or any
  /// |v| leaving (0.01, 10).
  PowerFlowSolution solve(std::span<const Complex> injections,
                          const SolverOptions& opts = {});

  const AdmittanceMatrix& admittance() const { return y_; }
  std::size_t slack_bus() const { return slack_; }

 private:
  void compute_power(const std::vector<Complex>& v);
  double fill_mismatch(std::span<const Complex> injections);
  void fill_jacobian(const std::vector<Complex>& v);

  AdmittanceMatrix y_;
  std::size_t slack_;
  std::size_t m_ = 0;                 // number of PQ buses
  std::vector<int> pos_;              // bus -> PQ position or -1
  Eigen::SparseMatrix<double> jac_;   // 2m x 2m
  // For each stored Y entry: value offsets of the four J blocks, -1 if absent.
  struct Slots {
    int row_bus, col_bus;
    int pa, pm, qa, qm;
  };
  std::vector<Slots> slots_;
  std::vector<int> diag_entry_;       // bus -> index into Y value array
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  bool analyzed_ = false;
  std::vector<Complex> current_;      // Y v
  std::vector<Complex> power_;        // v conj(Y v)
  Eigen::VectorXd rhs_;
  Eigen::VectorXd dx_;
};

/// One-shot convenience wrapper around PowerFlowSolver.
PowerFlowSolution solve(const AdmittanceMatrix& y, std::span<const Complex> injections,
                        std::size_t slack_bus, const SolverOptions& opts = {});

struct BranchFlow {
  Complex s_from{};
  Complex s_to{};
  double loss = 0.0;  // r |I_series|^2
};

using BranchFlowSet = std::vector<BranchFlow>;

BranchFlowSet branch_flows(std::span<const Complex> v, const NetworkSpec& spec,
                           const NetworkIndex& index);
BranchFlowSet branch_flows(const PowerFlowSolution& sol, const NetworkSpec& spec);

double total_losses(const BranchFlowSet& flows);

}  // namespace anm
