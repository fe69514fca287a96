#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "pvar/algebra.hpp"
#include "pvar/moments.hpp"

namespace pvar {

struct TruncationSpec {
    std::vector<int> cutoffs;  // Fock levels kept per mode (dimension = cutoff)
    int n_spins = 0;
    long dimension_cap = 4096;

    long dimension() const;
    void validate() const;
};

using SparseOp = Eigen::SparseMatrix<cplx>;

/// Dense operator matrices for a truncated model Hilbert space.
class FockSpace {
  public:
    FockSpace(TruncationSpec trunc);

    const TruncationSpec& trunc() const { return trunc_; }
    long dim() const { return dim_; }

    SparseOp annihilation(int mode) const;
    SparseOp creation(int mode) const;
    SparseOp spin(int site, SpinOp op) const;
    SparseOp identity() const;

    SparseOp matrix(const OperatorPolynomial& op) const;

  private:
    TruncationSpec trunc_;
    long dim_;
    std::vector<SparseOp> mode_ann_;              // per mode
    std::vector<std::array<SparseOp, 3>> spins_;  // per site: sigma+, sigma-, sigma_z
};

struct SteadyStateResult {
    Eigen::MatrixXcd rho;
    double residual = 0;                      // ||L(rho)||_2 of the vectorized form
    std::vector<double> boundary_population;  // weight on the top Fock level per mode
};

/// Vectorized Liouvillian in column-stacking convention, vec(AXB) = (B^T ⊗ A) vec(X).
SparseOp build_liouvillian(const ModelSpec& model, const FockSpace& space);

struct SteadyStateOptions {
    bool strict = false;                  // escalate boundary-population warning to error
    double boundary_tolerance = 1e-6;
};

SteadyStateResult steady_state(const SparseOp& liouvillian, const FockSpace& space,
                               const SteadyStateOptions& options = {});

/// Convenience: build + solve.
SteadyStateResult steady_state(const ModelSpec& model, const FockSpace& space,
                               const SteadyStateOptions& options = {});

cplx exact_moment(const SteadyStateResult& result, const FockSpace& space, const MomentKey& key);

}  // namespace pvar
