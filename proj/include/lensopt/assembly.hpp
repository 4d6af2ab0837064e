/** @file assembly.hpp
    @brief Galerkin assembly of the semidiscrete Westervelt system on a multipatch domain.
*/
#pragma once

#include "lensopt/multipatch.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace lensopt {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct MaterialParams {
    double c = 1500.0;       ///< sound speed [m/s]
    double b = 6e-9;         ///< diffusivity [m^2/s]
    double rho = 1000.0;     ///< density [kg/m^3]
    double b_over_a = 5.0;   ///< nonlinearity parameter B/A

    /// Nonlinearity coefficient (1 + B/A / 2) / (rho c^2).
    double k() const { return (1.0 + 0.5 * b_over_a) / (rho * c * c); }
    void validate() const;
};

struct Materials {
    MaterialParams fluid{1500.0, 6e-9, 1000.0, 5.0};
    MaterialParams lens{1100.0, 4e-9, 1250.0, 4.0};

    const MaterialParams& of(Region r) const { return r == Region::Lens ? lens : fluid; }
};

/// Axis-aligned box in physical coordinates.
struct Box {
    double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;

    bool contains(const Point& p) const { return p(0) >= x0 && p(0) <= x1 && p(1) >= y0 && p(1) <= y1; }
    bool empty() const { return !(x1 > x0 && y1 > y0); }
    /// Bounding box of a patch's control net.
    static Box of_patch(const NurbsPatch& patch);
};

struct Excitation {
    double g0 = 4e9;          ///< amplitude [Pa]
    double frequency = 70e3;  ///< [Hz]
    double omega() const;
};

/// Modulated sine g0 exp(-(w t / 8)^2) sin(w t) and its time derivative.
std::pair<double, double> excitation(double t, double g0, double omega);

/// Quadrature points with cached basis data. Boundary caches also hold outward normals.
struct QuadCache {
    std::vector<int> elem_offset{0}; ///< point range per element
    std::vector<int> offset{0};      ///< basis range per point
    std::vector<int> dof;            ///< global dof per basis entry
    std::vector<int> ldof;           ///< concatenated local dof per basis entry
    std::vector<double> val;
    std::vector<Point> grad;         ///< physical gradient
    std::vector<double> wdet;        ///< quadrature weight times measure
    std::vector<Point> x;
    std::vector<Point> xhat;
    std::vector<int> patch;
    std::vector<Point> normal;       ///< outward unit normal (boundary caches only)
    std::vector<int> side;           ///< side index (boundary caches only)

    int n_points() const { return static_cast<int>(wdet.size()); }
    int n_elements() const { return static_cast<int>(elem_offset.size()) - 1; }
    void append_point(const NurbsPatch& p, int patch_id, const DofMap& dofs, const Point& xhat, double weight,
                      BasisValues& scratch, bool check_det = true);
};

/// (q+1)^2 Gauss points per element unless n_points > 0.
QuadCache volume_quadrature(const MultiPatchDomain& domain, int n_points = 0);
/// Points on every side with the given tag.
QuadCache boundary_quadrature(const MultiPatchDomain& domain, BoundaryTag tag, int n_points = 0);
/// Points restricted to D: elements cut by the box boundary use a composite sub-cell rule.
QuadCache tracking_quadrature(const MultiPatchDomain& domain, const Box& D, int n_points = 0, int subdivisions = 16);

/// Matrix-free u-weighted mass: (T(u) v)_i = sum_qp 2k N_i u(qp) v(qp) w.
class TensorOperator {
public:
    TensorOperator(std::shared_ptr<const QuadCache> cache, std::vector<double> two_k, int n_global, int workers = 1);

    Eigen::VectorXd apply(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
    void set_workers(int w) { workers_ = std::max(1, w); }
    int workers() const { return workers_; }
    int size() const { return n_; }

private:
    void point_scalars(int e0, int e1, const Eigen::VectorXd& u, const Eigen::VectorXd& v, std::vector<double>& s) const;

    std::shared_ptr<const QuadCache> cache_;
    std::vector<double> two_k_; ///< per point
    int n_;
    int workers_;
};

/// All matrices and operators of the semidiscrete state and adjoint systems.
struct AssembledSystem {
    int n = 0;
    SpMat M, C, K, A1, A2, MD;
    Eigen::VectorXd load_shape;                ///< boundary integral of each basis function over the source edge
    std::function<double(double)> source;     ///< amplitude multiplying load_shape
    std::shared_ptr<const TensorOperator> tensor;

    Eigen::VectorXd load_at(double t) const;
    /// T(u) v, zero when no tensor is attached.
    Eigen::VectorXd apply_tensor(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
    void validate() const;
};

struct AssemblyOptions {
    int quad_points = 0;   ///< per direction, 0 selects q+1
    int workers = 1;
    int track_subdivisions = 16;
};

/// Builds and owns the quadrature caches of one geometry.
class Assembler {
public:
    Assembler(const MultiPatchDomain& domain, const Materials& materials, AssemblyOptions opts = {});

    SpMat mass() const;
    SpMat damping() const;
    SpMat stiffness() const;
    std::pair<SpMat, SpMat> absorbing() const;
    SpMat tracking_mass(const Box& D) const;
    Eigen::VectorXd load_shape() const;
    std::shared_ptr<TensorOperator> tensor() const;

    /// Concatenated-local (block diagonal, before identification) variant of mass/stiffness.
    SpMat local_mass() const;
    SpMat local_stiffness() const;

    AssembledSystem system(const Excitation& exc, const Box& D) const;

    const MultiPatchDomain& domain() const { return domain_; }
    const Materials& materials() const { return materials_; }
    std::shared_ptr<const QuadCache> volume() const { return volume_; }

private:
    enum class Kind { Mass, Damping, Stiffness };
    SpMat assemble(Kind kind, bool local) const;
    double coefficient(Kind kind, int qp) const;

    MultiPatchDomain domain_;
    Materials materials_;
    AssemblyOptions opts_;
    std::shared_ptr<QuadCache> volume_;
};

SpMat assemble_mass(const MultiPatchDomain& domain, const Materials& materials);
SpMat assemble_damping(const MultiPatchDomain& domain, const Materials& materials);
SpMat assemble_stiffness(const MultiPatchDomain& domain, const Materials& materials);
std::pair<SpMat, SpMat> assemble_boundary(const MultiPatchDomain& domain, const Materials& materials);
SpMat assemble_tracking_mass(const MultiPatchDomain& domain, const Box& D);
Eigen::VectorXd apply_tensor(const MultiPatchDomain& domain, const Materials& materials, const Eigen::VectorXd& u,
                             const Eigen::VectorXd& v);

/// Coordinate text "row col value" with 17 significant digits.
std::string export_matrix_coo(const SpMat& m);

} // namespace lensopt
