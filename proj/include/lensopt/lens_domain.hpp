/** @file lens_domain.hpp
    @brief The seven patch half-lens domain and its design control points.

    Patch indices are zero based:
    0 below the lens, 1 right of it, 2 the lens, 3 above the lens,
    4 right of 3, 5 the upper left block (default tracking region), 6 upper right.
*/
#pragma once

#include "lensopt/multipatch.hpp"

#include <array>
#include <vector>

namespace lensopt {

struct DomainParams {
    double L = 0.12; ///< domain height
    double B = 0.05; ///< domain width
    double K = 0.06; ///< height of the lens tip
    double W = 0.04; ///< lens half width
    double P = 0.02; ///< lens thickness on the axis
    double S = 0.09; ///< height of the block above the lens
    double R = 0.04; ///< lower lens boundary on the axis

    void validate() const;
};

/// Named lens shapes from the experiments.
DomainParams lens_preset(const std::string& name);

/// Element counts per patch and direction.
struct Refinement {
    std::array<std::array<int, 2>, 7> elements{};

    /// Counts by columns (left of the tip, right of it) and rows (bottom, lens, middle, top).
    static Refinement layout(int nx_left, int nx_right, int ny_bottom, int ny_lens, int ny_middle, int ny_top);
    /// Counts that reproduce the paper's dof totals.
    static Refinement paper_like();
    void validate() const;
};

/// Lens boundary arc from (0, y_axis) to (W, K), horizontal at the axis.
NurbsCurve lens_arc(double y_axis, double W, double K, int degree, int n_elements);

MultiPatchDomain build_lens_domain(const DomainParams& params, int degree, const Refinement& refinement);

constexpr int kLensPatch = 2;
constexpr int kTrackingPatch = 5;

enum class LensBoundary { Upper, Lower };
enum class MovingSet { Upper, Lower, Both };

struct DesignDof {
    int global = -1;
    LensBoundary boundary = LensBoundary::Upper;
    double x = 0.0;
    double y = 0.0;
    bool pinned = false;
};

struct LensShape {
    std::vector<DesignDof> dofs;

    int size() const { return static_cast<int>(dofs.size()); }
    std::vector<int> movable() const;
    Eigen::VectorXd y() const;
    void set_y(const Eigen::VectorXd& y);
};

/// Upper boundary then lower boundary, axis to tip; the shared tip appears once and is pinned.
/// Dofs on a boundary not included in `moving` are pinned as well.
LensShape design_dof_set(const MultiPatchDomain& domain, MovingSet moving = MovingSet::Both);

} // namespace lensopt
