/** @file multipatch.hpp
    @brief Conforming multipatch domains with C0 gluing of interface dofs.
*/
#pragma once

#include "lensopt/nurbs.hpp"

#include <Eigen/Sparse>
#include <array>
#include <string>
#include <vector>

namespace lensopt {

enum class BoundaryTag {
    Interior,       ///< fluid/fluid interface or otherwise unconstrained shared edge
    Excitation,     ///< source boundary, Neumann data
    Absorbing,      ///< first order absorbing condition
    Symmetry,       ///< homogeneous Neumann on the axis
    LensInterface,  ///< lens/fluid interface
    Collapsed,      ///< edge degenerated to a point, no measure
    Untagged
};

enum class Region { Fluid, Lens };

const char* to_string(BoundaryTag t);
const char* to_string(Side s);

struct DofPair {
    int patch_a, local_a, patch_b, local_b;
};

/// Local-to-global numbering; the identification matrix E as an index map.
struct DofMap {
    std::vector<int> offsets; ///< size n_patches + 1
    std::vector<int> global;  ///< concatenated local -> global
    int n_global = 0;

    int operator()(int patch, int local) const { return global[offsets[patch] + local]; }
    int n_patches() const { return static_cast<int>(offsets.size()) - 1; }
    int n_local_total() const { return offsets.empty() ? 0 : offsets.back(); }

    /// Number of local dofs mapped to each global dof (diagonal of E^T E).
    std::vector<int> multiplicity() const;
    /// E with one 1 per row: n_local_total x n_global.
    Eigen::SparseMatrix<double> identification() const;
};

/// Union of paired dofs; numbering is first-seen in patch order then local order.
DofMap glue(const std::vector<int>& patch_dof_counts, const std::vector<DofPair>& pairs);

/// As above, after checking that every pair has coincident control points and weights.
DofMap glue(const std::vector<NurbsPatch>& patches, const std::vector<DofPair>& pairs, double tol = 1e-12);

struct EdgeLink {
    int patch_a;
    Side side_a;
    int patch_b;
    Side side_b;
    bool reversed = false;
};

/// Dof pairs along a shared edge. Throws ConformityError if the edge knot vectors differ.
std::vector<DofPair> edge_pairs(const std::vector<NurbsPatch>& patches, const EdgeLink& link);

class MultiPatchDomain {
public:
    std::vector<NurbsPatch> patches;
    std::vector<Region> regions;
    std::vector<std::array<BoundaryTag, 4>> tags;
    std::vector<EdgeLink> links;
    std::vector<std::pair<int, Side>> collapsed;
    DofMap dofs;
    int lens_patch = -1;

    MultiPatchDomain() = default;
    MultiPatchDomain(std::vector<NurbsPatch> patches, std::vector<Region> regions,
                     std::vector<std::array<BoundaryTag, 4>> tags, std::vector<EdgeLink> links,
                     std::vector<std::pair<int, Side>> collapsed = {}, int lens_patch = -1);

    int n_patches() const { return static_cast<int>(patches.size()); }
    int n_global() const { return dofs.n_global; }
    BoundaryTag tag(int patch, Side s) const { return tags[patch][static_cast<int>(s)]; }

    /// Recompute the numbering from links and collapsed edges (checks coincidence).
    void rebuild();
    /// Physical positions along every link agree to tol when evaluated from both sides.
    void check_conformity(double tol = 1e-12) const;

    /// Every pair that is glued, including collapsed edges.
    std::vector<DofPair> all_pairs() const;

    /// Global indices of the control points of one patch side.
    std::vector<int> side_globals(int patch, Side s) const;

    /// Patch records followed by "dofmap" lines "patch local global".
    std::string export_text() const;
};

} // namespace lensopt
