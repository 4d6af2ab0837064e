#include "lensopt/multipatch.hpp"
#include "lensopt/errors.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace lensopt {

const char* to_string(BoundaryTag t)
{
    switch (t) {
    case BoundaryTag::Interior: return "interior";
    case BoundaryTag::Excitation: return "excitation";
    case BoundaryTag::Absorbing: return "absorbing";
    case BoundaryTag::Symmetry: return "symmetry";
    case BoundaryTag::LensInterface: return "interface";
    case BoundaryTag::Collapsed: return "collapsed";
    case BoundaryTag::Untagged: return "untagged";
    }
    return "?";
}

const char* to_string(Side s)
{
    switch (s) {
    case Side::South: return "south";
    case Side::East: return "east";
    case Side::North: return "north";
    case Side::West: return "west";
    }
    return "?";
}

std::vector<int> DofMap::multiplicity() const
{
    std::vector<int> m(n_global, 0);
    for (int g : global)
        ++m[g];
    return m;
}

Eigen::SparseMatrix<double> DofMap::identification() const
{
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(global.size());
    for (size_t r = 0; r < global.size(); ++r)
        t.emplace_back(static_cast<int>(r), global[r], 1.0);
    Eigen::SparseMatrix<double> E(n_local_total(), n_global);
    E.setFromTriplets(t.begin(), t.end());
    return E;
}

namespace {
struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x)
    {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b)
    {
        a = find(a);
        b = find(b);
        if (a != b)
            parent[std::max(a, b)] = std::min(a, b);
    }
};
} // namespace

DofMap glue(const std::vector<int>& patch_dof_counts, const std::vector<DofPair>& pairs)
{
    DofMap map;
    map.offsets.assign(1, 0);
    for (int c : patch_dof_counts)
        map.offsets.push_back(map.offsets.back() + c);
    const int n = map.offsets.back();
    const int np = static_cast<int>(patch_dof_counts.size());
    UnionFind uf(n);
    for (const auto& p : pairs) {
        if (p.patch_a < 0 || p.patch_a >= np || p.patch_b < 0 || p.patch_b >= np ||
            p.local_a < 0 || p.local_a >= patch_dof_counts[p.patch_a] ||
            p.local_b < 0 || p.local_b >= patch_dof_counts[p.patch_b])
            throw DimensionError("dof pair refers to a nonexistent local dof");
        uf.unite(map.offsets[p.patch_a] + p.local_a, map.offsets[p.patch_b] + p.local_b);
    }
    map.global.assign(n, -1);
    std::vector<int> root_id(n, -1);
    int next = 0;
    for (int k = 0; k < n; ++k) {
        int r = uf.find(k);
        if (root_id[r] < 0)
            root_id[r] = next++;
        map.global[k] = root_id[r];
    }
    map.n_global = next;
    return map;
}

DofMap glue(const std::vector<NurbsPatch>& patches, const std::vector<DofPair>& pairs, double tol)
{
    std::vector<GluingError::Mismatch> bad;
    for (const auto& p : pairs) {
        const auto& A = patches.at(p.patch_a);
        const auto& B = patches.at(p.patch_b);
        double d = (A.control_points().at(p.local_a) - B.control_points().at(p.local_b)).norm();
        double dw = std::abs(A.weights()[p.local_a] - B.weights()[p.local_b]);
        if (d > tol || dw > tol)
            bad.push_back({p.patch_a, p.local_a, p.patch_b, p.local_b, std::max(d, dw)});
    }
    if (!bad.empty()) {
        std::ostringstream os;
        os << bad.size() << " glued control point pair(s) do not coincide:";
        for (size_t i = 0; i < bad.size() && i < 8; ++i)
            os << " [" << bad[i].patch_a << ":" << bad[i].local_a << " vs " << bad[i].patch_b << ":"
               << bad[i].local_b << ", " << bad[i].distance << "]";
        throw GluingError(os.str(), std::move(bad));
    }
    std::vector<int> counts;
    for (const auto& p : patches)
        counts.push_back(p.size());
    return glue(counts, pairs);
}

std::vector<DofPair> edge_pairs(const std::vector<NurbsPatch>& patches, const EdgeLink& link)
{
    const auto& A = patches.at(link.patch_a);
    const auto& B = patches.at(link.patch_b);
    auto dir = [](Side s) { return (s == Side::South || s == Side::North) ? 0 : 1; };
    const KnotVector& ka = A.knots(dir(link.side_a));
    const KnotVector& kb = B.knots(dir(link.side_b));
    bool same = ka.degree() == kb.degree() && ka.knots().size() == kb.knots().size();
    if (same) {
        const auto& a = ka.knots();
        const auto& b = kb.knots();
        const size_t m = a.size();
        for (size_t i = 0; i < m && same; ++i) {
            double bi = link.reversed ? 1.0 - b[m - 1 - i] : b[i];
            same = std::abs(a[i] - bi) <= 1e-14;
        }
    }
    if (!same)
        throw ConformityError("knot vectors differ on interface between patch " + std::to_string(link.patch_a) +
                              " (" + to_string(link.side_a) + ") and patch " + std::to_string(link.patch_b) + " (" +
                              to_string(link.side_b) + ")");
    auto ia = A.side_indices(link.side_a);
    auto ib = B.side_indices(link.side_b);
    std::vector<DofPair> out;
    for (size_t k = 0; k < ia.size(); ++k)
        out.push_back({link.patch_a, ia[k], link.patch_b, link.reversed ? ib[ib.size() - 1 - k] : ib[k]});
    return out;
}

MultiPatchDomain::MultiPatchDomain(std::vector<NurbsPatch> p, std::vector<Region> r,
                                   std::vector<std::array<BoundaryTag, 4>> t, std::vector<EdgeLink> l,
                                   std::vector<std::pair<int, Side>> c, int lens)
    : patches(std::move(p)), regions(std::move(r)), tags(std::move(t)), links(std::move(l)),
      collapsed(std::move(c)), lens_patch(lens)
{
    if (regions.size() != patches.size() || tags.size() != patches.size())
        throw DimensionError("regions/tags must have one entry per patch");
    rebuild();
}

std::vector<DofPair> MultiPatchDomain::all_pairs() const
{
    std::vector<DofPair> pairs;
    for (const auto& l : links) {
        auto e = edge_pairs(patches, l);
        pairs.insert(pairs.end(), e.begin(), e.end());
    }
    for (const auto& [p, s] : collapsed) {
        auto idx = patches[p].side_indices(s);
        for (size_t k = 1; k < idx.size(); ++k)
            pairs.push_back({p, idx[0], p, idx[k]});
    }
    return pairs;
}

void MultiPatchDomain::rebuild()
{
    dofs = glue(patches, all_pairs());
}

void MultiPatchDomain::check_conformity(double tol) const
{
    for (const auto& l : links) {
        const auto& A = patches[l.patch_a];
        const auto& B = patches[l.patch_b];
        auto dir = [](Side s) { return (s == Side::South || s == Side::North) ? 0 : 1; };
        auto to_param = [](Side s, double t) -> Point {
            switch (s) {
            case Side::South: return {t, 0.0};
            case Side::North: return {t, 1.0};
            case Side::West: return {0.0, t};
            default: return {1.0, t};
            }
        };
        auto z = A.knots(dir(l.side_a)).breakpoints();
        for (size_t e = 0; e + 1 < z.size(); ++e)
            for (int k = 0; k <= 6; ++k) {
                double t = z[e] + (z[e + 1] - z[e]) * k / 6.0;
                Point xa = A.map(to_param(l.side_a, t));
                Point xb = B.map(to_param(l.side_b, l.reversed ? 1.0 - t : t));
                if ((xa - xb).norm() > tol)
                    throw ConformityError("interface between patch " + std::to_string(l.patch_a) + " and patch " +
                                          std::to_string(l.patch_b) + " not watertight at t=" + std::to_string(t));
            }
    }
}

std::vector<int> MultiPatchDomain::side_globals(int patch, Side s) const
{
    std::vector<int> out;
    for (int loc : patches[patch].side_indices(s))
        out.push_back(dofs(patch, loc));
    return out;
}

std::string MultiPatchDomain::export_text() const
{
    std::ostringstream os;
    for (int p = 0; p < n_patches(); ++p) {
        os << "# patch " << p << " region " << (regions[p] == Region::Lens ? "lens" : "fluid") << " tags";
        for (int s = 0; s < 4; ++s)
            os << ' ' << to_string(tags[p][s]);
        os << '\n' << patches[p].serialize();
    }
    os << "dofmap " << dofs.n_local_total() << ' ' << dofs.n_global << '\n';
    for (int p = 0; p < n_patches(); ++p)
        for (int k = 0; k < patches[p].size(); ++k)
            os << p << ' ' << k << ' ' << dofs(p, k) << '\n';
    return os.str();
}

} // namespace lensopt
