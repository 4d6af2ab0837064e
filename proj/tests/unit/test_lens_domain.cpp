#include "lensopt/errors.hpp"
#include "lensopt/lens_domain.hpp"

#include <gtest/gtest.h>
#include <cmath>

using namespace lensopt;

namespace {

Refinement coarse() { return Refinement::layout(4, 2, 4, 3, 3, 2); }

} // namespace

TEST(LensDomain, UpperStraightHasSevenConformingPatches)
{
    for (int q : {1, 2}) {
        MultiPatchDomain d = build_lens_domain(lens_preset("upper_straight"), q, coarse());
        EXPECT_EQ(d.n_patches(), 7);
        EXPECT_EQ(d.lens_patch, kLensPatch);
        EXPECT_NO_THROW(d.check_conformity(1e-12));
    }
}

TEST(LensDomain, PaperLikeDofTotals)
{
    const DomainParams p = lens_preset("upper_straight");
    EXPECT_EQ(build_lens_domain(p, 1, Refinement::paper_like()).n_global(), 7976);
    EXPECT_EQ(build_lens_domain(p, 2, Refinement::paper_like()).n_global(), 8484);
}

TEST(LensDomain, PaperLikeDesignDofCount)
{
    const MultiPatchDomain d = build_lens_domain(lens_preset("upper_straight"), 1, Refinement::paper_like());
    const LensShape s = design_dof_set(d);
    int upper = 0, lower = 0;
    for (const auto& x : s.dofs)
        (x.boundary == LensBoundary::Upper ? upper : lower)++;
    // the shared tip is listed once, with the upper boundary
    EXPECT_EQ(upper, 37);
    EXPECT_EQ(lower, 36);
}

TEST(LensDomain, SymmetryEdgesLieOnAxis)
{
    MultiPatchDomain d = build_lens_domain(lens_preset("both_perturbed"), 2, coarse());
    for (int p = 0; p < d.n_patches(); ++p)
        for (Side s : {Side::South, Side::East, Side::North, Side::West}) {
            const NurbsPatch& P = d.patches[p];
            bool on_axis = true;
            for (int loc : P.side_indices(s))
                on_axis = on_axis && std::abs(P.control_points()[loc](0)) < 1e-15;
            if (on_axis)
                EXPECT_EQ(d.tag(p, s), BoundaryTag::Symmetry) << "patch " << p << " side " << to_string(s);
            if (d.tag(p, s) == BoundaryTag::Symmetry)
                EXPECT_TRUE(on_axis);
        }
}

TEST(LensDomain, ExcitationOnBottomAbsorbingOutside)
{
    MultiPatchDomain d = build_lens_domain(lens_preset("upper_straight"), 1, coarse());
    EXPECT_EQ(d.tag(0, Side::South), BoundaryTag::Excitation);
    EXPECT_EQ(d.tag(1, Side::South), BoundaryTag::Excitation);
    EXPECT_EQ(d.tag(1, Side::East), BoundaryTag::Absorbing);
    EXPECT_EQ(d.tag(5, Side::North), BoundaryTag::Absorbing);
    EXPECT_EQ(d.tag(6, Side::North), BoundaryTag::Absorbing);
    EXPECT_EQ(d.tag(2, Side::North), BoundaryTag::LensInterface);
    EXPECT_EQ(d.tag(2, Side::South), BoundaryTag::LensInterface);
}

TEST(LensArc, ExactCircleWithHorizontalAxisTangent)
{
    const double y0 = 0.04, W = 0.04, K = 0.06;
    const double yc = (W * W + K * K - y0 * y0) / (2.0 * (K - y0));
    const double r = yc - y0;
    NurbsCurve c = lens_arc(y0, W, K, 2, 5);
    for (int k = 0; k <= 40; ++k) {
        const Point x = c.eval(k / 40.0);
        EXPECT_NEAR((x - Point(0.0, yc)).norm(), r, 1e-12);
    }
    const Point d0 = c.derivative(0.0);
    EXPECT_NEAR(d0(1), 0.0, 1e-14);
    EXPECT_GT(d0(0), 0.0);
    EXPECT_NEAR((c.eval(1.0) - Point(W, K)).norm(), 0.0, 1e-14);
}

TEST(LensArc, LinearArcInterpolatesCircle)
{
    const double y0 = 0.035, W = 0.04, K = 0.06;
    const double yc = (W * W + K * K - y0 * y0) / (2.0 * (K - y0));
    NurbsCurve c = lens_arc(y0, W, K, 1, 6);
    for (const Point& p : c.points)
        EXPECT_NEAR((p - Point(0.0, yc)).norm(), yc - y0, 1e-12);
}

TEST(LensDomain, IncompatibleRefinementThrows)
{
    Refinement r = coarse();
    r.elements[3][0] = 5;
    EXPECT_THROW(build_lens_domain(lens_preset("upper_straight"), 2, r), ConformityError);
}

TEST(LensDomain, InfeasibleParametersThrow)
{
    DomainParams p = lens_preset("upper_straight");
    p.P = 0.03; // upper boundary on the axis above the tip
    EXPECT_THROW(build_lens_domain(p, 2, coarse()), GeometryError);
    p = lens_preset("upper_straight");
    p.R = 0.01; // rise larger than the half width
    EXPECT_THROW(build_lens_domain(p, 2, coarse()), GeometryError);
    EXPECT_THROW(lens_preset("no_such_lens"), ConfigError);
}

TEST(DesignDofs, FourByTwoLensNet)
{
    // q = 1, 3 elements across and 1 through the lens gives a 4 x 2 control net
    MultiPatchDomain d = build_lens_domain(lens_preset("upper_straight"), 1, Refinement::layout(3, 2, 2, 1, 2, 2));
    ASSERT_EQ(d.patches[kLensPatch].n(0), 4);
    ASSERT_EQ(d.patches[kLensPatch].n(1), 2);
    LensShape s = design_dof_set(d);
    // 4 upper + 4 lower, the collapsed tip counted once
    EXPECT_EQ(s.size(), 7);
    EXPECT_EQ(s.movable().size(), 6u);
    int pinned = -1;
    for (int i = 0; i < s.size(); ++i)
        if (s.dofs[i].pinned)
            pinned = i;
    ASSERT_GE(pinned, 0);
    EXPECT_NEAR(s.dofs[pinned].x, 0.04, 1e-15);
    EXPECT_NEAR(s.dofs[pinned].y, 0.06, 1e-15);
    for (int i : s.movable())
        EXPECT_NE(i, pinned);
}

TEST(DesignDofs, MovingSetPinsOtherBoundary)
{
    MultiPatchDomain d = build_lens_domain(lens_preset("upper_straight"), 2, coarse());
    LensShape up = design_dof_set(d, MovingSet::Upper);
    for (const auto& x : up.dofs)
        if (x.boundary == LensBoundary::Lower)
            EXPECT_TRUE(x.pinned);
    LensShape both = design_dof_set(d, MovingSet::Both);
    EXPECT_GT(both.movable().size(), up.movable().size());
}

TEST(DesignDofs, UpperAboveLowerAtStart)
{
    for (const char* name : {"upper_straight", "upper_curved", "both_perturbed", "both_down", "gauss"}) {
        MultiPatchDomain d = build_lens_domain(lens_preset(name), 1, coarse());
        LensShape s = design_dof_set(d);
        for (const auto& u : s.dofs)
            if (u.boundary == LensBoundary::Upper)
                for (const auto& l : s.dofs)
                    if (l.boundary == LensBoundary::Lower && std::abs(l.x - u.x) < 1e-14)
                        EXPECT_GE(u.y, l.y - 1e-15) << name;
    }
}
