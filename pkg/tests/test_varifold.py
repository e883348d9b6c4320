"""Varifold calculus: quadrature, first variation, mean curvature, decomposition."""
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mconvex import geometry as geo
from mconvex import meshes
from mconvex import varifold as vf


class TestSVMesh:
    def test_roundtrip(self):
        mesh = meshes.square_mesh(divisions=3)
        again = vf.svmesh_loads(vf.svmesh_dumps(mesh))
        np.testing.assert_array_equal(mesh.vertices, again.vertices)
        np.testing.assert_array_equal(mesh.simplices, again.simplices)
        np.testing.assert_array_equal(mesh.multiplicity, again.multiplicity)

    def test_default_multiplicity(self):
        text = "SVMESH 1 2\n2 1\n0 0\n1 0\n0 1\n"
        mesh = vf.svmesh_loads(text)
        assert mesh.multiplicity[0] == 1.0

    def test_bad_header(self):
        with pytest.raises(vf.MeshFormatError):
            vf.svmesh_loads("MESH 2 3\n0 0\n")

    def test_wrong_counts(self):
        with pytest.raises(vf.MeshFormatError):
            vf.svmesh_loads("SVMESH 1 2\n2 1\n0 0\n1 0\n")

    def test_bad_vertex_line(self):
        with pytest.raises(vf.MeshFormatError):
            vf.svmesh_loads("SVMESH 1 2\n2 1\n0 0 0\n1 0\n0 1\n")

    def test_index_out_of_range(self):
        with pytest.raises(vf.VarifoldError):
            vf.svmesh_loads("SVMESH 1 2\n2 1\n0 0\n1 0\n0 5\n")

    def test_comments_and_blanks_ignored(self):
        text = "# a mesh\nSVMESH 1 2\n\n2 1\n0 0\n1 0\n\n0 1 2.0\n"
        mesh = vf.svmesh_loads(text)
        assert mesh.multiplicity[0] == 2.0


class TestFromMesh:
    def test_unit_square_total_weight(self):
        mesh = meshes.square_mesh(side=1.0, divisions=1)
        for order in (1, 2, 4):
            V = vf.varifold_from_mesh(mesh, order=order)
            assert V.total_weight == pytest.approx(1.0, abs=1e-12)

    def test_multiplicity_linearity(self):
        mesh = meshes.square_mesh(divisions=2)
        doubled = vf.SimplicialSurface(mesh.vertices, mesh.simplices,
                                       2.0 * mesh.multiplicity)
        V1 = vf.varifold_from_mesh(mesh)
        V2 = vf.varifold_from_mesh(doubled)
        np.testing.assert_allclose(V2.weights, 2.0 * V1.weights)

    def test_sphere_area_refinement(self):
        mesh = meshes.icosphere_mesh(subdivisions=4)
        assert len(mesh.simplices) >= 5000
        V = vf.varifold_from_mesh(mesh)
        assert V.total_weight == pytest.approx(4 * np.pi, rel=0.01)

    def test_frames_orthonormal(self, unit_disk_mesh):
        V = vf.varifold_from_mesh(unit_disk_mesh)
        assert V.check_frames(geo.metric_euclidean()) <= 1e-10

    def test_frames_orthonormal_conformal(self, unit_disk_mesh):
        metric = geo.metric_conformal("0 - log(2)")
        V = vf.varifold_from_mesh(unit_disk_mesh, metric)
        assert V.check_frames(metric) <= 1e-10

    def test_conformal_area_scaling(self, unit_disk_mesh):
        metric = geo.metric_conformal("0 - log(2)")  # lengths scale by 1/2
        V = vf.varifold_from_mesh(unit_disk_mesh)
        Vc = vf.varifold_from_mesh(unit_disk_mesh, metric)
        assert Vc.total_weight == pytest.approx(0.25 * V.total_weight)

    def test_degenerate_simplex_rejected(self):
        verts = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float)
        mesh = vf.SimplicialSurface(verts, np.array([[0, 1, 2]]))
        with pytest.raises(vf.DegenerateSimplexError):
            vf.varifold_from_mesh(mesh)


class TestFirstVariation:
    def test_constant_field_on_disk(self, unit_disk_mesh):
        V = vf.varifold_from_mesh(unit_disk_mesh)
        X = geo.ConstantVectorField(np.array([1.0, 2.0, -0.5]))
        assert vf.first_variation(V, X) == pytest.approx(0.0, abs=1e-12)

    def test_position_field_doubles_area(self, unit_disk_mesh):
        V = vf.varifold_from_mesh(unit_disk_mesh)
        X = geo.position_field(3)
        assert vf.first_variation(V, X) == pytest.approx(2 * V.total_weight, rel=1e-12)

    def test_linearity(self, unit_disk_mesh):
        V = vf.varifold_from_mesh(unit_disk_mesh)
        X = geo.BumpVectorField(np.array([0.2, 0, 0]), 0.5, np.array([0, 0, 1.0]))
        Y = geo.ExprVectorField(["x2", "x3", "x1"], 3)
        combo = geo.CombinationVectorField([(2.5, X), (-1.5, Y)])
        lhs = vf.first_variation(V, combo)
        rhs = 2.5 * vf.first_variation(V, X) - 1.5 * vf.first_variation(V, Y)
        assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_additivity_over_varifolds(self, unit_disk_mesh):
        sq = meshes.square_mesh(center=(0, 0, 0.5), divisions=2)
        V1 = vf.varifold_from_mesh(unit_disk_mesh)
        V2 = vf.varifold_from_mesh(sq)
        both = vf.DiscreteVarifold(
            2, np.vstack([V1.points, V2.points]),
            np.vstack([V1.frames, V2.frames]),
            np.concatenate([V1.weights, V2.weights]))
        X = geo.ExprVectorField(["sin(x3)", "x1*x2", "x2"], 3)
        assert vf.first_variation(both, X) == pytest.approx(
            vf.first_variation(V1, X) + vf.first_variation(V2, X), abs=1e-10)

    def test_rigid_motions_on_closed_mesh(self):
        V = vf.varifold_from_mesh(meshes.icosphere_mesh(subdivisions=3))
        const = geo.ConstantVectorField(np.array([0.3, -1.0, 0.7]))
        rot = geo.LinearVectorField(np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 0]]))
        assert abs(vf.first_variation(V, const)) <= 1e-9
        assert abs(vf.first_variation(V, rot)) <= 1e-9

    def test_weight_integral(self, unit_disk_mesh):
        V = vf.varifold_from_mesh(unit_disk_mesh)
        assert vf.weight_integral(V, lambda p: np.ones(len(p))) == pytest.approx(
            V.total_weight)
        assert vf.weight_integral(V, lambda p: np.zeros(len(p))) == 0.0

    def test_barrier_support_property(self, ball_bundle, unit_disk_mesh):
        # the disk through the equator is far from the tube: |X| integrates to 0
        V = vf.varifold_from_mesh(unit_disk_mesh)
        X = ball_bundle.field()
        assert vf.weight_integral(V, vf.field_magnitude(X)) == 0.0


class TestFlow:
    def test_zero_field_identity(self, unit_disk_mesh):
        out = vf.flow_mesh(unit_disk_mesh, geo.ConstantVectorField(np.zeros(3)), 1.0)
        np.testing.assert_array_equal(out.vertices, unit_disk_mesh.vertices)

    def test_constant_field_translates(self, unit_disk_mesh):
        v = np.array([0.1, -0.2, 0.3])
        out = vf.flow_mesh(unit_disk_mesh, geo.ConstantVectorField(v), 1.0)
        np.testing.assert_allclose(out.vertices, unit_disk_mesh.vertices + v, atol=1e-12)

    def test_flow_derivative_matches_first_variation(self, unit_disk_mesh):
        X = geo.BumpVectorField(np.array([0.2, 0.0, 0.0]), 0.6,
                                np.array([0.1, 0.2, 0.9]))
        V = vf.varifold_from_mesh(unit_disk_mesh, order=4)
        dv = vf.first_variation(V, X)
        base = vf.area(unit_disk_mesh, order=4)
        ratios = []
        for t in (1e-2, 1e-3, 1e-4):
            fd = (vf.area(vf.flow_mesh(unit_disk_mesh, X, t), order=4) - base) / t
            ratios.append(abs(dv - fd) / t)
        # |dV - FD| <= C t with C stable under t-halving
        assert max(ratios) <= 2.0 * min(ratios) + 1e-9

    def test_chart_escape_raises(self, unit_disk_mesh):
        dom = geo.domain_ball(radius=1.0)
        X = geo.ConstantVectorField(np.array([10.0, 0.0, 0.0]))
        with pytest.raises(vf.VarifoldError):
            vf.flow_mesh(unit_disk_mesh, X, 1.0, domain=dom)


class TestMinimizingChecks:
    def test_flat_disk_minimizing(self, unit_disk_mesh):
        dom = geo.domain_ball(radius=2.0)
        V = vf.varifold_from_mesh(unit_disk_mesh)
        fields = [
            geo.BumpVectorField(np.array([0.2, 0.1, 0.0]), 0.3, np.array([0, 0, 1.0])),
            geo.BumpVectorField(np.array([-0.3, 0.0, 0.0]), 0.25, np.array([0, 0, -1.0])),
        ]
        rep = vf.check_first_order_minimizing(V, dom, fields)
        assert rep["passed"]

    def test_chord_endpoint_push_not_minimizing(self):
        # m = 1: pushing near an endpoint of a diameter chord shortens it
        dom = geo.domain_ball(radius=1.0)
        chord = meshes.chord_polyline((-1.0 + 1e-6, 0, 0), (1.0 - 1e-6, 0, 0),
                                      segments=64)
        V = vf.varifold_from_mesh(chord)
        # bump covers the right endpoint and pushes it inward along the chord
        X = geo.BumpVectorField(np.array([0.98, 0.0, 0.0]), 0.05,
                                np.array([-1.0, 0.0, 0.0]))
        rep = vf.check_first_order_minimizing(V, dom, [X])
        assert not rep["passed"]
        assert rep["min_delta_V"] < 0

    def test_mesh_far_from_support(self, unit_disk_mesh):
        dom = geo.domain_ball(radius=2.0)
        V = vf.varifold_from_mesh(unit_disk_mesh)
        X = geo.BumpVectorField(np.array([0.0, 0.0, 1.5]), 0.2, np.array([1.0, 0, 0]))
        rep = vf.check_first_order_minimizing(V, dom, [X])
        assert rep["passed"]
        assert rep["min_delta_V"] == 0.0

    def test_inadmissible_field_rejected(self, unit_disk_mesh):
        dom = geo.domain_ball(radius=1.0)
        V = vf.varifold_from_mesh(unit_disk_mesh)
        outward = geo.ExprVectorField(["x1", "x2", "x3"], 3)  # points out of the ball
        with pytest.raises(vf.InadmissibleFieldError):
            vf.check_first_order_minimizing(V, dom, [outward])

    def test_bounded_mc_h0_is_sign_test(self, unit_disk_mesh):
        V = vf.varifold_from_mesh(unit_disk_mesh)
        X = geo.BumpVectorField(np.array([0.2, 0.0, 0.0]), 0.4, np.array([0, 0, 1.0]))
        rep = vf.check_bounded_mc(V, X, 0.0)
        assert rep["value"] == pytest.approx(vf.first_variation(V, X))

    def test_sphere_saturates_bounded_mc(self):
        # radius m/h sphere (|H| = h) flowed inward: dV(X) = -h * mass(X)
        h = 2.0
        mesh = meshes.icosphere_mesh(radius=2.0 / h, subdivisions=3)
        V = vf.varifold_from_mesh(mesh, order=4)
        # inward radial field
        X = geo.ExprVectorField(["0 - x1", "0 - x2", "0 - x3"], 3)
        dv = vf.first_variation(V, X)
        mass = vf.weight_integral(V, vf.field_magnitude(X))
        assert dv == pytest.approx(-h * mass, rel=5e-3)


class TestMeanCurvature:
    def test_flat_disk_interior_zero(self, unit_disk_mesh):
        H, interior = vf.mesh_mean_curvature(unit_disk_mesh)
        assert np.max(np.linalg.norm(H[interior], axis=-1)) <= 1e-8

    def test_unit_sphere_converges_to_two(self):
        mesh = meshes.icosphere_mesh(subdivisions=4)
        H, interior = vf.mesh_mean_curvature(mesh)
        mags = np.linalg.norm(H, axis=-1)
        assert np.mean(mags) == pytest.approx(2.0, rel=0.05)

    def test_sphere_H_points_inward(self):
        mesh = meshes.icosphere_mesh(subdivisions=3)
        H, _ = vf.mesh_mean_curvature(mesh)
        inward = -mesh.vertices / np.linalg.norm(mesh.vertices, axis=1, keepdims=True)
        align = np.einsum("ve,ve->v", H, inward) / np.linalg.norm(H, axis=1)
        assert np.min(align) > 0.99

    def test_cylinder_converges_to_one(self):
        mesh = meshes.cylinder_mesh(rings=24, segments=128)
        H, interior = vf.mesh_mean_curvature(mesh)
        mags = np.linalg.norm(H[interior], axis=-1)
        assert np.mean(mags) == pytest.approx(1.0, rel=0.05)

    def test_boundary_vertices_flagged(self, unit_disk_mesh):
        _, interior = vf.mesh_mean_curvature(unit_disk_mesh)
        rim = unit_disk_mesh.boundary_vertices()
        assert not np.any(interior[rim])


class TestDecomposition:
    def _combined(self, boundary, extra, mult):
        return vf.SimplicialSurface(
            np.vstack([boundary.vertices, extra.vertices]),
            np.vstack([boundary.simplices,
                       extra.simplices + len(boundary.vertices)]),
            np.concatenate([mult * np.ones(len(boundary.simplices)),
                            np.ones(len(extra.simplices))]))

    def test_three_boundary_plus_disk(self):
        bnd = meshes.icosphere_mesh(subdivisions=2)
        disk = meshes.disk_mesh(radius=0.4, rings=4, segments=24)
        V = self._combined(bnd, disk, 3)
        W, Wp, d = vf.decompose_integral(V, bnd)
        assert d == 3
        assert np.all(W.multiplicity == 3)
        assert len(Wp.simplices) == len(disk.simplices)
        assert np.max(np.linalg.norm(vf.support_points(Wp), axis=1)) < 1.0

    def test_entirely_interior(self):
        bnd = meshes.icosphere_mesh(subdivisions=2)
        disk = meshes.disk_mesh(radius=0.4, rings=4, segments=24)
        W, Wp, d = vf.decompose_integral(disk, bnd)
        assert d == 0 and W is None and Wp is disk

    def test_nonintegral_rejected(self):
        bnd = meshes.icosphere_mesh(subdivisions=1)
        planes = [meshes.square_mesh(side=0.5, center=(0, 0, 2.0 ** -i),
                                     multiplicity=2.0 ** -i) for i in range(1, 11)]
        offs = np.cumsum([0] + [len(m.vertices) for m in planes[:-1]])
        V = vf.SimplicialSurface(
            np.vstack([m.vertices for m in planes]),
            np.vstack([m.simplices + o for o, m in zip(offs, planes)]),
            np.concatenate([m.multiplicity for m in planes]))
        with pytest.raises(vf.NonIntegralError):
            vf.decompose_integral(V, bnd)


class TestSupportDistance:
    def test_atom_at_p(self):
        V = vf.DiscreteVarifold(2, np.zeros((1, 3)),
                                np.eye(3)[None, :2, :], np.ones(1))
        assert vf.support_distance(V, np.zeros(3)) == 0.0

    def test_sphere_from_center(self):
        V = vf.varifold_from_mesh(meshes.icosphere_mesh(subdivisions=3))
        d = vf.support_distance(V, np.zeros(3))
        assert d == pytest.approx(1.0, abs=0.01)

    def test_empty_rejected(self):
        V = vf.DiscreteVarifold(2, np.zeros((1, 3)),
                                np.eye(3)[None, :2, :], np.ones(1))
        V.points = np.zeros((0, 3))
        with pytest.raises(vf.VarifoldError):
            vf.support_distance(V, np.zeros(3))


# property test: total weight is invariant under quadrature order
@settings(max_examples=15, deadline=None)
@given(st.integers(1, 5), st.sampled_from([1, 2, 4]))
def test_total_weight_order_invariant(divisions, order):
    mesh = meshes.square_mesh(divisions=divisions)
    V = vf.varifold_from_mesh(mesh, order=order)
    assert V.total_weight == pytest.approx(1.0, abs=1e-8)
