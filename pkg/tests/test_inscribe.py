import numpy as np
import pytest

from simplexfam.errors import (
    ChartSingularityError,
    CollapseError,
    OpenTraceError,
    SolveError,
)
from simplexfam.inscribe import (
    FamilyTrace,
    SolveOptions,
    axis_rotation_path,
    degree_sum,
    initial_guess_round,
    jacobian_fd,
    newton_solve,
    pose_coverage,
    random_pose,
    residual,
    residual_and_jacobian,
    rotation_path,
    state_from_vertices,
    sweep_homotopy,
    trace_pose_loop,
)
from simplexfam.radial import EllipseRadial, ExprRadial, parse_radial
from simplexfam.simspace import Pose, SimplexConfig, normalize_reference, is_similar, pose
from simplexfam.spheres import RadialEmbedding, round_sphere, unit_from_angles

from _oracles import pose_slice_solutions


def equilateral_class():
    return normalize_reference(
        SimplexConfig(np.array([[np.cos(a), np.sin(a)] for a in np.deg2rad([90, 210, 330])]))
    )


def tetrahedron_class():
    return normalize_reference(
        SimplexConfig(np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(3))
    )


def ellipse_curve():
    return RadialEmbedding(2, EllipseRadial(1.2, 1.0))


def test_residual_zero_at_round_guess():
    for cls, k in ((equilateral_class(), 2), (tetrahedron_class(), 3)):
        gamma = round_sphere(k)
        rng = np.random.default_rng(0)
        for _ in range(5):
            U = random_pose(rng, k)
            st = initial_guess_round(U, cls)
            assert np.linalg.norm(residual(st, U, cls, gamma)) < 1e-12


def test_residual_scale_perturbation_slope():
    cls = tetrahedron_class()
    gamma = round_sphere(3)
    U = Pose.identity(3)
    st = initial_guess_round(U, cls)
    expected_slope = float(np.sqrt((cls.rho[1:] ** 2).sum()))
    n = 3 * 4
    nxi = 4 * 2
    for delta in (1e-6, 1e-4, 1e-2):
        step = np.zeros(n)
        step[nxi] = delta
        rn = np.linalg.norm(residual(st.advanced(step), U, cls, gamma))
        assert rn == pytest.approx(delta * expected_slope, rel=1e-6)


def test_residual_chart_singularity_path():
    lopsided = RadialEmbedding(3, ExprRadial(parse_radial("1 + 0.5*sin(theta)"), nvars=2))
    cls = tetrahedron_class()
    units = np.array([[1e-10, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]])
    units /= np.linalg.norm(units, axis=1)[:, None]
    st = state_from_vertices(units, 1.0, np.zeros(3))
    with pytest.raises(ChartSingularityError):
        residual_and_jacobian(st, Pose.identity(3), cls, lopsided)


def test_initial_guess_examples():
    cls = equilateral_class()
    st = initial_guess_round(Pose.identity(2), cls)
    assert np.abs(st.vertex_units() - cls.delta_hat.q).max() < 1e-12

    rot = Pose.rotation2d(np.pi / 3)
    st = initial_guess_round(rot, cls)
    assert np.abs(st.vertex_units() - cls.delta_hat.q @ rot.U.T).max() < 1e-12

    cls3 = tetrahedron_class()
    rng = np.random.default_rng(1)
    gamma = round_sphere(3)
    for _ in range(10):
        U = random_pose(rng, 3)
        st = initial_guess_round(U, cls3)
        assert np.linalg.norm(residual(st, U, cls3, gamma)) < 1e-12


def test_round_solves_fast_and_exact():
    rng = np.random.default_rng(2)
    for cls, k in ((equilateral_class(), 2), (tetrahedron_class(), 3)):
        gamma = round_sphere(k)
        for _ in range(25):
            U = random_pose(rng, k)
            sol = newton_solve(initial_guess_round(U, cls), U, cls, gamma)
            assert sol.iterations <= 2
            assert sol.residual_norm < 1e-10
            assert np.abs(sol.params.pose.U - U.U).max() < 1e-8
            # solutions are rigid rotations of the normalized reference
            assert np.abs(sol.vertices - cls.delta_hat.q @ U.U.T).max() < 1e-9
            assert not sol.near_nontransverse


def test_solution_invariants_on_ellipse():
    cls = equilateral_class()
    gamma = ellipse_curve()
    rng = np.random.default_rng(3)
    for _ in range(10):
        U = random_pose(rng, 2)
        sol = sweep_homotopy(U, cls, gamma, steps=8)[-1]
        cfg = SimplexConfig(sol.vertices)
        # vertices on the surface
        for p, v in zip(sol.points, sol.vertices):
            assert abs(np.linalg.norm(v) - np.linalg.norm(gamma.point(p.u))) < 1e-10
        assert is_similar(cfg, cls, tol=1e-8)
        assert np.abs(pose(cfg, cls).U - U.U).max() < 1e-7


def test_newton_matches_bruteforce_on_ellipse():
    cls = equilateral_class()
    gamma = ellipse_curve()
    sol = sweep_homotopy(Pose.identity(2), cls, gamma, steps=8)[-1]
    oracle = pose_slice_solutions(cls, gamma, 0.0, n_grid=480)
    dists = [np.abs(V - sol.vertices).max() for _, _, V in oracle]
    assert min(dists) < 1e-6


def test_newton_collapse_guard():
    cls = equilateral_class()
    gamma = round_sphere(2)
    st = initial_guess_round(Pose.identity(2), cls)
    st = st.advanced(0.01 * np.ones(6))  # knock off the exact solution
    with pytest.raises(CollapseError):
        newton_solve(st, Pose.identity(2), cls, gamma,
                     SolveOptions(lambda_min=10.0))


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(4)
    cases = [
        (2, RadialEmbedding(2, ExprRadial(parse_radial("1 + 0.3*sin(3*theta)"), nvars=1)),
         equilateral_class()),
        (3, RadialEmbedding(3, ExprRadial(parse_radial("1 + 0.1*cos(2*phi)"), nvars=2)),
         tetrahedron_class()),
    ]
    for k, gamma, cls in cases:
        checked = 0
        while checked < 50:
            units = rng.standard_normal((k + 1, k))
            units /= np.linalg.norm(units, axis=1)[:, None]
            if k == 3 and np.min(np.hypot(units[:, 0], units[:, 1])) < 0.15:
                continue
            st = state_from_vertices(units, float(rng.uniform(0.5, 2.0)),
                                     0.3 * rng.standard_normal(k))
            st = st.advanced(0.02 * rng.standard_normal(k * (k + 1)))
            U = random_pose(rng, k)
            _, J = residual_and_jacobian(st, U, cls, gamma)
            Jfd = jacobian_fd(st, U, cls, gamma)
            assert np.abs(J - Jfd).max() / max(1.0, np.abs(Jfd).max()) < 1e-5
            checked += 1


def test_check_jacobian_mode_records_error():
    cls = equilateral_class()
    gamma = ellipse_curve()
    sol = newton_solve(initial_guess_round(Pose.identity(2), cls), Pose.identity(2),
                       round_sphere(2), cls=None) if False else None
    sol = sweep_homotopy(Pose.identity(2), cls, gamma, steps=8,
                         opts=SolveOptions(check_jacobian=True))[-1]
    assert sol.jacobian_fd_error is not None
    assert sol.jacobian_fd_error < 1e-5


def test_sweep_constant_on_round_sphere():
    cls = equilateral_class()
    sols = sweep_homotopy(Pose.rotation2d(0.4), cls, round_sphere(2), steps=8)
    first = sols[0].vertices
    for sol in sols:
        assert np.abs(sol.vertices - first).max() < 1e-12
    assert sols[-1].t == 1.0


def test_sweep_endpoint_matches_direct_solve():
    cls = equilateral_class()
    gamma = ellipse_curve()
    rng = np.random.default_rng(5)
    for _ in range(5):
        U = random_pose(rng, 2)
        end = sweep_homotopy(U, cls, gamma, steps=8)[-1]
        direct = newton_solve(initial_guess_round(U, cls), U, cls, gamma, t=1.0)
        assert np.abs(end.vertices - direct.vertices).max() < 1e-8


def test_trace_round_circle_closes_with_winding_one():
    cls = equilateral_class()
    tr = trace_pose_loop(cls, round_sphere(2), rotation_path(Pose.identity(2)))
    assert tr.closed
    assert tr.pose_winding == 1
    assert tr.vertex_windings == (1, 1, 1)
    assert np.abs(tr.solutions[0].vertices - tr.solutions[-1].vertices).max() < 1e-6


def test_trace_perturbed_circle():
    cls = equilateral_class()
    gamma = RadialEmbedding(2, ExprRadial(parse_radial("1 + 0.3*sin(3*theta)"), nvars=1))
    tr = trace_pose_loop(cls, gamma, rotation_path(Pose.identity(2)))
    assert tr.closed
    assert tr.pose_winding == 1
    # winding is stable when the step bound is halved
    tr2 = trace_pose_loop(cls, gamma, rotation_path(Pose.identity(2)), ds_max=0.125)
    assert tr2.pose_winding == tr.pose_winding
    assert tr2.arc_steps > tr.arc_steps


def test_trace_tetrahedra_about_axis():
    cls = tetrahedron_class()
    tr = trace_pose_loop(cls, round_sphere(3),
                         axis_rotation_path(Pose.identity(3), np.array([0.0, 0.0, 1.0])),
                         ds_max=0.2)
    assert tr.closed
    assert tr.pose_winding == 1


def test_degree_sum_refuses_open_traces():
    cls = equilateral_class()
    tr = trace_pose_loop(cls, round_sphere(2), rotation_path(Pose.identity(2)))
    open_trace = FamilyTrace(tr.solutions, tr.path_params, False, None, tr.arc_steps, None)
    with pytest.raises(OpenTraceError):
        degree_sum([tr, open_trace])
    assert degree_sum([tr]) == 1


def test_pose_coverage_round_sphere():
    cls = tetrahedron_class()
    report = pose_coverage(cls, round_sphere(3), n_samples=20, seed=11)
    assert report.success_fraction == 1.0
    assert len(report.conditions) == 20


def test_pose_coverage_with_reflections():
    cls = tetrahedron_class()
    report = pose_coverage(cls, round_sphere(3), n_samples=10, seed=11,
                           include_reflections=True)
    assert report.success_fraction == 1.0
    assert report.include_reflections


def test_pose_coverage_reports_failures():
    cls = tetrahedron_class()
    fig = RadialEmbedding(3, ExprRadial(
        parse_radial("1 + sin(phi)^3 * sin(3*theta)/5 - abs(cos(phi))^7"), nvars=2))
    report = pose_coverage(cls, fig, n_samples=12, seed=42)
    assert report.n_success + len(report.failures) == 12
    for f in report.failures:
        assert "error" in f and "pose" in f
