"""Root finding for simplices inscribed in embedded spheres at a prescribed pose.

The unknowns are local tangent-chart coordinates of the k+1 vertices on the
sphere, the scale lambda, and the base vertex c: in total
(k+1)(k-1) + 1 + k = k(k+1) reals, matched by the k(k+1) equations

    surface(u_0) - c                                  = 0
    surface(u_i) - c - lambda rho_i U pi_i0(ref)      = 0     (i = 1..k)

so fixing the pose U makes the system square and isolates solutions. A
damped Newton iteration with backtracking solves it; homotopy continuation
drags solutions from the round sphere (where they are known in closed form)
to a target surface along the radial blend; pseudo-arclength continuation in
an extra pose-path parameter traces closed one-parameter families, which for
plane curves are loops of triangles with an integer pose winding.

Everything is deterministic: random multistarts draw from a caller-seeded
generator recorded in the reports.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ChartSingularityError,
    CollapseError,
    ContinuationBreakdownError,
    DegenerateRadiusError,
    LineSearchStallError,
    MaxIterationsError,
    OpenTraceError,
    SolveError,
)
from .simspace import Pose, SimParams, SimilarityClass, embed
from .spheres import RadialEmbedding, SpherePoint, TangentChart, round_sphere

DT_MIN = 1e-4
LAMBDA_MIN = 1e-8
CLOSURE_TOL = 1e-6
CHART_STEP_BOUND = 0.1


@dataclass(frozen=True)
class SolveOptions:
    max_iterations: int = 50
    residual_tol: float = 1e-10
    lambda_min: float = LAMBDA_MIN
    condition_warn: float = 1e10
    check_jacobian: bool = False
    fd_step: float = 1e-6


DEFAULT_OPTIONS = SolveOptions()


@dataclass(frozen=True)
class SolverState:
    """Newton iterate: per-vertex tangent charts with offsets, scale, and base vertex."""

    charts: tuple[TangentChart, ...]
    xi: np.ndarray  # (k+1, k-1)
    lam: float
    center: np.ndarray

    @property
    def k(self) -> int:
        return len(self.center)

    def vertex_units(self) -> np.ndarray:
        return np.stack([ch.point(x) for ch, x in zip(self.charts, self.xi)])

    def recentered(self) -> "SolverState":
        units = self.vertex_units()
        return SolverState(
            tuple(TangentChart.at(u) for u in units),
            np.zeros_like(self.xi),
            self.lam,
            self.center,
        )

    def advanced(self, step: np.ndarray, alpha: float = 1.0) -> "SolverState":
        k = self.k
        nxi = (k + 1) * (k - 1)
        xi = self.xi + alpha * step[:nxi].reshape(k + 1, k - 1)
        lam = self.lam + alpha * step[nxi]
        center = self.center + alpha * step[nxi + 1:]
        return SolverState(self.charts, xi, lam, center)


def state_from_vertices(units: np.ndarray, lam: float, center: np.ndarray) -> SolverState:
    units = np.asarray(units, dtype=float)
    k = units.shape[1]
    return SolverState(
        tuple(TangentChart.at(u) for u in units),
        np.zeros((k + 1, k - 1)),
        float(lam),
        np.asarray(center, dtype=float),
    )


@dataclass(frozen=True)
class InscribedSolution:
    """A converged inscribed configuration."""

    points: tuple[SpherePoint, ...]
    vertices: np.ndarray  # ambient surface points, rows
    params: SimParams
    residual_norm: float
    jacobian_condition: float
    t: float
    iterations: int
    near_nontransverse: bool
    jacobian_fd_error: float | None = None

    @property
    def k(self) -> int:
        return self.vertices.shape[1]

    def edge_lengths(self) -> np.ndarray:
        n = self.vertices.shape[0]
        return np.array(
            [np.linalg.norm(self.vertices[i] - self.vertices[j])
             for i in range(n) for j in range(i + 1, n)]
        )

    def state(self) -> SolverState:
        units = np.stack([p.u for p in self.points])
        return state_from_vertices(units, self.params.scale, self.params.center)

    def to_dict(self) -> dict:
        return {
            "vertices": self.vertices.tolist(),
            "sphere_points": [p.u.tolist() for p in self.points],
            "sphere_angles": [list(p.angles) for p in self.points],
            "pose": self.params.pose.U.tolist(),
            "det_sign": self.params.pose.det_sign,
            "scale": self.params.scale,
            "center": self.params.center.tolist(),
            "residual_norm": self.residual_norm,
            "jacobian_condition": self.jacobian_condition,
            "t": self.t,
            "iterations": self.iterations,
            "near_nontransverse": self.near_nontransverse,
        }


def _target_directions(pose: Pose, cls: SimilarityClass) -> np.ndarray:
    """Columns lambda-free: rho_i * U @ pi_i0(ref) for i = 1..k."""
    return pose.U @ (cls.Pi * cls.rho[1:][None, :])


def residual(state: SolverState, pose: Pose, cls: SimilarityClass,
             gamma: RadialEmbedding) -> np.ndarray:
    k = state.k
    dirs = _target_directions(pose, cls)
    out = np.empty((k + 1, k))
    for i in range(k + 1):
        u = state.charts[i].point(state.xi[i])
        p = gamma.point(u)
        out[i] = p - state.center
        if i >= 1:
            out[i] -= state.lam * dirs[:, i - 1]
    return out.ravel()


def residual_and_jacobian(state: SolverState, pose: Pose, cls: SimilarityClass,
                          gamma: RadialEmbedding) -> tuple[np.ndarray, np.ndarray]:
    k = state.k
    n = k * (k + 1)
    nxi = (k + 1) * (k - 1)
    dirs = _target_directions(pose, cls)
    r = np.empty((k + 1, k))
    J = np.zeros((n, n))
    for i in range(k + 1):
        u = state.charts[i].point(state.xi[i])
        p, Jamb = gamma.ambient_jacobian(u)
        r[i] = p - state.center
        if i >= 1:
            r[i] -= state.lam * dirs[:, i - 1]
        rows = slice(i * k, (i + 1) * k)
        cols = slice(i * (k - 1), (i + 1) * (k - 1))
        J[rows, cols] = Jamb @ state.charts[i].dpoint(state.xi[i])
        if i >= 1:
            J[rows, nxi] = -dirs[:, i - 1]
        J[rows, nxi + 1:] = -np.eye(k)
    return r.ravel(), J


def jacobian_fd(state: SolverState, pose: Pose, cls: SimilarityClass,
                gamma: RadialEmbedding, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian for cross-checking the analytic one."""
    k = state.k
    n = k * (k + 1)
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        hi = residual(state.advanced(e), pose, cls, gamma)
        lo = residual(state.advanced(-e), pose, cls, gamma)
        J[:, j] = (hi - lo) / (2 * h)
    return J


def initial_guess_round(pose: Pose, cls: SimilarityClass) -> SolverState:
    """Exact solution on the round sphere: the rotated normalized reference."""
    units = cls.delta_hat.q @ pose.U.T
    units /= np.linalg.norm(units, axis=1)[:, None]
    return state_from_vertices(units, cls.scale_unit, pose.U @ cls.delta_hat.q[0])


def _converged(rnorm: float, state: SolverState, opts: SolveOptions) -> bool:
    return rnorm < opts.residual_tol * (1.0 + np.linalg.norm(state.center) + state.lam)


def _solution_from_state(state: SolverState, pose: Pose, cls: SimilarityClass,
                         gamma: RadialEmbedding, rnorm: float, J: np.ndarray,
                         t: float, iterations: int, opts: SolveOptions,
                         fd_error: float | None) -> InscribedSolution:
    units = state.vertex_units()
    vertices = np.stack([gamma.point(u) for u in units])
    cond = float(np.linalg.cond(J))
    return InscribedSolution(
        points=tuple(SpherePoint(u) for u in units),
        vertices=vertices,
        params=SimParams(pose, state.lam, state.center.copy()),
        residual_norm=float(rnorm),
        jacobian_condition=cond,
        t=float(t),
        iterations=iterations,
        near_nontransverse=cond > opts.condition_warn,
        jacobian_fd_error=fd_error,
    )


def newton_solve(state: SolverState, pose: Pose, cls: SimilarityClass,
                 gamma: RadialEmbedding, opts: SolveOptions = DEFAULT_OPTIONS,
                 t: float = 0.0) -> InscribedSolution:
    """Damped Newton with backtracking on the residual norm.

    Raises MaxIterationsError, LineSearchStallError, or CollapseError on
    failure; a condition number above opts.condition_warn only flags the
    returned solution as near-nontransverse.
    """
    state = state.recentered() if np.abs(state.xi).max() > 0 else state
    fd_error = None
    for it in range(opts.max_iterations + 1):
        r, J = residual_and_jacobian(state, pose, cls, gamma)
        rnorm = float(np.linalg.norm(r))
        if opts.check_jacobian and fd_error is None:
            fd = jacobian_fd(state, pose, cls, gamma, opts.fd_step)
            fd_error = float(np.abs(J - fd).max() / max(1.0, np.abs(fd).max()))
        if _converged(rnorm, state, opts):
            return _solution_from_state(state, pose, cls, gamma, rnorm, J, t, it,
                                        opts, fd_error)
        if it == opts.max_iterations:
            break
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise SolveError("singular Jacobian", rnorm, it) from exc
        alpha = 1.0
        accepted = None
        while alpha >= 1e-8:
            cand = state.advanced(step, alpha)
            try:
                rc = float(np.linalg.norm(residual(cand, pose, cls, gamma)))
            except (ChartSingularityError, DegenerateRadiusError):
                alpha *= 0.5
                continue
            if rc <= (1.0 - 1e-4 * alpha) * rnorm:
                accepted = cand
                break
            alpha *= 0.5
        if accepted is None:
            raise LineSearchStallError("line search failed to reduce residual", rnorm, it)
        if accepted.lam < opts.lambda_min:
            raise CollapseError(
                f"scale collapsed to {accepted.lam:.3e}", rnorm, it)
        state = accepted.recentered()
    raise MaxIterationsError(
        f"no convergence in {opts.max_iterations} iterations", rnorm, opts.max_iterations)


def sweep_homotopy(pose: Pose, cls: SimilarityClass, gamma: RadialEmbedding,
                   steps: int = 16, opts: SolveOptions = DEFAULT_OPTIONS
                   ) -> list[InscribedSolution]:
    """Predictor-corrector continuation along the radial blend from the round sphere.

    The previous solution is the predictor; the step in t halves on failure
    (down to DT_MIN) and recovers gradually after successes.
    """
    sol = newton_solve(initial_guess_round(pose, cls), pose, cls,
                       gamma.isotopy(0.0), opts, t=0.0)
    sols = [sol]
    dt0 = 1.0 / steps
    dt = dt0
    t = 0.0
    while t < 1.0:
        t_next = min(1.0, t + dt)
        try:
            nxt = newton_solve(sol.state(), pose, cls, gamma.isotopy(t_next),
                               opts, t=t_next)
        except SolveError:
            dt *= 0.5
            if dt < DT_MIN:
                raise ContinuationBreakdownError(
                    f"continuation broke down at t={t:.6f}",
                    last_t=t, condition=sol.jacobian_condition)
            continue
        sol = nxt
        sols.append(sol)
        t = t_next
        dt = min(dt * 1.5, dt0)
    return sols


# --- pose paths and family tracing -------------------------------------------


def _skew3(axis: np.ndarray) -> np.ndarray:
    x, y, z = axis
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


@dataclass(frozen=True)
class PosePath:
    """One-parameter pose family U(s) = exp(s K) U0 with K a unit-speed skew generator.

    Period 2 pi in s for the 2d rotation and for rotation about a unit axis.
    """

    base: Pose
    axis: np.ndarray | None = None  # required for k = 3

    @property
    def k(self) -> int:
        return self.base.U.shape[0]

    def _rot(self, s: float) -> np.ndarray:
        if self.k == 2:
            c, si = np.cos(s), np.sin(s)
            return np.array([[c, -si], [si, c]])
        K = _skew3(self.axis)
        return np.eye(3) + np.sin(s) * K + (1 - np.cos(s)) * (K @ K)

    def pose(self, s: float) -> Pose:
        return Pose(self._rot(s) @ self.base.U, self.base.det_sign)

    def dU(self, s: float) -> np.ndarray:
        if self.k == 2:
            K = np.array([[0.0, -1.0], [1.0, 0.0]])
        else:
            K = _skew3(self.axis)
        return K @ self._rot(s) @ self.base.U


def rotation_path(base: Pose) -> PosePath:
    return PosePath(base)


def axis_rotation_path(base: Pose, axis: np.ndarray) -> PosePath:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return PosePath(base, axis)


@dataclass(frozen=True)
class FamilyTrace:
    """Ordered chain of solutions along a pose path, ideally closing into a loop."""

    solutions: tuple[InscribedSolution, ...]
    path_params: np.ndarray  # continuous path parameter s per solution
    closed: bool
    pose_winding: int | None
    arc_steps: int
    vertex_windings: tuple[int, ...] | None = None

    def to_dict(self) -> dict:
        return {
            "closed": self.closed,
            "pose_winding": self.pose_winding,
            "arc_steps": self.arc_steps,
            "vertex_windings": list(self.vertex_windings) if self.vertex_windings else None,
            "path_params": self.path_params.tolist(),
            "solutions": [s.to_dict() for s in self.solutions],
        }


def _extended_tangent(state: SolverState, path: PosePath, s: float,
                      cls: SimilarityClass, gamma: RadialEmbedding,
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unit null vector of [J_X | dF/ds] at a solution, plus the pieces."""
    r, J = residual_and_jacobian(state, path.pose(s), cls, gamma)
    k = state.k
    dirs_dot = path.dU(s) @ (cls.Pi * cls.rho[1:][None, :])
    Fs = np.zeros(k * (k + 1))
    for i in range(1, k + 1):
        Fs[i * k:(i + 1) * k] = -state.lam * dirs_dot[:, i - 1]
    ext = np.hstack([J, Fs[:, None]])
    _, _, Vt = np.linalg.svd(ext)
    tau = Vt[-1]
    return tau / np.linalg.norm(tau), J, Fs


def _ambient_velocity(state: SolverState, tau: np.ndarray) -> np.ndarray:
    """Chart-free representation of a tangent vector, for orientation bookkeeping."""
    k = state.k
    nxi = (k + 1) * (k - 1)
    parts = []
    for i, ch in enumerate(state.charts):
        parts.append(ch.dpoint(state.xi[i]) @ tau[i * (k - 1):(i + 1) * (k - 1)])
    parts.append(tau[nxi:])
    return np.concatenate(parts)


def _corrector(state: SolverState, s: float, tau: np.ndarray, y_pred_offset: float,
               path: PosePath, cls: SimilarityClass, gamma: RadialEmbedding,
               opts: SolveOptions) -> tuple[SolverState, float]:
    """Newton on the residual augmented with the arclength plane through the predictor."""
    k = state.k
    n = k * (k + 1)
    for _ in range(30):
        pose = path.pose(s)
        r, J = residual_and_jacobian(state, pose, cls, gamma)
        dirs_dot = path.dU(s) @ (cls.Pi * cls.rho[1:][None, :])
        Fs = np.zeros(n)
        for i in range(1, k + 1):
            Fs[i * k:(i + 1) * k] = -state.lam * dirs_dot[:, i - 1]
        # arclength equation: tau . (y - y_pred) = 0 with y measured from the
        # prediction (state starts at the predictor, offset starts at 0)
        arc = y_pred_offset
        G = np.concatenate([r, [arc]])
        gnorm = float(np.linalg.norm(r))
        if _converged(gnorm, state, opts) and abs(arc) < 1e-12 * (1 + abs(s)):
            return state, s
        Jext = np.zeros((n + 1, n + 1))
        Jext[:n, :n] = J
        Jext[:n, n] = Fs
        Jext[n, :] = tau
        try:
            step = np.linalg.solve(Jext, -G)
        except np.linalg.LinAlgError as exc:
            raise SolveError("singular extended Jacobian") from exc
        state = state.advanced(step[:n])
        s = s + float(step[n])
        y_pred_offset += float(tau[:n] @ step[:n] + tau[n] * step[n])
        if state.lam < opts.lambda_min:
            raise CollapseError(f"scale collapsed to {state.lam:.3e}")
    raise MaxIterationsError("pose-path corrector did not converge")


def trace_pose_loop(cls: SimilarityClass, gamma: RadialEmbedding, path: PosePath,
                    n_steps: int = 4000, start: InscribedSolution | None = None,
                    steps: int = 16, opts: SolveOptions = DEFAULT_OPTIONS,
                    ds_max: float = 0.25) -> FamilyTrace:
    """Trace the solution family along a pose path until it closes into a loop.

    Pseudo-arclength continuation in (unknowns, s) follows folds where the
    family reverses direction along the path. Whenever the accumulated s
    crosses a multiple of 2 pi, the state is corrected back to the starting
    pose and compared to the start; a match closes the loop and the crossing
    count is the pose winding. If n_steps is exhausted the trace is returned
    flagged open.
    """
    if start is None:
        start = sweep_homotopy(path.pose(0.0), cls, gamma, steps=steps, opts=opts)[-1]
    gamma_t = gamma.isotopy(start.t) if start.t != 1.0 else gamma
    sols = [start]
    params = [0.0]
    theta_hist = [np.array([p.angles[-1] for p in start.points])]

    state = start.state()
    s = 0.0
    prev_vel = None
    h = min(ds_max, 0.05)
    start_vertices = start.vertices
    scale0 = max(1.0, float(np.abs(start_vertices).max()))

    def try_close(m: int, seed_state: SolverState) -> InscribedSolution | None:
        pose0 = path.pose(0.0)
        try:
            cand = newton_solve(seed_state, pose0, cls, gamma_t, opts, t=start.t)
        except SolveError:
            return None
        if np.abs(cand.vertices - start_vertices).max() < CLOSURE_TOL * scale0:
            return cand
        return None

    steps_taken = 0
    while steps_taken < n_steps:
        tau, J, Fs = _extended_tangent(state, path, s, cls, gamma_t)
        vel = np.concatenate([_ambient_velocity(state, tau[:-1]), tau[-1:]])
        if prev_vel is None:
            if tau[-1] < 0:
                tau, vel = -tau, -vel
            elif tau[-1] == 0 and tau[0] < 0:
                tau, vel = -tau, -vel
        elif vel @ prev_vel < 0:
            tau, vel = -tau, -vel
        prev_vel = vel

        k = state.k
        nxi = (k + 1) * (k - 1)
        xi_rate = max(
            float(np.linalg.norm(tau[i * (k - 1):(i + 1) * (k - 1)]))
            for i in range(k + 1)
        )
        h_step = min(h, CHART_STEP_BOUND / max(xi_rate, 1e-12), ds_max)
        while True:
            pred = state.advanced(tau[:-1], h_step)
            s_pred = s + h_step * float(tau[-1])
            try:
                new_state, new_s = _corrector(pred, s_pred, tau, 0.0, path, cls,
                                              gamma_t, opts)
            except (SolveError, ChartSingularityError, DegenerateRadiusError):
                h_step *= 0.5
                if h_step < 1e-7:
                    raise ContinuationBreakdownError(
                        "pose-path continuation broke down",
                        last_t=s, condition=float(np.linalg.cond(J)))
                continue
            break
        h = min(max(h_step * 1.4, 1e-6), ds_max)
        steps_taken += 1

        # closure checks at every multiple of 2 pi crossed by this step
        lo, hi = sorted((s, new_s))
        m_lo = int(np.ceil(lo / (2 * np.pi) - 1e-12))
        m_hi = int(np.floor(hi / (2 * np.pi) + 1e-12))
        crossings = [m for m in range(m_lo, m_hi + 1)
                     if not (steps_taken == 1 and m == 0 and abs(lo) < 1e-12)]

        new_state = new_state.recentered()
        pose_new = path.pose(new_s)
        r, Jn = residual_and_jacobian(new_state, pose_new, cls, gamma_t)
        sol = _solution_from_state(new_state, pose_new, cls, gamma_t,
                                   float(np.linalg.norm(r)), Jn, start.t, 0, opts, None)
        sols.append(sol)
        params.append(new_s)
        # unwrapped azimuth history for vertex winding numbers
        th = np.array([p.angles[-1] for p in sol.points])
        prev_th = theta_hist[-1]
        theta_hist.append(prev_th + np.arctan2(np.sin(th - prev_th), np.cos(th - prev_th)))

        for m in crossings:
            closed_sol = try_close(m, new_state)
            if closed_sol is not None:
                sols[-1] = closed_sol
                params[-1] = 2 * np.pi * m
                thc = np.array([p.angles[-1] for p in closed_sol.points])
                theta_hist[-1] = prev_th + np.arctan2(np.sin(thc - prev_th),
                                                      np.cos(thc - prev_th))
                windings = None
                if cls.k == 2:
                    windings = tuple(
                        int(np.round((theta_hist[-1][i] - theta_hist[0][i]) / (2 * np.pi)))
                        for i in range(cls.k + 1)
                    )
                return FamilyTrace(tuple(sols), np.array(params), True, m,
                                   steps_taken, windings)

        state, s = new_state, new_s

    return FamilyTrace(tuple(sols), np.array(params), False, None, steps_taken, None)


# --- loop census and degree ----------------------------------------------------


@dataclass(frozen=True)
class LoopCensus:
    traces: tuple[FamilyTrace, ...]
    failures: tuple[dict, ...]
    seed: int

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_loops": len(self.traces),
            "failures": list(self.failures),
            "traces": [tr.to_dict() for tr in self.traces],
        }


def _ray_seed(cls: SimilarityClass, gamma: RadialEmbedding, pose0: Pose,
              th0: float, rng: np.random.Generator,
              n_scan: int = 256) -> SolverState | None:
    """Near-solution seed: base vertex on the curve, second on a pose ray, third projected.

    Casting the ray from a curve point along the rotated reference direction
    pins the scale, so only the third vertex carries residual; Newton from
    such seeds reaches loops that never existed on the round circle.
    """
    q0 = gamma.point(np.array([np.cos(th0), np.sin(th0)]))
    v1 = pose0.U @ cls.Pi[:, 0]
    grid = np.linspace(0.0, 2 * np.pi, n_scan, endpoint=False)
    units = np.stack([np.cos(grid), np.sin(grid)], axis=1)
    pts = gamma.radial.value((grid,))[:, None] * units
    f = (pts[:, 0] - q0[0]) * v1[1] - (pts[:, 1] - q0[1]) * v1[0]
    roots = []
    for i in range(n_scan):
        j = (i + 1) % n_scan
        if f[i] * f[j] >= 0:
            continue
        lo, hi, flo = grid[i], grid[i] + 2 * np.pi / n_scan, f[i]
        for _ in range(35):
            mid = 0.5 * (lo + hi)
            p = gamma.point(np.array([np.cos(mid), np.sin(mid)]))
            fm = (p[0] - q0[0]) * v1[1] - (p[1] - q0[1]) * v1[0]
            if flo * fm <= 0:
                hi = mid
            else:
                lo, flo = mid, fm
        th1 = 0.5 * (lo + hi)
        p1 = gamma.point(np.array([np.cos(th1), np.sin(th1)]))
        s = (p1 - q0) @ v1
        if s > 1e-3:
            roots.append((th1, s))
    if not roots:
        return None
    v2 = pose0.U @ cls.Pi[:, 1]

    def third_defect(lam):
        q2 = q0 + lam * cls.rho[2] * v2
        th2 = np.arctan2(q2[1], q2[0])
        return abs(np.linalg.norm(q2) - float(gamma.radial.value((th2,))))

    th1, lam = min(roots, key=lambda r: third_defect(r[1]))
    q1 = q0 + lam * v1
    q2 = q0 + lam * cls.rho[2] * v2
    units3 = np.stack([q0, q1, q2])
    units3 = units3 / np.linalg.norm(units3, axis=1)[:, None]
    return state_from_vertices(units3, lam, q0)


def _on_trace(candidate: InscribedSolution, cand_angle: float, trace: FamilyTrace,
              base_angle: float, cls: SimilarityClass, gamma: RadialEmbedding,
              opts: SolveOptions) -> bool:
    """Whether a solution lies on an already-traced loop.

    Recorded trace solutions near the candidate's pose angle are corrected to
    exactly that pose; a vertex match identifies the branch.
    """
    if not len(trace.solutions):
        return False
    scale = max(1.0, float(np.abs(candidate.vertices).max()))
    gamma_t = gamma.isotopy(candidate.t) if candidate.t != 1.0 else gamma
    abs_params = base_angle + trace.path_params
    delta = np.arctan2(np.sin(abs_params - cand_angle), np.cos(abs_params - cand_angle))
    # Only chain segments that bracket the candidate's pose angle are corrected:
    # a non-bracketing sample may sit on a section that folds back before the
    # angle, and Newton from there can hop onto a different loop entirely.
    n = len(delta)
    reps = [i for i in range(n) if delta[i] == 0.0]
    last = n - 1 if trace.closed else n
    for i in range(last):
        j = (i + 1) % n
        if delta[i] * delta[j] < 0 and abs(delta[i]) + abs(delta[j]) < 0.6:
            reps.append(i if abs(delta[i]) <= abs(delta[j]) else j)
    for idx in reps:
        try:
            corrected = newton_solve(trace.solutions[idx].state(),
                                     candidate.params.pose, cls, gamma_t, opts,
                                     t=candidate.t)
        except SolveError:
            continue
        if np.abs(corrected.vertices - candidate.vertices).max() < CLOSURE_TOL * scale:
            return True
    return False


def find_all_loops(cls: SimilarityClass, gamma: RadialEmbedding,
                   n_pose_starts: int = 12, n_random_starts: int = 4,
                   seed: int = 0, steps: int = 16, n_steps: int = 4000,
                   opts: SolveOptions = DEFAULT_OPTIONS) -> LoopCensus:
    """Multistart discovery of all loops of inscribed triangles on a plane curve.

    Starts are a uniform pose grid plus seeded random restarts; each start is
    continued from the round circle, deduplicated against loops already
    traced, and otherwise spawns a new traced loop.
    """
    if cls.k != 2:
        raise ValueError("loop census is for plane curves (k = 2)")
    rng = np.random.default_rng(seed)

    starters: list[tuple[float, InscribedSolution]] = []
    failures: list[dict] = []

    def consider(ang: float, sol: InscribedSolution):
        duplicate = any(
            abs(np.arctan2(np.sin(a - ang), np.cos(a - ang))) < 1e-9
            and np.abs(s.vertices - sol.vertices).max() < CLOSURE_TOL
            for a, s in starters
        )
        if not duplicate:
            starters.append((ang, sol))

    for j in range(n_pose_starts):
        ang = 2 * np.pi * j / n_pose_starts
        try:
            sol = sweep_homotopy(Pose.rotation2d(ang), cls, gamma, steps=steps,
                                 opts=opts)[-1]
        except (SolveError, ContinuationBreakdownError) as exc:
            failures.append({"pose_angle": ang, "error": str(exc),
                             "last_t": getattr(exc, "last_t", None)})
            continue
        consider(ang, sol)

    # loops born away from the round sphere are invisible to the homotopy
    # starts; ray-cast configurations solved directly on the surface reach them
    for _ in range(n_random_starts):
        ang = float(rng.uniform(0, 2 * np.pi))
        th0 = float(rng.uniform(0, 2 * np.pi))
        pose0 = Pose.rotation2d(ang)
        try:
            seed_state = _ray_seed(cls, gamma, pose0, th0, rng)
            if seed_state is None:
                failures.append({"pose_angle": ang, "error": "no ray intersection",
                                 "last_t": None})
                continue
            sol = newton_solve(seed_state, pose0, cls, gamma, opts, t=1.0)
        except (SolveError, DegenerateRadiusError, ChartSingularityError) as exc:
            failures.append({"pose_angle": ang, "error": str(exc), "last_t": None})
            continue
        consider(ang, sol)

    traces: list[FamilyTrace] = []
    base_angles: list[float] = []
    for ang, sol in starters:
        if any(_on_trace(sol, ang, tr, base, cls, gamma, opts)
               for tr, base in zip(traces, base_angles)):
            continue
        path = rotation_path(Pose.rotation2d(ang))
        trace = trace_pose_loop(cls, gamma, path, n_steps=n_steps, start=sol,
                                steps=steps, opts=opts)
        traces.append(trace)
        base_angles.append(ang)
    return LoopCensus(tuple(traces), tuple(failures), seed)


def degree_sum(traces) -> int:
    """Sum of pose windings over closed loops; refuses open chains."""
    total = 0
    for i, tr in enumerate(traces):
        if not tr.closed:
            raise OpenTraceError(
                f"trace {i} is open after {tr.arc_steps} steps; cannot sum degrees")
        total += tr.pose_winding
    return total


# --- sampled pose coverage -----------------------------------------------------


def _quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def random_pose(rng: np.random.Generator, k: int, det_sign: int = 1) -> Pose:
    """Uniform random pose: Haar on the rotations, optionally composed with a reflection."""
    if k == 2:
        U = Pose.rotation2d(float(rng.uniform(0, 2 * np.pi))).U
    else:
        U = _quat_to_matrix(rng.standard_normal(4))
    if det_sign == -1:
        refl = np.eye(k)
        refl[-1, -1] = -1.0
        U = U @ refl
    return Pose(U, det_sign)


@dataclass(frozen=True)
class CoverageReport:
    n_samples: int
    n_success: int
    seed: int
    include_reflections: bool
    failures: tuple[dict, ...]
    conditions: tuple[float, ...]

    @property
    def success_fraction(self) -> float:
        return self.n_success / self.n_samples if self.n_samples else 0.0

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "n_success": self.n_success,
            "success_fraction": self.success_fraction,
            "seed": self.seed,
            "include_reflections": self.include_reflections,
            "failures": list(self.failures),
            "conditions": list(self.conditions),
        }


def pose_coverage(cls: SimilarityClass, gamma: RadialEmbedding, n_samples: int = 100,
                  seed: int = 0, include_reflections: bool = False,
                  steps: int = 16, opts: SolveOptions = DEFAULT_OPTIONS
                  ) -> CoverageReport:
    """Sampled check that every pose admits an inscribed simplex on the surface.

    Draws quasi-uniform poses (rotations, plus reflected copies on request),
    sweeps each from the round sphere, and reports the success fraction with
    per-failure breakdown parameters and condition numbers.
    """
    rng = np.random.default_rng(seed)
    failures: list[dict] = []
    conditions: list[float] = []
    n_success = 0
    for i in range(n_samples):
        det_sign = -1 if (include_reflections and i % 2 == 1) else 1
        pose0 = random_pose(rng, cls.k, det_sign)
        try:
            sol = sweep_homotopy(pose0, cls, gamma, steps=steps, opts=opts)[-1]
        except (SolveError, ContinuationBreakdownError) as exc:
            failures.append({
                "pose": pose0.U.tolist(),
                "det_sign": det_sign,
                "error": str(exc),
                "last_t": getattr(exc, "last_t", None),
                "condition": getattr(exc, "condition", None),
            })
            continue
        n_success += 1
        conditions.append(sol.jacobian_condition)
    return CoverageReport(n_samples, n_success, seed, include_reflections,
                          tuple(failures), tuple(conditions))
