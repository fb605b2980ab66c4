"""Solution trajectories for time-varying inputs ``p(t)``, ``t ∈ [0, 1]``.

A trajectory is followed by localized inverses: from ``z(t_k)`` the next
point is the unique solution of ``p(t_{k+1}) ∈ f(z) + B F(Cz)`` within radius
``a`` of ``z(t_k)``.  Ambiguity (no solution or several) halves the step.
Uniform constants ``(a, b, κ)`` are estimated by probing single-valuedness of
the localized inverse on a fixed grid of times.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import solver
from .errors import DocumentError, EstimationFailure, PerturbationTooLarge, TrackingFailure
from .geneq import GenEq

MIN_STEP = 1e-9
MAX_STEP = 1.0 / 64
TRACK_RESIDUAL = 1e-7
CONST_TIMES = 33
CONST_SAMPLES = 20
RADIUS_SCHEDULE = (0.5, 0.25, 0.1, 0.05, 0.01, 0.005, 0.001)


class Signal:
    """Input ``p(t)``: a sum of sinusoids per coordinate or a sampled curve.

    ``sin``: ``offset + amplitude * sin(2π frequency t + phase)``.
    ``sampled``: linear interpolation between ``(times, values)``.
    """

    def __init__(self, kind, **data):
        self.kind = kind
        if kind == "sin":
            amp = np.atleast_1d(np.asarray(data["amplitude"], dtype=float))
            n = amp.size
            self.amplitude = amp
            self.frequency = np.broadcast_to(np.asarray(data["frequency"], dtype=float), (n,)).copy()
            self.phase = np.broadcast_to(np.asarray(data.get("phase", 0.0), dtype=float), (n,)).copy()
            self.offset = np.broadcast_to(np.asarray(data.get("offset", 0.0), dtype=float), (n,)).copy()
        elif kind == "sampled":
            times = np.asarray(data["times"], dtype=float)
            values = np.asarray(data["values"], dtype=float)
            values = values.reshape(len(times), -1)
            if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
                raise DocumentError("sampled signal times must be strictly increasing with at least two entries")
            if times[0] > 0.0 or times[-1] < 1.0:
                raise DocumentError("sampled signal must cover [0, 1]")
            self.times, self.values = times, values
        else:
            raise DocumentError(f"unknown signal kind {kind!r}")

    @property
    def n(self):
        return self.amplitude.size if self.kind == "sin" else self.values.shape[1]

    def __call__(self, t):
        t = float(t)
        if self.kind == "sin":
            return self.offset + self.amplitude * np.sin(2 * np.pi * self.frequency * t + self.phase)
        return np.array([np.interp(t, self.times, self.values[:, i]) for i in range(self.n)])

    def shifted(self, delta):
        """The signal plus a constant vector."""
        delta = np.broadcast_to(np.asarray(delta, dtype=float), (self.n,))
        if self.kind == "sin":
            return Signal("sin", amplitude=self.amplitude, frequency=self.frequency,
                          phase=self.phase, offset=self.offset + delta)
        return Signal("sampled", times=self.times, values=self.values + delta)

    def to_record(self):
        if self.kind == "sin":
            return {"kind": "sin", "amplitude": self.amplitude.tolist(), "frequency": self.frequency.tolist(),
                    "phase": self.phase.tolist(), "offset": self.offset.tolist()}
        return {"kind": "sampled", "times": self.times.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_record(cls, rec):
        rec = dict(rec)
        return cls(rec.pop("kind"), **rec)

    @classmethod
    def parse(cls, spec: str, n: int = 1):
        """``sin:A,f,phase,offset`` (same for every coordinate) or a CSV path.

        The CSV has a header and columns ``t, p1, ..., pn``.
        """
        if spec.startswith("sin:"):
            try:
                nums = [float(x) for x in spec[4:].split(",")]
            except ValueError:
                raise DocumentError(f"bad sinusoid spec {spec!r}") from None
            if not 2 <= len(nums) <= 4:
                raise DocumentError("sinusoid spec needs amplitude,frequency[,phase[,offset]]")
            nums += [0.0] * (4 - len(nums))
            return cls("sin", amplitude=[nums[0]] * n, frequency=[nums[1]] * n,
                       phase=[nums[2]] * n, offset=[nums[3]] * n)
        try:
            data = np.loadtxt(spec, delimiter=",", skiprows=1, ndmin=2)
        except (OSError, ValueError) as exc:
            raise DocumentError(f"cannot read signal file {spec!r}: {exc}") from None
        return cls("sampled", times=data[:, 0], values=data[:, 1:])


def sup_distance(p: Signal, q: Signal, times) -> float:
    return max(float(np.linalg.norm(p(t) - q(t))) for t in times)


@dataclass
class Trajectory:
    times: np.ndarray
    zs: np.ndarray
    residuals: np.ndarray
    branches: list
    constants: dict | None = None
    halvings: int = 0

    def __len__(self):
        return len(self.times)

    def at(self, t):
        """Piecewise-linear interpolation of the tracked points."""
        return np.array([np.interp(t, self.times, self.zs[:, i]) for i in range(self.zs.shape[1])])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.zs.shape[1]
        w.writerow(["t"] + [f"z{i + 1}" for i in range(n)] + ["residual", "branch"])
        for t, z, r, b in zip(self.times, self.zs, self.residuals, self.branches):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in z] + [repr(float(r)), "-".join(map(str, b))])
        return buf.getvalue()

    def lipschitz_violations(self, signal: Signal, kappa: float, slack: float = 1e-6):
        """Indices ``k`` where ``‖Δz‖ > κ ‖Δp‖ + slack``."""
        out = []
        for k in range(len(self.times) - 1):
            dz = np.linalg.norm(self.zs[k + 1] - self.zs[k])
            dp = np.linalg.norm(signal(self.times[k + 1]) - signal(self.times[k]))
            if dz > kappa * dp + slack:
                out.append(k)
        return out


def _seed_point(ge, p0, z0):
    if z0 is None:
        S = solver.solve(ge, p0)
        if not S.is_single:
            raise TrackingFailure(f"S(p(0)) has {len(S)} components; pass an initial point")
        return S.solutions[0]
    z0 = np.asarray(z0, dtype=float).reshape(ge.n)
    r = ge.residual(p0, z0)
    if r > solver.RESIDUAL_TOL:
        raise TrackingFailure(f"initial point has residual {r:.3g}")
    S = solver.local_solve(ge, p0, z0, 1e-6)
    if not S.solutions:
        return solver.Solution(z0, (), r)
    return S.solutions[0]


def track(ge: GenEq, signal: Signal, z0=None, max_step: float = MAX_STEP,
          radius: float = 0.25, b_loc: float = math.inf, min_step: float = MIN_STEP) -> Trajectory:
    """Follow the solution through ``t ∈ [0, 1]``.

    Each step accepts the unique solution within ``radius`` of the previous
    point; on ambiguity the step is halved.  Steps also keep
    ``‖Δp‖ ≤ b_loc / 2``.
    """
    first = _seed_point(ge, signal(0.0), z0)
    times, zs, res, branches = [0.0], [first.z], [first.residual], [first.state]
    t, z, step, halvings = 0.0, first.z, max_step, 0
    while t < 1.0:
        h = min(step, 1.0 - t)
        t_next = 1.0 if h == 1.0 - t else t + h
        p_next = signal(t_next)
        if np.linalg.norm(p_next - signal(t)) > b_loc / 2:
            ok = None
        else:
            S = solver.local_solve(ge, p_next, z, radius)
            ok = S.solutions[0] if S.is_single else None
        if ok is None:
            step = h / 2
            halvings += 1
            if step < min_step:
                raise TrackingFailure(
                    f"step fell below {min_step:g} at t = {t:.9g}: the localized inverse is empty or "
                    "multivalued (loss of pointwise strong regularity)")
            continue
        t, z = t_next, ok.z
        times.append(t)
        zs.append(z)
        res.append(ok.residual)
        branches.append(ok.state)
        step = min(max_step, 2 * step)
    return Trajectory(np.array(times), np.array(zs), np.array(res), branches, halvings=halvings)


def _ball_samples(rng, n, b, count):
    if n == 1:
        return rng.uniform(-b, b, size=(count, 1))
    d = rng.normal(size=(count, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * b * rng.uniform(0, 1, size=(count, 1)) ** (1.0 / n)


def estimate_uniform_constants(ge: GenEq, signal: Signal, traj: Trajectory, seed: int = 0) -> dict:
    """Estimate ``(a, b, κ)`` from localized single-valuedness on 33 grid times.

    At each time the largest radius pair ``(a_t, b_t)`` from a fixed schedule
    whose inverse ``y ↦ S(p(t) + y) ∩ 𝔹_{a_t}(z(t))`` is single-valued on 20
    sampled ``y ∈ 𝔹_{b_t}`` is kept with its largest difference quotient.
    """
    rng = np.random.default_rng(seed)
    per_time = []
    for t in np.linspace(0.0, 1.0, CONST_TIMES):
        pt = signal(t)
        S = solver.local_solve(ge, pt, traj.at(t), 0.05 + np.max(np.abs(np.diff(traj.zs, axis=0)), initial=0.0))
        if not S.is_single:
            raise EstimationFailure(f"no isolated point of the trajectory at t = {t:.6g}")
        zt = S.solutions[0].z
        ys = _ball_samples(rng, ge.n, 1.0, CONST_SAMPLES)
        found = None
        for a_t in RADIUS_SCHEDULE:
            for b_t in RADIUS_SCHEDULE:
                pts = [np.zeros(ge.n)] + list(ys * b_t)
                sols = []
                for y in pts:
                    L = solver.local_solve(ge, pt + y, zt, a_t)
                    if not L.is_single:
                        break
                    sols.append(L.solutions[0].z)
                else:
                    Y, Z = np.array(pts), np.array(sols)
                    dy = np.linalg.norm(Y[:, None] - Y[None], axis=2)
                    dz = np.linalg.norm(Z[:, None] - Z[None], axis=2)
                    mask = dy > 1e-12
                    kappa = float(np.max(dz[mask] / dy[mask])) if np.any(mask) else 0.0
                    found = (a_t, b_t, kappa)
                    break
            if found:
                break
        if not found:
            raise EstimationFailure(f"no radius pair gives a single-valued localization at t = {t:.6g}")
        per_time.append((float(t),) + found)
    a = min(r[1] for r in per_time) / 2
    kappa = max(r[3] for r in per_time)
    b = min(a / kappa if kappa > 0 else math.inf, min(r[2] for r in per_time) / 2)
    out = {
        "a": a,
        "b": b,
        "kappa": kappa,
        "estimate_only": True,
        "times": CONST_TIMES,
        "samples": CONST_SAMPLES,
        "schedule": list(RADIUS_SCHEDULE),
        "seed": seed,
    }
    traj.constants = out
    return out


def perturb_experiment(ge: GenEq, signal: Signal, perturbed: Signal, traj: Trajectory,
                       constants: dict | None = None) -> dict:
    """Pointwise perturbed trajectory ``z̃(t) ∈ S̃(t) ∩ 𝔹_a(z(t))`` and its distance to ``z``."""
    c = constants or traj.constants
    if c is None:
        raise EstimationFailure("estimate the uniform constants first")
    a, b, kappa = c["a"], c["b"], c["kappa"]
    eps = sup_distance(signal, perturbed, traj.times)
    if eps >= b / 4:
        raise PerturbationTooLarge(f"perturbation size {eps:.6g} is not below b/4 = {b / 4:.6g}")
    worst = 0.0
    for t, z in zip(traj.times, traj.zs):
        S = solver.local_solve(ge, perturbed(t), z, a)
        if not S.is_single:
            raise TrackingFailure(f"perturbed localization at t = {t:.9g} is not a single point")
        worst = max(worst, float(np.linalg.norm(S.solutions[0].z - z)))
    bound = 4 * a * eps / b if b > 0 else math.inf
    sharp = kappa * eps
    return {
        "eps": eps,
        "sup_difference": worst,
        "bound_4a_eps_over_b": bound,
        "bound_kappa_eps": sharp,
        "within_bound": worst <= bound,
        "within_kappa_eps": worst <= sharp * 1.05 + 1e-12,
        "constants": {"a": a, "b": b, "kappa": kappa},
        "steps": len(traj.times),
    }


def local_inverse(ge: GenEq, signal: Signal, t, w, center, radius):
    """``G_t⁻¹(w) ∩ 𝔹_radius(center)`` with ``G_t(z) = f(z) + B F(Cz) - p(t)``."""
    return solver.local_solve(ge, signal(t) + np.asarray(w, dtype=float), center, radius)


def g_relation_gap(ge: GenEq, signal: Signal, t, t2, w, center, radius) -> float:
    """Distance between ``G_t⁻¹(w)`` and ``G_{t2}⁻¹(w + p(t) - p(t2))`` (isolated points)."""
    w = np.asarray(w, dtype=float)
    A = local_inverse(ge, signal, t, w, center, radius)
    B = local_inverse(ge, signal, t2, w + signal(t) - signal(t2), center, radius)
    if len(A.solutions) != len(B.solutions) or len(A.boxes) != len(B.boxes):
        return math.inf
    if not A.solutions:
        return 0.0
    return float(np.max(np.abs(A.points - B.points)))
