"""Numerical integration of (possibly non-autonomous) 3D flows.

Two schemes: classical fixed-step RK4 and an adaptive Dormand-Prince
5(4) pair [1] with PI step-size control, FSAL reuse, and fourth-order
dense output evaluated at the requested sample grid.  Conserved
quantities are tracked through per-sample monitor functions; explicit
time-derivative integrals (for the non-autonomous Hamiltonians) are
accumulated as extra quadrature states so that their accuracy follows
the step-error control.

Everything here is deterministic: no randomness, fixed evaluation
order, plain Python floats.  Identical configurations produce
bit-identical trajectories.

[1] Dormand & Prince, J. Comp. Appl. Math. 6 (1980) 19-26.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

from . import expr as ex
from .vecfield import ScalarField, VectorField3

# Dormand-Prince 5(4) tableau.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
# b5 - b4: local error weights
_E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)
# Dense-output polynomial (order-4 continuous extension).
_P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0


class IntegrationError(Exception):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    t0: float
    t1: float
    y0: tuple
    method: str = "adaptive"  # "adaptive" | "rk4"
    step: float = None  # rk4 step size
    rtol: float = 1e-10
    atol: float = 1e-10
    max_step: float = 0.1
    min_step: float = 1e-13
    sample_dt: float = 0.01

    def __post_init__(self):
        if self.t1 <= self.t0:
            raise IntegrationError("t1 must exceed t0")
        if self.method not in ("adaptive", "rk4"):
            raise IntegrationError(f"unknown method {self.method!r}")
        if self.method == "rk4" and not self.step:
            raise IntegrationError("rk4 needs a step size")
        if self.method == "adaptive" and (self.rtol <= 0 or self.atol <= 0):
            raise IntegrationError("tolerances must be positive")


@dataclass
class Trajectory:
    frame: tuple
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    monitors: dict = field(default_factory=dict)
    quadratures: dict = field(default_factory=dict)
    accepted: int = 0
    rejected: int = 0
    aborted: str = None

    def ok(self):
        return self.aborted is None

    def to_csv(self):
        """Full-precision CSV: header t,<v1>,<v2>,<v3>[,monitor...]."""
        out = io.StringIO()
        names = list(self.monitors)
        out.write(",".join(["t", *self.frame, *names]) + "\n")
        for i, (t, y) in enumerate(zip(self.times, self.states)):
            row = [t, *y] + [self.monitors[m][i] for m in names]
            out.write(",".join(f"{v:.17g}" for v in row) + "\n")
        return out.getvalue()


def _compile_rhs(X: VectorField3, quadratures):
    names = X.frame + (X.time,)
    fs = ex.compile_vector([c.expr for c in X.components], names)
    qs = [ex.compile_fn(q.expr, names) for q in quadratures]
    if not qs:
        return lambda t, y: fs(y[0], y[1], y[2], t)

    def rhs(t, y):
        u, v, w = y[0], y[1], y[2]
        base = fs(u, v, w, t)
        return base + tuple(q(u, v, w, t) for q in qs)

    return rhs


def _compile_monitors(monitors, frame, time):
    names = frame + (time,)
    return [(name, ex.compile_fn(sf.expr, names)) for name, sf in monitors]


def integrate(X: VectorField3, cfg: IntegratorConfig, monitors=None, quadratures=None):
    """Integrate xdot = X(x, t), sampling states and monitor values.

    ``monitors`` maps name -> ScalarField evaluated at each sample;
    ``quadratures`` maps name -> ScalarField whose time integral is
    carried as an extra state (reported per sample, starting at 0).

    Step underflow or a non-finite state aborts with the partial
    trajectory and a reason in ``Trajectory.aborted``.
    """
    monitors = list((monitors or {}).items())
    quadratures = list((quadratures or {}).items())
    rhs = _compile_rhs(X, [sf for _, sf in quadratures])
    mons = _compile_monitors(monitors, X.frame, X.time)
    traj = Trajectory(frame=X.frame)
    for name, _ in mons:
        traj.monitors[name] = []
    for name, _ in quadratures:
        traj.quadratures[name] = []

    def emit(t, y):
        traj.times.append(t)
        traj.states.append(tuple(y[:3]))
        for (name, f) in mons:
            traj.monitors[name].append(f(y[0], y[1], y[2], t))
        for k, (name, _) in enumerate(quadratures):
            traj.quadratures[name].append(y[3 + k])

    y = tuple(cfg.y0) + (0.0,) * len(quadratures)
    dim = len(y)
    if not all(math.isfinite(c) for c in y):
        raise IntegrationError("initial state must be finite")

    if cfg.method == "rk4":
        _run_rk4(rhs, cfg, y, dim, emit, traj)
    else:
        _run_dopri(rhs, cfg, y, dim, emit, traj)
    return traj


def _try_rhs(rhs, t, y, traj):
    try:
        dy = rhs(t, y)
    except (ZeroDivisionError, ValueError, OverflowError) as err:
        traj.aborted = f"right-hand side failed at t={t:.6g}: {err}"
        return None
    if not all(math.isfinite(c) for c in dy):
        traj.aborted = f"non-finite derivative at t={t:.6g}"
        return None
    return dy


def _run_rk4(rhs, cfg, y, dim, emit, traj):
    span = cfg.t1 - cfg.t0
    n = max(1, round(span / cfg.step))
    h = span / n
    t = cfg.t0
    emit(t, y)
    for k in range(n):
        k1 = _try_rhs(rhs, t, y, traj)
        if k1 is None:
            return
        k2 = _try_rhs(rhs, t + h / 2, tuple(y[i] + h / 2 * k1[i] for i in range(dim)), traj)
        if k2 is None:
            return
        k3 = _try_rhs(rhs, t + h / 2, tuple(y[i] + h / 2 * k2[i] for i in range(dim)), traj)
        if k3 is None:
            return
        k4 = _try_rhs(rhs, t + h, tuple(y[i] + h * k3[i] for i in range(dim)), traj)
        if k4 is None:
            return
        y = tuple(
            y[i] + h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) for i in range(dim)
        )
        if not all(math.isfinite(c) for c in y):
            traj.aborted = f"non-finite state at t={t + h:.6g}"
            return
        t = cfg.t0 + (k + 1) * h
        traj.accepted += 1
        emit(t, y)


def _run_dopri(rhs, cfg, y, dim, emit, traj):
    t = cfg.t0
    emit(t, y)
    n_samples = int(math.floor((cfg.t1 - cfg.t0) / cfg.sample_dt + 1e-9))
    sample_times = [cfg.t0 + (k + 1) * cfg.sample_dt for k in range(n_samples)]
    if not sample_times or sample_times[-1] < cfg.t1 - 1e-9 * max(1.0, abs(cfg.t1)):
        sample_times.append(cfg.t1)
    sample_times[-1] = min(sample_times[-1], cfg.t1)
    next_sample = 0

    h = min(cfg.max_step, (cfg.t1 - cfg.t0) / 100.0)
    facold = 1e-4
    k1 = _try_rhs(rhs, t, y, traj)
    if k1 is None:
        return

    while t < cfg.t1 - 1e-14 * max(1.0, abs(cfg.t1)):
        h = min(h, cfg.t1 - t)
        if h < cfg.min_step:
            traj.aborted = f"step size underflow at t={t:.6g} (h={h:.3e})"
            return

        K = [k1]
        failed = False
        for s in range(1, 7):
            ys = tuple(
                y[i] + h * sum(_A[s][j] * K[j][i] for j in range(s))
                for i in range(dim)
            )
            ks = _try_rhs(rhs, t + _C[s] * h, ys, traj)
            if ks is None:
                return
            K.append(ks)
        y5 = tuple(
            y[i] + h * sum(_B5[j] * K[j][i] for j in range(7)) for i in range(dim)
        )
        if not all(math.isfinite(c) for c in y5):
            traj.aborted = f"non-finite state at t={t + h:.6g}"
            return

        err = 0.0
        for i in range(dim):
            e = h * sum(_E[j] * K[j][i] for j in range(7))
            sc = cfg.atol + cfg.rtol * max(abs(y[i]), abs(y5[i]))
            err += (e / sc) ** 2
        err = math.sqrt(err / dim)

        if err <= 1.0:
            # dense output over (t, t+h]
            while next_sample < len(sample_times) and sample_times[next_sample] <= t + h + 1e-14 * max(1.0, abs(t + h)):
                ts = sample_times[next_sample]
                theta = min(1.0, max(0.0, (ts - t) / h))
                ydense = _dense(y, K, h, theta, dim)
                emit(min(ts, cfg.t1), ydense)
                next_sample += 1
            traj.accepted += 1
            t = t + h
            y = y5
            k1 = K[6]  # FSAL
            fac = _SAFETY * err ** (-0.17) * facold**0.04 if err > 0 else _FAC_MAX
            fac = min(_FAC_MAX, max(_FAC_MIN, fac))
            facold = max(err, 1e-4)
            h = min(cfg.max_step, h * fac)
        else:
            traj.rejected += 1
            fac = _SAFETY * err ** (-0.2)
            h = h * min(1.0, max(_FAC_MIN, fac))


def _dense(y, K, h, theta, dim):
    th2 = theta * theta
    powers = (theta, th2, th2 * theta, th2 * th2)
    out = []
    for i in range(dim):
        acc = 0.0
        for j in range(7):
            pj = _P[j]
            acc += K[j][i] * (
                pj[0] * powers[0] + pj[1] * powers[1] + pj[2] * powers[2] + pj[3] * powers[3]
            )
        out.append(y[i] + h * acc)
    return tuple(out)


def convergence_order(X, t0, t1, y0, exact, steps):
    """Least-squares slope of log(max error at t1) against log(h)
    for the fixed-step RK4 scheme."""
    import numpy as np

    errors = []
    for h in steps:
        cfg = IntegratorConfig(t0=t0, t1=t1, y0=y0, method="rk4", step=h)
        traj = integrate(X, cfg)
        if not traj.ok():
            raise IntegrationError(traj.aborted)
        ref = exact(traj.times[-1])
        err = max(abs(a - b) for a, b in zip(traj.states[-1], ref))
        errors.append(err)
    slope = np.polyfit(np.log(np.asarray(steps)), np.log(np.asarray(errors)), 1)[0]
    return float(slope)


def ensemble(X, configs, monitors=None, quadratures=None):
    """Independent trajectories, sequential and deterministic; a failure
    in one trajectory is isolated in its own Trajectory.aborted."""
    return [integrate(X, cfg, monitors, quadratures) for cfg in configs]
