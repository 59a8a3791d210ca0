"""Independent numerical oracle: adaptive Dormand-Prince 5(4) integration of the
full or reduced equations of motion over complex phase space, with output at
equally spaced sample times, singularity-margin abort, and invariant auditing.

Complex states are integrated as stacked real/imaginary coordinates so the
standard embedded error control applies unchanged.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError
from .models import (PhasePoint, ReducedPoint, check_regular, contour_radius,
                     eom, hamiltonian, lax_batch, reduced_eom,
                     reduced_hamiltonian, singular_distance, alpha_matrix)

SINGULAR_MARGIN = 1e-6

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_ERR = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                 -17253 / 339200, 22 / 525, -1 / 40])


@dataclass
class Trajectory:
    """Time-stamped states with provenance and step statistics."""

    times: np.ndarray
    states: list
    provenance: str
    stats: dict = field(default_factory=dict)
    blowup: bool = False
    last_good_time: float = None
    breakdown_time: float = None

    @property
    def reduced(self):
        return bool(self.states) and isinstance(self.states[0], ReducedPoint)


def _pack(pt):
    if isinstance(pt, ReducedPoint):
        z = np.concatenate([pt.q, pt.p, pt.s.ravel()])
    else:
        z = np.concatenate([pt.q, pt.p, pt.xi.ravel()])
    return z.view(float).copy()


def _unpack(y, N, reduced):
    z = y.view(complex)
    q, p, m = z[:N], z[N:2 * N], z[2 * N:].reshape(N, N)
    if reduced:
        rp = ReducedPoint.__new__(ReducedPoint)
        rp.q, rp.p, rp.s = q.copy(), p.copy(), m.copy()
        return rp
    pp = PhasePoint.__new__(PhasePoint)
    pp.q, pp.p, pp.xi = q.copy(), p.copy(), m.copy()
    return pp


def _margin(spec, y, N):
    q = y.view(complex)[:N]
    dist = singular_distance(spec, alpha_matrix(q))
    rel = spec.mask_regular
    if not rel.any():
        return np.inf
    return float(dist[rel].min())


def integrate(spec, pt0, t_end, samples=200, tol=1e-10, fixed_step=None):
    """Adaptive RK5(4) trajectory of pt0 at `samples` equally spaced times.

    Aborts cleanly (blowup flag + last good time) when the configuration comes
    within SINGULAR_MARGIN of the singular set.  `fixed_step` disables the
    error control (used for order verification).
    """
    if not (1e-13 <= tol <= 1e-3):
        raise ValidationError(f"tol={tol} outside [1e-13, 1e-3]")
    if samples < 2:
        raise ValidationError("samples must be >= 2")
    if t_end <= 0:
        raise ValidationError("t_end must be positive")
    reduced = isinstance(pt0, ReducedPoint)
    check_regular(spec, pt0.q)
    N = spec.ctx.N

    def f(y):
        pt = _unpack(y, N, reduced)
        qd, pd, md = reduced_eom(spec, pt) if reduced else eom(spec, pt)
        return np.concatenate([qd, pd, md.ravel()]).view(float)

    sample_times = np.linspace(0.0, float(t_end), int(samples))
    y = _pack(pt0)
    t = 0.0
    out_states = [_unpack(y, N, reduced)]
    out_times = [0.0]
    nxt = 1

    h = fixed_step if fixed_step else min(1e-3, t_end / 100)
    k1 = f(y)
    nfev, nsteps, nrej = 1, 0, 0
    blowup = False

    while t < t_end - 1e-14:
        h_step = min(h, t_end - t)
        clamped = h_step < h
        if nxt < len(sample_times) and t + h_step >= sample_times[nxt] - 1e-14:
            h_step = sample_times[nxt] - t
            clamped = True
        if h_step < 1e-15 * max(1.0, abs(t)):
            blowup = True
            break
        try:
            ks = [k1]
            for i in range(1, 7):
                yi = y + h_step * sum(a * k for a, k in zip(_A[i], ks))
                ks.append(f(yi))
        except DomainError:
            # a trial stage crossed into the singular margin: shrink, then abort
            nrej += 1
            if h_step < 1e-12 * max(1.0, abs(t)):
                blowup = True
                break
            h = h_step * 0.25
            continue
        nfev += 6
        y1 = y + h_step * sum(b * k for b, k in zip(_B5, ks) if b)
        if fixed_step is None:
            err = h_step * sum(e * k for e, k in zip(_ERR, ks) if e)
            sc = tol + tol * np.maximum(np.abs(y), np.abs(y1))
            enorm = float(np.sqrt(np.mean((err / sc) ** 2)))
        else:
            enorm = 0.0
        accepted = enorm <= 1.0
        if accepted:
            if not np.all(np.isfinite(y1)) or _margin(spec, y1, N) < SINGULAR_MARGIN:
                blowup = True
                break
            t += h_step
            y = y1
            k1 = ks[6]  # FSAL
            nsteps += 1
            while nxt < len(sample_times) and t >= sample_times[nxt] - 1e-12:
                out_times.append(sample_times[nxt])
                out_states.append(_unpack(y, N, reduced))
                nxt += 1
        else:
            nrej += 1
        if fixed_step is None:
            fac = 5.0 if enorm == 0.0 else min(5.0, max(0.2, 0.9 * enorm ** (-0.2)))
            if not accepted:
                h = h_step * min(1.0, fac)
            elif clamped:
                h = max(h, h_step * fac)
            else:
                h = h_step * fac

    stats = {"nsteps": nsteps, "nrejected": nrej, "nfev": nfev}
    return Trajectory(times=np.array(out_times), states=out_states,
                      provenance="oracle", stats=stats, blowup=blowup,
                      last_good_time=float(t) if blowup else None)


# ---------------------------------------------------------------------------
# invariant auditing
# ---------------------------------------------------------------------------

def default_z_samples(spec):
    """{0.7, 1.3i, 0.4+0.4i} scaled into the family's analyticity annulus."""
    base = np.array([0.7, 1.3j, 0.4 + 0.4j])
    if spec.family == "rational":
        return list(base)
    scale = 0.45 * 2.0 * contour_radius(spec) / 1.3
    return list(base * scale)


def match_eigenvalues(prev, new):
    """Permutation of `new` minimizing total distance to `prev`; ties by index."""
    n = len(prev)
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(n)):
        cost = sum(abs(new[perm[i]] - prev[i]) for i in range(n))
        if cost < best_cost - 1e-15:
            best, best_cost = perm, cost
    return np.array([new[best[i]] for i in range(n)])


@dataclass
class InvariantReport:
    """Per-time conserved quantities and their maximal drifts over a trajectory."""

    times: np.ndarray
    z_samples: list
    energy: np.ndarray          # (T,)
    momentum_norm: np.ndarray   # (T,)
    eigenvalues: np.ndarray     # (T, K, N), continuation-matched in t
    energy_drift: float
    momentum_drift: float
    eig_drift: float

    def to_json_dict(self):
        return {
            "z_samples": [[z.real, z.imag] for z in map(complex, self.z_samples)],
            "energy_drift": self.energy_drift,
            "momentum_drift": self.momentum_drift,
            "eig_drift": self.eig_drift,
        }


def audit(spec, traj, z_samples=None):
    """Energy, momentum norm and Lax eigenvalues along a trajectory, with drifts."""
    if z_samples is None:
        z_samples = default_z_samples(spec)
    reduced = traj.reduced
    T = len(traj.states)
    K = len(z_samples)
    N = spec.ctx.N
    energy = np.empty(T, dtype=complex)
    mom = np.empty(T)
    eigs = np.empty((T, K, N), dtype=complex)
    for it, st in enumerate(traj.states):
        if reduced:
            energy[it] = reduced_hamiltonian(spec, st)
            mom[it] = 0.0
            lift = PhasePoint(q=st.q, p=st.p, xi=st.s)
        else:
            energy[it] = hamiltonian(spec, st)
            mom[it] = float(np.linalg.norm(np.diag(st.xi)))
            lift = st
        Ls = lax_batch(spec, lift, z_samples)
        for k in range(K):
            ev = np.linalg.eigvals(Ls[k])
            if it == 0:
                idx = np.lexsort((ev.imag, ev.real))
                eigs[it, k] = ev[idx]
            else:
                eigs[it, k] = match_eigenvalues(eigs[it - 1, k], ev)
    return InvariantReport(
        times=traj.times, z_samples=list(z_samples), energy=energy,
        momentum_norm=mom, eigenvalues=eigs,
        energy_drift=float(np.abs(energy - energy[0]).max()),
        momentum_drift=float(np.abs(mom - mom[0]).max()),
        eig_drift=float(np.abs(eigs - eigs[0]).max()),
    )


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------

def trajectory_csv_lines(traj, meta=None):
    """CSV lines: '#' metadata, mandatory header row, one row per sample."""
    lines = []
    for key, val in (meta or {}).items():
        lines.append(f"# {key}: {val}")
    if not traj.states:
        lines.append("t")
        return lines
    N = traj.states[0].N
    cols = ["t"]
    for name in ("q", "p"):
        for i in range(1, N + 1):
            cols += [f"Re_{name}_{i}", f"Im_{name}_{i}"]
    label = "s" if traj.reduced else "xi"
    for i in range(1, N + 1):
        for j in range(1, N + 1):
            cols += [f"Re_{label}_{i}_{j}", f"Im_{label}_{i}_{j}"]
    lines.append(",".join(cols))
    for t, st in zip(traj.times, traj.states):
        m = st.s if traj.reduced else st.xi
        vals = [repr(float(t))]
        for v in np.concatenate([st.q, st.p, m.ravel()]):
            vals += [repr(float(v.real)), repr(float(v.imag))]
        lines.append(",".join(vals))
    return lines
