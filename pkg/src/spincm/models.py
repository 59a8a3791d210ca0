"""The three spin Calogero-Moser families over sl(N,C).

Hamiltonians, Lax operators L(q,p,xi)(z), limiting Lax values, Hamiltonian
vector fields on the full and reduced phase spaces, and the closed-form
r-matrix actions (R(q)M)(z) entering the Lax equations.

All three families share the shape

    H = 1/2 tr p^2 - 1/2 sum_{a in A} kappa_a(q) xi_a xi_{-a} - c0 * sum_i xi_i^2

with family kernel kappa and active root set A:

    rational:       A = Delta',  kappa = 1/a(q)^2,                    c0 = 0
    trigonometric:  A = Delta,   kappa = csc^2 a(q) - 1/3  on <pi'>,
                                 kappa = -1/3              elsewhere,  c0 = 1/3
    elliptic:       A = Delta,   kappa = wp(a(q)),                    c0 = 0

The -1/3 constant on roots outside <pi'> is forced by the contour-integral
definition of the Hamiltonian applied to the trigonometric Lax operator
(the z^0 Laurent coefficient of csc^2 z is 1/3); with it the Lax equation
and the factorization solution hold exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import special
from .errors import ContractError, DomainError, PoleError, ValidationError
from .liecore import LieContext, RootSubset, reduce_gauge, validate_root_subset
from .special import EllipticLattice, cot_c

REGULARITY_MARGIN = 1e-6
MOMENTUM_TOL = 1e-12

FAMILIES = ("rational", "trigonometric", "elliptic")


# ---------------------------------------------------------------------------
# phase points
# ---------------------------------------------------------------------------

def _vec(x, N, name):
    v = np.asarray(x, dtype=complex).reshape(-1)
    if v.size != N:
        raise ValidationError(f"{name} must have {N} entries, got {v.size}")
    if abs(v.sum()) > 1e-10 * max(1.0, np.abs(v).max(initial=0.0)) * N:
        raise ValidationError(f"{name} must be traceless (sum={v.sum():.3e})")
    return v


@dataclass
class PhasePoint:
    """(q, p, xi) with q, p Cartan elements stored as diagonal vectors."""

    q: np.ndarray
    p: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=complex).reshape(-1)
        N = self.q.size
        self.q = _vec(self.q, N, "q")
        self.p = _vec(self.p, N, "p")
        xi = np.asarray(self.xi, dtype=complex)
        if xi.shape != (N, N):
            raise ValidationError(f"xi must be {N}x{N}, got {xi.shape}")
        if abs(np.trace(xi)) > 1e-10 * max(1.0, np.abs(xi).max(initial=0.0)) * N:
            raise ValidationError("xi must be traceless")
        self.xi = xi

    @property
    def N(self):
        return self.q.size

    def momentum(self):
        """J = -Pi_h(xi), as a diagonal vector."""
        return -np.diag(self.xi)

    def to_json_dict(self):
        return {
            "q": [[z.real, z.imag] for z in self.q],
            "p": [[z.real, z.imag] for z in self.p],
            "xi": [[z.real, z.imag] for z in self.xi.ravel()],
        }

    @staticmethod
    def from_json_dict(d):
        q = [complex(a, b) for a, b in d["q"]]
        p = [complex(a, b) for a, b in d["p"]]
        n = len(q)
        xi = np.array([complex(a, b) for a, b in d["xi"]]).reshape(n, n)
        return PhasePoint(q=q, p=p, xi=xi)


@dataclass
class ReducedPoint:
    """(q, p, s) on TU x g_red: s has zero diagonal and s_{a_i} = 1 exactly."""

    q: np.ndarray
    p: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=complex).reshape(-1)
        N = self.q.size
        self.q = _vec(self.q, N, "q")
        self.p = _vec(self.p, N, "p")
        s = np.asarray(self.s, dtype=complex).copy()
        if s.shape != (N, N):
            raise ValidationError(f"s must be {N}x{N}, got {s.shape}")
        if np.abs(np.diag(s)).max(initial=0.0) > 1e-10:
            raise ValidationError("s must have zero diagonal")
        for k in range(N - 1):
            if abs(s[k, k + 1] - 1.0) > 1e-8:
                raise ValidationError(
                    f"s_(alpha_{k + 1}) = {s[k, k + 1]} != 1 on a reduced point")
            s[k, k + 1] = 1.0
        np.fill_diagonal(s, 0.0)
        self.s = s

    @property
    def N(self):
        return self.q.size

    def to_json_dict(self):
        return {
            "q": [[z.real, z.imag] for z in self.q],
            "p": [[z.real, z.imag] for z in self.p],
            "s": [[z.real, z.imag] for z in self.s.ravel()],
        }

    @staticmethod
    def from_json_dict(d):
        q = [complex(a, b) for a, b in d["q"]]
        p = [complex(a, b) for a, b in d["p"]]
        n = len(q)
        s = np.array([complex(a, b) for a, b in d["s"]]).reshape(n, n)
        return ReducedPoint(q=q, p=p, s=s)


def reduce_point(ctx, pt):
    """Reduction (q,p,xi) -> (q,p, g(xi)^-1 xi g(xi)); requires xi in U."""
    return ReducedPoint(q=pt.q.copy(), p=pt.p.copy(), s=reduce_gauge(ctx, pt.xi))


# ---------------------------------------------------------------------------
# model specification
# ---------------------------------------------------------------------------

@dataclass
class ModelSpec:
    """One of the three families together with its root-subset / lattice data."""

    ctx: LieContext
    family: str
    subset: RootSubset = None
    lattice: EllipticLattice = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"family must be one of {FAMILIES}")
        N = self.ctx.N
        off = ~np.eye(N, dtype=bool)
        if self.family == "rational":
            if self.subset is None or self.subset.kind != "delta":
                raise ValidationError("rational family needs a Delta' subset")
            if self.subset.partition is None:
                self.subset = validate_root_subset(self.ctx, self.subset)
            self.mask_active = _mask(N, self.subset.members)
        elif self.family == "trigonometric":
            if self.subset is None or self.subset.kind != "pi":
                raise ValidationError("trigonometric family needs a pi' subset")
            if self.subset.span is None:
                self.subset = validate_root_subset(self.ctx, self.subset)
            self.mask_span = _mask(N, self.subset.span)
            self.mask_plus = _mask(N, self.subset.obar_plus)
            self.mask_minus = _mask(N, self.subset.obar_minus)
            self.mask_active = off
        else:
            if self.lattice is None:
                raise ValidationError("elliptic family needs a lattice")
            self.mask_active = off
        # roots whose kernel depends on q (regularity is checked for these)
        if self.family == "rational":
            self.mask_regular = self.mask_active
        elif self.family == "trigonometric":
            self.mask_regular = self.mask_span
        else:
            self.mask_regular = off

    def to_json_dict(self):
        d = {"N": self.ctx.N, "family": self.family}
        if self.subset is not None:
            d["root_subset"] = self.subset.to_json_dict()
        if self.lattice is not None:
            d["lattice"] = self.lattice.to_json_dict()
        return d


def _mask(N, pairs):
    m = np.zeros((N, N), dtype=bool)
    for i, j in pairs:
        m[i, j] = True
    return m


def rational_model(ctx, subset):
    return ModelSpec(ctx=ctx, family="rational",
                     subset=validate_root_subset(ctx, subset))


def trig_model(ctx, subset):
    return ModelSpec(ctx=ctx, family="trigonometric",
                     subset=validate_root_subset(ctx, subset))


def elliptic_model(ctx, lattice):
    return ModelSpec(ctx=ctx, family="elliptic", lattice=lattice)


def model_from_json_dict(d):
    from .liecore import build_sl_context
    ctx = build_sl_context(int(d["N"]))
    fam = d["family"]
    if fam == "rational":
        return rational_model(ctx, RootSubset.from_json_dict(d["root_subset"]))
    if fam == "trigonometric":
        return trig_model(ctx, RootSubset.from_json_dict(d["root_subset"]))
    if fam == "elliptic":
        return elliptic_model(ctx, EllipticLattice.from_json_dict(d["lattice"]))
    raise ValidationError(f"unknown family {fam!r}")


# ---------------------------------------------------------------------------
# kernels, regularity
# ---------------------------------------------------------------------------

def alpha_matrix(q):
    """Matrix of root values a(q): A[i, j] = q_i - q_j."""
    q = np.asarray(q)
    return q[:, None] - q[None, :]


def singular_distance(spec, w):
    """Distance of root values w to the family's singular set ({0}, pi*Z, Lambda)."""
    w = np.asarray(w, dtype=complex)
    if spec.family == "rational":
        return np.abs(w)
    if spec.family == "trigonometric":
        return np.abs(w - math.pi * np.round(w.real / math.pi))
    return spec.lattice.lattice_distance(w)


def check_regular(spec, q, margin=REGULARITY_MARGIN):
    """Raise DomainError naming the offending root if q is closer than `margin`
    to the singular set along any kernel-relevant root."""
    A = alpha_matrix(q)
    dist = singular_distance(spec, A)
    bad = spec.mask_regular & (dist < margin)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise DomainError(
            f"singular configuration: alpha(q) = {A[i, j]:.3e} for root "
            f"eps_{i + 1}-eps_{j + 1} is within {margin} of the singular set")


def _kernel_matrices(spec, q):
    """(K, Kp): kappa_a(q) and d kappa / d a(q) filled on the active mask."""
    N = spec.ctx.N
    A = alpha_matrix(q)
    K = np.zeros((N, N), dtype=complex)
    Kp = np.zeros((N, N), dtype=complex)
    if spec.family == "rational":
        m = spec.mask_active
        K[m] = 1.0 / A[m] ** 2
        Kp[m] = -2.0 / A[m] ** 3
    elif spec.family == "trigonometric":
        m = spec.mask_span
        s = np.sin(A[m])
        K[m] = 1.0 / s**2 - 1.0 / 3.0
        Kp[m] = -2.0 * np.cos(A[m]) / s**3
        comp = spec.mask_plus | spec.mask_minus
        K[comp] = -1.0 / 3.0
    else:
        m = spec.mask_active
        K[m] = special.wp(spec.lattice, A[m])
        Kp[m] = special.wp_prime(spec.lattice, A[m])
    return K, Kp


def _c0(spec):
    return 1.0 / 3.0 if spec.family == "trigonometric" else 0.0


# ---------------------------------------------------------------------------
# Hamiltonian, equations of motion
# ---------------------------------------------------------------------------

def hamiltonian(spec, pt):
    """Closed-form Hamiltonian of the family at a regular point."""
    check_regular(spec, pt.q)
    K, _ = _kernel_matrices(spec, pt.q)
    xi = pt.xi
    h = 0.5 * np.sum(pt.p**2) - 0.5 * np.sum(K * xi * xi.T)
    c0 = _c0(spec)
    if c0:
        h -= c0 * np.sum(np.diag(xi) ** 2)
    return complex(h)


def _grad_xi(spec, K, xi):
    """Trace-form gradient of H in xi: -sum kappa_a xi_a e_a - 2 c0 Pi_h xi."""
    G = -(K * xi)
    c0 = _c0(spec)
    if c0:
        G = G - 2.0 * c0 * np.diag(np.diag(xi))
    return G


def eom(spec, pt):
    """(q_dot, p_dot, xi_dot) of the family's Hamiltonian vector field."""
    check_regular(spec, pt.q)
    K, Kp = _kernel_matrices(spec, pt.q)
    xi = pt.xi
    W = Kp * xi * xi.T
    pdot = 0.5 * (W.sum(axis=1) - W.sum(axis=0))
    G = _grad_xi(spec, K, xi)
    xidot = xi @ G - G @ xi
    return pt.p.copy(), pdot, xidot


def reduced_hamiltonian(spec, rpt):
    """Hamiltonian of the reduced system on TU x g_red."""
    check_regular(spec, rpt.q)
    K, _ = _kernel_matrices(spec, rpt.q)
    return complex(0.5 * np.sum(rpt.p**2) - 0.5 * np.sum(K * rpt.s * rpt.s.T))


def _cartan_correction(spec, K, s):
    """Diagonal of the Cartan correction sum_{i,j} C_ji X_j h_{a_i} in the
    reduced vector field, where X_j = sum_{a in A, a_j - a in Delta}
    N_{a, a_j - a} kappa_a s_a s_{a_j - a}."""
    N = spec.ctx.N
    X = np.zeros(N - 1, dtype=complex)
    Ks = K * s
    for j in range(N - 1):
        for b in range(N):
            if b != j and b != j + 1:
                X[j] += Ks[j, b] * s[b, j + 1]  # alpha = (j, b), N = +1
                X[j] -= Ks[b, j + 1] * s[j, b]  # alpha = (b, j+1), N = -1
    coeff = spec.ctx.inv_cartan.T @ X
    diag = np.zeros(N, dtype=complex)
    for i in range(N - 1):
        diag[i] += coeff[i]
        diag[i + 1] -= coeff[i]
    return diag


def reduced_eom(spec, rpt):
    """(q_dot, p_dot, s_dot) with s_dot = [s, M]; M carries the Cartan
    correction that keeps s_{a_i} = 1 along the flow."""
    check_regular(spec, rpt.q)
    K, Kp = _kernel_matrices(spec, rpt.q)
    s = rpt.s
    W = Kp * s * s.T
    pdot = 0.5 * (W.sum(axis=1) - W.sum(axis=0))
    M = -(K * s) + np.diag(_cartan_correction(spec, K, s))
    sdot = s @ M - M @ s
    return rpt.p.copy(), pdot, sdot


# ---------------------------------------------------------------------------
# Lax operators
# ---------------------------------------------------------------------------

def _check_z_regular(spec, z):
    z = complex(z)
    if spec.family == "rational":
        if abs(z) < special.POLE_TOL:
            raise PoleError("rational Lax pole at z=0", nearest=0.0)
    elif spec.family == "trigonometric":
        near = math.pi * round(z.real / math.pi)
        if abs(z - near) < special.POLE_TOL:
            raise PoleError(f"trigonometric Lax pole at z={z}", nearest=near)
    else:
        z0, _, _ = spec.lattice.reduce(z)
        if abs(z0) < special.POLE_TOL:
            raise PoleError(f"elliptic Lax pole at z={z}", nearest=z - z0)
    return z


def lax(spec, pt, z):
    """The Lax matrix L(q,p,xi)(z) of the family."""
    return lax_batch(spec, pt, [z])[0]


def lax_batch(spec, pt, zs):
    """L(q,p,xi)(z) stacked over a list of spectral parameters."""
    check_regular(spec, pt.q)
    zs = [_check_z_regular(spec, z) for z in zs]
    N = spec.ctx.N
    xi = pt.xi
    A = alpha_matrix(pt.q)
    P = np.diag(pt.p)
    out = np.empty((len(zs), N, N), dtype=complex)

    if spec.family == "rational":
        m = spec.mask_active
        base = P.copy()
        base[m] += xi[m] / A[m]
        for k, z in enumerate(zs):
            out[k] = base + xi / z
        return out

    if spec.family == "trigonometric":
        base = P.copy()
        ms = spec.mask_span
        base[ms] += xi[ms] / np.tan(A[ms])
        base[spec.mask_plus] += -1j * xi[spec.mask_plus]
        base[spec.mask_minus] += 1j * xi[spec.mask_minus]
        for k, z in enumerate(zs):
            out[k] = base + cot_c(z) * xi
        return out

    lat = spec.lattice
    m = spec.mask_active
    diag_xi = np.diag(np.diag(xi))
    for k, z in enumerate(zs):
        L = P + special.zeta_w(lat, z) * diag_xi
        L[m] -= special.l_func(lat, A[m], z) * xi[m]
        out[k] = L
    return out


def lax_limit(spec, pt, which):
    """Limiting Lax values: z -> infinity (rational) or z -> +/- i*infinity (trig).

    rational_inf lands in g_Delta' (Cartan + Delta' root spaces); the trig
    limits land in the parabolic subalgebras p^{+/-}_{pi'} by construction.
    """
    check_regular(spec, pt.q)
    N = spec.ctx.N
    xi = pt.xi
    A = alpha_matrix(pt.q)
    P = np.diag(pt.p)
    if which == "rational_inf":
        if spec.family != "rational":
            raise ValidationError("rational_inf limit requires the rational family")
        m = spec.mask_active
        out = P.copy()
        out[m] += xi[m] / A[m]
        return out
    if which in ("trig_plus_i_inf", "trig_minus_i_inf"):
        if spec.family != "trigonometric":
            raise ValidationError(f"{which} limit requires the trigonometric family")
        sign = 1.0 if which == "trig_plus_i_inf" else -1.0
        out = P - sign * 1j * np.diag(np.diag(xi))
        ms = spec.mask_span
        out[ms] += (1.0 / np.tan(A[ms]) - sign * 1j) * xi[ms]
        mo = spec.mask_plus if sign > 0 else spec.mask_minus
        out[mo] += -sign * 2j * xi[mo]
        return out
    raise ValidationError(f"unknown limit {which!r}")


def _check_momentum_zero(pt):
    scale = max(1.0, float(np.abs(pt.xi).max(initial=0.0)))
    if np.abs(np.diag(pt.xi)).max(initial=0.0) > MOMENTUM_TOL * scale:
        raise ContractError("requires J^-1(0): Pi_h(xi) must vanish")


def r_action_on_M(spec, pt, z):
    """Closed-form (R(q) M)(z) on J^-1(0), M(z) = L(z)/z."""
    _check_momentum_zero(pt)
    z = _check_z_regular(spec, complex(z))
    check_regular(spec, pt.q)
    N = spec.ctx.N
    xi = pt.xi
    A = alpha_matrix(pt.q)
    M = lax(spec, pt, z) / z

    if spec.family == "rational":
        out = -0.5 * M
        m = spec.mask_active
        out[m] -= xi[m] / A[m] ** 2
        return out

    if spec.family == "trigonometric":
        cz = cot_c(z)
        out = 0.5 * M - cz * np.diag(pt.p)
        # phi_a(q, z) per root class
        phi = np.zeros((N, N), dtype=complex)
        ms = spec.mask_span
        phi[ms] = -(1.0 / np.tan(A[ms]) + cz)
        phi[spec.mask_plus] = -(cz - 1j)
        phi[spec.mask_minus] = -(cz + 1j)
        comp = spec.mask_plus | spec.mask_minus
        out[comp] += phi[comp] * cz * xi[comp]
        caq = 1.0 / np.tan(A[ms])
        out[ms] += phi[ms] * (caq + cz - 1.0 / np.tan(A[ms] + z)) * xi[ms]
        return out

    lat = spec.lattice
    zz = special.zeta_w(lat, z)
    out = 0.5 * M - zz * np.diag(pt.p)
    m = spec.mask_active
    out[m] += (special.l_func(lat, A[m], z)
               * (special.zeta_w(lat, A[m]) + zz - special.zeta_w(lat, A[m] + z))
               * xi[m])
    return out


def _rk4_step(spec, pt, h):
    """One classical RK4 step of the full equations of motion."""
    def f(q, p, xi):
        return eom(spec, PhasePoint(q=q, p=p, xi=xi))

    k1 = f(pt.q, pt.p, pt.xi)
    k2 = f(pt.q + 0.5 * h * k1[0], pt.p + 0.5 * h * k1[1], pt.xi + 0.5 * h * k1[2])
    k3 = f(pt.q + 0.5 * h * k2[0], pt.p + 0.5 * h * k2[1], pt.xi + 0.5 * h * k2[2])
    k4 = f(pt.q + h * k3[0], pt.p + h * k3[1], pt.xi + h * k3[2])
    q = pt.q + (h / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    p = pt.p + (h / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    xi = pt.xi + (h / 6.0) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    return PhasePoint(q=q, p=p, xi=xi)


def lax_residual(spec, pt, z, delta=1e-4):
    """|| d/dt L(z) - [L(z), (R(q)M)(z)] || with the time derivative taken along
    the equations of motion by a central finite difference of step `delta`."""
    _check_momentum_zero(pt)
    RM = r_action_on_M(spec, pt, z)
    L0 = lax(spec, pt, z)
    plus = _rk4_step(spec, pt, delta)
    minus = _rk4_step(spec, pt, -delta)
    dL = (lax(spec, plus, z) - lax(spec, minus, z)) / (2.0 * delta)
    return float(np.linalg.norm(dL - (L0 @ RM - RM @ L0)))


def contour_radius(spec):
    """Half the distance from 0 to the nearest z-singularity of L(z)."""
    if spec.family == "rational":
        return 0.5
    if spec.family == "trigonometric":
        return math.pi / 2.0
    return spec.lattice._min_period / 2.0


def contour_hamiltonian(spec, pt, n_samples=64):
    """(1/2) contour-average of (L(z), L(z)) on |z| = r: the invariant-function
    definition of the Hamiltonian, by trapezoidal quadrature."""
    if n_samples < 16:
        raise ValidationError("n_samples must be >= 16")
    r = contour_radius(spec)
    zs = r * np.exp(2j * math.pi * np.arange(n_samples) / n_samples)
    Ls = lax_batch(spec, pt, list(zs))
    vals = np.einsum("kij,kji->k", Ls, Ls)
    return complex(0.5 * vals.mean())
