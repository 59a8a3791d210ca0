"""Blockwise eigendecomposition with continuation along a matrix path.

Shared by both exact solvers: matrices block-diagonal with respect to a
partition of {0..N-1} are diagonalized per block, eigenvector columns are
matched to the previous step by maximal overlap, and a deterministic gauge is
applied.  Two gauges are provided:

 * the presentation gauge of ``diagonalize_in_levi`` (unit-norm columns, phase
   fixed at the start, continuity-matched afterwards, det = 1), and
 * the internal pivot gauge of ``PivotPath`` (a fixed component of each
   eigenvector scaled to exactly 1), which is local in time and therefore
   accumulates no gauge drift; the Cartan velocity Pi_h(g^-1 g') is then
   available in closed form from first-order eigenvector perturbation.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import BreakdownError, DomainError, GridError, ValidationError

COLLISION_GAP = 1e-10


def best_assignment(cost):
    """Permutation p minimizing sum_i cost[i, p[i]]; ties broken lexicographically."""
    n = cost.shape[0]
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(n)):
        c = sum(cost[i, perm[i]] for i in range(n))
        if c < best_cost - 1e-12:
            best, best_cost = perm, c
    return best


def block_gap(d, blocks):
    """Minimal within-block pairwise eigenvalue distance (inf for singletons)."""
    gap = np.inf
    for blk in blocks:
        if len(blk) < 2:
            continue
        vals = d[list(blk)]
        for i in range(len(vals)):
            for j in range(i + 1, len(vals)):
                gap = min(gap, abs(vals[i] - vals[j]))
    return gap


def check_block_structure(M, blocks, tol=1e-9, what="matrix"):
    mask = np.zeros(M.shape, dtype=bool)
    for blk in blocks:
        mask[np.ix_(list(blk), list(blk))] = True
    off = np.abs(M[~mask]).max(initial=0.0)
    if off > tol * max(1.0, np.abs(M).max(initial=0.0)):
        raise ValidationError(f"{what} is not block-diagonal for the given "
                              f"partition (off-block magnitude {off:.3e})")


def _eig_blocks(M, blocks):
    """Eigen-decompose each block; returns full-size (vals, vecs) with vecs
    supported on their blocks."""
    N = M.shape[0]
    vals = np.zeros(N, dtype=complex)
    vecs = np.zeros((N, N), dtype=complex)
    for blk in blocks:
        idx = list(blk)
        if len(idx) == 1:
            vals[idx[0]] = M[idx[0], idx[0]]
            vecs[idx[0], idx[0]] = 1.0
            continue
        w, v = np.linalg.eig(M[np.ix_(idx, idx)])
        for c, slot in enumerate(idx):
            vals[slot] = w[c]
            vecs[np.ix_(idx, [slot])] = v[:, [c]]
    return vals, vecs


def _match(blocks, ref_vecs, vals, vecs):
    """Permute eigenpairs within blocks to maximize overlap with ref columns."""
    N = len(vals)
    vals_out = vals.copy()
    vecs_out = vecs.copy()
    for blk in blocks:
        idx = list(blk)
        if len(idx) < 2:
            continue
        ref = ref_vecs[np.ix_(idx, idx)]
        new = vecs[np.ix_(idx, idx)]
        refn = ref / np.linalg.norm(ref, axis=0, keepdims=True)
        newn = new / np.linalg.norm(new, axis=0, keepdims=True)
        overlap = np.abs(refn.conj().T @ newn)
        perm = best_assignment(-overlap)
        vals_out[idx] = vals[idx][list(perm)]
        sub = new[:, list(perm)]
        vecs_out[np.ix_(idx, idx)] = sub
    return vals_out, vecs_out


def diagonalize_in_levi(ctx, partition, M, prev=None):
    """M = g d g^-1 blockwise, with the deterministic presentation gauge.

    Without ``prev`` the eigenvalue order follows M's diagonal (identity
    overlap) and each column's maximum-modulus entry is made real positive;
    with ``prev = (g_prev, d_prev)`` columns are continuity-matched and phased
    against g_prev.  A final scalar rescale enforces det g = 1.  Eigenvalue
    collision inside a block (gap < 1e-10) raises BreakdownError.
    """
    M = np.asarray(M, dtype=complex)
    N = M.shape[0]
    blocks = list(partition)
    check_block_structure(M, blocks)
    vals, vecs = _eig_blocks(M, blocks)
    ref = np.eye(N, dtype=complex) if prev is None else np.asarray(prev[0])
    vals, vecs = _match(blocks, ref, vals, vecs)
    gap = block_gap(vals, blocks)
    if gap < COLLISION_GAP:
        raise BreakdownError(
            f"eigenvalue collision within a block (gap {gap:.3e})", gap=gap)
    vecs = vecs / np.linalg.norm(vecs, axis=0, keepdims=True)
    for c in range(N):
        if prev is None:
            piv = int(np.argmax(np.abs(vecs[:, c])))
            ph = vecs[piv, c]
        else:
            ph = np.vdot(ref[:, c], vecs[:, c])
        if abs(ph) > 0:
            vecs[:, c] *= abs(ph) / ph
    det = np.linalg.det(vecs)
    vecs = vecs * det ** (-1.0 / N)
    return vecs, vals


GAP_REFINE = 1e-4
GAP_COLLIDE = 1e-6
MAX_HALVINGS = 12
LOG_JUMP = 2.5  # radians; spec contract is "jump > pi between grid points"


def locate_collision(Mfun, blocks, t_lo, t_hi):
    """Root-find the within-block discriminant product D(t) by a complex secant
    iteration.  D is analytic with a simple zero at an eigenvalue collision, so
    this resolves sqrt-type collisions that pointwise gap thresholds cannot.

    Returns (t_star, collided): the real collision-time estimate and whether
    the located zero is numerically on the real axis inside the bracket.
    """
    blocks_l = [list(b) for b in blocks]

    def disc(t):
        vals, _ = _eig_blocks(Mfun(t), blocks_l)
        D = 1.0 + 0.0j
        for blk in blocks_l:
            for i in range(len(blk)):
                for j in range(i + 1, len(blk)):
                    D *= (vals[blk[i]] - vals[blk[j]]) ** 2
        return D

    span = t_hi - t_lo
    t0, t1 = complex(t_lo), complex(t_hi)
    d0, d1 = disc(t0), disc(t1)
    dscale = max(abs(d0), abs(d1), 1e-300)
    for _ in range(80):
        if d1 == d0:
            break
        t2 = t1 - d1 * (t1 - t0) / (d1 - d0)
        if abs(t2 - 0.5 * (t_lo + t_hi)) > 2.0 * span:
            break  # wandered out of the bracket: no root here
        t0, d0 = t1, d1
        t1 = t2
        d1 = disc(t1)
        if abs(t1 - t0) < 1e-13 * max(1.0, abs(t1)) or d1 == 0:
            break
    on_axis = abs(t1.imag) <= 1e-7 * max(span, abs(t1.real))
    inside = (t_lo - 0.5 * span) <= t1.real <= (t_hi + 0.5 * span)
    small = abs(d1) <= 1e-10 * dscale
    return float(t1.real), bool(on_axis and inside and small)


def simpson_increment(fvals, h):
    """Composite Simpson over an even number of uniform panels."""
    n = len(fvals) - 1
    acc = np.zeros_like(fvals[0])
    for m in range(0, n, 2):
        acc = acc + (h / 3.0) * (fvals[m] + 4.0 * fvals[m + 1] + fvals[m + 2])
    return acc


class PivotPath:
    """Continuation-tracked blockwise eigendecomposition in the pivot gauge.

    Starts from a diagonal matrix (g = identity); ``advance(M)`` re-matches to
    the previous node.  ``cartan_velocity(Mdot)`` returns the diagonal of
    W = g^-1 g' in closed form; together with the gauge-invariance of
    k(t) = g(t) h(t) this gives the Cartan quadrature without finite
    differences of eigenvectors.
    """

    def __init__(self, blocks, M0, diag_tol=1e-9):
        M0 = np.asarray(M0, dtype=complex)
        N = M0.shape[0]
        off = M0 - np.diag(np.diag(M0))
        if np.abs(off).max(initial=0.0) > diag_tol * max(1.0, np.abs(M0).max()):
            raise ValidationError("continuation must start from a diagonal matrix")
        self.blocks = [list(b) for b in blocks]
        self.N = N
        self.g = np.eye(N, dtype=complex)
        self.d = np.diag(M0).copy()
        self.pivots = np.arange(N)
        self._same_block = np.zeros((N, N), dtype=bool)
        for blk in self.blocks:
            self._same_block[np.ix_(blk, blk)] = True
        np.fill_diagonal(self._same_block, False)
        self.min_gap_seen = block_gap(self.d, self.blocks)
        self.pivot_jumps = 0

    def advance(self, M):
        """Move the decomposition to M; returns the within-block eigen gap."""
        vals, vecs = _eig_blocks(np.asarray(M, dtype=complex), self.blocks)
        vals, vecs = _match(self.blocks, self.g, vals, vecs)
        # pivot normalization: v_c[pivot_c] == 1
        for c in range(self.N):
            pv = vecs[self.pivots[c], c]
            nrm = np.abs(vecs[:, c]).max()
            if abs(pv) < 0.2 * nrm:
                # re-anchor the pivot; gauge jump is absorbed by the caller
                self.pivots[c] = int(np.argmax(np.abs(vecs[:, c])))
                pv = vecs[self.pivots[c], c]
                self.pivot_jumps += 1
            vecs[:, c] /= pv
        self.g = vecs
        self.d = vals
        gap = block_gap(vals, self.blocks)
        self.min_gap_seen = min(self.min_gap_seen, gap)
        return gap

    def cartan_velocity(self, Mdot):
        """diag(W) for W = g^-1 g' in the pivot gauge, from g^-1 Mdot g."""
        B = np.linalg.solve(self.g, np.asarray(Mdot, dtype=complex) @ self.g)
        denom = self.d[None, :] - self.d[:, None]  # denom[j,i] = d_i - d_j
        W = np.zeros_like(B)
        m = self._same_block
        W[m] = B[m] / denom[m]
        wdiag = np.zeros(self.N, dtype=complex)
        for i in range(self.N):
            # v_i[pivot_i] == 1 along the path, so (g W)[pivot_i, i] == 0
            wdiag[i] = -np.dot(self.g[self.pivots[i], :], W[:, i])
        return wdiag


class CartanWalk:
    """Walks a block-diagonalizable analytic matrix path M(t), tracking the
    pivot-gauge eigendecomposition and the cumulative Cartan quadrature
    Lambda(t), so that k(t) = g(t) exp(-Lambda(t)) satisfies Pi_h(k^-1 k') = 0.

    With ``log0`` given, additionally tracks a continuous entrywise logarithm
    of the eigenvalue path d(t) (branch unwrapping for group-valued paths).
    Near-collisions halve the substep (up to MAX_HALVINGS); a genuine
    eigenvalue collision raises BreakdownError with the located time.
    """

    def __init__(self, Mfun, Mdotfun, blocks, t0=0.0, log0=None):
        self.Mfun = Mfun
        self.Mdotfun = Mdotfun
        self.blocks = [tuple(b) for b in blocks]
        self.path = PivotPath(self.blocks, Mfun(t0))
        self.t = t0
        self.Lam = np.zeros(self.path.N, dtype=complex)
        self._logdet = 0.0 + 0.0j
        self._det_prev = 1.0 + 0.0j
        self.min_gap = np.inf
        self.logd = None if log0 is None else np.asarray(log0, dtype=complex).copy()

    # -- bookkeeping ---------------------------------------------------------
    def _snapshot(self):
        return (self.path.g.copy(), self.path.d.copy(), self.path.pivots.copy(),
                self._logdet, self._det_prev, self.min_gap,
                None if self.logd is None else self.logd.copy())

    def _restore(self, s):
        (self.path.g, self.path.d, self.path.pivots,
         self._logdet, self._det_prev, self.min_gap) = (
            s[0].copy(), s[1].copy(), s[2].copy(), s[3], s[4], s[5])
        self.logd = None if s[6] is None else s[6].copy()

    def _breakdown(self, t_lo, t_hi):
        t_star, collided = locate_collision(self.Mfun, self.blocks, t_lo, t_hi)
        if collided:
            vals, _ = _eig_blocks(self.Mfun(t_star), [list(b) for b in self.blocks])
            gap = block_gap(vals, self.blocks)
            raise BreakdownError(
                f"factorization breakdown: eigenvalue collision at "
                f"t = {t_star:.9g} (gap {gap:.3e})", time=t_star, gap=gap)
        return False

    def _disc(self):
        D = 1.0 + 0.0j
        for blk in self.blocks:
            if len(blk) < 2:
                continue
            vals = self.path.d[list(blk)]
            for i in range(len(vals)):
                for j in range(i + 1, len(vals)):
                    D *= (vals[i] - vals[j]) ** 2
        return D

    def _node(self, t):
        """Advance to t; returns (gap, cartan velocity, branch-jump flag)."""
        d_prev = self.path.d.copy()
        gap = self.path.advance(self.Mfun(t))
        jump = False
        if self.logd is not None:
            ratio = self.path.d / d_prev
            if np.abs(ratio).min() < 1e-300:
                raise DomainError("vanishing diagonal entry on the group path")
            steps = np.log(ratio)
            if np.abs(steps.imag).max() > LOG_JUMP:
                jump = True
            else:
                self.logd = self.logd + steps
        w = self.path.cartan_velocity(self.Mdotfun(t))
        det = np.linalg.det(self.path.g)
        self._logdet += np.log(det / self._det_prev)
        self._det_prev = det
        self.min_gap = min(self.min_gap, gap)
        return gap, w, jump

    # -- the walk -------------------------------------------------------------
    def advance_interval(self, t_next, fine):
        """Walk [self.t, t_next] with `fine` substeps, halving the substep when
        the eigen gap drops below GAP_REFINE or the branch log jumps; raises
        BreakdownError at a genuine collision, GridError if branch tracking
        cannot be stabilized."""
        t_start = self.t
        saved = self._snapshot()
        n = max(2, fine + fine % 2)
        for attempt in range(MAX_HALVINGS + 1):
            ts = np.linspace(t_start, t_next, n + 1)
            hstep = ts[1] - ts[0]
            ws = [self.path.cartan_velocity(self.Mdotfun(t_start))]
            D_prev = self._disc()
            t_prev = t_start
            trouble = False
            jumped = False
            for t in ts[1:]:
                gap, w, jump = self._node(t)
                ws.append(w)
                if gap < GAP_COLLIDE:
                    self._breakdown(t_start, t_next)
                D_now = self._disc()
                if D_prev != 0 and abs(np.angle(D_now / D_prev)) > 2.0:
                    # discriminant phase flip: collision candidate in (t_prev, t)
                    self._breakdown(t_prev, t)
                D_prev, t_prev = D_now, t
                if gap < GAP_REFINE or jump:
                    trouble = True
                    jumped = jump
                    if attempt < MAX_HALVINGS:
                        break
            if not trouble or attempt == MAX_HALVINGS:
                if trouble:
                    self._breakdown(t_start, t_next)
                    if jumped:
                        raise GridError(
                            f"branch tracking failed in ({t_start:.6g}, "
                            f"{t_next:.6g}) after {MAX_HALVINGS} halvings")
                self.Lam = self.Lam + simpson_increment(ws, hstep)
                self.t = t_next
                return
            self._restore(saved)
            n *= 2

    def factors(self):
        """(g_det1, d, h, k) at the current node; k = g*h is gauge-invariant and
        g is presented det-normalized with a continuously tracked N-th root."""
        s = np.exp(-self._logdet / self.path.N)
        g_pres = s * self.path.g
        h_raw = np.exp(-self.Lam)
        h_pres = h_raw / s
        k = self.path.g * h_raw[None, :]
        return g_pres, self.path.d.copy(), h_pres, k
