"""Phase-less recovery: supports, magnitudes, and candidate enumeration.

Measurements are y_j = |f(z_j)|^2 for the same rational f as in the
phase-aware problem, so each candidate coefficient vector can only be
identified up to a global phase, and generally not uniquely: shifted
harmonic supports admit 2^(S-1) solutions, everything else exactly two,
related by an explicit conjugation transform. The pipeline recovers the
support from the null space of a structured system, splits the recovered
squared-modulus data into the two numerator halves, enumerates the
solution set, and optionally disambiguates with one extra measurement.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .config import Tolerances, load_tolerances
from .cpoly import (
    LaurentPoly,
    hermitian_defect,
    laurent_add,
    laurent_conj,
    laurent_eval,
    laurent_mul,
    laurent_scale,
    laurent_sqrt,
    laurent_to_poly,
    pair_conjugate_reciprocal,
    poly_eval,
    poly_roots,
    t_polynomial,
)
from .errors import (
    AmbiguousDisambiguationError,
    AmbiguousSupportError,
    DegenerateInstanceError,
    DegenerateSupportError,
    GridCollisionError,
    InconsistentSolutionError,
    InvalidInputError,
    MatchingFailureError,
    ModelMismatchError,
    NumericalFailureError,
    PairingFailureError,
)
from .recover_phase import _canonical_order, _descend
from .structmat import SampleSet, build_G, build_Gtilde, vandermonde

BRANCH_HARMONIC = "Harmonic2pow"
BRANCH_DUAL = "DualPair"
BRANCH_DEGENERATE = "DegenerateHarmonicTheta"


@dataclass(frozen=True)
class PhaselessInstance:
    """Squared-modulus measurements y at circle samples of an order-n model."""

    n: int
    s_max: int
    y: tuple[float, ...]
    samples: SampleSet
    extra_row: tuple | None = None
    grid: tuple[complex, ...] | None = None

    def __init__(self, n, s_max, y, samples, extra_row=None, grid=None):
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "s_max", int(s_max))
        yy = np.asarray(y)
        if np.iscomplexobj(yy):
            scale = max(1.0, float(np.max(np.abs(yy))) if yy.size else 1.0)
            if np.any(np.abs(yy.imag) > 1e-12 * scale):
                raise InvalidInputError("phaseless measurements must be real")
            yy = yy.real
        object.__setattr__(self, "y", tuple(float(v) for v in yy))
        object.__setattr__(self, "samples", samples)
        if extra_row is not None:
            a, y_m = extra_row
            extra_row = (tuple(complex(v) for v in a), float(y_m))
            if extra_row[1] < 0:
                raise InvalidInputError("extra measurement must be nonnegative")
        object.__setattr__(self, "extra_row", extra_row)
        object.__setattr__(
            self, "grid", None if grid is None else tuple(complex(v) for v in grid)
        )
        if self.s_max < 1:
            raise InvalidInputError("s_max must be at least 1")
        if self.n < 4 * self.s_max - 1:
            raise InvalidInputError(
                f"n={self.n} below the phaseless bound 4*s-1={4 * self.s_max - 1}"
            )
        if len(samples) != len(self.y):
            raise InvalidInputError("sample count does not match measurement count")
        if min(self.y, default=0.0) < 0:
            raise InvalidInputError("phaseless measurements must be nonnegative")
        zz = samples.array()
        if np.any(np.abs(np.abs(zz) - 1.0) > 1e-9):
            raise InvalidInputError("phaseless samples must lie on the unit circle")
        if samples.is_harmonic and samples.n != self.n:
            raise InvalidInputError("harmonic samples must share the model order n")

    @property
    def m(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class PhaselessResult:
    theta: tuple[complex, ...]
    S: int
    magnitude_profile: tuple[float, ...]
    candidates: tuple[tuple[complex, ...], ...]
    selected: int | None
    branch: str
    diagnostics: tuple[dict, ...] = ()

    @property
    def warnings(self) -> tuple[str, ...]:
        out = []
        for entry in self.diagnostics:
            out.extend(entry.get("warnings", ()))
        return tuple(out)


# ----------------------------------------------------------------------------
# null-vector post-processing shared by both support stages
# ----------------------------------------------------------------------------

def _phase_normalize(w: np.ndarray, S: int) -> np.ndarray:
    """Rotate the null vector so the central |v|^2 coefficient is real positive.

    Any numerical null-space basis carries an arbitrary unit factor; the true
    stack is real-scalar times the coefficient data, so fixing the phase of
    the z^0 coefficient of the |v|^2 block (a sum of squared moduli) removes it.
    """
    center = w[S]
    if abs(center) <= 1e-12 * float(np.max(np.abs(w))):
        raise ModelMismatchError("central coefficient of the |v|^2 block vanished")
    return w * np.exp(-1j * np.angle(center))


def _symmetrized(block: LaurentPoly, name: str, tol: Tolerances) -> LaurentPoly:
    defect = hermitian_defect(block)
    if defect > tol.pair_tol:
        raise ModelMismatchError(f"{name} block breaks Hermitian structure ({defect:.3e})")
    return laurent_scale(laurent_add(block, laurent_conj(block)), 0.5)


def _theta_from_lhat(lhat: LaurentPoly, tol: Tolerances) -> np.ndarray:
    """Support from the |v|^2 block: roots come in doubled conjugate points."""
    p, _ = laurent_to_poly(lhat)
    roots = list(poly_roots(p, tol.tol_root))
    means = []
    while roots:
        r = roots.pop()
        if not roots:
            raise ModelMismatchError("|v|^2 block has an odd root count")
        dists = [abs(r - other) / max(1.0, abs(r)) for other in roots]
        jmin = int(np.argmin(dists))
        # a doubled root split by coefficient noise must still sit much
        # closer to its partner than to any other cluster
        rest = [d for k, d in enumerate(dists) if k != jmin]
        allow = max(tol.cluster_tol, 0.05 * min(rest)) if rest else tol.cluster_tol
        if dists[jmin] > allow:
            raise ModelMismatchError(
                f"|v|^2 roots do not form doubled pairs (gap {dists[jmin]:.3e})"
            )
        means.append((r + roots.pop(jmin)) / 2.0)
    theta = np.conj(np.array(means))
    off = np.max(np.abs(np.abs(theta) - 1.0))
    if off > 1e-3:
        raise ModelMismatchError(f"recovered support leaves the unit circle by {off:.3e}")
    theta = theta / np.abs(theta)
    for i in range(len(theta)):
        for j in range(i):
            if abs(theta[i] - theta[j]) < 1e-9:
                raise DegenerateSupportError("recovered support points collide")
    return theta[_canonical_order(theta)]


def _support_harmonic(inst: PhaselessInstance, tol: Tolerances):
    if not inst.samples.is_harmonic:
        raise InvalidInputError("harmonic support recovery needs shifted-harmonic samples")
    if inst.m < 4 * inst.s_max - 1:
        raise InvalidInputError("harmonic branch needs m >= 4*s-1 measurements")
    y = np.array(inst.y, dtype=float)
    builder = lambda s: build_Gtilde(inst.samples, y, s)
    S, w, diagnostics = _descend(builder, inst.s_max, tol)
    w = _phase_normalize(w, S)
    lhat = _symmetrized(LaurentPoly(w[: 2 * S + 1][::-1], -S), "|v|^2", tol)
    p = _symmetrized(LaurentPoly(w[2 * S + 1 : 4 * S][::-1], -(S - 1)), "numerator", tol)
    w_sym = np.concatenate([_descending(lhat, S), _descending(p, S - 1)])
    theta = _theta_from_lhat(lhat, tol)
    return theta, w_sym, S, diagnostics


def _descending(block: LaurentPoly, half_span: int) -> np.ndarray:
    """Dense descending coefficients z^half_span .. z^-half_span of `block`."""
    out = np.zeros(2 * half_span + 1, dtype=complex)
    for offset, c in enumerate(block.coeffs):
        k = block.min_degree + offset
        out[half_span - k] = c
    return out


def recover_support_harmonic(inst: PhaselessInstance, tol: Tolerances | None = None):
    """Support recovery for shifted-harmonic samples: (theta, null vector, S)."""
    if tol is None:
        tol = load_tolerances()
    theta, w_sym, S, _ = _support_harmonic(inst, tol)
    return theta, w_sym, S


# ----------------------------------------------------------------------------
# magnitude profiles
# ----------------------------------------------------------------------------

def _positivity_check(values: list[float], tol: Tolerances) -> tuple[float, ...]:
    scale = max((abs(v) for v in values), default=0.0)
    floor = -tol.mag_tol * scale
    for v in values:
        if v < floor:
            raise NumericalFailureError(f"magnitude {v:.3e} negative beyond tolerance")
    return tuple(max(v, 0.0) for v in values)


def magnitudes_harmonic(theta, q_block: LaurentPoly, gamma: float, n: int,
                        tol: Tolerances | None = None) -> tuple[float, ...]:
    """Squared magnitudes c*|g_k|^2, known up to one positive scalar c.

    Evaluates the combined numerator block at conj(theta_k) and divides by
    |t_k(conj(theta_k)) * (e^{i*gamma} theta_k^n - 1)|^2.
    """
    if tol is None:
        tol = load_tolerances()
    theta = np.asarray(theta, dtype=complex)
    out = []
    for k in range(len(theta)):
        point = np.conj(theta[k])
        denom = poly_eval(t_polynomial(theta, k), point) * (
            np.exp(1j * gamma) * theta[k] ** n - 1.0
        )
        if abs(denom) < 1e-12:
            raise DegenerateSupportError("magnitude denominator vanished")
        out.append(float(laurent_eval(q_block, point).real) / abs(denom) ** 2)
    return _positivity_check(out, tol)


def magnitudes_general(theta, L: LaurentPoly, tol: Tolerances | None = None) -> tuple[float, ...]:
    """Squared magnitudes from the |u_hat|^2 + |u_tilde|^2 block: L(conj th)/2|t_k|^2."""
    if tol is None:
        tol = load_tolerances()
    theta = np.asarray(theta, dtype=complex)
    out = []
    for k in range(len(theta)):
        point = np.conj(theta[k])
        t_val = poly_eval(t_polynomial(theta, k), point)
        if abs(t_val) < 1e-12:
            raise DegenerateSupportError("magnitude denominator vanished")
        out.append(float(laurent_eval(L, point).real) / (2.0 * abs(t_val) ** 2))
    return _positivity_check(out, tol)


# ----------------------------------------------------------------------------
# candidate enumeration
# ----------------------------------------------------------------------------

def _normalize_candidate(g_raw: np.ndarray, rows: np.ndarray, y: np.ndarray,
                         tol: Tolerances) -> np.ndarray:
    """Scale a direction so |rows @ g|^2 fits y, then canonicalize the phase."""
    pred = np.abs(rows @ g_raw) ** 2
    denom = float(pred @ pred)
    if not np.isfinite(denom) or denom <= 0:
        raise DegenerateInstanceError("candidate direction predicts zero measurements")
    alpha2 = float(y @ pred) / denom
    if alpha2 <= 0:
        raise DegenerateInstanceError("candidate scale came out nonpositive")
    g = g_raw * np.sqrt(alpha2)
    defect = float(np.max(np.abs(alpha2 * pred - y)))
    if defect > tol.forward_tol * max(float(np.max(y)), 1e-300):
        raise InconsistentSolutionError(
            f"candidate fails the forward check by {defect:.3e}"
        )
    mags = np.abs(g)
    k0 = int(np.argmax(mags > 1e-12 * max(float(np.max(mags)), 1e-300)))
    return g * np.exp(-1j * np.angle(g[k0]))


def _dedup_and_sort(cands: list[np.ndarray], tol: Tolerances) -> list[np.ndarray]:
    kept: list[np.ndarray] = []
    for c in cands:
        scale = max(1.0, float(np.max(np.abs(c))))
        if not any(
            len(c) == len(d) and np.max(np.abs(c - d)) <= tol.dedup_tol * scale
            for d in kept
        ):
            kept.append(c)
    kept.sort(key=lambda c: tuple((float(v.real), float(v.imag)) for v in c))
    return kept


def _enumerate_from_pairs(theta: np.ndarray, pairs, row_weight: np.ndarray,
                          rows: np.ndarray, y: np.ndarray, tol: Tolerances):
    """One candidate per selection of a representative from each root pair."""
    S = len(theta)
    t_polys = [t_polynomial(theta, l) for l in range(S)]
    cands = []
    for selection in itertools.product(*pairs) if pairs else [()]:
        if S == 1:
            g_raw = np.ones(1, dtype=complex)
        else:
            M = np.array(
                [
                    [poly_eval(t_polys[l], q) * row_weight[l] for l in range(S)]
                    for q in selection
                ],
                dtype=complex,
            )
            sig = np.linalg.svd(M, compute_uv=False)
            if sig[-1] <= tol.rank_rel_tol * sig[0] * max(M.shape):
                raise DegenerateInstanceError("selection system rank-deficient")
            _, _, Vh = np.linalg.svd(M)
            g_raw = np.conj(Vh[-1])
        cands.append(_normalize_candidate(g_raw, rows, y, tol))
    return _dedup_and_sort(cands, tol)


def enumerate_candidates_harmonic(theta, q_block: LaurentPoly, gamma: float, n: int,
                                  z, y, tol: Tolerances | None = None):
    """All 2^(S-1) coefficient vectors consistent with harmonic phaseless data.

    The roots of the combined numerator block pair as (r, 1/conj(r)); each
    choice of one representative per pair pins S-1 linear conditions on g,
    whose null direction (scaled and phase-canonicalized) is one candidate.
    """
    if tol is None:
        tol = load_tolerances()
    theta = np.asarray(theta, dtype=complex)
    y = np.asarray(y, dtype=float)
    S = len(theta)
    rows = vandermonde(z, n).T @ vandermonde(theta, n)
    row_weight = np.exp(1j * gamma) * theta**n - 1.0
    if np.any(np.abs(row_weight) < 1e-12):
        raise DegenerateInstanceError("a support power collides with the rotation")
    if S == 1:
        pairs = []
    else:
        p, _ = laurent_to_poly(q_block)
        roots = poly_roots(p, tol.tol_root)
        pairs = pair_conjugate_reciprocal(roots, tol.pair_tol)
        if len(pairs) != S - 1:
            raise PairingFailureError(
                f"expected {S - 1} root pairs, found {len(pairs)}"
            )
    return _enumerate_from_pairs(theta, pairs, row_weight, rows, y, tol)


def dual_transform(g, theta, n: int) -> np.ndarray:
    """The conjugate solution sharing |g| and the phaseless measurements."""
    g = np.asarray(g, dtype=complex)
    theta = np.asarray(theta, dtype=complex)
    total = np.prod(np.conj(theta))
    return np.conj(g) * theta ** (-n) * (total / np.conj(theta))


# ----------------------------------------------------------------------------
# general (non-harmonic sample) pipeline
# ----------------------------------------------------------------------------

def _general_stage(inst: PhaselessInstance, tol: Tolerances):
    if inst.m < 8 * inst.s_max - 3:
        raise InvalidInputError("general branch needs m >= 8*s-3 measurements")
    y = np.array(inst.y, dtype=float)
    builder = lambda s: build_G(inst.samples, y, inst.n, s)
    S, w, diagnostics = _descend(builder, inst.s_max, tol)
    w = _phase_normalize(w, S)
    lhat_raw = LaurentPoly(w[: 2 * S + 1][::-1], -S)
    lt_raw = LaurentPoly(w[2 * S + 1 : 4 * S][::-1], -(S - 1))
    l_raw = LaurentPoly(w[4 * S : 6 * S - 1][::-1], -(S - 1))
    lt_conj_raw = LaurentPoly(w[6 * S - 1 : 8 * S - 2][::-1], -(S - 1))
    lhat = _symmetrized(lhat_raw, "|v|^2", tol)
    L = _symmetrized(l_raw, "modulus-sum", tol)
    cross = laurent_add(lt_conj_raw, laurent_scale(laurent_conj(lt_raw), -1.0))
    if not lt_raw.is_zero():
        cross_defect = 0.0 if cross.is_zero() else float(
            np.linalg.norm(cross.array()) / np.linalg.norm(lt_raw.array())
        )
        if cross_defect > tol.pair_tol:
            raise ModelMismatchError(
                f"cross-term blocks are not conjugate ({cross_defect:.3e})"
            )
    L_tilde = laurent_scale(laurent_add(lt_raw, laurent_conj(lt_conj_raw)), 0.5)
    theta = _theta_from_lhat(lhat, tol)
    return theta, L, L_tilde, lhat, S, diagnostics


def recover_general(inst: PhaselessInstance, tol: Tolerances | None = None):
    """Support and squared-modulus blocks from general circle samples."""
    if tol is None:
        tol = load_tolerances()
    theta, L, L_tilde, L_hat, S, _ = _general_stage(inst, tol)
    return theta, L, L_tilde, L_hat, S


def split_and_enumerate_general(L: LaurentPoly, L_tilde: LaurentPoly, theta, n: int,
                                z, y, tol: Tolerances | None = None):
    """Candidate set from the squared-modulus blocks of the general pipeline.

    When the discriminant L^2 - 4|L_tilde|^2 is nonzero the numerator halves
    separate: the roots of Q = (L + sqrt(disc))/2 that also occur among the
    roots of conj-Laurent(L_tilde) pin the linear system for one candidate,
    and its dual is the only other solution. A vanishing discriminant means
    all support powers coincide and the solution set is the harmonic-style
    2^(S-1) family built from root pairs of L.
    """
    if tol is None:
        tol = load_tolerances()
    theta = np.asarray(theta, dtype=complex)
    y = np.asarray(y, dtype=float)
    S = len(theta)
    rows = vandermonde(z, n).T @ vandermonde(theta, n)
    unit_weight = np.ones(S, dtype=complex)
    L2 = laurent_mul(L, L)
    K = laurent_mul(L_tilde, laurent_conj(L_tilde))
    disc = laurent_add(L2, laurent_scale(K, -4.0))
    l2_norm = float(np.linalg.norm(L2.array())) if not L2.is_zero() else 0.0
    disc_norm = float(np.linalg.norm(disc.array())) if not disc.is_zero() else 0.0
    if disc_norm <= tol.degeneracy_tol * l2_norm:
        if S == 1:
            pairs = []
        else:
            p, _ = laurent_to_poly(L)
            roots = poly_roots(p, tol.tol_root)
            pairs = pair_conjugate_reciprocal(roots, tol.pair_tol)
            if len(pairs) != S - 1:
                raise PairingFailureError(
                    f"expected {S - 1} root pairs, found {len(pairs)}"
                )
        cands = _enumerate_from_pairs(theta, pairs, unit_weight, rows, y, tol)
        return cands, BRANCH_DEGENERATE
    if L_tilde.is_zero():
        raise MatchingFailureError("cross term vanished on a non-degenerate instance")
    M_sqrt = laurent_sqrt(disc, tol.pair_tol)
    Q = laurent_scale(laurent_add(L, M_sqrt), 0.5)
    q_poly, _ = laurent_to_poly(Q)
    q_roots = poly_roots(q_poly, tol.tol_root)
    pool_poly, _ = laurent_to_poly(laurent_conj(L_tilde))
    pool = list(poly_roots(pool_poly, tol.tol_root))
    matched = _match_roots(pool, list(q_roots), tol)
    if len(matched) != S - 1:
        raise MatchingFailureError(
            f"matched {len(matched)} roots between the split and the cross term, "
            f"expected {S - 1}"
        )
    t_polys = [t_polynomial(theta, l) for l in range(S)]
    M = np.array(
        [[poly_eval(t_polys[l], q) for l in range(S)] for q in matched], dtype=complex
    )
    sig = np.linalg.svd(M, compute_uv=False)
    if sig[S - 2] <= tol.rank_rel_tol * sig[0] * max(M.shape):
        raise DegenerateInstanceError("selection system rank-deficient")
    _, _, Vh = np.linalg.svd(M)
    g_a = _normalize_candidate(np.conj(Vh[-1]), rows, y, tol)
    g_b = _normalize_candidate(dual_transform(g_a, theta, n), rows, y, tol)
    cands = _dedup_and_sort([g_a, g_b], tol)
    return cands, BRANCH_DUAL


def _match_roots(pool: list, targets: list, tol: Tolerances) -> list:
    """Greedy mutual matching; returns the pool values of matched pairs."""
    matched = []
    pool = list(pool)
    targets = list(targets)
    while pool and targets:
        best = None
        best_d = np.inf
        for i, pv in enumerate(pool):
            for j, tv in enumerate(targets):
                d = abs(pv - tv) / max(1.0, abs(tv))
                if d < best_d:
                    best_d, best = d, (i, j)
        if best is None or best_d > tol.pair_tol:
            break
        i, j = best
        matched.append(pool.pop(i))
        targets.pop(j)
    return matched


# ----------------------------------------------------------------------------
# end-to-end drivers
# ----------------------------------------------------------------------------

def recover_r5(inst: PhaselessInstance, tol: Tolerances | None = None) -> PhaselessResult:
    """Full phaseless pipeline: support, magnitudes, candidates, disambiguation.

    Shifted-harmonic sample sets route through the compact harmonic system
    (m >= 4s-1), anything else through the general one (m >= 8s-3). With no
    extra measurement the result is the full candidate set and `selected`
    stays None, which is the candidate-set problem on its own.
    """
    if tol is None:
        tol = load_tolerances()
    y = np.array(inst.y, dtype=float)
    if not np.any(y > 0):
        branch = BRANCH_HARMONIC if inst.samples.is_harmonic else BRANCH_DUAL
        return PhaselessResult((), 0, (), (), None, branch, ())
    if inst.samples.is_harmonic:
        theta, w, S, diagnostics = _support_harmonic(inst, tol)
        gamma = float(inst.samples.gamma)
        q_block = LaurentPoly(w[2 * S + 1 : 4 * S][::-1], -(S - 1))
        profile = magnitudes_harmonic(theta, q_block, gamma, inst.n, tol)
        cands = enumerate_candidates_harmonic(
            theta, q_block, gamma, inst.n, inst.samples, y, tol
        )
        branch = BRANCH_HARMONIC
    else:
        theta, L, L_tilde, _, S, diagnostics = _general_stage(inst, tol)
        profile = magnitudes_general(theta, L, tol)
        cands, branch = split_and_enumerate_general(
            L, L_tilde, theta, inst.n, inst.samples, y, tol
        )
    selected = None
    if inst.extra_row is not None and cands:
        a, y_m = inst.extra_row
        selected = disambiguate(cands, np.array(a), y_m, theta, tol)
    return PhaselessResult(
        tuple(theta),
        S,
        tuple(profile),
        tuple(tuple(c) for c in cands),
        selected,
        branch,
        tuple(diagnostics),
    )


def disambiguate(candidates, a, y_m: float, theta, tol: Tolerances | None = None) -> int:
    """Index of the candidate matching one extra squared-modulus measurement.

    `a` of length S applies to the coefficients directly; any other length is
    read as a measurement vector over the n model coordinates and contracted
    through the support. The winner must fit within tol and the runner-up
    must miss by at least 10x tol, otherwise the measurement was unlucky.
    """
    if tol is None:
        tol = load_tolerances()
    if not len(candidates):
        raise InvalidInputError("no candidates to disambiguate")
    if len(candidates) == 1:
        return 0
    theta = np.asarray(theta, dtype=complex)
    a = np.asarray(a, dtype=complex)
    if len(a) == len(theta):
        row = a
    else:
        row = vandermonde(theta, len(a)).T @ a
    preds = np.array(
        [abs(np.dot(row, np.asarray(c, dtype=complex))) ** 2 for c in candidates]
    )
    scale = max(float(y_m), float(np.max(preds)), 1e-300)
    resid = np.abs(preds - float(y_m)) / scale
    order = np.argsort(resid)
    if resid[order[0]] > tol.disambig_tol:
        raise AmbiguousDisambiguationError(
            f"best candidate misses the extra measurement by {resid[order[0]]:.3e}"
        )
    if resid[order[1]] < 10.0 * tol.disambig_tol:
        raise AmbiguousDisambiguationError(
            f"runner-up candidate is too close ({resid[order[1]]:.3e}); redraw the row"
        )
    return int(order[0])


def recover_r3(inst: PhaselessInstance, tol: Tolerances | None = None) -> np.ndarray:
    """Sparse vector from gridded phaseless measurements, up to nothing at all.

    The support lives on a known circle grid, so after the pipeline the
    recovered points snap to grid indices, the extra measurement row reduces
    to the support entries, and the winning candidate is placed into a dense
    vector whose first nonzero entry is rotated real positive.
    """
    if tol is None:
        tol = load_tolerances()
    if inst.grid is None:
        raise InvalidInputError("recover_r3 needs the instance grid")
    if inst.extra_row is None:
        raise InvalidInputError("recover_r3 needs the disambiguation measurement")
    grid = np.array(inst.grid, dtype=complex)
    if np.any(np.abs(np.abs(grid) - 1.0) > 1e-9):
        raise InvalidInputError("grid points must lie on the unit circle")
    sep = _min_pairwise(grid)
    if sep < 1e-12:
        raise InvalidInputError("grid points must be distinct")
    a, y_m = inst.extra_row
    a = np.array(a, dtype=complex)
    if len(a) != inst.n:
        raise InvalidInputError("the extra row of a gridded instance has length n")
    if inst.samples.is_harmonic:
        clash = np.abs(grid**inst.n - np.exp(-1j * inst.samples.gamma))
        if np.any(clash < 1e-9):
            raise InvalidInputError("grid power condition violated for these samples")
    y = np.array(inst.y, dtype=float)
    x = np.zeros(inst.n, dtype=complex)
    if not np.any(y > 0):
        return x
    base = PhaselessInstance(inst.n, inst.s_max, inst.y, inst.samples, None, inst.grid)
    res = recover_r5(base, tol)
    snap_tol = 0.5 * sep
    support = []
    for th in res.theta:
        dists = np.abs(th - grid)
        k = int(np.argmin(dists))
        if dists[k] > snap_tol:
            raise AmbiguousSupportError(
                f"support point {th:.6g} is {dists[k]:.3e} from the nearest grid point"
            )
        support.append(k)
    if len(set(support)) != len(support):
        raise GridCollisionError("two support points snapped to the same grid index")
    support = np.array(support)
    selected = disambiguate(res.candidates, a[support], y_m, grid[support], tol)
    x[support] = np.asarray(res.candidates[selected], dtype=complex)
    mags = np.abs(x[support])
    k0 = int(np.min(support[mags > 1e-12 * float(np.max(mags))]))
    x = x * np.exp(-1j * np.angle(x[k0]))
    predicted = np.abs(vandermonde(inst.samples, inst.n).T @ vandermonde(grid, inst.n) @ x) ** 2
    if np.max(np.abs(predicted - y)) > tol.forward_tol * float(np.max(y)):
        raise InconsistentSolutionError("snapped solution fails the forward check")
    return x


def _min_pairwise(values: np.ndarray) -> float:
    best = np.inf
    for i in range(len(values)):
        for j in range(i):
            best = min(best, abs(values[i] - values[j]))
    return float(best)
