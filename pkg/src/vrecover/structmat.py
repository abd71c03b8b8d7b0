"""Measurement sample sets, structured coefficient matrices, and rank tools.

The four system matrices share one convention: every unknown block is stored
in descending powers of z, so a matrix row times the stacked coefficient
vector reproduces the defining identity at that sample point. Tests pin this
convention by checking that forward-simulated coefficient stacks lie in the
null spaces.
"""

from dataclasses import dataclass, field

import numpy as np

from .config import load_tolerances
from .errors import InvalidInputError, RankDeficiencyError

HARMONIC = "ShiftedHarmonic"
ARBITRARY = "Arbitrary"

_HARMONIC_TOL = 1e-12


@dataclass(frozen=True)
class SampleSet:
    """Measurement points z, tagged with how they were generated.

    ShiftedHarmonic sample sets are rotated nth roots of unity: all points
    satisfy z_j**n == e^{i*gamma}, which is what makes the compact harmonic
    systems applicable.
    """

    z: tuple[complex, ...]
    mode: str = ARBITRARY
    gamma: float | None = None
    n: int | None = None

    def __init__(self, z, mode: str = ARBITRARY, gamma=None, n=None):
        object.__setattr__(self, "z", tuple(complex(v) for v in z))
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "gamma", None if gamma is None else float(gamma))
        object.__setattr__(self, "n", None if n is None else int(n))
        if mode not in (HARMONIC, ARBITRARY):
            raise InvalidInputError(f"unknown sample mode {mode!r}")
        if mode == HARMONIC:
            if self.gamma is None or self.n is None:
                raise InvalidInputError("shifted-harmonic samples need gamma and n")
            if len(self.z) > self.n:
                raise InvalidInputError("at most n shifted-harmonic samples exist")
            zs = np.array(self.z)
            if np.any(np.abs(np.abs(zs) - 1.0) > _HARMONIC_TOL):
                raise InvalidInputError("shifted-harmonic samples must lie on the circle")
            if np.any(np.abs(zs**self.n - np.exp(1j * self.gamma)) > _HARMONIC_TOL * 10):
                raise InvalidInputError("samples do not share the common nth power")

    def __len__(self) -> int:
        return len(self.z)

    @property
    def is_harmonic(self) -> bool:
        return self.mode == HARMONIC

    def array(self) -> np.ndarray:
        return np.array(self.z, dtype=complex)


def _as_samples(z) -> SampleSet:
    if isinstance(z, SampleSet):
        return z
    return SampleSet(z)


def vandermonde(z, n: int) -> np.ndarray:
    """n x m matrix with entry (r, c) = z_c**r; row 0 is all ones."""
    if n < 1:
        raise InvalidInputError("vandermonde needs at least one row")
    pts = z.array() if isinstance(z, SampleSet) else np.asarray(z, dtype=complex)
    return np.vstack([pts**r for r in range(n)])


def shifted_harmonics(n: int, m: int, gamma: float) -> SampleSet:
    """The first m rotated nth roots of unity, z_j = e^{i(2*pi*j + gamma)/n}."""
    if not 1 <= m <= n:
        raise InvalidInputError(f"need 1 <= m <= n, got m={m}, n={n}")
    j = np.arange(m)
    z = np.exp(1j * (2 * np.pi * j + gamma) / n)
    return SampleSet(z, mode=HARMONIC, gamma=gamma, n=n)


def three_group_samples(n: int, s: int, gamma: float, omega: float, phi: float) -> SampleSet:
    """Three stacked shifted-harmonic groups of sizes 4s-1, 2s-1, 2s-1.

    The rotation angles must be pairwise compatible: e^{i*omega} != e^{i*gamma},
    e^{i*phi} != e^{i*gamma}, and the printed cross condition below. Returns an
    Arbitrary-mode sample set (the groups have different nth powers).
    """
    eg, eo, ep = np.exp(1j * gamma), np.exp(1j * omega), np.exp(1j * phi)
    if abs(eo - eg) < 1e-9 or abs(ep - eg) < 1e-9:
        raise InvalidInputError("group rotations collide with gamma")
    if abs((ep - eg) * (np.conj(eo) - np.conj(eg)) - (np.conj(ep) - np.conj(eg))) < 1e-9:
        raise InvalidInputError("third-group cross condition violated")
    if n < 4 * s - 1:
        raise InvalidInputError("need n >= 4s-1 for the leading group")
    parts = [
        shifted_harmonics(n, 4 * s - 1, gamma).array(),
        shifted_harmonics(n, 2 * s - 1, omega).array(),
        shifted_harmonics(n, 2 * s - 1, phi).array(),
    ]
    return SampleSet(np.concatenate(parts), mode=ARBITRARY)


# ----------------------------------------------------------------------------
# system matrices
# ----------------------------------------------------------------------------

def _check_lengths(z: np.ndarray, y: np.ndarray):
    if len(z) != len(y):
        raise InvalidInputError(f"{len(z)} samples but {len(y)} measurements")


def build_A(z, y, n: int, s: int) -> np.ndarray:
    """Phase-aware system for arbitrary samples, m x (3s+1).

    Row j is [y_j z_j^s ... y_j, -z_j^{n+s-1} ... -z_j^n, -z_j^{s-1} ... -1];
    the unknown stack is [v; u_hat; u_tilde], each block descending.
    """
    samples = _as_samples(z)
    zz = samples.array()
    y = np.asarray(y, dtype=complex)
    _check_lengths(zz, y)
    if n < 2 * s:
        raise InvalidInputError("need n >= 2s")
    cols = [y * zz**k for k in range(s, -1, -1)]
    cols += [-(zz ** (n + k)) for k in range(s - 1, -1, -1)]
    cols += [-(zz**k) for k in range(s - 1, -1, -1)]
    return np.column_stack(cols)


def build_B(z, y, s: int) -> np.ndarray:
    """Phase-aware system for shifted-harmonic samples, m x (2s+1).

    Row j is [y_j z_j^s ... y_j, -z_j^{s-1} ... -1]; the unknown stack is
    [v; q] with q the combined numerator block, both descending.
    """
    samples = _as_samples(z)
    if not samples.is_harmonic:
        raise InvalidInputError("build_B needs shifted-harmonic samples")
    zz = samples.array()
    y = np.asarray(y, dtype=complex)
    _check_lengths(zz, y)
    cols = [y * zz**k for k in range(s, -1, -1)]
    cols += [-(zz**k) for k in range(s - 1, -1, -1)]
    return np.column_stack(cols)


def _check_phaseless_inputs(zz: np.ndarray, y: np.ndarray):
    if np.any(np.abs(np.abs(zz) - 1.0) > 1e-9):
        raise InvalidInputError("phaseless samples must lie on the unit circle")
    yscale = max(1.0, float(np.max(np.abs(y))) if len(y) else 1.0)
    if np.any(y.real < 0) or np.any(np.abs(y.imag) > 1e-12 * yscale):
        raise InvalidInputError("phaseless measurements must be nonnegative reals")


def build_G(z, y, n: int, s: int) -> np.ndarray:
    """Phaseless system for general circle samples, m x (8s-2).

    Block layout [B | y | fliplr(conj(B)) | -C | -1 | -fliplr(conj(C))] with
    B_j = [y_j z_j^s ... y_j z_j] and C_j = [z^{n+s-1} ... z^{n-s+1}, z^{s-1} ... z].
    The unknown stack is [l_hat; l_tilde; l; conj-Laurent(l_tilde)], blocks in
    descending powers.
    """
    samples = _as_samples(z)
    zz = samples.array()
    y = np.asarray(y, dtype=complex)
    _check_lengths(zz, y)
    _check_phaseless_inputs(zz, y)
    y = y.real.astype(complex)
    if n < 4 * s - 1:
        raise InvalidInputError("need n >= 4s-1")
    m = len(zz)
    B = np.column_stack([y * zz**k for k in range(s, 0, -1)])
    C_high = np.column_stack([zz ** (n + k) for k in range(s - 1, -s, -1)])
    C_low = (
        np.column_stack([zz**k for k in range(s - 1, 0, -1)])
        if s > 1
        else np.zeros((m, 0), dtype=complex)
    )
    C = np.hstack([C_high, C_low])
    return np.hstack(
        [
            B,
            y[:, None],
            np.fliplr(np.conj(B)),
            -C,
            -np.ones((m, 1), dtype=complex),
            -np.fliplr(np.conj(C)),
        ]
    )


def build_Gtilde(z, y, s: int) -> np.ndarray:
    """Phaseless system for shifted-harmonic samples, m x 4s.

    Block layout [B | y | fliplr(conj(B)) | -C~ | -1 | -fliplr(conj(C~))] with
    C~_j = [z^{s-1} ... z]. The unknown stack is [l_hat; p] where p combines
    the three numerator Laurent blocks through the common nth power of z.
    """
    samples = _as_samples(z)
    if not samples.is_harmonic:
        raise InvalidInputError("build_Gtilde needs shifted-harmonic samples")
    zz = samples.array()
    y = np.asarray(y, dtype=complex)
    _check_lengths(zz, y)
    _check_phaseless_inputs(zz, y)
    y = y.real.astype(complex)
    m = len(zz)
    B = np.column_stack([y * zz**k for k in range(s, 0, -1)])
    Ct = (
        np.column_stack([zz**k for k in range(s - 1, 0, -1)])
        if s > 1
        else np.zeros((m, 0), dtype=complex)
    )
    return np.hstack(
        [
            B,
            y[:, None],
            np.fliplr(np.conj(B)),
            -Ct,
            -np.ones((m, 1), dtype=complex),
            -np.fliplr(np.conj(Ct)),
        ]
    )


# ----------------------------------------------------------------------------
# rank tools
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class NullSpaceResult:
    dimension: int
    basis: np.ndarray  # columns are orthonormal null vectors, shape (cols, dimension)
    singular_values: np.ndarray
    warnings: tuple[str, ...] = field(default=())


def null_space(M: np.ndarray, rank_rel_tol: float | None = None) -> NullSpaceResult:
    """Right null space of M with an auditable rank decision.

    A singular value counts as zero when it is at most
    ``rank_rel_tol * sigma_max * max(rows, cols)``. When the kept/discarded
    gap is narrower than the configured ratio, a conditioning warning is
    attached instead of failing.
    """
    cfg = load_tolerances()
    if rank_rel_tol is None:
        rank_rel_tol = cfg.rank_rel_tol
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        raise InvalidInputError("null_space of an empty matrix")
    _, sv, vh = np.linalg.svd(M)
    ncols = M.shape[1]
    sv_full = np.concatenate([sv, np.zeros(ncols - len(sv))]) if ncols > len(sv) else sv
    smax = sv_full[0] if len(sv_full) else 0.0
    threshold = rank_rel_tol * smax * max(M.shape)
    dimension = int(np.sum(sv_full <= threshold))
    rank = ncols - dimension
    warnings: list[str] = []
    if 0 < rank < ncols:
        kept = sv_full[rank - 1]
        discarded = sv_full[rank]
        if discarded > 0 and kept / discarded < cfg.gap_ratio:
            warnings.append(
                f"conditioning-warning: singular value gap {kept / discarded:.2e} "
                f"below {cfg.gap_ratio:.0e} at rank {rank}"
            )
        elif discarded == 0 and kept <= threshold * cfg.gap_ratio:
            warnings.append("conditioning-warning: rank decision near threshold")
    basis = vh[rank:].conj().T if dimension else np.zeros((ncols, 0), dtype=complex)
    return NullSpaceResult(dimension, basis, sv_full, tuple(warnings))


def refine_null_vector(M: np.ndarray, w: np.ndarray, steps: int = 2) -> np.ndarray:
    """Iteratively refine an approximate null vector of M.

    The SVD delivers the null vector with error about eps * smax / snext,
    which degrades badly when the smallest nonzero singular value is tiny.
    Computing the residual in extended precision and projecting it back
    through the pseudo-inverse removes the dominant error term.
    """
    M = np.asarray(M, dtype=complex)
    w = np.asarray(w, dtype=complex)
    # keep directions down to the tightened rank threshold; anything below
    # is treated as null and must not be "corrected"
    pinv = np.linalg.pinv(M, rcond=1e-12)
    Mq = M.astype(np.clongdouble)
    wq = w.astype(np.clongdouble)
    for _ in range(steps):
        residual = np.asarray(Mq @ wq, dtype=np.clongdouble)
        delta = pinv @ residual.astype(complex)
        wq = wq - delta.astype(np.clongdouble)
        norm = np.linalg.norm(wq.astype(complex))
        if norm == 0:
            return w
        wq = wq / norm
    return wq.astype(complex)


def pinv_solve(M: np.ndarray, y) -> tuple[np.ndarray, float]:
    """Least-squares solve requiring full column rank; returns (x, residual)."""
    cfg = load_tolerances()
    M = np.asarray(M, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if M.ndim != 2 or M.shape[0] != len(y):
        raise InvalidInputError("pinv_solve dimension mismatch")
    sv = np.linalg.svd(M, compute_uv=False)
    if len(sv) < M.shape[1] or sv[-1] <= cfg.rank_rel_tol * sv[0] * max(M.shape):
        raise RankDeficiencyError("matrix does not have full column rank")
    x, *_ = np.linalg.lstsq(M, y, rcond=None)
    residual = float(np.linalg.norm(M @ x - y))
    return x, residual
