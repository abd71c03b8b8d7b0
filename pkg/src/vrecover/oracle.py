"""Independent forward models, brute-force baselines, and instance draws.

Everything here certifies the recovery modules from the outside: only cpoly
and structmat primitives are shared, never recovery code. Forward values are
always computed along two independent routes (matrix product vs the rational
or Laurent form) and compared, so a bug in either representation cannot hide.
"""

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .cpoly import forward_polys, laurent_eval, laurent_from_products
from .errors import (
    InvalidInputError,
    ModelMismatchError,
    NonIdentifiableError,
    NumericalFailureError,
    ResolutionError,
)
from .structmat import SampleSet, vandermonde

_PATH_TOL = 1e-10
_NEAR_ONE = 1e-3  # switch to the direct geometric sum this close to ratio 1


def _points(z) -> np.ndarray:
    if isinstance(z, SampleSet):
        return z.array()
    return np.asarray(z, dtype=complex)


def forward_phase_matrix(theta, g, z, n: int) -> np.ndarray:
    """y = V(z)^T V(theta) g, the plain matrix-product route."""
    theta = np.asarray(theta, dtype=complex)
    g = np.asarray(g, dtype=complex)
    if theta.shape != g.shape:
        raise InvalidInputError("theta and g must have the same length")
    zz = _points(z)
    if len(theta) == 0:
        return np.zeros(len(zz), dtype=complex)
    return vandermonde(zz, n).T @ vandermonde(theta, n) @ g


def forward_phase_rational(theta, g, z, n: int) -> np.ndarray:
    """Same measurement through the rational form sum_l g_l (w^n-1)/(w-1).

    Points with w = z_j * theta_l near 1 use the direct geometric sum, where
    the closed form would cancel catastrophically.
    """
    theta = np.asarray(theta, dtype=complex)
    g = np.asarray(g, dtype=complex)
    zz = _points(z)
    out = np.zeros(len(zz), dtype=complex)
    for th, coeff in zip(theta, g):
        w = zz * th
        near = np.abs(w - 1.0) < _NEAR_ONE
        term = np.empty_like(w)
        safe = ~near
        term[safe] = (w[safe] ** n - 1.0) / (w[safe] - 1.0)
        for idx in np.nonzero(near)[0]:
            term[idx] = np.sum(w[idx] ** np.arange(n))
        out += coeff * term
    return out


def forward_phase(theta, g, z, n: int) -> np.ndarray:
    """Phase-aware forward model, cross-checked along both routes."""
    via_matrix = forward_phase_matrix(theta, g, z, n)
    via_rational = forward_phase_rational(theta, g, z, n)
    scale = max(1.0, float(np.max(np.abs(via_matrix))) if len(via_matrix) else 1.0)
    defect = float(np.max(np.abs(via_matrix - via_rational))) if len(via_matrix) else 0.0
    if defect > _PATH_TOL * scale:
        raise NumericalFailureError(
            f"forward paths disagree by {defect:.3e} (scale {scale:.3e})"
        )
    return via_matrix


def forward_phaseless(theta, g, z, n: int) -> np.ndarray:
    """y = |V(z)^T V(theta) g|^2, cross-checked against the Laurent-ratio form."""
    theta = np.asarray(theta, dtype=complex)
    g = np.asarray(g, dtype=complex)
    zz = _points(z)
    if np.any(np.abs(np.abs(zz) - 1.0) > 1e-9) or (
        len(theta) and np.any(np.abs(np.abs(theta) - 1.0) > 1e-9)
    ):
        raise InvalidInputError("phaseless model needs z and theta on the unit circle")
    y = np.abs(forward_phase(theta, g, zz, n)) ** 2
    if len(theta) == 0:
        return y
    u_hat, u_tilde, v = forward_polys(theta, g, n)
    L, L_tilde, L_hat = laurent_from_products(u_hat, u_tilde, v)
    scale = max(1.0, float(np.max(y)))
    denom_vals = np.array([laurent_eval(L_hat, p) for p in zz])
    denom_scale = float(np.max(np.abs(denom_vals)))
    for j, point in enumerate(zz):
        # the division amplifies coefficient noise by denom_scale/|L_hat(z_j)|
        # when the sample sits near a pole, so the bound must scale with it
        amp = denom_scale / max(abs(denom_vals[j]), 1e-300)
        if amp > 1e8:
            continue  # numerically on a pole; ratio form carries no information
        num = laurent_eval(L, point)
        cross = laurent_eval(L_tilde, point)
        ratio = (num + point**n * cross + point ** (-n) * np.conj(cross)) / denom_vals[j]
        if abs(ratio - y[j]) > _PATH_TOL * scale * max(1.0, amp):
            raise NumericalFailureError(
                f"Laurent form disagrees at sample {j}: {abs(ratio - y[j]):.3e}"
            )
    return y


# ----------------------------------------------------------------------------
# certified instances
# ----------------------------------------------------------------------------

PHASE_AWARE = "PhaseAware"
PHASELESS = "Phaseless"


@dataclass(frozen=True)
class Instance:
    """A ground-truth problem instance with stored, certified measurements."""

    n: int
    s: int
    m: int
    theta: tuple[complex, ...]
    g: tuple[complex, ...]
    z: SampleSet
    seed: int
    mode: str
    y: tuple

    def __post_init__(self):
        if self.mode not in (PHASE_AWARE, PHASELESS):
            raise InvalidInputError(f"unknown instance mode {self.mode!r}")
        if len(self.theta) != self.s or len(self.g) != self.s:
            raise InvalidInputError("sparsity does not match theta/g length")
        if len(self.z) != self.m or len(self.y) != self.m:
            raise InvalidInputError("sample count does not match measurements")
        if self.mode == PHASE_AWARE:
            expect = forward_phase(self.theta, self.g, self.z, self.n)
        else:
            expect = forward_phaseless(self.theta, self.g, self.z, self.n)
        stored = np.asarray(self.y, dtype=complex)
        scale = max(1.0, float(np.max(np.abs(expect))) if len(expect) else 1.0)
        if len(expect) and np.max(np.abs(stored - expect)) > 1e-12 * scale:
            raise InvalidInputError("stored measurements fail forward consistency")


def make_phase_instance(theta, g, z: SampleSet, n: int, seed: int = 0) -> Instance:
    y = forward_phase(theta, g, z, n)
    return Instance(
        n=n, s=len(np.atleast_1d(theta)), m=len(z),
        theta=tuple(np.atleast_1d(theta).astype(complex)),
        g=tuple(np.atleast_1d(g).astype(complex)),
        z=z, seed=seed, mode=PHASE_AWARE, y=tuple(y),
    )


def make_phaseless_instance(theta, g, z: SampleSet, n: int, seed: int = 0) -> Instance:
    y = forward_phaseless(theta, g, z, n)
    return Instance(
        n=n, s=len(np.atleast_1d(theta)), m=len(z),
        theta=tuple(np.atleast_1d(theta).astype(complex)),
        g=tuple(np.atleast_1d(g).astype(complex)),
        z=z, seed=seed, mode=PHASELESS, y=tuple(float(v) for v in y),
    )


# ----------------------------------------------------------------------------
# random draws shared by the harness
# ----------------------------------------------------------------------------

def draw_g(rng: np.random.Generator, s: int) -> np.ndarray:
    """Complex standard normal entries, redrawn while any |g_l| < 0.1."""
    g = rng.standard_normal(s) + 1j * rng.standard_normal(s)
    for _ in range(1000):
        small = np.abs(g) < 0.1
        if not np.any(small):
            return g
        g[small] = rng.standard_normal(int(small.sum())) + 1j * rng.standard_normal(
            int(small.sum())
        )
    raise NumericalFailureError("could not draw well-separated coefficients")


def _redraw_duplicates(rng, draw_one, values, min_dist=1e-9):
    for _ in range(1000):
        collided = False
        for i in range(len(values)):
            for j in range(i):
                if abs(values[i] - values[j]) < min_dist:
                    values[i] = draw_one()
                    collided = True
        if not collided:
            return values
    raise NumericalFailureError("could not draw distinct pole locations")


def draw_theta_disk(rng: np.random.Generator, s: int) -> np.ndarray:
    """Moduli log-uniform on [0.5, 2], phases uniform; entries distinct."""

    def one():
        radius = np.exp(rng.uniform(np.log(0.5), np.log(2.0)))
        return radius * np.exp(1j * rng.uniform(0, 2 * np.pi))

    vals = [one() for _ in range(s)]
    return np.array(_redraw_duplicates(rng, one, vals))


def draw_theta_circle(rng: np.random.Generator, s: int) -> np.ndarray:
    """Unit-modulus poles with uniform phases; entries distinct."""

    def one():
        return np.exp(1j * rng.uniform(0, 2 * np.pi))

    vals = [one() for _ in range(s)]
    return np.array(_redraw_duplicates(rng, one, vals))


def draw_theta_dft(rng: np.random.Generator, n: int, s: int) -> np.ndarray:
    """s distinct nth roots of unity."""
    if s > n:
        raise InvalidInputError("cannot draw more grid poles than grid points")
    idx = rng.choice(n, size=s, replace=False)
    return np.exp(2j * np.pi * np.sort(idx) / n)


def draw_unit_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    """A point on the complex unit sphere."""
    a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return a / np.linalg.norm(a)


# ----------------------------------------------------------------------------
# brute-force baselines
# ----------------------------------------------------------------------------

def brute_force_cs(y, A, s: int) -> np.ndarray:
    """Exhaustive minimal-support exact fit against the full matrix A (m x n).

    Enumerates supports of growing size; at the first size admitting an exact
    least-squares fit (residual <= 1e-8 ||y||) demands uniqueness.
    """
    A = np.asarray(A, dtype=complex)
    y = np.asarray(y, dtype=complex)
    m, n = A.shape
    if n > 12 or s > 2:
        raise InvalidInputError("brute_force_cs guard: n <= 12 and s <= 2")
    if len(y) != m:
        raise InvalidInputError("measurement length mismatch")
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0:
        return np.zeros(n, dtype=complex)
    for size in range(1, s + 1):
        fits = []
        for support in itertools.combinations(range(n), size):
            sub = A[:, support]
            coef, *_ = np.linalg.lstsq(sub, y, rcond=None)
            if np.linalg.norm(sub @ coef - y) <= 1e-8 * ynorm:
                fits.append((support, coef))
        if len(fits) == 1:
            support, coef = fits[0]
            x = np.zeros(n, dtype=complex)
            x[list(support)] = coef
            return x
        if len(fits) > 1:
            raise NonIdentifiableError(
                f"{len(fits)} supports of size {size} fit exactly"
            )
    raise ModelMismatchError(f"no support of size <= {s} fits the measurements")


def _phaseless_magnitudes(y, rows) -> np.ndarray:
    """Squared magnitudes |g_k|^2 via the lifted linear system.

    The lift treats |g_k|^2 and the off-diagonal products g_k conj(g_l) as
    free real unknowns; every true solution shares the diagonal, so any
    remaining ambiguity lives off-diagonal, which is verified on the computed
    null space before trusting the answer.
    """
    m, S = rows.shape
    pairs = list(itertools.combinations(range(S), 2))
    cols = [np.abs(rows[:, k]) ** 2 for k in range(S)]
    for k, l in pairs:
        c = rows[:, k] * np.conj(rows[:, l])
        cols.append(2 * c.real)
        cols.append(-2 * c.imag)
    M = np.column_stack(cols)
    sol, *_ = np.linalg.lstsq(M, y, rcond=None)
    _, sv, vh = np.linalg.svd(M)
    thresh = 1e-8 * (sv[0] if len(sv) else 1.0) * max(M.shape)
    rank = int(np.sum(sv > thresh))
    null = vh[rank:]
    if null.size and np.max(np.abs(null[:, :S])) > 1e-6:
        raise ResolutionError("magnitude profile not determined by the measurements")
    return np.clip(sol[:S], 0.0, None)


def brute_force_phaseless_candidates(y, theta, z, n: int, grid_resolution: int = 10000):
    """All g with |V(z)^T V(theta) g|^2 = y, up to global phase, by search.

    Magnitudes come from the lifted linear system; the remaining S-1 relative
    phases are grid-searched and polished with a local simplex minimizer.
    """
    theta = np.asarray(theta, dtype=complex)
    y = np.asarray(y, dtype=float)
    S = len(theta)
    if S < 1 or S > 3:
        raise InvalidInputError("brute_force_phaseless_candidates guard: 1 <= S <= 3")
    if grid_resolution < 8:
        raise InvalidInputError("grid_resolution too small")
    zz = _points(z)
    rows = vandermonde(zz, n).T @ vandermonde(theta, n)
    yscale = float(np.max(y)) if len(y) else 1.0
    mags = np.sqrt(_phaseless_magnitudes(y, rows))
    if mags[0] < 1e-6 * max(np.max(mags), 1e-30):
        raise InvalidInputError("leading coefficient magnitude is numerically zero")

    def model(phis):
        g = mags * np.exp(1j * np.concatenate([[0.0], phis]))
        return np.abs(rows @ g) ** 2

    def residual(phis):
        return float(np.max(np.abs(model(phis) - y)))

    if S == 1:
        g = mags.astype(complex)
        if residual(np.zeros(0)) > 1e-7 * yscale:
            raise ModelMismatchError("single-coefficient fit fails the measurements")
        return [g]

    per_dim = grid_resolution if S == 2 else max(int(grid_resolution ** 0.5), 32)
    axes = [np.linspace(0, 2 * np.pi, per_dim, endpoint=False)] * (S - 1)
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=1)
    phases = np.exp(1j * flat)  # (points, S-1)
    preds = np.abs(
        np.outer(np.ones(len(flat)), mags[0] * rows[:, 0])
        + phases @ (mags[1:, None] * rows[:, 1:].T)
    ) ** 2
    resid_grid = np.max(np.abs(preds - y[None, :]), axis=1)
    cell = 2 * np.pi / per_dim

    def phase_dist(a, b):
        d = np.abs(a - b) % (2 * np.pi)
        return float(np.max(np.minimum(d, 2 * np.pi - d)))

    seeds = []
    for idx in np.argsort(resid_grid):
        pt = flat[idx]
        if all(phase_dist(pt, skept) > 3 * cell for skept in seeds):
            seeds.append(pt)
        if len(seeds) >= 16:
            break

    solutions = []
    for seed_pt in seeds:
        res = scipy.optimize.minimize(
            lambda p: float(np.sum((model(p) - y) ** 2)),
            seed_pt,
            method="Nelder-Mead",
            options={"xatol": 1e-13, "fatol": 1e-26, "maxiter": 4000},
        )
        phis = np.mod(res.x, 2 * np.pi)
        if residual(phis) <= 1e-7 * yscale:
            solutions.append(phis)

    kept: list[np.ndarray] = []
    for phis in solutions:
        if all(phase_dist(phis, other) > 1e-5 for other in kept):
            kept.append(phis)
    for a, b in itertools.combinations(kept, 2):
        if phase_dist(a, b) < cell:
            raise ResolutionError("distinct solutions within one grid cell")
    out = [mags * np.exp(1j * np.concatenate([[0.0], phis])) for phis in kept]
    out.sort(key=lambda g: tuple((round(v.real, 9), round(v.imag, 9)) for v in g))
    return out
