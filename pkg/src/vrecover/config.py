"""Numerical tolerances, centralized and overridable.

The environment variable ``VRECOVER_TOL_OVERRIDES`` may hold a JSON object
whose keys are field names of :class:`Tolerances`; it is read each time
:func:`load_tolerances` is called, so experiments can corrupt a single knob
(for example ``{"rank_rel_tol": 1.0}``) and observe the self-test fail.
"""

import dataclasses
import json
import os

from .errors import InvalidInputError

ENV_VAR = "VRECOVER_TOL_OVERRIDES"


@dataclasses.dataclass(frozen=True)
class Tolerances:
    # relative residual bound certified for every reported polynomial root
    tol_root: float = 1e-8
    # singular values <= rank_rel_tol * sigma_max count as zero
    rank_rel_tol: float = 1e-8
    # kept/discarded singular value ratio below this attaches a conditioning warning
    gap_ratio: float = 1e3
    # conjugate-reciprocal pairing and root matching
    pair_tol: float = 1e-6
    # candidate comparison up to global phase
    dedup_tol: float = 1e-8
    # relative residual for forward checks and candidate completeness
    forward_tol: float = 1e-6
    # ||L^2 - 4K|| <= degeneracy_tol * ||L^2|| routes to the harmonic fallback
    degeneracy_tol: float = 1e-8
    # winner residual bound in disambiguate(); runner-up must exceed 10x this
    # winner gate for the extra-measurement residual; the losing candidate
    # misses by an O(1) relative amount, so the 10x separation holds with room
    disambig_tol: float = 1e-4
    # negativity slack allowed for computed squared magnitudes
    mag_tol: float = 1e-8
    # grouping radius for the doubled roots of the |v|^2 block; doubled
    # roots split by about the square root of the coefficient noise, so
    # this sits far above tol_root on purpose
    cluster_tol: float = 1e-3


_FIELD_NAMES = {f.name for f in dataclasses.fields(Tolerances)}


def load_tolerances(overrides: dict | None = None) -> Tolerances:
    """Build the tolerance set from defaults, the env var, then `overrides`."""
    merged: dict[str, float] = {}
    raw = os.environ.get(ENV_VAR)
    if raw:
        try:
            env = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{ENV_VAR} is not valid JSON: {exc}") from exc
        if not isinstance(env, dict):
            raise InvalidInputError(f"{ENV_VAR} must hold a JSON object")
        merged.update(env)
    if overrides:
        merged.update(overrides)
    unknown = set(merged) - _FIELD_NAMES
    if unknown:
        raise InvalidInputError(f"unknown tolerance names: {sorted(unknown)}")
    for key, val in merged.items():
        if not isinstance(val, (int, float)) or isinstance(val, bool) or val <= 0:
            raise InvalidInputError(f"tolerance {key} must be a positive number")
    return Tolerances(**{k: float(v) for k, v in merged.items()})
