"""Experiment harness: generation, single-shot recovery, campaigns, self-test.

Everything here is deterministic given a config and a 64-bit master seed.
Per-trial seeds come from the splitmix64 finalizer documented in
:func:`derive_seed`, so campaigns can be reproduced or re-generated file by
file in any language without sharing a random-number library. Instances and
results travel as JSON with complex numbers encoded as [re, im] pairs;
campaign tables are CSV with a fixed header.
"""

import json
import os
import time
from dataclasses import dataclass

import numpy as np

from . import oracle
from .config import Tolerances, load_tolerances
from .errors import AmbiguousDisambiguationError, InvalidInputError, VRecoverError
from .oracle import (
    draw_g,
    draw_theta_circle,
    draw_theta_dft,
    draw_theta_disk,
    draw_unit_vector,
    forward_phase,
    forward_phaseless,
)
from .recover_phase import PhaseInstance, recover_r1, recover_r2
from .recover_phaseless import (
    BRANCH_DUAL,
    BRANCH_HARMONIC,
    PhaselessInstance,
    recover_r3,
    recover_r5,
)
from .structmat import ARBITRARY, HARMONIC, SampleSet, shifted_harmonics, vandermonde

MODES = ("r1", "r2", "r4", "r5", "r3")
PHASE_MODES = ("r1", "r2")
CSV_HEADER = "trial,s,S,n,m,mode,branch,success,theta_err,g_err,candidates,runtime_ms,warnings"
SUCCESS_TOL = 1e-6

_MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, index: int) -> int:
    """splitmix64 finalizer on master_seed + (index+1) * golden-gamma.

    x = master + (i+1)*0x9E3779B97F4A7C15; x ^= x>>30; x *= 0xBF58476D1CE4E5B9;
    x ^= x>>27; x *= 0x94D049BB133111EB; x ^= x>>31. All mod 2^64.
    """
    x = (int(master_seed) + (int(index) + 1) * 0x9E3779B97F4A7C15) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


# ----------------------------------------------------------------------------
# JSON encoding of complex data
# ----------------------------------------------------------------------------

def pair(c) -> list:
    c = complex(c)
    return [float(c.real), float(c.imag)]


def pairs(vec) -> list:
    return [pair(c) for c in vec]


def unpair(p) -> complex:
    return complex(float(p[0]), float(p[1]))


def unpairs(lst) -> np.ndarray:
    return np.array([unpair(p) for p in lst], dtype=complex)


# ----------------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    s_list: tuple[int, ...]
    n_rule: str
    m_rule: str
    trials: int
    master_seed: int
    tolerances: dict
    sample_mode: str
    gamma: float

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {
            "mode", "s_list", "n_rule", "m_rule", "trials", "master_seed",
            "tolerances", "sample_mode", "gamma",
        }
        unknown = set(raw) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        for key in ("mode", "s_list", "n_rule", "m_rule", "trials", "master_seed"):
            if key not in raw:
                raise InvalidInputError(f"config is missing {key!r}")
        mode = raw["mode"]
        if mode not in MODES:
            raise InvalidInputError(f"mode must be one of {MODES}, got {mode!r}")
        s_list = tuple(int(s) for s in raw["s_list"])
        if not s_list or any(s < 1 for s in s_list):
            raise InvalidInputError("s_list must hold positive integers")
        trials = int(raw["trials"])
        if trials < 1:
            raise InvalidInputError("trials must be positive")
        master_seed = int(raw["master_seed"])
        if not 0 <= master_seed <= _MASK64:
            raise InvalidInputError("master_seed must fit in 64 bits")
        sample_mode = raw.get("sample_mode", "harmonic")
        if sample_mode not in ("harmonic", "arbitrary"):
            raise InvalidInputError("sample_mode must be 'harmonic' or 'arbitrary'")
        gamma = float(raw.get("gamma", np.pi / 3))
        tolerances = dict(raw.get("tolerances", {}))
        cfg = cls(
            mode=mode, s_list=s_list, n_rule=str(raw["n_rule"]),
            m_rule=str(raw["m_rule"]), trials=trials, master_seed=master_seed,
            tolerances=tolerances, sample_mode=sample_mode, gamma=gamma,
        )
        cfg.validate()
        return cfg

    def validate(self):
        """Check the measurement rules against each mode's preconditions."""
        phaseless = self.mode not in PHASE_MODES
        if phaseless and self.sample_mode == "harmonic":
            if abs(np.exp(1j * self.gamma) - 1.0) < 1e-9:
                raise InvalidInputError(
                    "phaseless harmonic campaigns need gamma away from 0: "
                    "grid-power supports would collide with the rotation"
                )
        for s in self.s_list:
            n = parse_rule(self.n_rule, s)
            m = parse_rule(self.m_rule, s)
            if phaseless:
                if n < 4 * s - 1:
                    raise InvalidInputError(f"n_rule gives n={n} < 4s-1 at s={s}")
                floor = 4 * s - 1 if self.sample_mode == "harmonic" else 8 * s - 3
            else:
                if n < 2 * s:
                    raise InvalidInputError(f"n_rule gives n={n} < 2s at s={s}")
                floor = 2 * s if self.sample_mode == "harmonic" else 3 * s
            if m < floor:
                raise InvalidInputError(
                    f"m_rule gives m={m} below the {self.mode} floor {floor} at s={s}"
                )
            if self.sample_mode == "harmonic" and m > n:
                raise InvalidInputError(f"harmonic campaigns need m <= n, got {m} > {n}")


def parse_rule(rule: str, s: int) -> int:
    """Evaluate a count rule such as '2s', '3s', '4s-1', '8s-3', or '12'."""
    text = str(rule).replace(" ", "")
    if text.isdigit():
        return int(text)
    head, sep, tail = text.partition("s")
    if not sep or (tail and tail[0] not in "+-"):
        raise InvalidInputError(f"cannot parse rule {rule!r}")
    try:
        coeff = int(head) if head else 1
        offset = int(tail) if tail else 0
    except ValueError as exc:
        raise InvalidInputError(f"cannot parse rule {rule!r}") from exc
    return coeff * s + offset


# ----------------------------------------------------------------------------
# instance generation
# ----------------------------------------------------------------------------

def _draw_disk_samples(rng: np.random.Generator, m: int) -> SampleSet:
    """Distinct points with moduli uniform on [0.5, 1], phases uniform."""

    def one():
        return rng.uniform(0.5, 1.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))

    vals = [one() for _ in range(m)]
    return SampleSet(oracle._redraw_duplicates(rng, one, vals))


def _draw_circle_samples(rng: np.random.Generator, m: int) -> SampleSet:
    """Stratified random points on the circle: one per arc, jittered.

    A fully uniform draw occasionally clusters samples, and the minimal
    phaseless systems are only marginally well-posed, so clustering shows
    up directly as recovery failures.  Stratification keeps the draw random
    (the jitter covers 90% of each cell and the whole frame is rotated
    uniformly) while bounding the damage; it never aliases because the
    points are never exactly equispaced.
    """
    base = 2 * np.pi * (np.arange(m) + 0.5 + rng.uniform(-0.45, 0.45, size=m)) / m
    vals = np.exp(1j * (base + rng.uniform(0, 2 * np.pi)))
    return SampleSet(tuple(vals))


def _draw_grid_disk(rng: np.random.Generator, n: int, power_avoid=None) -> np.ndarray:
    """Distinct dictionary points on the disk annulus, away from a forbidden power."""

    def one():
        radius = np.exp(rng.uniform(np.log(0.5), np.log(2.0)))
        return radius * np.exp(1j * rng.uniform(0, 2 * np.pi))

    grid = oracle._redraw_duplicates(rng, one, [one() for _ in range(n)])
    if power_avoid is not None:
        nth, target = power_avoid
        for _ in range(100):
            bad = [k for k, v in enumerate(grid) if abs(v**nth - target) < 1e-6]
            if not bad:
                break
            for k in bad:
                grid[k] = one()
        else:
            raise InvalidInputError("could not draw a grid clear of the rotation power")
    return np.array(grid)


def generate_trial(config: ExperimentConfig, s: int, index: int) -> dict:
    """One ground-truth instance as a JSON-ready dict; `index` is campaign-global."""
    seed = derive_seed(config.master_seed, index)
    rng = np.random.default_rng(seed)
    n = parse_rule(config.n_rule, s)
    m = parse_rule(config.m_rule, s)
    harmonic = config.sample_mode == "harmonic"
    payload: dict = {
        "mode": config.mode,
        "n": n,
        "s": s,
        "m": m,
        "seed": seed,
        "sample_mode": config.sample_mode,
        "gamma": config.gamma if harmonic else None,
        "grid": None,
        "x": None,
        "extra_row": None,
    }

    if config.mode in PHASE_MODES:
        samples = (
            shifted_harmonics(n, m, config.gamma)
            if harmonic
            else _draw_disk_samples(rng, m)
        )
        if config.mode == "r1":
            theta = draw_theta_disk(rng, s)
            g = draw_g(rng, s)
        else:
            avoid = (n, np.exp(-1j * config.gamma)) if harmonic else None
            grid = _draw_grid_disk(rng, n, power_avoid=avoid)
            support = np.sort(rng.choice(n, size=s, replace=False))
            g = draw_g(rng, s)
            theta = grid[support]
            x = np.zeros(n, dtype=complex)
            x[support] = g
            payload["grid"] = pairs(grid)
            payload["x"] = pairs(x)
        y = forward_phase(theta, g, samples, n)
        payload["y"] = pairs(y)
    else:
        if harmonic:
            samples = shifted_harmonics(n, m, config.gamma)
        else:
            samples = _draw_circle_samples(rng, m)
        if config.mode == "r3":
            grid = np.exp(2j * np.pi * np.arange(n) / n)
            support = np.sort(rng.choice(n, size=s, replace=False))
            g = draw_g(rng, s)
            theta = grid[support]
            x = np.zeros(n, dtype=complex)
            x[support] = g
            payload["grid"] = pairs(grid)
            payload["x"] = pairs(x)
        else:
            if harmonic:
                theta = draw_theta_dft(rng, n, s)
            else:
                theta = draw_theta_circle(rng, s)
                if s > 1:
                    # the dual-pair branch needs support powers that do not
                    # all coincide; redraws never trigger in practice
                    for _ in range(100):
                        powers = theta**n
                        if np.max(np.abs(powers - powers[0])) > 1e-6:
                            break
                        theta = draw_theta_circle(rng, s)
            g = draw_g(rng, s)
        y = forward_phaseless(theta, g, samples, n)
        payload["y"] = [float(v) for v in y]
        if config.mode in ("r5", "r3"):
            a = draw_unit_vector(rng, n)
            if config.mode == "r3":
                y_m = float(abs(np.dot(a, x)) ** 2)
            else:
                y_m = float(abs(np.dot(vandermonde(theta, n).T @ a, g)) ** 2)
            payload["extra_row"] = {"a": pairs(a), "y_m": y_m}

    payload["z"] = pairs(samples.array())
    payload["theta"] = pairs(theta)
    payload["g"] = pairs(g)
    return payload


def samples_from_payload(payload: dict) -> SampleSet:
    z = unpairs(payload["z"])
    if payload.get("sample_mode") == "harmonic":
        return SampleSet(z, mode=HARMONIC, gamma=payload["gamma"], n=payload["n"])
    return SampleSet(z, mode=ARBITRARY)


def check_payload_consistency(payload: dict):
    """Re-run the forward model on the stored truth and compare to stored y."""
    theta = unpairs(payload["theta"])
    g = unpairs(payload["g"])
    samples = samples_from_payload(payload)
    n = payload["n"]
    if payload["mode"] in PHASE_MODES:
        expect = forward_phase(theta, g, samples, n)
        stored = unpairs(payload["y"])
    else:
        expect = forward_phaseless(theta, g, samples, n)
        stored = np.array(payload["y"], dtype=float)
    scale = max(1.0, float(np.max(np.abs(expect))))
    if np.max(np.abs(stored - expect)) > 1e-12 * scale:
        raise InvalidInputError("instance fails forward consistency")


def instance_from_payload(payload: dict):
    samples = samples_from_payload(payload)
    grid = None if payload.get("grid") is None else unpairs(payload["grid"])
    if payload["mode"] in PHASE_MODES:
        return PhaseInstance(
            payload["n"], payload["s"], unpairs(payload["y"]), samples, grid
        )
    extra = payload.get("extra_row")
    if extra is not None:
        extra = (unpairs(extra["a"]), float(extra["y_m"]))
    return PhaselessInstance(
        payload["n"], payload["s"], payload["y"], samples, extra, grid
    )


# ----------------------------------------------------------------------------
# scoring
# ----------------------------------------------------------------------------

def _greedy_match(truth: np.ndarray, found: np.ndarray):
    """Nearest matching of recovered values to the truth; (max rel err, perm)."""
    if len(truth) != len(found):
        return np.inf, None
    remaining = list(range(len(found)))
    perm = np.zeros(len(truth), dtype=int)
    worst = 0.0
    for k in range(len(truth)):
        dists = [abs(found[j] - truth[k]) for j in remaining]
        jmin = int(np.argmin(dists))
        perm[k] = remaining.pop(jmin)
        worst = max(worst, dists[jmin] / max(1.0, abs(truth[k])))
    return worst, perm


def _phase_aligned_err(candidate: np.ndarray, truth: np.ndarray) -> float:
    ip = np.vdot(candidate, truth)
    if abs(ip) > 0:
        candidate = candidate * (ip / abs(ip))
    scale = max(float(np.max(np.abs(truth))), 1e-300)
    return float(np.max(np.abs(candidate - truth)) / scale)


@dataclass
class TrialRecord:
    trial: object
    s: int
    S: object
    n: int
    m: int
    mode: str
    branch: str
    success: object
    theta_err: float
    g_err: float
    candidate_count: object
    runtime_ms: float
    warnings: str

    def csv_row(self) -> str:
        def num(v):
            if v is None or (isinstance(v, float) and not np.isfinite(v)):
                return ""
            if isinstance(v, float):
                return f"{v:.6e}"
            return str(v)

        success = self.success
        if isinstance(success, bool):
            success = int(success)
        cells = [
            str(self.trial), str(self.s), num(self.S), str(self.n), str(self.m),
            self.mode, self.branch, num(success), num(self.theta_err),
            num(self.g_err), num(self.candidate_count), f"{self.runtime_ms:.3f}",
            self.warnings.replace(",", ";"),
        ]
        return ",".join(cells)


def _redraw_extra_row(payload: dict, attempt: int) -> dict:
    """Fresh disambiguation row for an unlucky draw, recomputed from truth."""
    rng = np.random.default_rng(derive_seed(payload["seed"], 777000 + attempt))
    n = payload["n"]
    a = draw_unit_vector(rng, n)
    if payload["mode"] == "r3":
        x = unpairs(payload["x"])
        y_m = float(abs(np.dot(a, x)) ** 2)
    else:
        theta = unpairs(payload["theta"])
        g = unpairs(payload["g"])
        y_m = float(abs((vandermonde(theta, n).T @ a) @ g) ** 2)
    fresh = dict(payload)
    fresh["extra_row"] = {"a": pairs(a), "y_m": y_m}
    return fresh


def _recover_with_redraw(payload: dict, recover, tol: Tolerances, notes: list):
    """Run a disambiguating recovery, redrawing the extra row when ambiguous."""
    inst = instance_from_payload(payload)
    for attempt in range(4):
        try:
            return recover(inst, tol)
        except AmbiguousDisambiguationError:
            if attempt == 3:
                raise
            notes.append("redrew-disambiguation-row")
            inst = instance_from_payload(_redraw_extra_row(payload, attempt))
    raise AssertionError("unreachable")


def run_trial(payload: dict, tol: Tolerances | None = None) -> TrialRecord:
    """Recover one generated instance and score it against the stored truth."""
    if tol is None:
        tol = load_tolerances()
    mode = payload["mode"]
    theta_true = unpairs(payload["theta"])
    g_true = unpairs(payload["g"])
    sample_tag = (
        HARMONIC if payload.get("sample_mode") == "harmonic" else ARBITRARY
    )
    inst = instance_from_payload(payload)
    t0 = time.perf_counter()
    S = None
    branch = sample_tag
    theta_err = np.inf
    g_err = np.inf
    count = None
    success = False
    notes: list[str] = []
    try:
        if mode == "r1":
            res = recover_r1(inst, tol)
            S = res.S
            theta_err, perm = _greedy_match(theta_true, np.array(res.theta))
            if perm is not None:
                g = np.array(res.g)[perm]
                g_err = float(
                    np.max(np.abs(g - g_true)) / max(float(np.max(np.abs(g_true))), 1e-300)
                )
            notes.extend(res.warnings)
            success = theta_err <= SUCCESS_TOL and g_err <= SUCCESS_TOL
        elif mode == "r2":
            x_true = unpairs(payload["x"])
            x = recover_r2(inst, tol)
            supp_true = set(np.flatnonzero(np.abs(x_true) > 0).tolist())
            supp = set(np.flatnonzero(np.abs(x) > 1e-12).tolist())
            S = len(supp)
            theta_err = 0.0 if supp == supp_true else 1.0
            g_err = float(
                np.max(np.abs(x - x_true)) / max(float(np.max(np.abs(x_true))), 1e-300)
            )
            success = supp == supp_true and g_err <= SUCCESS_TOL
        elif mode == "r3":
            x_true = unpairs(payload["x"])
            nz = np.flatnonzero(np.abs(x_true) > 0)
            x_canon = x_true * np.exp(-1j * np.angle(x_true[nz[0]]))
            x = _recover_with_redraw(payload, recover_r3, tol, notes)
            supp_true = set(nz.tolist())
            supp = set(np.flatnonzero(np.abs(x) > 1e-12).tolist())
            S = len(supp)
            theta_err = 0.0 if supp == supp_true else 1.0
            g_err = float(
                np.max(np.abs(x - x_canon)) / max(float(np.max(np.abs(x_true))), 1e-300)
            )
            success = supp == supp_true and g_err <= SUCCESS_TOL
        else:
            res = _recover_with_redraw(payload, recover_r5, tol, notes)
            S = res.S
            branch = res.branch
            count = len(res.candidates)
            notes.extend(res.warnings)
            theta_err, perm = _greedy_match(theta_true, np.array(res.theta))
            expected = 2 if res.branch == BRANCH_DUAL else 2 ** max(res.S - 1, 0)
            count_ok = count == expected
            if perm is not None:
                aligned = [np.asarray(c, dtype=complex)[perm] for c in res.candidates]
                errs = [_phase_aligned_err(c, g_true) for c in aligned]
                g_err = float(min(errs)) if errs else np.inf
                if mode == "r5":
                    ok = (
                        res.selected is not None
                        and errs[res.selected] <= SUCCESS_TOL
                    )
                    g_err = errs[res.selected] if res.selected is not None else g_err
                else:
                    ok = g_err <= SUCCESS_TOL
                success = theta_err <= SUCCESS_TOL and count_ok and ok
    except VRecoverError as exc:
        notes.append(f"{type(exc).__name__}: {exc}")
    runtime_ms = (time.perf_counter() - t0) * 1000.0
    return TrialRecord(
        trial=payload.get("trial", 0), s=payload["s"], S=S, n=payload["n"],
        m=payload["m"], mode=mode, branch=branch, success=success,
        theta_err=float(theta_err), g_err=float(g_err), candidate_count=count,
        runtime_ms=runtime_ms, warnings="; ".join(notes)[:200],
    )


def run_campaign(config: ExperimentConfig):
    """All trials of a config; returns (records, per-s summary records)."""
    tol = load_tolerances(config.tolerances)
    records: list[TrialRecord] = []
    index = 0
    for s in config.s_list:
        for t in range(config.trials):
            payload = generate_trial(config, s, index)
            payload["trial"] = index
            records.append(run_trial(payload, tol))
            index += 1
    summaries = []
    for s in config.s_list:
        group = [r for r in records if r.s == s]
        rate = float(np.mean([bool(r.success) for r in group]))
        finite_t = [r.theta_err for r in group if np.isfinite(r.theta_err)]
        finite_g = [r.g_err for r in group if np.isfinite(r.g_err)]
        failures = sum(1 for r in group if not r.success)
        summaries.append(
            TrialRecord(
                trial="summary", s=s, S=None, n=group[0].n, m=group[0].m,
                mode=config.mode, branch="", success=rate,
                theta_err=float(np.percentile(finite_t, 95)) if finite_t else np.inf,
                g_err=float(np.percentile(finite_g, 95)) if finite_g else np.inf,
                candidate_count=None,
                runtime_ms=float(sum(r.runtime_ms for r in group)),
                warnings=f"failures={failures}",
            )
        )
    return records, summaries


def write_csv(path: str, records, summaries):
    lines = [CSV_HEADER]
    lines += [r.csv_row() for r in records]
    lines += [r.csv_row() for r in summaries]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ----------------------------------------------------------------------------
# CLI command bodies (argument parsing lives in cli.py)
# ----------------------------------------------------------------------------

def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path} is not valid JSON: {exc}") from exc


def cmd_gen(config_path: str, out_dir: str) -> int:
    config = ExperimentConfig.from_dict(_load_json(config_path))
    os.makedirs(out_dir, exist_ok=True)
    index = 0
    written = []
    for s in config.s_list:
        for t in range(config.trials):
            payload = generate_trial(config, s, index)
            payload["trial"] = index
            check_payload_consistency(payload)
            name = f"{config.mode}_s{s}_{t:04d}.json"
            with open(os.path.join(out_dir, name), "w") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
            written.append(name)
            index += 1
    print(f"wrote {len(written)} instance files to {out_dir}")
    return 0


def _outcome_dict(mode: str, payload: dict, tol: Tolerances) -> dict:
    inst = instance_from_payload(payload)
    out: dict = {"mode": mode}
    if mode == "r1":
        res = recover_r1(inst, tol)
        out.update(
            S=res.S, theta=pairs(res.theta), g=pairs(res.g),
            magnitude_profile=[float(abs(v) ** 2) for v in res.g],
            candidates=[pairs(res.g)], selected=0, warnings=list(res.warnings),
        )
    elif mode == "r2":
        x = recover_r2(inst, tol)
        supp = np.flatnonzero(np.abs(x) > 1e-12)
        out.update(
            S=int(len(supp)), support=[int(k) for k in supp],
            theta=pairs(np.array(inst.grid)[supp]), x=pairs(x),
            magnitude_profile=[float(abs(x[k]) ** 2) for k in supp],
            candidates=[pairs(x[supp])], selected=0, warnings=[],
        )
    elif mode in ("r4", "r5"):
        res = recover_r5(inst, tol)
        out.update(
            S=res.S, theta=pairs(res.theta), branch=res.branch,
            magnitude_profile=[float(v) for v in res.magnitude_profile],
            candidates=[pairs(c) for c in res.candidates],
            selected=res.selected, warnings=list(res.warnings),
        )
    else:
        x = recover_r3(inst, tol)
        supp = np.flatnonzero(np.abs(x) > 1e-12)
        out.update(
            S=int(len(supp)), support=[int(k) for k in supp],
            theta=pairs(np.array(inst.grid)[supp]), x=pairs(x),
            magnitude_profile=[float(abs(x[k]) ** 2) for k in supp],
            candidates=[pairs(x[supp])], selected=0, warnings=[],
        )
    return out


def cmd_recover(mode: str, input_path: str, output_path: str | None) -> int:
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}, got {mode!r}")
    payload = _load_json(input_path)
    stored_mode = payload.get("mode")
    if stored_mode is not None and stored_mode != mode:
        raise InvalidInputError(
            f"instance file was generated for mode {stored_mode!r}, not {mode!r}"
        )
    payload.setdefault("mode", mode)
    if "theta" in payload and "g" in payload:
        check_payload_consistency(payload)
    tol = load_tolerances()
    out = _outcome_dict(mode, payload, tol)
    text = json.dumps(out, indent=2, sort_keys=True)
    if output_path:
        with open(output_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_montecarlo(config_path: str, out_path: str) -> int:
    config = ExperimentConfig.from_dict(_load_json(config_path))
    records, summaries = run_campaign(config)
    write_csv(out_path, records, summaries)
    for summ in summaries:
        print(
            f"mode={config.mode} s={summ.s} trials={config.trials} "
            f"success_rate={summ.success:.3f} theta_err_p95={summ.theta_err:.3e} "
            f"g_err_p95={summ.g_err:.3e}"
        )
    return 0


# ----------------------------------------------------------------------------
# self-test
# ----------------------------------------------------------------------------

def _selftest_checks():
    from .cpoly import LaurentPoly, laurent_sqrt
    from .structmat import build_A, build_B, null_space

    def check_build_a():
        row = build_A([1.0], [9.0], 2, 1)
        assert np.allclose(row, [[9, 9, -1, -1]]), row

    def check_build_b():
        z = shifted_harmonics(2, 2, 0.0)
        mat = build_B(z, [9.0, -3.0], 1)
        assert np.allclose(mat, [[9, 9, -1], [3, -3, -1]]), mat

    def check_phase_worked_example():
        z = shifted_harmonics(2, 2, 0.0)
        inst = PhaseInstance(2, 1, [9.0, -3.0], z)
        res = recover_r1(inst)
        assert np.allclose(res.theta, [2.0], atol=1e-9), res.theta
        assert np.allclose(res.g, [3.0], atol=1e-9), res.g

    def check_null_space_dims():
        one = null_space(np.array([[1.0, 1.0]]))
        full = null_space(np.eye(2))
        assert one.dimension == 1, one.dimension
        assert full.dimension == 0, full.dimension
        assert np.allclose(np.abs(one.basis[:, 0]), np.sqrt(0.5))

    def check_laurent_sqrt():
        m = laurent_sqrt(LaurentPoly([9.0], 0))
        assert m.min_degree == 0 and np.allclose(m.array(), [3.0])

    def check_forward_routes():
        rng = np.random.default_rng(7)
        for _ in range(20):
            s = int(rng.integers(1, 4))
            n = 4 * s - 1
            theta = draw_theta_circle(rng, s)
            g = draw_g(rng, s)
            z = _draw_circle_samples(rng, 8 * s - 3)
            forward_phaseless(theta, g, z, n)
            theta_d = draw_theta_disk(rng, s)
            z_d = _draw_disk_samples(rng, 3 * s)
            forward_phase(theta_d, g, z_d, 2 * s)

    def check_harmonic_candidates():
        rng = np.random.default_rng(11)
        n = 7
        gamma = float(np.pi / 3)
        theta = draw_theta_dft(rng, n, 2)
        g = draw_g(rng, 2)
        z = shifted_harmonics(n, n, gamma)
        y = forward_phaseless(theta, g, z, n)
        inst = PhaselessInstance(n, 2, y, z)
        res = recover_r5(inst)
        assert res.branch == BRANCH_HARMONIC and len(res.candidates) == 2, res.branch
        errs = [
            _phase_aligned_err(np.array(c), g[np.argsort(np.angle(theta))])
            for c in res.candidates
        ]
        assert min(errs) <= 1e-6, errs

    def check_general_dual_pair():
        rng = np.random.default_rng(13)
        theta = draw_theta_circle(rng, 2)
        g = draw_g(rng, 2)
        n = 7
        z = _draw_circle_samples(rng, 13)
        y = forward_phaseless(theta, g, z, n)
        inst = PhaselessInstance(n, 2, y, z)
        res = recover_r5(inst)
        assert res.branch == BRANCH_DUAL and len(res.candidates) == 2, res.branch
        from .recover_phaseless import dual_transform

        a, b = (np.array(c) for c in res.candidates)
        dual = dual_transform(a, np.array(res.theta), n)
        assert _phase_aligned_err(dual, b) <= 1e-6

    def check_gridded_worked_example():
        n = 7
        grid = np.exp(2j * np.pi * np.arange(n) / n)
        gamma = float(np.pi / 3)
        x = np.zeros(n, dtype=complex)
        x[3] = 2.0
        z = shifted_harmonics(n, 3, gamma)
        y = forward_phaseless([grid[3]], [2.0], z, n)
        rng = np.random.default_rng(17)
        a = draw_unit_vector(rng, n)
        inst = PhaselessInstance(
            n, 1, y, z, extra_row=(a, float(abs(np.dot(a, x)) ** 2)), grid=grid
        )
        got = recover_r3(inst)
        assert np.flatnonzero(np.abs(got) > 1e-9).tolist() == [3], got
        assert abs(abs(got[3]) - 2.0) <= 1e-8
        assert abs(got[3].imag) <= 1e-9 and got[3].real > 0

    def check_cs_oracle_match():
        rng = np.random.default_rng(19)
        n, s = 4, 1
        gamma = 0.0
        grid = _draw_grid_disk(rng, n, power_avoid=(n, np.exp(-1j * gamma)))
        support = [1]
        g = np.array([3.0 + 0j])
        z = shifted_harmonics(n, 3, gamma)
        y = forward_phase(grid[support], g, z, n)
        inst = PhaseInstance(n, s, y, z, grid)
        x = recover_r2(inst)
        A = vandermonde(z, n).T @ vandermonde(grid, n)
        x_oracle = oracle.brute_force_cs(y, A, s)
        assert np.allclose(x, x_oracle, atol=1e-8), (x, x_oracle)

    return [
        ("build_A_frozen_row", check_build_a),
        ("build_B_frozen_matrix", check_build_b),
        ("phase_worked_example", check_phase_worked_example),
        ("null_space_dimensions", check_null_space_dims),
        ("laurent_sqrt_constant", check_laurent_sqrt),
        ("forward_route_agreement", check_forward_routes),
        ("harmonic_candidate_pair", check_harmonic_candidates),
        ("general_dual_pair", check_general_dual_pair),
        ("gridded_worked_example", check_gridded_worked_example),
        ("cs_oracle_match", check_cs_oracle_match),
    ]


def cmd_selftest() -> int:
    failures = []
    for name, check in _selftest_checks():
        try:
            check()
        except Exception as exc:
            failures.append(name)
            print(f"FAIL {name}: {type(exc).__name__}: {exc}")
        else:
            print(f"ok {name}")
    if failures:
        print(f"selftest failed: {', '.join(failures)}")
        return 1
    print("selftest passed")
    return 0
