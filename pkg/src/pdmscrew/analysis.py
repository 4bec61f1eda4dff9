"""Parameter sweeps, level crossings and degeneracy classification."""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import oracle, spectra
from .errors import ConfigError, InvalidState, NoRootError
from .model import SolvableFamily, SystemConfig, classify

AXES = ("chi", "B0", "b_lin", "c", "phi_AB")

# Figure-style defaults (k = lam = q = 1 unless the base config says otherwise).
DEFAULT_RANGES = {
    "chi": (-2.0, 2.0),
    "B0": (0.1, 5.0),
    "b_lin": (0.0, 5.0),
    "c": (0.0, 5.0),
    "phi_AB": (-math.pi, math.pi),
}

CSV_COLUMNS = ("axis", "axis_value", "n_r", "ell", "energy", "valid",
               "regular_at_origin", "square_integrable")


def fmt_float(x: float) -> str:
    """17 significant digits; enough for an exact round trip."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    start: float
    stop: float
    steps: int
    states: tuple
    base: SystemConfig
    variant: Optional[spectra.Variant] = None
    use_oracle: bool = False
    bracket: Optional[tuple] = None
    settings: oracle.OracleSettings = oracle.DEFAULT_SETTINGS

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"axis must be one of {AXES}, got {self.axis!r}")
        if int(self.steps) != self.steps or self.steps < 2:
            raise ConfigError("steps must be an integer >= 2")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ConfigError("sweep range must be finite")
        states = tuple((int(n), int(l)) for n, l in self.states)
        if not states or any(n < 0 for n, _ in states):
            raise ConfigError("states must be a non-empty list of (n_r >= 0, ell)")
        object.__setattr__(self, "states", states)
        self.base.with_axis(self.axis, self.start)   # axis must exist in the config
        if classify(self.base) is SolvableFamily.NUMERICAL_ONLY and not self.use_oracle:
            raise ConfigError("numerical-only configuration: enable the oracle")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, int(self.steps))


@dataclass(frozen=True)
class SpectrumRow:
    axis_value: float
    n_r: int
    ell: int
    energy: Optional[float]         # None marks InvalidState
    valid: bool
    regular_at_origin: Optional[bool]
    square_integrable: Optional[bool]


def _flag_str(v: Optional[bool]) -> str:
    return "" if v is None else str(bool(v)).lower()


@dataclass(frozen=True)
class SpectrumTable:
    axis: str
    rows: tuple
    metadata: dict = field(default_factory=dict)

    def energies(self, state) -> list:
        n, l = state
        return [row.energy for row in self.rows if (row.n_r, row.ell) == (n, l)]

    def to_csv(self, header: Sequence[str] = ()) -> str:
        buf = io.StringIO()
        for line in header:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows:
            w.writerow([self.axis, fmt_float(row.axis_value), row.n_r, row.ell,
                        "nan" if row.energy is None else fmt_float(row.energy),
                        _flag_str(row.valid), _flag_str(row.regular_at_origin),
                        _flag_str(row.square_integrable)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"axis": self.axis, "metadata": self.metadata,
                "rows": [asdict(r) for r in self.rows]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def state_energy(config: SystemConfig, n_r: int, ell: int,
                 variant: Optional[spectra.Variant] = None) -> Optional[float]:
    """Closed-form energy, or None when there is no valid state."""
    try:
        res = spectra.energy(config, n_r, ell, variant, flags=False)
    except (InvalidState, ConfigError):
        return None
    return res.value


def _row(spec: SweepSpec, value: float, state) -> SpectrumRow:
    n_r, ell = state
    try:
        cfg = spec.base.with_axis(spec.axis, float(value))
    except ConfigError:
        return SpectrumRow(float(value), n_r, ell, None, False, None, None)
    if spec.use_oracle:
        try:
            E = oracle.self_consistent_energy(cfg, n_r, ell, bracket=spec.bracket,
                                              settings=spec.settings)
            return SpectrumRow(float(value), n_r, ell, E, True, None, None)
        except (NoRootError, ConfigError):
            return SpectrumRow(float(value), n_r, ell, None, False, None, None)
    try:
        res = spectra.energy(cfg, n_r, ell, spec.variant)
        flags = res.validity
        return SpectrumRow(float(value), n_r, ell, res.value,
                           spectra.Flag.QUANTIZATION_CONSISTENT in flags,
                           spectra.Flag.REGULAR_AT_ORIGIN in flags,
                           spectra.Flag.SQUARE_INTEGRABLE in flags)
    except (InvalidState, ConfigError):
        if classify(cfg) is SolvableFamily.NUMERICAL_ONLY:
            return SpectrumRow(float(value), n_r, ell, None, False, None, None)
        flags = spectra.validity(cfg, n_r, ell, spec.variant)
        return SpectrumRow(float(value), n_r, ell, None, False,
                           flags[spectra.Flag.REGULAR_AT_ORIGIN],
                           flags[spectra.Flag.SQUARE_INTEGRABLE])


def sweep(spec: SweepSpec, workers: int = 1) -> SpectrumTable:
    """Energies for every (axis value, state), axis-major then state order.

    Rows are independent; with ``workers > 1`` they are computed on a thread
    pool and reassembled in canonical order, so the table does not depend on
    the worker count.
    """
    jobs = [(v, s) for v in spec.values for s in spec.states]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda job: _row(spec, *job), jobs))
    else:
        rows = [_row(spec, *job) for job in jobs]
    meta = {"config": asdict(spec.base), "axis": spec.axis, "start": spec.start,
            "stop": spec.stop, "steps": int(spec.steps),
            "states": [list(s) for s in spec.states]}
    return SpectrumTable(spec.axis, tuple(rows), meta)


# ---------------------------------------------------------------------------
# crossings


@dataclass(frozen=True)
class CrossingPoint:
    state_a: tuple
    state_b: tuple
    axis: str
    axis_value: float
    energy: float
    bracket_width: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["state_a"], d["state_b"] = list(self.state_a), list(self.state_b)
        return d


def _gap(base, axis, x, a, b, variant):
    try:
        cfg = base.with_axis(axis, x)
    except ConfigError:
        return None, None
    ea = state_energy(cfg, *a, variant)
    eb = state_energy(cfg, *b, variant)
    if ea is None or eb is None:
        return None, None
    return ea - eb, 0.5 * (ea + eb)


def find_crossings(state_a, state_b, axis_range, base: SystemConfig, *, axis: str = "chi",
                   scan_points: int = 512, x_tol: float = 1e-6, e_rel: float = 1e-8,
                   variant: Optional[spectra.Variant] = None) -> list:
    """Sign changes of E_a - E_b along ``axis``, refined by bisection.

    Every sign change between neighbouring scan points gives one crossing.
    Bisection stops once the bracket is at most ``x_tol`` wide and the gap is
    below ``e_rel * max(1, |E|)``.
    """
    a = (int(state_a[0]), int(state_a[1]))
    b = (int(state_b[0]), int(state_b[1]))
    if a == b:
        return []
    lo, hi = (float(v) for v in axis_range)
    xs = np.linspace(lo, hi, int(scan_points))
    gaps = [_gap(base, axis, float(x), a, b, variant) for x in xs]
    out = []
    for i, x in enumerate(xs):
        d, e = gaps[i]
        if d == 0:
            out.append(CrossingPoint(a, b, axis, float(x), e, 0.0))
            continue
        if i + 1 == len(xs):
            break
        d2, _ = gaps[i + 1]
        if d is None or d2 is None or d2 == 0 or (d > 0) == (d2 > 0):
            continue
        x0, x1, d0, d1 = float(x), float(xs[i + 1]), d, d2
        while True:
            mid = 0.5 * (x0 + x1)
            if mid in (x0, x1):
                break
            dm, em = _gap(base, axis, mid, a, b, variant)
            if dm is None:
                break
            if dm == 0:
                x0 = x1 = mid
                break
            if (dm > 0) == (d0 > 0):
                x0, d0 = mid, dm
            else:
                x1, d1 = mid, dm
            if x1 - x0 <= x_tol and max(abs(d0), abs(d1)) <= e_rel * max(1.0, abs(em)):
                break
        xm = 0.5 * (x0 + x1)
        _, em = _gap(base, axis, xm, a, b, variant)
        out.append(CrossingPoint(a, b, axis, xm, em, x1 - x0))
    return out


# ---------------------------------------------------------------------------
# degeneracies


class DegeneracyKind(str, enum.Enum):
    REFLECTION = "reflection_degenerate"
    PERSISTENT = "persistent"          # equal at the same chi over the whole grid
    OCCASIONAL = "occasionally_degenerate"
    NONE = "non_degenerate"


@dataclass(frozen=True)
class DegeneracyClass:
    state_a: tuple
    state_b: tuple
    kind: DegeneracyKind
    max_rel_diff: Optional[float]
    crossings: tuple = ()

    def to_dict(self) -> dict:
        return {"state_a": list(self.state_a), "state_b": list(self.state_b),
                "kind": self.kind.value, "max_rel_diff": self.max_rel_diff,
                "crossings": list(self.crossings)}


def _rel(x, y) -> float:
    return abs(x - y) / max(abs(x), abs(y), 1e-300)


def _all_equal(xs, ys, tol) -> tuple:
    if any(v is None for v in xs) or any(v is None for v in ys):
        return False, None
    worst = max((_rel(x, y) for x, y in zip(xs, ys)), default=0.0)
    return worst <= tol, worst


def degeneracy_scan(states, base: SystemConfig, chi_grid, tolerance: float = 1e-14,
                    variant: Optional[spectra.Variant] = None) -> list:
    """Classify every pair of ``states`` over ``chi_grid``.

    Reflection: E(n, ell; chi) = E(n', ell'; -chi) at every grid point.
    Persistent: E(n, ell; chi) = E(n', ell'; chi) at every grid point.
    Occasional: the gap changes sign (or vanishes) at isolated grid intervals.
    """
    grid = [float(x) for x in chi_grid]
    states = [(int(n), int(l)) for n, l in states]

    def column(state, sign):
        return [state_energy(base.with_axis("chi", sign * x), *state, variant) for x in grid]

    plus = {s: column(s, 1.0) for s in states}
    minus = {s: column(s, -1.0) for s in states}
    out = []
    for i, a in enumerate(states):
        for b in states[i + 1:]:
            refl, refl_diff = _all_equal(plus[a], minus[b], tolerance)
            if refl:
                out.append(DegeneracyClass(a, b, DegeneracyKind.REFLECTION, refl_diff))
                continue
            same, same_diff = _all_equal(plus[a], plus[b], tolerance)
            if same:
                out.append(DegeneracyClass(a, b, DegeneracyKind.PERSISTENT, same_diff))
                continue
            marks = []
            gaps = [None if (x is None or y is None) else x - y
                    for x, y in zip(plus[a], plus[b])]
            for j, g in enumerate(gaps):
                if g == 0:
                    marks.append(grid[j])
                elif j + 1 < len(gaps) and g is not None and gaps[j + 1] not in (None, 0) \
                        and (g > 0) != (gaps[j + 1] > 0):
                    marks.append(0.5 * (grid[j] + grid[j + 1]))
            kind = DegeneracyKind.OCCASIONAL if marks else DegeneracyKind.NONE
            out.append(DegeneracyClass(a, b, kind, same_diff, tuple(marks)))
    return out
