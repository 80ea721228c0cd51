"""Closed-form loss rates, threshold margins and grid sweeps.

The single-photon-source loss rate and the 1/256 success constant are taken
as given inputs; they are not simulated here.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .fock import InvalidParams

SCHEMES = ("epr", "single_photon", "cavity")
CSV_HEADER = (
    "scheme",
    "eta_s",
    "eta_d",
    "f",
    "p2",
    "p3",
    "success_prob",
    "margin_loss_threshold",
    "margin_sps_threshold",
    "pass",
)


def _unit(name: str, value: float) -> float:
    if not 0.0 <= value <= 1.0:
        raise InvalidParams(f"{name}={value} outside [0, 1]")
    return float(value)


@dataclass(frozen=True)
class ThresholdParams:
    eta_s: float
    eta_d: float
    f: Optional[float] = None
    p2: Optional[float] = None
    p3: Optional[float] = None

    def __post_init__(self):
        _unit("eta_s", self.eta_s)
        _unit("eta_d", self.eta_d)
        if self.f is not None:
            _unit("f", self.f)


def loss_rate_sps(eta_s: float, eta_d: float) -> float:
    """Effective per-photon loss of GHZ states built from single-photon sources."""
    eta_s, eta_d = _unit("eta_s", eta_s), _unit("eta_d", eta_d)
    f = 1.0 - eta_s / (2.0 - eta_s * eta_d)
    if not -1e-15 <= f <= 1.0 + 1e-15:
        raise InvalidParams(f"loss rate {f} outside [0, 1]")
    return min(1.0, max(0.0, f))


def meets_loss_threshold(f: float, eta_d: float) -> tuple[bool, float]:
    """Strict test of (1 - f) * eta_d > 1/2; returns (passes, margin)."""
    margin = (1.0 - f) * eta_d - 0.5
    return margin > 0.0, margin


def meets_sps_threshold(eta_s: float, eta_d: float) -> tuple[bool, float]:
    """Strict test of eta_s * eta_d > 2/3; returns (passes, margin)."""
    margin = eta_s * eta_d - 2.0 / 3.0
    return margin > 0.0, margin


def loss_rate_cavity(p2: float, p3: float) -> float:
    if p2 < 0.0 or p3 < 0.0:
        raise InvalidParams("p2 and p3 must be non-negative")
    if p2 + p3 <= 0.0:
        raise InvalidParams("p2 + p3 must be positive")
    return p2 / (p2 + p3)


def success_prob_formula(scheme: str, eta_s: float, eta_d: float) -> float:
    eta_s, eta_d = _unit("eta_s", eta_s), _unit("eta_d", eta_d)
    if scheme == "epr":
        return eta_s**3 * eta_d**3 / 32
    if scheme == "single_photon":
        return eta_s**3 * eta_d**3 / 256
    raise InvalidParams(f"no success-probability formula for scheme {scheme!r}")


def margins_agree(eta_s: float, eta_d: float, tol: float = 1e-12) -> bool:
    """Whether both single-photon threshold forms give the same verdict.

    Points within ``tol`` of the boundary count as agreeing when both margins
    vanish there.
    """
    _, m_loss = meets_loss_threshold(loss_rate_sps(eta_s, eta_d), eta_d)
    _, m_sps = meets_sps_threshold(eta_s, eta_d)
    if abs(m_loss) <= tol and abs(m_sps) <= tol:
        return True
    return np.sign(m_loss) == np.sign(m_sps)


# --- sweeps -----------------------------------------------------------------


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    steps: int

    def __post_init__(self):
        if self.steps < 2:
            raise InvalidParams(f"axis {self.name} needs at least 2 steps")
        if self.hi < self.lo:
            raise InvalidParams(f"axis {self.name}: max below min")
        if self.name in ("eta_s", "eta_d", "f") and not (0.0 <= self.lo and self.hi <= 1.0):
            raise InvalidParams(f"axis {self.name} must stay within [0, 1]")
        if self.name not in ("eta_s", "eta_d", "f", "p2", "p3", "ratio"):
            raise InvalidParams(f"unknown sweep parameter {self.name!r}")

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)

    @classmethod
    def parse(cls, text: str) -> Axis:
        """Parse ``"name:min:max:steps"``."""
        try:
            name, lo, hi, steps = text.split(":")
            return cls(name, float(lo), float(hi), int(steps))
        except ValueError as exc:
            raise InvalidParams(f"bad grid axis {text!r}: {exc}") from None

    def __str__(self) -> str:
        return f"{self.name}:{self.lo!r}:{self.hi!r}:{self.steps}"


@dataclass(frozen=True)
class SweepSpec:
    """Grid over one or more axes. Unswept parameters take the fixed values."""

    scheme: str
    axes: tuple[Axis, ...]
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidParams(f"unknown scheme {self.scheme!r}")
        if not self.axes:
            raise InvalidParams("a sweep needs at least one axis")

    def points(self) -> Iterable[dict]:
        names = [a.name for a in self.axes]
        for combo in itertools.product(*(a.values() for a in self.axes)):
            point = dict(self.fixed)
            point.update(zip(names, (float(v) for v in combo)))
            yield point


def evaluate_point(scheme: str, point: dict) -> dict:
    """All applicable formulas at one parameter point, as a CSV row dict."""
    eta_s = point.get("eta_s", 1.0)
    eta_d = point.get("eta_d", 1.0)
    row = dict.fromkeys(CSV_HEADER, None)
    row.update(scheme=scheme, eta_s=eta_s, eta_d=eta_d)
    if scheme == "epr":
        f = 0.0
        row["success_prob"] = success_prob_formula("epr", eta_s, eta_d)
    elif scheme == "single_photon":
        f = loss_rate_sps(eta_s, eta_d)
        row["success_prob"] = success_prob_formula("single_photon", eta_s, eta_d)
        row["margin_sps_threshold"] = meets_sps_threshold(eta_s, eta_d)[1]
    else:
        p3 = point.get("p3", 1.0)
        p2 = point["ratio"] * p3 if "ratio" in point else point.get("p2", 0.0)
        f = loss_rate_cavity(p2, p3)
        row.update(p2=p2, p3=p3)
    passed, margin = meets_loss_threshold(f, eta_d)
    row.update(f=f, margin_loss_threshold=margin, **{"pass": passed})
    return row


def sweep(spec: SweepSpec) -> list[dict]:
    """Rows in row-major order over the axes (last axis fastest)."""
    return [evaluate_point(spec.scheme, p) for p in spec.points()]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def rows_to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(row.get(col)) for col in CSV_HEADER])
    return buf.getvalue()
