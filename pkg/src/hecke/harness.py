"""Experiment drivers behind the ``hecke`` command line.

Every driver returns a list of row dicts in a deterministic order; the CLI
only serializes them.  Orbit sets are cached on disk as
``orbit_q{q}_R{R}.txt`` and a cached set of larger radius is restricted
rather than regenerated.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .errors import DomainError
from .moments import (
    PHI_MODES,
    count_pairs,
    enumerate_Nq,
    orbit_density,
    pair_orbit_radius,
    phi_q,
    predicted_orbit_density,
    predicted_pair_density,
    sv_constant,
    tuple_census,
    iter_pairs,
)
from .orbit import OrbitSet, _as_fraction, generate_orbit
from .oracle3 import std_totient
from .ring import RingElement, minimal_polynomial, parse_element

log = logging.getLogger(__name__)

DEFAULT_SWEEP = (25, 50, 100, 200, 400)
SIG_DIGITS = 6


@dataclass
class ExperimentConfig:
    q: int = 3
    radii: tuple = DEFAULT_SWEEP
    k: int = 2
    ns: tuple | str = "auto"
    n_bound: Fraction = Fraction(4)
    phi_mode: str = "paper"
    refine_m: bool = False
    fmt: str = "csv"
    out: Path | None = None
    cache_dir: Path | None = None
    workers: int = 1
    budget: int = 2_000_000
    extra: dict = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        if self.q < 3:
            raise DomainError("q must be >= 3")
        if not self.radii:
            raise DomainError("at least one radius is required")
        radii = [_as_fraction(r) for r in self.radii]
        if any(r <= 0 for r in radii):
            raise DomainError("radii must be positive")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise DomainError("radius sweep must be strictly increasing")
        self.radii = tuple(radii)
        if self.phi_mode not in PHI_MODES:
            raise DomainError(f"phi mode must be one of {PHI_MODES}")
        if self.fmt not in ("csv", "json"):
            raise DomainError("format must be csv or json")
        if self.k < 1:
            raise DomainError("k must be >= 1")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")
        return self

    @property
    def r_max(self) -> Fraction:
        return self.radii[-1]


def parse_radii(text: str) -> tuple[Fraction, ...]:
    try:
        return tuple(Fraction(t.strip()) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise DomainError(f"bad radius list {text!r}") from exc


def parse_ns(text: str, q: int) -> tuple[RingElement, ...] | str:
    if text.strip() == "auto":
        return "auto"
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok:
            n = parse_element(tok, q)
            if not n:
                raise DomainError("n = 0 is not allowed")
            out.append(n)
    if not out:
        raise DomainError("empty n list")
    return tuple(out)


def read_config_file(path) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment.  Dashes in keys are
    normalized to underscores so keys may mirror the long flag names."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{lineno}: expected key=value")
        key, value = (t.strip() for t in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


# -- orbit cache ---------------------------------------------------------------------------

_CACHE_RE = re.compile(r"orbit_q(\d+)_R([0-9_]+)\.txt$")


def _radius_tag(R: Fraction) -> str:
    return str(R).replace("/", "_")


def _tag_radius(tag: str) -> Fraction:
    return Fraction(tag.replace("_", "/"))


class OrbitCache:
    """Generated orbit sets keyed by (q, R), optionally persisted to a directory."""

    def __init__(self, cache_dir: Path | None = None):
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self._mem: dict[int, OrbitSet] = {}
        self.written: list[Path] = []

    def path_for(self, q: int, R: Fraction) -> Path:
        assert self.cache_dir is not None
        return self.cache_dir / f"orbit_q{q}_R{_radius_tag(R)}.txt"

    def _on_disk(self, q: int) -> list[tuple[Fraction, Path]]:
        if self.cache_dir is None or not self.cache_dir.is_dir():
            return []
        found = []
        for p in self.cache_dir.iterdir():
            m = _CACHE_RE.match(p.name)
            if m and int(m.group(1)) == q:
                found.append((_tag_radius(m.group(2)), p))
        return sorted(found)

    def get(self, q: int, R) -> OrbitSet:
        R = _as_fraction(R)
        have = self._mem.get(q)
        if have is not None and have.radius >= R:
            return have if have.radius == R else have.restrict(R)
        for radius, path in self._on_disk(q):
            if radius >= R:
                log.info("loading cached orbit %s", path)
                try:
                    s = OrbitSet.from_file(path)
                except OSError as exc:
                    raise DomainError(f"cannot read orbit cache {path}: {exc}") from exc
                self._mem[q] = s
                return s if radius == R else s.restrict(R)
        log.info("generating V_%d within R=%s", q, R)
        s = generate_orbit(q, R)
        self._mem[q] = s
        if self.cache_dir is not None:
            self.store(s)
        return s

    def store(self, s: OrbitSet) -> Path:
        if self.cache_dir is None:
            raise DomainError("no cache directory configured")
        path = self.path_for(s.q, s.radius)
        try:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            s.to_file(path)
        except OSError as exc:
            raise DomainError(f"cannot write orbit cache {path}: {exc}") from exc
        self.written.append(path)
        return path


# -- formatting ------------------------------------------------------------------------------


def fmt_num(x) -> str:
    if isinstance(x, (int, str)):
        return str(x)
    if x is None:
        return ""
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return f"{float(x):.{SIG_DIGITS}g}"


def render(rows: Sequence[dict], columns: Sequence[str], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([{c: r.get(c) for c in columns} for r in rows], indent=2, default=str) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt_num(r.get(c)) for c in columns])
    return buf.getvalue()


def _rel_error(emp: float, pred: float):
    if pred == 0:
        return None
    return abs(emp - pred) / pred


# -- drivers ---------------------------------------------------------------------------------

GEN_COLUMNS = ["q", "R", "count", "density", "ratio_inv_c", "ratio_lambda_over_c"]


def run_gen(cfg: ExperimentConfig, cache: OrbitCache) -> list[dict]:
    """#(V_q in B(0,R)) / (pi R^2) against 1/c(q) and lambda_q/c(q)."""
    big = cache.get(cfg.q, cfg.r_max)
    inv_c = 1.0 / sv_constant(cfg.q).value
    lam_c = orbit_density(cfg.q)
    rows = []
    for R in cfg.radii:
        s = big if R == big.radius else big.restrict(R)
        dens = s.count / (math.pi * float(R) ** 2)
        rows.append(
            {
                "q": cfg.q,
                "R": str(R),
                "count": s.count,
                "density": dens,
                "ratio_inv_c": dens / inv_c,
                "ratio_lambda_over_c": dens / lam_c,
            }
        )
    return rows


PAIR_COLUMNS = [
    "q",
    "R",
    "n",
    "m",
    "count",
    "empirical_density",
    "predicted_density",
    "rel_error",
    "predicted_paper",
    "predicted_fundamental",
]


def resolve_ns(cfg: ExperimentConfig, cache: OrbitCache) -> list[RingElement]:
    if cfg.ns != "auto":
        return list(cfg.ns)
    poly = minimal_polynomial(cfg.q)
    bound = cfg.n_bound
    need = math.hypot(float(bound) * poly.lam_float + 1.0, float(bound)) + 1
    s = cache.get(cfg.q, max(Fraction(math.ceil(need)), Fraction(2)))
    return [n for n in enumerate_Nq(cfg.q, bound, s, cfg.phi_mode) if n.sign() > 0]


def run_pairs(cfg: ExperimentConfig, cache: OrbitCache) -> list[dict]:
    """Count_q(R, n)/R^2 across the sweep, next to both predictions."""
    ns = resolve_ns(cfg, cache)
    if not ns:
        return []
    n_max = max(abs(float(n)) for n in ns)
    s = cache.get(cfg.q, pair_orbit_radius(cfg.r_max, n_max))
    preds = {}
    for n in ns:
        p = predicted_pair_density(cfg.q, n, s, "paper")
        f = predicted_pair_density(cfg.q, n, s, "fundamental")
        preds[n] = (p.value, f.value)
    rows = []
    for R in cfg.radii:
        counts = count_pairs(cfg.q, R, s, ns=ns, refine_m=cfg.refine_m, workers=cfg.workers)
        r2 = float(R) ** 2
        if cfg.refine_m:
            items = sorted(counts.items(), key=lambda kv: (ns.index(kv[0][0]), float(kv[0][1]), kv[0][1].coeffs))
            for (n, m), cnt in items:
                pred = predicted_orbit_density(cfg.q, n)
                emp = cnt / r2
                rows.append(
                    {
                        "q": cfg.q, "R": str(R), "n": str(n), "m": str(m), "count": cnt,
                        "empirical_density": emp, "predicted_density": pred,
                        "rel_error": _rel_error(emp, pred),
                        "predicted_paper": pred, "predicted_fundamental": pred,
                    }
                )
            continue
        for n in ns:
            cnt = counts.get(n, 0)
            emp = cnt / r2
            paper, fund = preds[n]
            pred = paper if cfg.phi_mode == "paper" else fund
            rows.append(
                {
                    "q": cfg.q, "R": str(R), "n": str(n), "m": "", "count": cnt,
                    "empirical_density": emp, "predicted_density": pred,
                    "rel_error": _rel_error(emp, pred),
                    "predicted_paper": paper, "predicted_fundamental": fund,
                }
            )
    return rows


SLOPE_COLUMNS = ["q", "n", "a_over_b", "c_over_d"]


def run_slopes(cfg: ExperimentConfig, cache: OrbitCache) -> list[dict]:
    """Points (a/b, c/d) in [0,1]^2 for [[a, b], [c, d]] = (v1 | v2) of determinant n."""
    ns = resolve_ns(cfg, cache)
    R = cfg.r_max
    n_max = max((abs(float(n)) for n in ns), default=1.0)
    s = cache.get(cfg.q, pair_orbit_radius(R, n_max))
    rows = []
    for n in ns:
        pts = set()
        for v1, v2 in iter_pairs(s, R, n):
            a, c = float(v1.x), float(v1.y)
            b, d = float(v2.x), float(v2.y)
            if b == 0 or d == 0:
                continue
            x, y = a / b + 0.0, c / d + 0.0
            if 0 <= x <= 1 and 0 <= y <= 1:
                pts.add((x, y))
        rows.extend({"q": cfg.q, "n": str(n), "a_over_b": x, "c_over_d": y} for x, y in sorted(pts))
    return rows


TUPLE_COLUMNS = ["q", "R", "k", "class", "count"]


def run_tuples(cfg: ExperimentConfig, cache: OrbitCache):
    """Census of k-tuple classes; returns (rows, summary dict)."""
    R = cfg.r_max
    s = cache.get(cfg.q, R)
    res = tuple_census(cfg.q, R, cfg.k, s, budget=cfg.budget)
    rows = [
        {"q": cfg.q, "R": str(R), "k": cfg.k, "class": res.labels[key], "count": cnt}
        for key, cnt in res.counts.items()
    ]
    summary = {
        "tuples": res.total,
        "classes": len(res.counts),
        "criterion_checks": res.verified,
        "criterion_failures": res.failures,
    }
    return rows, summary


PHI_COLUMNS = ["q", "n", "phi_paper", "phi_fundamental", "totient"]


def run_phi(cfg: ExperimentConfig, cache: OrbitCache) -> list[dict]:
    ns = list(cfg.ns) if cfg.ns != "auto" else _integers_up_to(cfg)
    if not ns:
        return []
    poly = minimal_polynomial(cfg.q)
    n_max = max(abs(float(n)) for n in ns)
    need = math.hypot(n_max * poly.lam_float + 1.0, n_max) + 1
    s = cache.get(cfg.q, Fraction(math.ceil(need)))
    rows = []
    for n in ns:
        rows.append(
            {
                "q": cfg.q,
                "n": str(n),
                "phi_paper": phi_q(n, s, "paper"),
                "phi_fundamental": phi_q(n, s, "fundamental"),
                "totient": std_totient(n.coeffs[0]) if cfg.q == 3 else "",
            }
        )
    return rows


def _integers_up_to(cfg: ExperimentConfig) -> list[RingElement]:
    poly = minimal_polynomial(cfg.q)
    return [poly.from_int(i) for i in range(1, math.floor(cfg.n_bound) + 1)]


NQ_COLUMNS = ["q", "n", "n_float", "phi"]


def run_nq(cfg: ExperimentConfig, cache: OrbitCache) -> list[dict]:
    poly = minimal_polynomial(cfg.q)
    bound = cfg.n_bound
    need = math.hypot(float(bound) * poly.lam_float + 1.0, float(bound)) + 1
    s = cache.get(cfg.q, Fraction(math.ceil(need)))
    return [
        {"q": cfg.q, "n": str(n), "n_float": float(n), "phi": phi_q(n, s, cfg.phi_mode)}
        for n in enumerate_Nq(cfg.q, bound, s, cfg.phi_mode)
    ]
