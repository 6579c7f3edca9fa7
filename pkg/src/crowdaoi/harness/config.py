"""Experiment configuration and its ``key = value`` text form.

Example::

    preset = fig4
    horizon = 200000
    beta = 0.5, 5, 50
    process.arrival = bernoulli(0.9)
    process.services = bernoulli(0.11) x5, bernoulli(0.09) x5
    prices.values = 0.25, 0.5, 0.75, 1
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..core import Bernoulli, ConfigurationError, Deterministic, Discrete, PriceProcess, ProcessSpec

POA_MODES = ("deterministic", "stochastic", "none")
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class ExperimentConfig:
    process: ProcessSpec
    prices: PriceProcess = field(default_factory=PriceProcess)
    horizon: int = 2_000_000
    warmup: int | None = None
    replications: int = 10
    base_seed: int = 1
    policy: tuple[str, ...] = ("selfish",)
    beta: tuple[float, ...] = (1.0,)
    gamma: tuple[float, ...] = (1.0,)
    poa: str = "stochastic"
    tie_break: str = "random"
    preset: str | None = None
    output: str | None = None
    format: str = "csv"

    def __post_init__(self) -> None:
        for name in ("policy", "beta", "gamma"):
            val = getattr(self, name)
            val = (val,) if isinstance(val, (str, int, float)) else tuple(val)
            if not val:
                raise ConfigurationError(f"{name} list must not be empty")
            object.__setattr__(self, name, val)
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        if self.horizon < 1:
            raise ConfigurationError("horizon must be positive")
        if self.warmup is not None and not 0 <= self.warmup < self.horizon:
            raise ConfigurationError("need 0 <= warmup < horizon")
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")
        if self.poa not in POA_MODES:
            raise ConfigurationError(f"poa must be one of {POA_MODES}")
        if self.format not in FORMATS:
            raise ConfigurationError(f"format must be one of {FORMATS}")
        if any(b < 0 for b in self.beta) or any(g < 0 for g in self.gamma):
            raise ConfigurationError("beta and gamma must be non-negative")
        if self.base_seed < 0:
            raise ConfigurationError("seed must be a non-negative integer")

    @property
    def n(self) -> int:
        return self.process.n

    @property
    def effective_warmup(self) -> int:
        return self.horizon // 10 if self.warmup is None else self.warmup

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    # -- text form ---------------------------------------------------------

    def to_text(self) -> str:
        pp = self.prices
        lines = [
            f"preset = {self.preset or ''}",
            f"horizon = {self.horizon}",
            f"warmup = {'' if self.warmup is None else self.warmup}",
            f"replications = {self.replications}",
            f"seed = {self.base_seed}",
            f"policy = {', '.join(self.policy)}",
            f"beta = {_floats(self.beta)}",
            f"gamma = {_floats(self.gamma)}",
            f"poa = {self.poa}",
            f"tie_break = {self.tie_break}",
            f"output = {self.output or ''}",
            f"format = {self.format}",
            f"process.arrival = {self.process.arrival.describe()}",
            f"process.services = {format_services(self.process.services)}",
            f"process.r_max = {self.process.r_max}",
            f"prices.kind = {pp.kind}",
            f"prices.values = {_floats(pp.value_set)}",
            f"prices.period = {pp.change_period}",
            f"prices.min = {pp.p_min!r}",
            f"prices.max = {pp.p_max!r}",
            f"prices.initial = {'random' if pp.initial is None else _floats(pp.initial)}",
        ]
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")


def _floats(xs) -> str:
    return ", ".join(repr(float(x)) for x in xs)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_DIST = re.compile(r"^\s*(\w+)\s*\((.*)\)\s*$")


def split_top(text: str, sep: str = ",") -> list[str]:
    """Split on ``sep`` outside parentheses."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail or out:
        out.append(tail)
    return [s for s in out if s]


def parse_distribution(text: str) -> Discrete:
    m = _DIST.match(text)
    if not m:
        raise ConfigurationError(f"cannot parse distribution {text!r}")
    kind, args = m.group(1).lower(), m.group(2)
    try:
        if kind == "deterministic":
            return Deterministic(k=int(args))
        if kind == "bernoulli":
            return Bernoulli(p=float(args))
        if kind == "discrete":
            pairs = [a.split(":") for a in split_top(args)]
            return Discrete(tuple(int(v) for v, _ in pairs), tuple(float(p) for _, p in pairs))
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"bad arguments in {text!r}: {exc}") from None
    raise ConfigurationError(f"unknown distribution kind {kind!r}")


def parse_services(text: str, n: int | None = None) -> tuple[Discrete, ...]:
    out: list[Discrete] = []
    for item in split_top(text):
        m = re.match(r"^(.*\))\s*[xX*]\s*(\d+)$", item)
        dist, reps = (m.group(1), int(m.group(2))) if m else (item, 1)
        out.extend([parse_distribution(dist)] * reps)
    if n is not None and len(out) == 1:
        out = out * n
    if n is not None and len(out) != n:
        raise ConfigurationError(f"expected {n} service distributions, got {len(out)}")
    return tuple(out)


def format_services(services) -> str:
    groups: list[list] = []
    for d in services:
        if groups and groups[-1][0] == d:
            groups[-1][1] += 1
        else:
            groups.append([d, 1])
    return ", ".join(d.describe() + (f" x{c}" if c > 1 else "") for d, c in groups)


def parse_text(text: str) -> dict[str, str]:
    items: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"line {lineno}: empty key")
        items[key.lower()] = value
    return items


_TOP_KEYS = {
    "preset", "n", "horizon", "warmup", "replications", "seed", "policy", "beta", "gamma",
    "poa", "tie_break", "output", "format",
    "process.arrival", "process.services", "process.r_max",
    "prices.kind", "prices.values", "prices.period", "prices.min", "prices.max", "prices.initial",
}


def _list(value: str, conv=float) -> tuple:
    try:
        return tuple(conv(v) for v in split_top(value))
    except ValueError:
        raise ConfigurationError(f"cannot parse list {value!r}") from None


def _int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigurationError(f"{key} must be an integer, got {value!r}") from None


def apply_items(base: ExperimentConfig | None, items: dict[str, str]) -> ExperimentConfig:
    """Layer parsed ``key = value`` items over ``base`` (a preset or None)."""
    unknown = set(items) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    kw: dict = {}
    n = _int("n", items["n"]) if items.get("n") else (base.n if base else None)

    if "process.arrival" in items or "process.services" in items or "process.r_max" in items or "n" in items:
        arrival = parse_distribution(items["process.arrival"]) if "process.arrival" in items else (base.process.arrival if base else None)
        if "process.services" in items:
            services = parse_services(items["process.services"], n)
        elif base is not None:
            services = base.process.services
            if n is not None and len(services) != n:
                if len(set(services)) != 1:
                    raise ConfigurationError("cannot resize heterogeneous services; set process.services")
                services = (services[0],) * n
        else:
            services = None
        if arrival is None or services is None:
            raise ConfigurationError("process.arrival and process.services are required without a preset")
        r_max = _int("process.r_max", items["process.r_max"]) if items.get("process.r_max") else None
        kw["process"] = ProcessSpec(arrival, services, r_max)
    elif base is None:
        raise ConfigurationError("process.arrival and process.services are required without a preset")

    price_keys = {k for k in items if k.startswith("prices.")}
    if price_keys:
        pp = base.prices if base else PriceProcess()
        pk: dict = {}
        if "prices.kind" in items:
            pk["kind"] = items["prices.kind"]
        if "prices.values" in items:
            pk["value_set"] = _list(items["prices.values"])
        if "prices.period" in items:
            pk["change_period"] = _int("prices.period", items["prices.period"])
        if "prices.min" in items:
            pk["p_min"] = float(items["prices.min"]) if items["prices.min"] else None
        if "prices.max" in items:
            pk["p_max"] = float(items["prices.max"]) if items["prices.max"] else None
        if "prices.initial" in items:
            v = items["prices.initial"].strip().lower()
            pk["initial"] = None if v in ("", "random", "uniform-random") else _list(v)
        reshaped = "kind" in pk or "value_set" in pk
        kw["prices"] = PriceProcess(
            value_set=pk.get("value_set", pp.value_set),
            change_period=pk.get("change_period", pp.change_period),
            kind=pk.get("kind", pp.kind),
            p_min=pk.get("p_min", None if reshaped else pp.p_min),
            p_max=pk.get("p_max", None if reshaped else pp.p_max),
            initial=pk.get("initial", pp.initial),
        )

    simple = {
        "horizon": lambda v: _int("horizon", v),
        "replications": lambda v: _int("replications", v),
        "seed": lambda v: _int("seed", v),
        "policy": lambda v: tuple(s.strip() for s in v.split(",") if s.strip()),
        "beta": _list,
        "gamma": _list,
        "poa": str,
        "tie_break": str,
        "format": str,
    }
    for key, conv in simple.items():
        if key in items:
            kw["base_seed" if key == "seed" else key] = conv(items[key])
    if "warmup" in items:
        kw["warmup"] = _int("warmup", items["warmup"]) if items["warmup"] else None
    if "output" in items:
        kw["output"] = items["output"] or None
    if "preset" in items:
        kw["preset"] = items["preset"] or None
    if base is None:
        return ExperimentConfig(**kw)
    return replace(base, **kw)


def config_fields() -> list[str]:
    return [f.name for f in fields(ExperimentConfig)]


def load_config(path=None, preset: str | None = None) -> ExperimentConfig:
    """Read a config file, layered over ``preset`` (or the file's own preset key)."""
    from .presets import get_preset

    items = parse_text(Path(path).read_text(encoding="utf-8")) if path else {}
    name = preset or items.get("preset") or None
    if preset:
        items["preset"] = preset
    base = get_preset(name) if name else None
    return apply_items(base, items)
