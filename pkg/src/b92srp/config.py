"""Run configuration: flat ``key = value`` files plus command-line overrides.

Lines starting with ``#`` are comments; keys are case-sensitive and match
the field names of :class:`RunConfig`.  Defaults describe a fibre link
with 0.21 dB/km loss, 4.5% detector efficiency and dark-count probability
1.7e-6, driven at ``mu = 10^6.59``, ``kappa = 10^-0.92``, ``a = 3.2``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .params import ChannelParams, ProtocolParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    mu: float = 10**6.59
    kappa: float = 10**-0.92
    a: float = 3.2
    t: float = 0.01
    xi: float = 0.21
    eta_bob: float = 0.045
    p: float = 1.7e-6
    l: float = 0.0
    l_min: float = 0.0
    l_max: float = 150.0
    l_step: float = 5.0
    trials: int = 1_000_000
    seed: int = 0
    n_pairs: float = 1e12
    delta: float = 1e-10
    use_oracle: bool = False
    two_eta: bool = False
    out: str = ""

    def protocol(self) -> ProtocolParams:
        return ProtocolParams(mu=self.mu, kappa=self.kappa, a=self.a, t=self.t)

    def channel(self, l: float | None = None) -> ChannelParams:
        return ChannelParams(xi=self.xi, l=self.l if l is None else l, eta_bob=self.eta_bob, p=self.p)

    def validate(self) -> "RunConfig":
        try:
            self.protocol()
            self.channel()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.l_step <= 0:
            raise ConfigError("l_step must be positive")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.n_pairs >= 1:
            raise ConfigError("n_pairs must be >= 1")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        return self

    def l_grid(self) -> list[float]:
        if self.l_max < self.l_min:
            return []
        n = int(math.floor((self.l_max - self.l_min) / self.l_step + 1e-9))
        return [round(self.l_min + k * self.l_step, 10) for k in range(n + 1)]

    def to_text(self) -> str:
        lines = [f"{k} = {_format(v)}" for k, v in asdict(self).items()]
        return "\n".join(lines) + "\n"


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _coerce(key: str, raw: str):
    kind = _TYPES[key]
    raw = raw.strip()
    if raw == "" and kind != "str":
        raise ConfigError(f"field '{key}' has no value")
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(float(raw)) if raw.lower() not in ("inf", "nan") else int(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise ConfigError(f"field '{key}': cannot parse {raw!r} as {kind}") from None


def parse_text(text: str, base: RunConfig | None = None) -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown field '{key}'")
        values[key] = _coerce(key, raw)
    return replace(base or RunConfig(), **values)


def load(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_text(text, base)


def with_overrides(cfg: RunConfig, overrides: dict) -> RunConfig:
    """Apply the non-``None`` entries of ``overrides``."""
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
