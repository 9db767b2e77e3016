"""Experiment configuration: flat YAML keys validated into a dataclass."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import yaml

from . import generators as gen
from .lattice import build_grid
from .norms import GridFunction, Weight
from .rough import OmegaKernel

KERNELS = ("hilbert", "alternating", "arcs")
SYMBOLS = ("log", "constant", "indicator")
WEIGHTS = ("constant", "power", "checkerboard", "exp_bmo", "suite")


class ConfigError(ValueError):
    """Schema violation in an experiment configuration."""

    def __init__(self, field_name, message):
        self.field = field_name
        super().__init__(f"config field '{field_name}': {message}")


@dataclass
class ExperimentConfig:
    """All knobs of a command-line run.

    Weight families are given by ``weight`` (the type) and ``weight_params``
    (one member per entry: ``delta`` for power weights, the value for
    constants, ``gamma`` for ``exp(gamma b)``; checkerboards take the pair
    ``[a, b]``).
    """

    n: int = 1
    L: float = 1.0
    m: int = 8
    kernel: str = "hilbert"
    kernel_value: float = 1.0
    kernel_arcs: list = field(default_factory=list)
    kernel_count: int = 16
    symbol: str = "log"
    symbol_center: float = 0.0
    symbol_value: float = 1.0
    symbol_box: list = field(default_factory=lambda: [-0.5, 0.5])
    weight: str = "suite"
    weight_params: list = field(default_factory=list)
    p: float = 2.0
    q: float | None = 1.5
    r: float = 2.0
    s: float = 2.0
    probe_signs: int = 32
    probe_indicators: int = 16
    probe_bumps: int = 8
    power_iters: int = 8
    triples: int = 1
    lemma_functions: int = 20
    seed: int = 0
    max_terms: int = 16
    tau: float | None = None
    out: str = "results"

    def __post_init__(self):
        self.validate()

    # -------------------------------------------------------------- checks

    def _number(self, name, lo=None, strict=False, integer=False, optional=False):
        v = getattr(self, name)
        if v is None and optional:
            return
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(name, f"expected a number, got {v!r}")
        if integer and int(v) != v:
            raise ConfigError(name, f"expected an integer, got {v!r}")
        if not math.isfinite(v):
            raise ConfigError(name, f"must be finite, got {v!r}")
        if lo is not None and ((v <= lo) if strict else (v < lo)):
            raise ConfigError(name, f"must be {'>' if strict else '>='} {lo:g}, got {v!r}")
        setattr(self, name, int(v) if integer else float(v))

    def validate(self):
        self._number("n", 1, integer=True)
        if self.n not in (1, 2):
            raise ConfigError("n", f"only dimensions 1 and 2 are supported, got {self.n}")
        self._number("L", 0, strict=True)
        self._number("m", 1, integer=True)
        limit = 12 if self.n == 1 else 7
        if self.m > limit:
            raise ConfigError("m", f"resolution {self.m} exceeds {limit} in dimension {self.n}")
        self._number("p", 1, strict=True)
        self._number("q", 1, strict=True, optional=True)
        if self.q is not None and not self.q < self.p:
            raise ConfigError("q", f"need 1 < q < p, got q={self.q:g} >= p={self.p:g}")
        self._number("r", 1, strict=True)
        self._number("s", 1, strict=True)
        for name in ("probe_signs", "probe_indicators", "probe_bumps", "power_iters"):
            self._number(name, 0, integer=True)
        if self.probe_signs + self.probe_indicators + self.probe_bumps == 0:
            raise ConfigError("probe_signs", "the probe set is empty")
        self._number("triples", 1, integer=True)
        self._number("lemma_functions", 1, integer=True)
        self._number("seed", 0, integer=True)
        self._number("max_terms", 8, integer=True)
        self._number("tau", 0, strict=True, optional=True)
        self._number("kernel_value", None)
        self._number("kernel_count", 2, integer=True)
        self._number("symbol_center", None)
        self._number("symbol_value", None)
        if self.kernel not in KERNELS:
            raise ConfigError("kernel", f"expected one of {', '.join(KERNELS)}, got {self.kernel!r}")
        if self.kernel == "hilbert" and self.n != 1:
            raise ConfigError("kernel", "the hilbert kernel needs n = 1")
        if self.kernel in ("alternating", "arcs") and self.n != 2:
            raise ConfigError("kernel", f"the {self.kernel} kernel needs n = 2")
        if self.kernel_count % 2:
            raise ConfigError("kernel_count", "the number of arcs must be even")
        if self.kernel == "arcs" and not self.kernel_arcs:
            raise ConfigError("kernel_arcs", "an arcs kernel needs a nonempty value list")
        if self.symbol not in SYMBOLS:
            raise ConfigError("symbol", f"expected one of {', '.join(SYMBOLS)}, got {self.symbol!r}")
        if not (isinstance(self.symbol_box, list) and len(self.symbol_box) == 2):
            raise ConfigError("symbol_box", "expected a pair [lo, hi]")
        if self.weight not in WEIGHTS:
            raise ConfigError("weight", f"expected one of {', '.join(WEIGHTS)}, got {self.weight!r}")
        if not isinstance(self.weight_params, list):
            raise ConfigError("weight_params", "expected a list")
        if self.weight == "checkerboard" and self.weight_params and len(self.weight_params) != 2:
            raise ConfigError("weight_params", "a checkerboard takes the pair [a, b]")
        if self.weight == "constant" and any(not v > 0 for v in self.weight_params):
            raise ConfigError("weight_params", "constant weights must be positive")
        if self.weight == "checkerboard" and any(not v > 0 for v in self.weight_params):
            raise ConfigError("weight_params", "checkerboard values must be positive")
        if self.kernel == "arcs":
            try:
                OmegaKernel.arcs(self.kernel_arcs)
            except ValueError as exc:
                raise ConfigError("kernel_arcs", str(exc)) from None
        if not isinstance(self.out, str) or not self.out:
            raise ConfigError("out", "expected a directory path")

    # ---------------------------------------------------------- loading

    @classmethod
    def from_dict(cls, data):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError("<root>", "expected a mapping of keys to values")
        known = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(str(key), "unknown key")
        return cls(**data)

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
        except yaml.YAMLError as exc:
            raise ConfigError("<file>", f"not valid YAML: {exc}") from None
        return cls.from_dict(data)

    def replace(self, **changes):
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    # --------------------------------------------------------- builders

    def grid(self):
        return build_grid(self.n, self.L, self.m)

    def omega(self):
        if self.kernel == "hilbert":
            return OmegaKernel.hilbert(self.kernel_value)
        if self.kernel == "alternating":
            return OmegaKernel.alternating(self.kernel_count, self.kernel_value)
        return OmegaKernel.arcs(self.kernel_arcs)

    def symbol_fn(self, grid):
        if self.symbol == "log":
            return gen.log_symbol(grid, self.symbol_center * grid.L)
        if self.symbol == "constant":
            return GridFunction.constant(grid, self.symbol_value)
        lo, hi = (float(v) * grid.L for v in self.symbol_box)
        return gen.indicator(grid, lo, hi)

    def weights(self, grid):
        """Ordered ``{name: Weight}`` for the configured family."""
        params = list(self.weight_params)
        if self.weight == "suite":
            return gen.weight_suite(grid)
        if self.weight == "constant":
            return {f"constant({v:g})": Weight.constant(grid, float(v)) for v in params or [1.0]}
        if self.weight == "power":
            out = {}
            for d in params or [-0.5]:
                try:
                    out[f"power({d:g})"] = gen.power_weight(grid, float(d))
                except ValueError as exc:
                    raise ConfigError("weight_params", f"delta={d}: {exc}") from None
            return out
        if self.weight == "checkerboard":
            a, b = params or [1.0, 16.0]
            return {f"checkerboard({a:g},{b:g})": gen.checkerboard_weight(grid, a, b)}
        sym = self.symbol_fn(grid)
        return {f"exp_bmo({g:g})": gen.exp_bmo_weight(grid, float(g), sym) for g in params or [-0.4]}

    def probe_counts(self):
        return {"signs": self.probe_signs, "indicators": self.probe_indicators,
                "bumps": self.probe_bumps}
