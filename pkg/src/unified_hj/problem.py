"""Problem files: one JSON document per experiment."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping

from .dynamics import LagrangianSystem, bind_params
from .hj import Grid, UnifiedSection
from .jetspace import JetAtlas
from .symexpr import ParseContext, ParseError, is_parameter_name, parse_expr, parse_token


class ProblemError(ValueError):
    """Malformed problem file (CLI exit code 2)."""


_TOP_KEYS = {"n", "k", "parameters", "lagrangian", "section", "grid", "integrate", "tolerance", "seed"}
_INTEGRATE_KEYS = {"t0", "t1", "dt", "initial", "tolerance"}


def _number(x, what) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ProblemError(f"{what} must be a number, got {x!r}")
    return float(x)


@dataclass(frozen=True)
class ProblemSpec:
    n: int
    k: int
    lagrangian: str
    parameters: Mapping[str, float] = field(default_factory=dict)
    section: Mapping[str, str] | None = None
    grid: Mapping[str, Mapping[str, float]] | None = None
    integrate: Mapping[str, Any] | None = None
    tolerance: float = 1e-9
    seed: int = 0

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ProblemSpec":
        if not isinstance(d, Mapping):
            raise ProblemError("problem must be a JSON object")
        unknown = set(d) - _TOP_KEYS
        if unknown:
            raise ProblemError(f"unknown field(s): {', '.join(sorted(unknown))}")
        for key in ("n", "k", "lagrangian"):
            if key not in d:
                raise ProblemError(f"missing required field {key!r}")
        n, k = d["n"], d["k"]
        if not (isinstance(n, int) and not isinstance(n, bool) and n >= 1):
            raise ProblemError("n must be a positive integer")
        if not (isinstance(k, int) and not isinstance(k, bool) and k >= 1):
            raise ProblemError("k must be a positive integer")
        if not isinstance(d["lagrangian"], str):
            raise ProblemError("lagrangian must be an expression string")
        params = d.get("parameters", {}) or {}
        if not isinstance(params, Mapping):
            raise ProblemError("parameters must be an object")
        for name, v in params.items():
            if not is_parameter_name(name):
                raise ProblemError(f"invalid parameter name {name!r}")
            _number(v, f"parameter {name}")
        tol = _number(d.get("tolerance", 1e-9), "tolerance")
        seed = d.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ProblemError("seed must be an integer")
        section = d.get("section")
        if section is not None and (not isinstance(section, Mapping)
                                    or not all(isinstance(v, str) for v in section.values())):
            raise ProblemError("section must map coordinate tokens to expression strings")
        grid = d.get("grid")
        if grid is not None:
            if not isinstance(grid, Mapping):
                raise ProblemError("grid must be an object")
            for tok, ax in grid.items():
                if not isinstance(ax, Mapping) or set(ax) != {"min", "max", "count"}:
                    raise ProblemError(f"grid axis {tok!r} needs exactly min, max, count")
                _number(ax["min"], f"grid {tok}.min")
                _number(ax["max"], f"grid {tok}.max")
                if not isinstance(ax["count"], int) or isinstance(ax["count"], bool) or ax["count"] < 1:
                    raise ProblemError(f"grid {tok}.count must be a positive integer")
        integ = d.get("integrate")
        if integ is not None:
            if not isinstance(integ, Mapping):
                raise ProblemError("integrate must be an object")
            unknown = set(integ) - _INTEGRATE_KEYS
            if unknown:
                raise ProblemError(f"unknown integrate field(s): {', '.join(sorted(unknown))}")
            for key in ("t0", "t1", "dt", "initial"):
                if key not in integ:
                    raise ProblemError(f"integrate block is missing {key!r}")
            t0, t1, dt = (_number(integ[x], f"integrate.{x}") for x in ("t0", "t1", "dt"))
            if not dt > 0 or not t1 > t0:
                raise ProblemError("integrate needs dt > 0 and t1 > t0")
            if not isinstance(integ["initial"], Mapping):
                raise ProblemError("integrate.initial must map tokens to numbers")
            for tok, v in integ["initial"].items():
                _number(v, f"initial {tok}")
        spec = cls(n, k, d["lagrangian"], dict(params), section, grid, integ, tol, seed)
        spec._validate()
        return spec

    @classmethod
    def load(cls, path) -> "ProblemSpec":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ProblemError(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ProblemError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"n": self.n, "k": self.k, "parameters": dict(self.parameters),
                             "lagrangian": self.lagrangian}
        if self.section is not None:
            d["section"] = dict(self.section)
        if self.grid is not None:
            d["grid"] = {t: dict(ax) for t, ax in self.grid.items()}
        if self.integrate is not None:
            d["integrate"] = {key: (dict(v) if isinstance(v, Mapping) else v)
                              for key, v in self.integrate.items()}
        d["tolerance"] = self.tolerance
        d["seed"] = self.seed
        return d

    @cached_property
    def atlas(self) -> JetAtlas:
        return JetAtlas(self.n, self.k)

    @property
    def context(self) -> ParseContext:
        return ParseContext.for_atlas(self.atlas, self.parameters)

    def _token(self, tok: str):
        try:
            return parse_token(tok, self.context)
        except ParseError as exc:
            raise ProblemError(str(exc)) from exc

    def _validate(self) -> None:
        self.lagrangian_expr  # parse errors surface here
        if self.section is not None:
            want = {c.token for c in self.atlas.upper + self.atlas.momenta}
            if set(self.section) != want:
                raise ProblemError(f"section keys must be exactly {sorted(want)}")
            self.section_obj
        if self.grid is not None:
            for tok in self.grid:
                v = self._token(tok)
                if v not in self.atlas.base:
                    raise ProblemError(f"grid coordinate {tok!r} is not a base coordinate")
        if self.integrate is not None:
            for tok in self.integrate["initial"]:
                if self._token(tok) not in self.atlas.w:
                    raise ProblemError(f"initial coordinate {tok!r} is not a coordinate of W")

    @cached_property
    def lagrangian_expr(self):
        try:
            return parse_expr(self.lagrangian, context=self.context)
        except ParseError as exc:
            raise ProblemError(f"lagrangian: {exc}") from exc

    @cached_property
    def section_obj(self) -> UnifiedSection | None:
        if self.section is None:
            return None
        try:
            s = UnifiedSection.from_strings(self.atlas, self.section, self.parameters)
        except ParseError as exc:
            raise ProblemError(f"section: {exc}") from exc
        except ValueError as exc:
            raise ProblemError(f"section: {exc}") from exc
        return s.bind(self.parameters)

    def system(self) -> LagrangianSystem:
        """System with every parameter bound to its (exact decimal) value."""
        lag = bind_params(self.lagrangian_expr, self.parameters)
        try:
            return LagrangianSystem(self.atlas, lag, {}, seed=self.seed)
        except ValueError as exc:
            raise ProblemError(str(exc)) from exc

    def grid_obj(self) -> Grid | None:
        if self.grid is None:
            return None
        axes = {self._token(t): (float(ax["min"]), float(ax["max"]), int(ax["count"]))
                for t, ax in self.grid.items()}
        return Grid(axes)

    def initial_point(self) -> dict:
        return {self._token(t): float(v) for t, v in self.integrate["initial"].items()}
