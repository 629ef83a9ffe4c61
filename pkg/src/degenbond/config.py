"""Run configuration: line-oriented key=value text with optional [section]
headers (sections are organizational; keys live in one flat namespace).

Blank lines and full-line # comments are ignored.  Unknown keys raise
ValidationError naming the field; malformed lines raise ParseError with
the line (and column for expression errors).

Custom problems are defined entirely by expression strings; the analytic
derivatives w_prime, theta_prime and ww_prime_prime must be supplied as
strings too (nothing is differentiated numerically), and a manufactured
custom run additionally needs exact, exact_t, exact_r, exact_rr.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field as dc_field
from typing import Optional

from .errors import ParseError, ValidationError
from .expressions import compile_expression
from .mesh import SpatialMesh, graded_spatial, uniform_spatial, uniform_time, TimeMesh
from .model import (
    BUILTIN_PROBLEMS,
    DriftDegeneracy,
    ExactSolution,
    ProblemSpec,
    example_problem,
    validate_problem,
    with_manufactured_solution,
)

SCHEMES = ("fitted", "scheme_b", "both")
OUTPUTS = ("solution_csv", "rate_table_csv", "diagnostics_csv", "plotdata_csv")
_CASE_NAMES = {c.value: c for c in DriftDegeneracy}

_CUSTOM_REQUIRED = ("R", "T", "w", "w_prime", "ww_prime_prime", "theta", "theta_prime", "lambda")
_EXACT_KEYS = ("exact", "exact_t", "exact_r", "exact_rr")
_KNOWN_KEYS = {
    "problem", "N", "M", "xi", "scheme", "mesh", "grading", "manufactured",
    "outputs", "snapshot_t", "report_nodes", "nodes", "payoff", "case",
    "initial", *_CUSTOM_REQUIRED, *_EXACT_KEYS,
}


@dataclass
class RunConfig:
    problem_id: str
    n_nodes: int = 21
    m_steps: int = 1000
    xi: float = 0.5
    scheme: str = "fitted"
    mesh_kind: str = "uniform"
    grading: float = 1.0
    manufactured: bool = True
    outputs: tuple[str, ...] = ("solution_csv",)
    snapshot_t: Optional[float] = None
    report_nodes: Optional[tuple[int, ...]] = None   # None: unset, (): explicitly empty
    node_list: tuple[int, ...] = ()
    payoff: float = 1.0
    case_override: Optional[DriftDegeneracy] = None
    custom: dict = dc_field(default_factory=dict)   # raw expression strings
    raw_items: tuple[tuple[str, str], ...] = ()

    def canonical_text(self) -> str:
        """Effective configuration, serialized deterministically."""
        items = {
            "problem": self.problem_id,
            "N": str(self.n_nodes),
            "M": str(self.m_steps),
            "xi": f"{self.xi:.17g}",
            "scheme": self.scheme,
            "mesh": self.mesh_kind,
            "grading": f"{self.grading:.17g}",
            "manufactured": "true" if self.manufactured else "false",
            "outputs": ",".join(self.outputs),
            "payoff": f"{self.payoff:.17g}",
        }
        if self.snapshot_t is not None:
            items["snapshot_t"] = f"{self.snapshot_t:.17g}"
        if self.report_nodes is not None:
            items["report_nodes"] = ",".join(map(str, self.report_nodes))
        if self.node_list:
            items["nodes"] = ",".join(map(str, self.node_list))
        if self.case_override is not None:
            items["case"] = self.case_override.value
        for key, value in sorted(self.custom.items()):
            items[key] = value
        return "".join(f"{k}={v}\n" for k, v in items.items())

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]


def _parse_items(text: str) -> list[tuple[str, str, int]]:
    items = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ParseError("malformed section header", line=lineno)
            continue
        if "=" not in line:
            raise ParseError("expected key=value", line=lineno, column=1)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ParseError("missing key before '='", line=lineno, column=1)
        if key in seen:
            raise ParseError(f"duplicate key {key!r} (first at line {seen[key]})", line=lineno)
        seen[key] = lineno
        items.append((key, value, lineno))
    return items


def _to_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ValidationError(key, f"not a number: {value!r}") from None


def _to_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ValidationError(key, f"not an integer: {value!r}") from None


def _to_bool(key: str, value: str) -> bool:
    low = value.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValidationError(key, f"not a boolean: {value!r}")


def _to_int_list(key: str, value: str) -> tuple[int, ...]:
    if not value:
        return ()
    return tuple(_to_int(key, part.strip()) for part in value.split(","))


def _check_expression(key: str, value: str, variables: set[str], lineno: int) -> None:
    try:
        compile_expression(value, variables, bindings={"R": 1.0})
    except ParseError as exc:
        raise ParseError(f"in {key!r}: {exc.args[0]}", line=lineno) from None


_EXPR_VARS = {
    "w": {"r"}, "w_prime": {"r"}, "ww_prime_prime": {"r"},
    "theta": {"r"}, "theta_prime": {"r"}, "initial": {"r"},
    "lambda": {"t"},
    "exact": {"r", "t"}, "exact_t": {"r", "t"}, "exact_r": {"r", "t"}, "exact_rr": {"r", "t"},
}


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a configuration."""
    items = _parse_items(text)
    values = {k: v for k, v, _ in items}
    lines = {k: ln for k, _, ln in items}

    for key in values:
        if key not in _KNOWN_KEYS:
            raise ValidationError(key, "unknown field")

    custom_keys = [k for k in values if k in _EXPR_VARS or k in ("R", "T")]
    problem_id = values.get("problem", "custom" if custom_keys else None)
    if problem_id is None:
        raise ValidationError("problem", "missing (set problem=<id> or define custom coefficients)")
    if problem_id not in BUILTIN_PROBLEMS and problem_id != "custom":
        raise ValidationError("problem", f"unknown problem id {problem_id!r}")
    if problem_id != "custom" and custom_keys:
        raise ValidationError(
            custom_keys[0], f"coefficient definitions clash with problem={problem_id}"
        )

    cfg = RunConfig(problem_id=problem_id, raw_items=tuple((k, v) for k, v, _ in items))

    if "N" in values:
        cfg.n_nodes = _to_int("N", values["N"])
    if cfg.n_nodes < 5:
        raise ValidationError("N", f"need at least 5 nodes, got {cfg.n_nodes}")
    if "M" in values:
        cfg.m_steps = _to_int("M", values["M"])
    if cfg.m_steps < 1:
        raise ValidationError("M", f"need at least 1 time step, got {cfg.m_steps}")
    if "xi" in values:
        cfg.xi = _to_float("xi", values["xi"])
    if not 0.0 <= cfg.xi <= 1.0:
        raise ValidationError("xi", f"must lie in [0, 1], got {cfg.xi}")
    if "scheme" in values:
        if values["scheme"] not in SCHEMES:
            raise ValidationError("scheme", f"must be one of {SCHEMES}")
        cfg.scheme = values["scheme"]
    if "mesh" in values:
        if values["mesh"] not in ("uniform", "graded"):
            raise ValidationError("mesh", "must be 'uniform' or 'graded'")
        cfg.mesh_kind = values["mesh"]
    if "grading" in values:
        cfg.grading = _to_float("grading", values["grading"])
        if cfg.grading < 1.0:
            raise ValidationError("grading", "exponent must be >= 1")
    if cfg.mesh_kind == "graded" and "grading" not in values:
        raise ValidationError("grading", "mesh=graded needs an explicit exponent")
    if "payoff" in values:
        cfg.payoff = _to_float("payoff", values["payoff"])
    if "snapshot_t" in values:
        cfg.snapshot_t = _to_float("snapshot_t", values["snapshot_t"])
    if "report_nodes" in values:
        cfg.report_nodes = _to_int_list("report_nodes", values["report_nodes"])
    if "nodes" in values:
        cfg.node_list = _to_int_list("nodes", values["nodes"])
    if "case" in values:
        if values["case"] not in _CASE_NAMES:
            raise ValidationError("case", f"must be one of {sorted(_CASE_NAMES)}")
        cfg.case_override = _CASE_NAMES[values["case"]]
    if "outputs" in values:
        outs = tuple(p.strip() for p in values["outputs"].split(",") if p.strip())
        for out in outs:
            if out not in OUTPUTS:
                raise ValidationError("outputs", f"unknown output {out!r}")
        cfg.outputs = outs

    if problem_id == "custom":
        missing = [k for k in _CUSTOM_REQUIRED if k not in values]
        if missing:
            raise ValidationError(missing[0], "required for custom problems "
                                  "(analytic derivatives are never inferred)")
        exact_given = [k for k in _EXACT_KEYS if k in values]
        if exact_given and len(exact_given) != len(_EXACT_KEYS):
            absent = [k for k in _EXACT_KEYS if k not in values]
            raise ValidationError(absent[0], "a manufactured run needs all of "
                                  + ", ".join(_EXACT_KEYS))
        if exact_given and "initial" in values:
            raise ValidationError("initial", "conflicts with exact (initial is u(r, 0))")
        if not exact_given and "initial" not in values:
            raise ValidationError("initial", "required when no exact solution is given")
        cfg.manufactured = bool(exact_given)
        for key in ("R", "T"):
            cfg.custom[key] = values[key]
            if _to_float(key, values[key]) <= 0:
                raise ValidationError(key, "must be positive")
        for key, variables in _EXPR_VARS.items():
            if key in values:
                _check_expression(key, values[key], variables, lines[key])
                cfg.custom[key] = values[key]
    else:
        cfg.manufactured = True
    if "manufactured" in values:
        requested = _to_bool("manufactured", values["manufactured"])
        if problem_id == "custom" and requested and not cfg.manufactured:
            raise ValidationError("manufactured", "custom manufactured runs need "
                                  + ", ".join(_EXACT_KEYS))
        cfg.manufactured = requested
    return cfg


def build_problem(cfg: RunConfig) -> ProblemSpec:
    """Materialize the ProblemSpec (compiles custom expressions)."""
    if cfg.problem_id != "custom":
        spec = example_problem(cfg.problem_id, manufactured=cfg.manufactured, payoff=cfg.payoff)
    else:
        R = float(cfg.custom["R"])
        bindings = {"R": R}

        def make(key, variables):
            return compile_expression(cfg.custom[key], variables, bindings=bindings)

        spec = ProblemSpec(
            R=R,
            T=float(cfg.custom["T"]),
            w=make("w", {"r"}),
            w_prime=make("w_prime", {"r"}),
            ww_prime_prime=make("ww_prime_prime", {"r"}),
            theta=make("theta", {"r"}),
            theta_prime=make("theta_prime", {"r"}),
            lam=make("lambda", {"t"}),
            # a placeholder when manufactured (overwritten just below)
            initial=(make("initial", {"r"}) if "initial" in cfg.custom
                     else (lambda r: 0.0 * r + 1.0)),
            label="custom",
        )
        if cfg.manufactured:
            exact = ExactSolution(
                u=make("exact", {"r", "t"}),
                u_t=make("exact_t", {"r", "t"}),
                u_r=make("exact_r", {"r", "t"}),
                u_rr=make("exact_rr", {"r", "t"}),
            )
            spec = with_manufactured_solution(spec, exact)
    if cfg.case_override is not None:
        from dataclasses import replace
        spec = replace(spec, case_tag=cfg.case_override)
    validate_problem(spec)
    return spec


def build_spatial_mesh(cfg: RunConfig, n_nodes: Optional[int] = None, R: float = 1.0) -> SpatialMesh:
    cells = (n_nodes or cfg.n_nodes) - 1
    if cfg.mesh_kind == "graded":
        return graded_spatial(cells, R, cfg.grading)
    return uniform_spatial(cells, R)


def build_time_mesh(cfg: RunConfig, T: float) -> TimeMesh:
    return uniform_time(cfg.m_steps, T)
