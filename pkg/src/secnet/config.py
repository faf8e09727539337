"""Experiment configuration: YAML loading, the intensity expression grammar and validation.

A config file looks like::

    kind: scale-sweep
    seed: 0
    seeds: 20
    n: [1024, 4096, 16384]
    lambda_e: "(ln n)^-3"
    params:
      c: 1.2

``params`` holds the kind-specific knobs; unknown keys are rejected.
"""
from __future__ import annotations

import ast
import hashlib
import json
import math
import operator
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .routing import ScaleConfig

KINDS = ("percolate", "scale-sweep", "collusion-sweep", "ergodic-sweep", "wiretap-demo")


# ---------------------------------------------------------------------------
# intensity expressions

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"ln": math.log, "log": math.log, "sqrt": math.sqrt, "exp": math.exp}
_CONSTS = {"e": math.e, "pi": math.pi}


class ExpressionError(ValueError):
    pass


def _normalize(text: str) -> str:
    s = re.sub(r"\b(ln|log|sqrt|exp)\s+n\b", r"\1(n)", text)
    return s.replace("^", "**")


def parse_expression(text: str):
    """Compile an expression in ``n`` built from numbers, ``+ - * / ^``, ``ln``, ``log``, ``sqrt``, ``exp``.

    ``ln n`` is accepted as shorthand for ``ln(n)``.  Returns a function of ``n``.
    """
    try:
        tree = ast.parse(_normalize(str(text)), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None

    def check(node):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            check(node.operand)
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            pass
        elif isinstance(node, ast.Name) and (node.id == "n" or node.id in _CONSTS):
            pass
        elif (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and len(node.args) == 1
            and not node.keywords
        ):
            check(node.args[0])
        else:
            raise ExpressionError(f"unsupported element {ast.dump(node)[:40]} in {text!r}")

    check(tree)

    def ev(node, n):
        if isinstance(node, ast.Expression):
            return ev(node.body, n)
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left, n), ev(node.right, n))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](ev(node.operand, n))
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return float(n) if node.id == "n" else _CONSTS[node.id]
        return _FUNCS[node.func.id](ev(node.args[0], n))

    return lambda n: float(ev(tree, n))


_FAR_N = (1e20, 1e50, 1e100, 1e300)


def is_little_o_ln2(fn, n_grid) -> bool:
    """Numerical test that ``fn(n) = o((ln n)^-2)``.

    ``g(n) = fn(n) (ln n)^2`` must strictly decrease over the grid extended
    to ``n = 1e300`` and fall to at most half its first value there.
    """
    ns = sorted(set(float(x) for x in n_grid) | set(_FAR_N))
    g = [fn(n) * math.log(n) ** 2 for n in ns]
    return all(b < a for a, b in zip(g, g[1:])) and g[-1] <= 0.5 * g[0]


def is_big_o_ln2(fn, n_grid) -> bool:
    """Numerical test that ``fn(n) = O((ln n)^-2)``: ``g(n)`` never grows past its first value."""
    ns = sorted(set(float(x) for x in n_grid) | set(_FAR_N))
    g = [fn(n) * math.log(n) ** 2 for n in ns]
    return max(g) <= g[0] * (1 + 1e-9)


# ---------------------------------------------------------------------------
# config objects


@dataclass(frozen=True)
class PercolateParams:
    p_prime: float = 0.95
    kappa: float = 2.0
    m: tuple[int, ...] = (32, 64, 128, 256)
    delta: float | None = None  # None: calibrate at m = 32 on separate seeds
    calibration_m: int = 32
    calibration_seeds: int = 200


@dataclass(frozen=True)
class CollusionParams:
    alpha: float = 2.5
    P: float = 1.0
    N0: float = 1.0
    c: float = 1.0
    d: int = 1
    f_t: float = 8.0
    lambda_bar: float = 0.01
    delta: float = 0.1
    epsilon: float = 0.1
    rho: float = 1.0
    r: float = 0.3
    access_alpha: float = 4.0
    kappa2: float = 1.0


@dataclass(frozen=True)
class ErgodicParams:
    # (n, k): n users with all k eavesdroppers colluding
    dof_cases: tuple[tuple[int, int], ...] = ((4, 1), (8, 2))
    snr_db: tuple[float, ...] = (20.0, 30.0, 40.0, 50.0, 60.0)
    samples: int = 100_000
    jensen_n: tuple[int, ...] = (2, 4, 8)
    jensen_snr: tuple[float, ...] = (1.0, 10.0, 100.0)


@dataclass(frozen=True)
class WiretapParams:
    crossover: float = 0.3
    H: int = 3
    N: tuple[int, ...] = (2, 4, 6)
    R: float = 0.5


PARAM_TYPES = {
    "percolate": PercolateParams,
    "scale-sweep": ScaleConfig,
    "collusion-sweep": CollusionParams,
    "ergodic-sweep": ErgodicParams,
    "wiretap-demo": WiretapParams,
}

DEFAULT_N = {
    "percolate": (),
    "scale-sweep": (1024, 4096, 16384),
    "collusion-sweep": tuple(2**e for e in range(10, 21)),
    "ergodic-sweep": (),
    "wiretap-demo": (),
}
DEFAULT_SEEDS = {"percolate": 100, "scale-sweep": 20, "collusion-sweep": 1, "ergodic-sweep": 1, "wiretap-demo": 100}
DEFAULT_LAMBDA = {"scale-sweep": "(ln n)^-3", "collusion-sweep": "0.01*(ln n)^-2"}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int = 0
    seeds: int = 1
    n: tuple[int, ...] = ()
    lambda_e: str | None = None
    out: str | None = None
    params: object = None

    def lambda_fn(self):
        return parse_expression(self.lambda_e) if self.lambda_e else None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n"] = list(self.n)
        d.pop("out")
        d["params"] = _plain(asdict(self.params)) if self.params is not None else {}
        return d

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


class ConfigError(ValueError):
    pass


def _build_params(kind: str, raw: dict | None):
    cls = PARAM_TYPES[kind]
    raw = dict(raw or {})
    names = {f.name: f for f in fields(cls)}
    unknown = sorted(set(raw) - set(names))
    if unknown:
        raise ConfigError(f"unknown {kind} parameter(s): {', '.join(unknown)}")
    for k, v in list(raw.items()):
        if isinstance(v, list):
            raw[k] = tuple(tuple(x) if isinstance(x, list) else x for x in v)
    return cls(**raw)


def from_dict(data: dict, kind: str | None = None) -> ExperimentConfig:
    data = dict(data or {})
    kind = kind or data.get("kind")
    if data.get("kind") and kind and data["kind"] != kind:
        raise ConfigError(f"config kind {data['kind']!r} does not match subcommand {kind!r}")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {', '.join(KINDS)}")
    extra = sorted(set(data) - {"kind", "seed", "seeds", "n", "lambda_e", "out", "params"})
    if extra:
        raise ConfigError(f"unknown top-level key(s): {', '.join(extra)}")
    try:
        params = _build_params(kind, data.get("params"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentConfig(
        kind=kind,
        seed=int(data.get("seed", 0)),
        seeds=int(data.get("seeds", DEFAULT_SEEDS[kind])),
        n=tuple(int(float(x)) for x in data.get("n", DEFAULT_N[kind])),
        lambda_e=data.get("lambda_e", DEFAULT_LAMBDA.get(kind)),
        out=data.get("out"),
        params=params,
    )


def load_config(path, kind: str | None = None) -> ExperimentConfig:
    data = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    return from_dict(data, kind)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str


def validate(cfg: ExperimentConfig) -> list[Diagnostic]:
    """Check the modelling preconditions; an empty list means the config is admissible."""
    out: list[Diagnostic] = []
    p = cfg.params
    for name in ("alpha", "access_alpha"):
        a = getattr(p, name, None)
        if a is not None and not a > 2:
            out.append(Diagnostic("alpha", f"path-loss exponent must exceed 2 ({name} = {a})"))
    if cfg.seeds < 1:
        out.append(Diagnostic("seeds", "at least one seed is required"))
    if any(n < 3 for n in cfg.n):
        out.append(Diagnostic("n", "every n must be at least 3"))

    fn = None
    if cfg.lambda_e is not None:
        try:
            fn = cfg.lambda_fn()
            fn(100.0)
        except (ExpressionError, ValueError, ZeroDivisionError, OverflowError) as exc:
            out.append(Diagnostic("lambda_e", f"invalid intensity expression: {exc}"))
            fn = None

    if cfg.kind == "scale-sweep":
        if fn is None:
            out.append(Diagnostic("lambda_e", "scale-sweep needs an eavesdropper intensity expression"))
        elif not is_little_o_ln2(fn, cfg.n or (1024,)):
            out.append(
                Diagnostic(
                    "intensity",
                    "intensity condition violated: lambda_e must be o((ln n)^-2) for secure scaling",
                )
            )
        if not cfg.n:
            out.append(Diagnostic("n", "scale-sweep needs a list of n"))
    elif cfg.kind == "collusion-sweep":
        if not p.rho / p.access_alpha < p.r < p.rho / 2:
            out.append(
                Diagnostic(
                    "r",
                    f"r = {p.r} must lie in the open interval (rho/alpha, rho/2) = "
                    f"({p.rho / p.access_alpha}, {p.rho / 2})",
                )
            )
        if fn is not None and not is_big_o_ln2(fn, cfg.n or (1024,)):
            out.append(Diagnostic("intensity", "colluding intensity must be O((ln n)^-2)"))
        if p.lambda_bar <= 0 or p.delta <= 0:
            out.append(Diagnostic("schedule", "lambda_bar and delta must be positive"))
    elif cfg.kind == "percolate":
        if not 0 <= p.p_prime <= 1:
            out.append(Diagnostic("p_prime", "p_prime must lie in [0, 1]"))
        elif p.p_prime < 1 and p.kappa * math.log(6 * (1 - p.p_prime)) >= -2:
            out.append(Diagnostic("kappa", "crossing law needs kappa ln(6 (1 - p')) < -2"))
        if any(m < 2 for m in p.m):
            out.append(Diagnostic("m", "lattice size must be at least 2"))
    elif cfg.kind == "ergodic-sweep":
        if any(len(c) != 2 or c[0] < 1 or c[1] < 0 for c in p.dof_cases) or p.samples < 1:
            out.append(Diagnostic("ergodic", "need dof cases (n >= 1, k >= 0) and samples >= 1"))
    elif cfg.kind == "wiretap-demo":
        if not 0 <= p.crossover <= 1:
            out.append(Diagnostic("crossover", "crossover must lie in [0, 1]"))
        if p.H < 1 or any(N < 1 for N in p.N):
            out.append(Diagnostic("wiretap", "H and every N must be positive"))
    return out
