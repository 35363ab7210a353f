"""Run configuration: strict INI-style parsing and validation."""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError
from .model import ModelParams
from .qcore import FockConfig, auto_cutoff

# section -> key -> default (None means "derived" or "unused unless needed")
SCHEMA: dict[str, dict[str, str | None]] = {
    "model": {
        "omega_a": "1.3",
        "omega_c": "1.0",
        "gamma": "0.4",
        "g_re": "0.2",
        "g_im": "0.0",
        "z_re": "1.0",
        "z_im": "0.0",
        "lambda": "0.05",
    },
    "numerics": {
        "fock_cutoff": "auto",
        "t_max": None,
        "n_points": "301",
        "ode_rel_tol": "1e-10",
        "ode_abs_tol": "1e-12",
    },
    "task": {
        "order": "2",
        "source": "analytic",
        "initial_state": "excited",
        "rho00": None,
        "rho11": None,
        "rho01_re": None,
        "rho01_im": None,
        "lambda_list": "0.1, 0.05, 0.025",
        "scaling_orders": "1, 2, 3",
    },
    "output": {
        "directory": "results",
        "emit_plot_script": "false",
    },
}
KEY_SECTION = {k: s for s, keys in SCHEMA.items() for k in keys}
INITIAL_STATES = ("ground", "excited", "plus", "explicit")
SOURCES = ("analytic", "numeric")
_TOP = "__top__"


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams = field(default_factory=ModelParams)
    fock: FockConfig = field(default_factory=lambda: FockConfig(auto_cutoff(1.0)))
    cutoff_auto: bool = True
    t_max: float = 7.5
    n_points: int = 301
    ode_rel_tol: float = 1e-10
    ode_abs_tol: float = 1e-12
    order: int = 2
    source: str = "analytic"
    initial_state: str = "excited"
    rho0: tuple[tuple[complex, complex], tuple[complex, complex]] | None = None
    lambda_list: tuple[float, ...] = (0.1, 0.05, 0.025)
    scaling_orders: tuple[int, ...] = (1, 2, 3)
    directory: str = "results"
    emit_plot_script: bool = False

    def rho_a0(self) -> np.ndarray:
        from .dynamics import initial_state

        if self.initial_state == "explicit":
            return initial_state("explicit", np.array(self.rho0, dtype=complex))
        return initial_state(self.initial_state)

    def with_overrides(self, **changes) -> "RunConfig":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(changes)
        return RunConfig(**d)

    def resolved(self) -> list[tuple[str, str, str]]:
        """(section, key, value) for every setting, in a fixed order with exact number formatting."""
        m = self.model
        g, z = complex(m.g), complex(m.z)
        rows = [
            ("model", "omega_a", _fmt(m.omega_a)),
            ("model", "omega_c", _fmt(m.omega_c)),
            ("model", "gamma", _fmt(m.gamma)),
            ("model", "g_re", _fmt(g.real)),
            ("model", "g_im", _fmt(g.imag)),
            ("model", "z_re", _fmt(z.real)),
            ("model", "z_im", _fmt(z.imag)),
            ("model", "lambda", _fmt(m.lam)),
            ("numerics", "fock_cutoff", ("auto -> " if self.cutoff_auto else "") + str(self.fock.cutoff)),
            ("numerics", "t_max", _fmt(self.t_max)),
            ("numerics", "n_points", str(self.n_points)),
            ("numerics", "ode_rel_tol", _fmt(self.ode_rel_tol)),
            ("numerics", "ode_abs_tol", _fmt(self.ode_abs_tol)),
            ("task", "order", str(self.order)),
            ("task", "source", self.source),
            ("task", "initial_state", self.initial_state),
        ]
        if self.rho0 is not None:
            r = self.rho0
            rows += [
                ("task", "rho00", _fmt(r[0][0].real)),
                ("task", "rho11", _fmt(r[1][1].real)),
                ("task", "rho01_re", _fmt(r[0][1].real)),
                ("task", "rho01_im", _fmt(r[0][1].imag)),
            ]
        rows += [
            ("task", "lambda_list", ", ".join(_fmt(x) for x in self.lambda_list)),
            ("task", "scaling_orders", ", ".join(str(n) for n in self.scaling_orders)),
            ("output", "directory", self.directory),
            ("output", "emit_plot_script", "true" if self.emit_plot_script else "false"),
        ]
        return rows


def _fmt(x: float) -> str:
    return repr(float(x))


def _read(text: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(
        delimiters=("=",),
        comment_prefixes=("#", ";"),
        inline_comment_prefixes=("#", ";"),
        strict=True,
        empty_lines_in_values=False,
        interpolation=None,
        default_section="__defaults_unused__",
    )
    parser.optionxform = str  # keys are case-sensitive
    # keys before the first header are accepted as a flat layout
    try:
        parser.read_string(f"[{_TOP}]\n" + text)
    except configparser.MissingSectionHeaderError as exc:  # pragma: no cover - header is always present
        raise ParseError("missing section header", exc.lineno - 1, 1) from None
    except configparser.DuplicateSectionError as exc:
        raise ParseError(f"duplicate section [{exc.section}]", (exc.lineno or 1) - 1, 1) from None
    except configparser.DuplicateOptionError as exc:
        raise ParseError(f"duplicate key {exc.option!r}", (exc.lineno or 1) - 1, 1) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raw = line.strip("'\"")
        col = len(raw) - len(raw.lstrip()) + 1
        raise ParseError(f"cannot parse {raw.strip()!r}; expected 'key = value'", lineno - 1, col) from None
    out: dict[str, dict[str, str]] = {s: {} for s in SCHEMA}
    for section in parser.sections():
        items = dict(parser.items(section))
        if section == _TOP:
            for key, value in items.items():
                if key not in KEY_SECTION:
                    raise ValidationError(key, f"unknown key; allowed keys: {', '.join(sorted(KEY_SECTION))}")
                if key in out[KEY_SECTION[key]]:
                    raise ValidationError(key, "given twice")
                out[KEY_SECTION[key]][key] = value
            continue
        if section not in SCHEMA:
            raise ValidationError(f"[{section}]", f"unknown section; allowed: {', '.join(SCHEMA)}")
        for key, value in items.items():
            if key not in SCHEMA[section]:
                raise ValidationError(key, f"unknown key in [{section}]; allowed: {', '.join(SCHEMA[section])}")
            if key in out[section]:
                raise ValidationError(key, "given twice")
            out[section][key] = value
    return out


def _float(key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ValidationError(key, f"expected a number, got {raw!r}") from None
    if not math.isfinite(value):
        raise ValidationError(key, f"must be finite, got {raw!r}")
    return value


def _int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(key, f"expected an integer, got {raw!r}") from None


def _bool(key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValidationError(key, f"expected a boolean, got {raw!r}")


def _list(key: str, raw: str, conv) -> tuple:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ValidationError(key, "must not be empty")
    return tuple(conv(key, p) for p in parts)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration; missing keys take their defaults."""
    raw = _read(text)
    get = {}
    for section, keys in SCHEMA.items():
        for key, default in keys.items():
            get[key] = raw[section].get(key, default)

    vals = {k: _float(k, get[k]) for k in ("omega_a", "omega_c", "gamma", "g_re", "g_im", "z_re", "z_im", "lambda")}
    if vals["gamma"] < 0:
        raise ValidationError("gamma", f"must be >= 0, got {get['gamma']}")
    if not 0 <= vals["lambda"] < 1:
        raise ValidationError("lambda", f"must lie in [0, 1), got {get['lambda']}")
    model = ModelParams(
        omega_a=vals["omega_a"],
        omega_c=vals["omega_c"],
        gamma=vals["gamma"],
        g=complex(vals["g_re"], vals["g_im"]),
        z=complex(vals["z_re"], vals["z_im"]),
        lam=vals["lambda"],
    )

    cut_raw = get["fock_cutoff"].strip()
    if cut_raw == "auto":
        fock, cutoff_auto = FockConfig.auto(model.z), True
    else:
        cutoff = _int("fock_cutoff", cut_raw)
        if cutoff < 1:
            raise ValidationError("fock_cutoff", f"must be >= 1 or 'auto', got {cut_raw}")
        fock, cutoff_auto = FockConfig(cutoff), False

    if get["t_max"] is None:
        if model.gamma <= 0:
            raise ValidationError("t_max", "required when gamma = 0 (default is 3/gamma)")
        t_max = 3.0 / model.gamma
    else:
        t_max = _float("t_max", get["t_max"])
    if t_max <= 0:
        raise ValidationError("t_max", f"must be > 0, got {get['t_max']}")
    n_points = _int("n_points", get["n_points"])
    if n_points < 2:
        raise ValidationError("n_points", f"must be >= 2, got {n_points}")
    rtol = _float("ode_rel_tol", get["ode_rel_tol"])
    atol = _float("ode_abs_tol", get["ode_abs_tol"])
    for key, v in (("ode_rel_tol", rtol), ("ode_abs_tol", atol)):
        if v <= 0:
            raise ValidationError(key, f"must be > 0, got {v}")

    order = _int("order", get["order"])
    if order not in (1, 2, 3, 4):
        raise ValidationError("order", f"must be 1, 2, 3 or 4, got {order}")
    source = get["source"].strip()
    if source not in SOURCES:
        raise ValidationError("source", f"must be one of {', '.join(SOURCES)}, got {source!r}")
    state = get["initial_state"].strip()
    if state not in INITIAL_STATES:
        raise ValidationError("initial_state", f"must be one of {', '.join(INITIAL_STATES)}, got {state!r}")
    rho0 = None
    explicit_keys = ("rho00", "rho11", "rho01_re", "rho01_im")
    if state == "explicit":
        missing = [k for k in explicit_keys if get[k] is None]
        if missing:
            raise ValidationError(missing[0], "required when initial_state = explicit")
        r00, r11 = _float("rho00", get["rho00"]), _float("rho11", get["rho11"])
        c = complex(_float("rho01_re", get["rho01_re"]), _float("rho01_im", get["rho01_im"]))
        if abs(r00 + r11 - 1) > 1e-10:
            raise ValidationError("rho00", "rho00 + rho11 must equal 1")
        if r00 < 0 or r11 < 0 or abs(c) ** 2 > r00 * r11 + 1e-12:
            raise ValidationError("rho01_re", "explicit state is not positive semidefinite")
        rho0 = ((complex(r00), c), (c.conjugate(), complex(r11)))
    else:
        for k in explicit_keys:
            if get[k] is not None:
                raise ValidationError(k, "only allowed when initial_state = explicit")

    lambdas = _list("lambda_list", get["lambda_list"], _float)
    if len(lambdas) < 2:
        raise ValidationError("lambda_list", "needs at least two values")
    for a, b in zip(lambdas, lambdas[1:]):
        if not math.isclose(b, a / 2, rel_tol=1e-9):
            raise ValidationError("lambda_list", "each value must halve the previous one")
    if not all(0 < x < 1 for x in lambdas):
        raise ValidationError("lambda_list", "values must lie in (0, 1)")
    orders = _list("scaling_orders", get["scaling_orders"], _int)
    if not all(n in (1, 2, 3, 4) for n in orders):
        raise ValidationError("scaling_orders", "orders must be in 1..4")

    directory = get["directory"].strip()
    if not directory:
        raise ValidationError("directory", "must not be empty")
    return RunConfig(
        model=model,
        fock=fock,
        cutoff_auto=cutoff_auto,
        t_max=t_max,
        n_points=n_points,
        ode_rel_tol=rtol,
        ode_abs_tol=atol,
        order=order,
        source=source,
        initial_state=state,
        rho0=rho0,
        lambda_list=lambdas,
        scaling_orders=orders,
        directory=directory,
        emit_plot_script=_bool("emit_plot_script", get["emit_plot_script"]),
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except UnicodeDecodeError as exc:
        raise ParseError(f"config is not valid UTF-8: {exc.reason}") from None
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
