"""Strict JSON run configuration.

Schema (all keys optional unless marked)::

    {
      "units": "SI" | "natural",                       default "SI"
      "stack": {                                         required
        "region_I":  <medium>,                           required
        "layers":    [{"medium": <medium>, "thickness": d}, ...],
        "region_III": <medium>                           default: region_I
      },
      "omega": <grid>,                                   required for spectrum/poles/green/check
      "lam": <grid>  |  "angle_deg": <grid>,             transverse wavenumber or incidence angle
      "polarizations": ["TE", "TM"],
      "n_max": 40,
      "quadrature": {"rel_tol": 1e-8, "abs_tol": 1e-300,
                     "max_subdivisions": 4000, "lambda_max": null},
      "format": "csv" | "json",
      "green": {"field_point": [x, y, z], "source_point": [x, y, z], "part": "total"},
      "poles": {"window": [re_min, re_max, im_min, im_max], "scale": "absolute" | "k0"}
    }

    <medium> = {"kind": "constant", "eps": 2.25 | [re, im]}
             | {"kind": "drude_lorentz", "eps_inf": 1.0,
                "oscillators": [{"omega_p": ..., "omega_0": ..., "gamma": ...}]}
    <grid>   = [v0, v1, ...] | {"start": a, "stop": b, "num": n}

Angles are converted with ``lam = Re(k_I) sin(theta)`` at each frequency.
Unknown keys anywhere are rejected.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .green import GreenPartLabel
from .media import ConstantComplex, DrudeLorentz, Oscillator
from .numerics import QuadratureSpec
from .stack import Layer, LayerStack
from .units import unit_system
from .waves import TE, TM


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every violation found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class Grid:
    values: tuple
    spec: object  # the original list or {"start", "stop", "num"} form

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class RunConfig:
    stack: LayerStack
    omega: Grid | None
    lam: Grid | None = None
    angle_deg: Grid | None = None
    polarizations: tuple = (TE, TM)
    n_max: int = 40
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    format: str = "csv"
    units: str = "SI"
    green: dict | None = None
    poles: dict | None = None

    def lam_values(self, omega):
        """Transverse wavenumbers for one frequency (angles converted)."""
        if self.lam is not None:
            return np.array(self.lam.values, dtype=float)
        if self.angle_deg is not None:
            k_I = self.stack.wavenumbers(omega)[0].real
            return k_I * np.sin(np.radians(np.array(self.angle_deg.values, dtype=float)))
        raise ConfigError(["config needs 'lam' or 'angle_deg' for this command"])


_TOP_KEYS = {"units", "stack", "omega", "lam", "angle_deg", "polarizations", "n_max",
             "quadrature", "format", "green", "poles"}
_QUAD_DEFAULTS = {"rel_tol": 1e-8, "abs_tol": 1e-300, "max_subdivisions": 4000, "lambda_max": None}
_GREEN_DEFAULTS = {"part": "total"}
_POLE_DEFAULTS = {"scale": "absolute"}


class _Collector:
    def __init__(self):
        self.problems = []

    def add(self, where, msg):
        self.problems.append(f"{where}: {msg}")

    def unknown(self, where, obj, allowed):
        for key in obj:
            if key not in allowed:
                self.add(where, f"unknown key {key!r}")


def _number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _parse_medium(obj, where, errs):
    if not isinstance(obj, dict):
        errs.add(where, "medium must be an object")
        return None
    kind = obj.get("kind")
    if kind == "constant":
        errs.unknown(where, obj, {"kind", "eps"})
        eps = obj.get("eps")
        if _number(eps):
            value = complex(eps)
        elif isinstance(eps, list) and len(eps) == 2 and all(_number(x) for x in eps):
            value = complex(eps[0], eps[1])
        else:
            errs.add(where, "'eps' must be a number or [re, im]")
            return None
        try:
            return ConstantComplex(value)
        except ValueError as exc:
            errs.add(where, str(exc))
            return None
    if kind == "drude_lorentz":
        errs.unknown(where, obj, {"kind", "eps_inf", "oscillators"})
        eps_inf = obj.get("eps_inf", 1.0)
        if not _number(eps_inf):
            errs.add(where, "'eps_inf' must be a number")
            return None
        oscs = []
        for i, o in enumerate(obj.get("oscillators", [])):
            w = f"{where}.oscillators[{i}]"
            if not isinstance(o, dict):
                errs.add(w, "oscillator must be an object")
                continue
            errs.unknown(w, o, {"omega_p", "omega_0", "gamma"})
            try:
                oscs.append(Oscillator(float(o["omega_p"]), float(o.get("omega_0", 0.0)),
                                       float(o["gamma"])))
            except KeyError as exc:
                errs.add(w, f"missing {exc.args[0]!r}")
            except (TypeError, ValueError) as exc:
                errs.add(w, str(exc))
        return DrudeLorentz(float(eps_inf), tuple(oscs))
    errs.add(where, f"unknown medium kind {kind!r}; expected 'constant' or 'drude_lorentz'")
    return None


def _parse_grid(obj, where, errs):
    if isinstance(obj, list):
        if not obj:
            errs.add(where, "grid must not be empty")
            return None
        if not all(_number(v) for v in obj):
            errs.add(where, "grid values must be numbers")
            return None
        values = tuple(float(v) for v in obj)
    elif isinstance(obj, dict):
        errs.unknown(where, obj, {"start", "stop", "num"})
        try:
            start, stop, num = float(obj["start"]), float(obj["stop"]), obj["num"]
        except (KeyError, TypeError, ValueError):
            errs.add(where, "grid object needs numeric 'start', 'stop' and 'num'")
            return None
        if not isinstance(num, int) or isinstance(num, bool) or num < 1:
            errs.add(where, "'num' must be a positive integer")
            return None
        values = tuple(float(v) for v in np.linspace(start, stop, num))
    else:
        errs.add(where, "grid must be a list or {start, stop, num}")
        return None
    if any(b <= a for a, b in zip(values, values[1:])):
        errs.add(where, "grid must be strictly increasing")
        return None
    return Grid(values, obj)


def _parse_point(obj, where, errs):
    if not (isinstance(obj, list) and len(obj) == 3 and all(_number(v) for v in obj)):
        errs.add(where, "point must be [x, y, z]")
        return None
    return tuple(float(v) for v in obj)


def parse_config(text):
    """Parse and validate a JSON configuration document into a :class:`RunConfig`.

    Raises
    ------
    ConfigError
        With line/column for malformed JSON, or with the full list of
        validation problems.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from None
    return config_from_dict(doc)


def config_from_dict(doc):
    errs = _Collector()
    if not isinstance(doc, dict):
        raise ConfigError(["top level must be an object"])
    errs.unknown("config", doc, _TOP_KEYS)

    units_name = doc.get("units", "SI")
    try:
        units = unit_system(units_name)
    except ValueError as exc:
        errs.add("units", str(exc))
        units = None

    stack = None
    sdoc = doc.get("stack")
    if not isinstance(sdoc, dict):
        errs.add("stack", "required object is missing")
    else:
        errs.unknown("stack", sdoc, {"region_I", "layers", "region_III"})
        m1 = _parse_medium(sdoc.get("region_I"), "stack.region_I", errs)
        m3 = _parse_medium(sdoc["region_III"], "stack.region_III", errs) if "region_III" in sdoc else m1
        layers = []
        raw_layers = sdoc.get("layers", [])
        if not isinstance(raw_layers, list):
            errs.add("stack.layers", "must be a list")
            raw_layers = []
        for i, ldoc in enumerate(raw_layers, start=1):
            where = f"stack.layers[{i}]"
            if not isinstance(ldoc, dict):
                errs.add(where, "layer must be an object")
                continue
            errs.unknown(where, ldoc, {"medium", "thickness"})
            med = _parse_medium(ldoc.get("medium"), where + ".medium", errs)
            d = ldoc.get("thickness")
            if not _number(d) or not d > 0:
                errs.add(where, f"thickness must be a positive number, got {d!r}")
                continue
            if med is not None:
                layers.append(Layer(med, float(d)))
        if m1 is not None and m3 is not None and units is not None:
            stack = LayerStack(m1, tuple(layers), m3, units)

    omega = _parse_grid(doc["omega"], "omega", errs) if "omega" in doc else None
    if omega is not None and omega.values[0] <= 0:
        errs.add("omega", "frequencies must be positive")
    lam = _parse_grid(doc["lam"], "lam", errs) if "lam" in doc else None
    if lam is not None and lam.values[0] < 0:
        errs.add("lam", "transverse wavenumbers must be >= 0")
    angle = _parse_grid(doc["angle_deg"], "angle_deg", errs) if "angle_deg" in doc else None
    if angle is not None and not (0 <= angle.values[0] and angle.values[-1] < 90):
        errs.add("angle_deg", "angles must lie in [0, 90)")
    if lam is not None and angle is not None:
        errs.add("config", "give either 'lam' or 'angle_deg', not both")

    pols = doc.get("polarizations", [TE, TM])
    if not (isinstance(pols, list) and pols and all(p in (TE, TM) for p in pols)
            and len(set(pols)) == len(pols)):
        errs.add("polarizations", "must be a non-empty list drawn from 'TE', 'TM'")
        pols = [TE, TM]

    n_max = doc.get("n_max", 40)
    if not isinstance(n_max, int) or isinstance(n_max, bool) or n_max < 1:
        errs.add("n_max", "must be a positive integer")
        n_max = 40

    qdoc = doc.get("quadrature", {})
    quad = QuadratureSpec()
    if not isinstance(qdoc, dict):
        errs.add("quadrature", "must be an object")
    else:
        errs.unknown("quadrature", qdoc, set(_QUAD_DEFAULTS))
        q = {**_QUAD_DEFAULTS, **qdoc}
        try:
            quad = QuadratureSpec(float(q["rel_tol"]), float(q["abs_tol"]),
                                  int(q["max_subdivisions"]),
                                  None if q["lambda_max"] is None else float(q["lambda_max"]))
        except (TypeError, ValueError) as exc:
            errs.add("quadrature", str(exc))

    fmt = doc.get("format", "csv")
    if fmt not in ("csv", "json"):
        errs.add("format", "must be 'csv' or 'json'")

    green = None
    if "green" in doc:
        gdoc = doc["green"]
        if not isinstance(gdoc, dict):
            errs.add("green", "must be an object")
        else:
            errs.unknown("green", gdoc, {"field_point", "source_point", "part"})
            g = {**_GREEN_DEFAULTS, **gdoc}
            fp = _parse_point(g.get("field_point"), "green.field_point", errs)
            sp = _parse_point(g.get("source_point"), "green.source_point", errs)
            part = g["part"]
            if part not in ("total", "scattering"):
                try:
                    GreenPartLabel.parse(part)
                except ValueError as exc:
                    errs.add("green.part", str(exc))
            green = {"field_point": fp, "source_point": sp, "part": part}

    poles = None
    if "poles" in doc:
        pdoc = doc["poles"]
        if not isinstance(pdoc, dict):
            errs.add("poles", "must be an object")
        else:
            errs.unknown("poles", pdoc, {"window", "scale"})
            p = {**_POLE_DEFAULTS, **pdoc}
            win = p.get("window")
            if not (isinstance(win, list) and len(win) == 4 and all(_number(v) for v in win)
                    and win[1] > win[0] and win[3] > win[2]):
                errs.add("poles.window", "must be [re_min, re_max, im_min, im_max] with max > min")
                win = None
            if p["scale"] not in ("absolute", "k0"):
                errs.add("poles.scale", "must be 'absolute' or 'k0'")
            poles = {"window": None if win is None else tuple(float(v) for v in win),
                     "scale": p["scale"]}

    if errs.problems:
        raise ConfigError(errs.problems)
    return RunConfig(stack=stack, omega=omega, lam=lam, angle_deg=angle,
                     polarizations=tuple(pols), n_max=n_max, quadrature=quad, format=fmt,
                     units=units.name, green=green, poles=poles)


# ---------------------------------------------------------------------------
# Canonical form
# ---------------------------------------------------------------------------

def _medium_doc(m):
    if isinstance(m, ConstantComplex):
        return {"kind": "constant", "eps": [m.eps.real, m.eps.imag]}
    return {"kind": "drude_lorentz", "eps_inf": m.eps_inf,
            "oscillators": [{"omega_p": o.omega_p, "omega_0": o.omega_0, "gamma": o.gamma}
                            for o in m.oscillators]}


def _grid_doc(g):
    spec = g.spec
    if isinstance(spec, dict):
        return {"start": float(spec["start"]), "stop": float(spec["stop"]), "num": int(spec["num"])}
    return [float(v) for v in spec]


def config_to_dict(cfg):
    st = cfg.stack
    doc = {
        "units": cfg.units,
        "stack": {
            "region_I": _medium_doc(st.medium_I),
            "layers": [{"medium": _medium_doc(l.medium), "thickness": l.thickness} for l in st.layers],
            "region_III": _medium_doc(st.medium_III),
        },
        "polarizations": list(cfg.polarizations),
        "n_max": cfg.n_max,
        "quadrature": {"rel_tol": cfg.quadrature.rel_tol, "abs_tol": cfg.quadrature.abs_tol,
                       "max_subdivisions": cfg.quadrature.max_subdivisions,
                       "lambda_max": cfg.quadrature.lambda_max},
        "format": cfg.format,
    }
    for key in ("omega", "lam", "angle_deg"):
        g = getattr(cfg, key)
        if g is not None:
            doc[key] = _grid_doc(g)
    if cfg.green is not None:
        doc["green"] = {"field_point": list(cfg.green["field_point"]),
                        "source_point": list(cfg.green["source_point"]),
                        "part": cfg.green["part"]}
    if cfg.poles is not None:
        doc["poles"] = {"window": list(cfg.poles["window"]), "scale": cfg.poles["scale"]}
    return doc


def _dump(doc):
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def serialize(cfg):
    """Canonical JSON text of a configuration (sorted keys, defaults filled in)."""
    return _dump(config_to_dict(cfg))


def _norm_medium(m):
    m = dict(m)
    if m["kind"] == "constant":
        eps = m["eps"]
        m["eps"] = [float(eps[0]), float(eps[1])] if isinstance(eps, list) else [float(eps), 0.0]
    else:
        m["eps_inf"] = float(m.get("eps_inf", 1.0))
        m["oscillators"] = [{"omega_p": float(o["omega_p"]), "omega_0": float(o.get("omega_0", 0.0)),
                             "gamma": float(o["gamma"])} for o in m.get("oscillators", [])]
    return m


def _norm_grid(g):
    if isinstance(g, dict):
        return {"start": float(g["start"]), "stop": float(g["stop"]), "num": int(g["num"])}
    return [float(v) for v in g]


def normalize(text):
    """Canonical JSON text of a raw document, by direct manipulation of the JSON tree.

    Used to check ``serialize(parse_config(x)) == normalize(x)``; it does not
    validate.
    """
    doc = json.loads(text)
    out = {"units": unit_system(doc.get("units", "SI")).name,
           "polarizations": list(doc.get("polarizations", [TE, TM])),
           "n_max": int(doc.get("n_max", 40)),
           "format": doc.get("format", "csv")}
    q = {**_QUAD_DEFAULTS, **doc.get("quadrature", {})}
    out["quadrature"] = {"rel_tol": float(q["rel_tol"]), "abs_tol": float(q["abs_tol"]),
                         "max_subdivisions": int(q["max_subdivisions"]),
                         "lambda_max": None if q["lambda_max"] is None else float(q["lambda_max"])}
    s = doc["stack"]
    region_I = _norm_medium(s["region_I"])
    out["stack"] = {"region_I": region_I,
                    "layers": [{"medium": _norm_medium(l["medium"]), "thickness": float(l["thickness"])}
                               for l in s.get("layers", [])],
                    "region_III": _norm_medium(s["region_III"]) if "region_III" in s else region_I}
    for key in ("omega", "lam", "angle_deg"):
        if key in doc:
            out[key] = _norm_grid(doc[key])
    if "green" in doc:
        g = {**_GREEN_DEFAULTS, **doc["green"]}
        out["green"] = {"field_point": [float(v) for v in g["field_point"]],
                        "source_point": [float(v) for v in g["source_point"]],
                        "part": g["part"]}
    if "poles" in doc:
        p = {**_POLE_DEFAULTS, **doc["poles"]}
        out["poles"] = {"window": [float(v) for v in p["window"]], "scale": p["scale"]}
    return _dump(out)
