"""Command-line front end: ``plateio {spectrum,green,check,poles} --config run.json``.

Every command produces a list of flat row dictionaries that are written as
CSV (RFC 4180) or JSON.  Floats are printed with 17 significant digits so
identical inputs give byte-identical output.
"""

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import ConfigError, parse_config
from .errors import DegenerateError, DomainError, NonConvergence, RegionMismatchError
from .green import GreenPartLabel, free_green, green_part, scattering_green, total_green
from .iorel import _balance_arrays, find_surface_poles, noise_kernels
from .stack import ModalSolver
from .waves import TE, TM, ModeIndex

SCHEMA_VERSION = "1"

SPECTRUM_COLUMNS = ("omega", "lam", "angle_deg", "pol", "re_r", "im_r", "re_t", "im_t",
                    "abs_r2", "abs_t2", "absorbed", "residual", "pol_cross", "status")
GREEN_COLUMNS = ("omega", "row", "col", "re", "im", "error")
CHECK_COLUMNS = ("check", "residual", "tolerance", "status")
POLE_COLUMNS = ("omega", "pol", "re_lam", "im_lam", "residual", "status")


# ---------------------------------------------------------------------------
# Formatting
# ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return ""
        return format(v, ".17g")
    return "" if v is None else str(v)


def _json_value(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return "null"
        return format(v, ".17g")
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return "null"
    s = str(v).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{s}"'


def render(rows, columns, fmt, command):
    """Render rows as CSV or as a JSON document with a schema version."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])
        return buf.getvalue()
    lines = []
    for row in rows:
        body = ", ".join(f'"{c}": {_json_value(row.get(c))}' for c in columns)
        lines.append("    {" + body + "}")
    rows_txt = "[\n" + ",\n".join(lines) + "\n  ]" if lines else "[]"
    return ('{\n  "schema_version": "' + SCHEMA_VERSION + '",\n  "command": "' + command
            + '",\n  "rows": ' + rows_txt + "\n}\n")


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

def _spectrum_block(cfg, omega):
    rows = []
    lam = cfg.lam_values(omega)
    angles = cfg.angle_deg.values if cfg.angle_deg is not None else [None] * len(lam)
    per_pol = {}
    for pol in cfg.polarizations:
        try:
            sol = ModalSolver(cfg.stack, omega, lam, pol)
            r, t, _, _ = sol.rt()
            A = np.full(lam.shape, np.nan)
            res = np.full(lam.shape, np.nan)
            status = np.array(["ok"] * lam.size, dtype=object)
            lossless_ext = sol.eps[0].imag == 0 and sol.eps[-1].imag == 0
            prop = lam < sol.k[0].real if lossless_ext else np.zeros(lam.shape, bool)
            if not lossless_ext:
                status[:] = "no-balance:absorbing-exterior"
            else:
                status[~prop] = "no-balance:evanescent"
            if np.any(prop):
                sub = ModalSolver(cfg.stack, omega, lam[prop], pol)
                _, _, A[prop], res[prop] = _balance_arrays(sub)
            per_pol[pol] = (r, t, A, res, status)
        except (DegenerateError, NonConvergence, DomainError) as exc:
            nan = np.full(lam.shape, np.nan)
            per_pol[pol] = (nan, nan, nan, nan, np.array([f"error:{type(exc).__name__}"] * lam.size, dtype=object))
    for i, lv in enumerate(lam):
        for pol in cfg.polarizations:
            r, t, A, res, status = per_pol[pol]
            rows.append({
                "omega": omega, "lam": float(lv), "angle_deg": angles[i], "pol": pol,
                "re_r": float(np.real(r[i])), "im_r": float(np.imag(r[i])),
                "re_t": float(np.real(t[i])), "im_t": float(np.imag(t[i])),
                "abs_r2": float(abs(r[i]) ** 2), "abs_t2": float(abs(t[i]) ** 2),
                "absorbed": float(A[i]), "residual": float(res[i]),
                # planar stacks never couple TE and TM: the solvers are separate
                "pol_cross": 0.0, "status": status[i],
            })
    return rows


def _spectrum_chunk(args):
    cfg, omegas = args
    out = []
    for w in omegas:
        out.extend(_spectrum_block(cfg, w))
    return out


def _map_chunks(fn, cfg, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn((cfg, items))]
    chunks = [list(c) for c in np.array_split(np.asarray(items, dtype=object), min(jobs, len(items)))]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map preserves submission order, so output order does not depend on timing
        return list(pool.map(fn, [(cfg, [float(x) for x in c]) for c in chunks]))


def cmd_spectrum(cfg, jobs=1):
    """Rows ``(omega, lam, pol, r, t, |r|^2, |t|^2, A, residual)`` in omega-major order."""
    if cfg.omega is None:
        raise ConfigError(["spectrum needs an 'omega' grid"])
    if cfg.lam is None and cfg.angle_deg is None:
        raise ConfigError(["spectrum needs a 'lam' or 'angle_deg' grid"])
    parts = _map_chunks(_spectrum_chunk, cfg, list(cfg.omega.values), jobs)
    return [row for part in parts for row in part]


# ---------------------------------------------------------------------------
# green
# ---------------------------------------------------------------------------

def cmd_green(cfg, field_point=None, source_point=None, part=None):
    """Nine rows per frequency with the entries of the requested Green tensor and its error bound.

    ``part`` is ``"total"``, ``"scattering"`` or a region label such as ``"11"``.
    """
    g = cfg.green or {}
    r = field_point or g.get("field_point")
    s = source_point or g.get("source_point")
    part = part or g.get("part", "total")
    if r is None or s is None:
        raise ConfigError(["green needs 'field_point' and 'source_point'"])
    if cfg.omega is None:
        raise ConfigError(["green needs an 'omega' grid"])
    st = cfg.stack
    kw = {"quad": cfg.quadrature}
    rows = []
    for omega in cfg.omega.values:
        if part in ("total", "scattering"):
            f, sr = st.region_of(r[2]), st.region_of(s[2])
            val, info = scattering_green(st, omega, r, s, f, sr, full_output=True, **kw)
            err = info["error"]
            if part == "total" and f == sr:
                val = val + free_green(st.eps(omega)[f], omega, r, s, st.units.c)
        else:
            label = GreenPartLabel.parse(part)
            if label.source == "free":
                # closed form: only rounding error
                val, err = green_part(st, omega, label, r, s), 0.0
            else:
                val, info = green_part(st, omega, label, r, s, full_output=True, **kw)
                err = info["error"]
        rows.extend({"omega": omega, "row": a, "col": b, "re": float(val[i, j].real),
                     "im": float(val[i, j].imag), "error": err}
                    for i, a in enumerate("xyz") for j, b in enumerate("xyz"))
    return rows


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def _row(name, residual, tol, status=None):
    if status is None:
        status = "pass" if residual <= tol else "fail"
    return {"check": name, "residual": float(residual), "tolerance": float(tol), "status": status}


def _rel(diff, ref):
    return float(np.max(np.abs(diff)) / max(np.max(np.abs(ref)), 1e-300))


def _random_modes(cfg, rng, count):
    omegas = cfg.omega.values if cfg.omega is not None else (1.0,)
    out = []
    for _ in range(count):
        w = float(rng.choice(omegas))
        k_I = cfg.stack.wavenumbers(w)[0].real
        out.append((w, float(rng.uniform(0.0, 0.95)) * k_I))
    return out


def _random_point(cfg, rng, region, omega):
    st = cfg.stack
    k = abs(st.wavenumbers(omega)[0])
    lo, hi = st.bounds(region)
    span = 1.0 / k
    if np.isinf(lo):
        z = hi - rng.uniform(0.2, 1.0) * span
    elif np.isinf(hi):
        z = lo + rng.uniform(0.2, 1.0) * span
    else:
        z = lo + rng.uniform(0.2, 0.8) * (hi - lo)
    x, y = rng.uniform(-1, 1, 2) * span
    return np.array([x, y, z])


def cmd_check(cfg, seed=0, samples=8, fault=None):
    """Run the invariant suites on the configured stack.

    Returns ``(rows, ok)``; ``fault="reflection"`` perturbs the reflection
    coefficient inside the balance check so the report demonstrably fails.
    """
    rng = np.random.default_rng(seed)
    st = cfg.stack
    rows = []
    eps = st.eps(cfg.omega.values[0] if cfg.omega is not None else 1.0)
    lossless_ext = eps[0].imag == 0 and eps[-1].imag == 0
    lossless = bool(np.all(eps.imag == 0))
    modes = _random_modes(cfg, rng, samples)

    worst_u = worst_b = worst_n = 0.0
    for w, lam in modes:
        for pol in (TE, TM):
            sol = ModalSolver(st, w, np.array([lam]), pol)
            if lossless_ext:
                R, T, A, res = _balance_arrays(sol, corrupt=1.01 if fault == "reflection" else None)
                worst_b = max(worst_b, float(res[0]))
                if lossless:
                    worst_u = max(worst_u, abs(1.0 - R[0] - T[0]))
                nk = noise_kernels(st, ModeIndex(w, lam, polarization=pol))
                _, _, _, t_rev = sol.rt()
                r = sol.rt()[0]
                T_rev = abs(t_rev[0]) ** 2 * (sol.h[0][0].real / sol.h[-1][0].real)
                worst_n = max(worst_n, abs(nk.strength("I") - (1 - abs(r[0]) ** 2 - T_rev)))
    if lossless:
        rows.append(_row("unitarity", worst_u, 1e-10))
    else:
        rows.append(_row("unitarity", float("nan"), 1e-10, "skip"))
    if lossless_ext:
        rows.append(_row("balance", worst_b, 1e-6))
        rows.append(_row("noise", worst_n, 1e-6))
    else:
        rows.append(_row("balance", float("nan"), 1e-6, "skip"))
        rows.append(_row("noise", float("nan"), 1e-6, "skip"))

    w = float(cfg.omega.values[0]) if cfg.omega is not None else 1.0
    last = st.n_layers + 1
    try:
        worst_r = 0.0
        for _ in range(max(2, samples // 2)):
            a, b = rng.integers(0, last + 1, 2)
            p, q = _random_point(cfg, rng, int(a), w), _random_point(cfg, rng, int(b), w)
            g1 = total_green(st, w, p, q, int(a), int(b), quad=cfg.quadrature)
            g2 = total_green(st, w, q, p, int(b), int(a), quad=cfg.quadrature)
            worst_r = max(worst_r, _rel(g1 - g2.T, g1))
        rows.append(_row("reciprocity", worst_r, 1e-6))

        worst_c = 0.0
        src_region = 0
        q = _random_point(cfg, rng, src_region, w)
        for m, z in enumerate(st.interfaces):
            x, y = rng.uniform(-1, 1, 2) / abs(st.wavenumbers(w)[0])
            p = np.array([x, y, z])
            lo = total_green(st, w, p, q, m, src_region, quad=cfg.quadrature)
            hi = total_green(st, w, p, q, m + 1, src_region, quad=cfg.quadrature)
            worst_c = max(worst_c, _rel(lo[:2] - hi[:2], lo))
        rows.append(_row("continuity", worst_c, 1e-6))
    except DegenerateError:
        rows.append(_row("reciprocity", float("nan"), 1e-6, "skip"))
        rows.append(_row("continuity", float("nan"), 1e-6, "skip"))

    ok = all(r["status"] != "fail" for r in rows)
    return rows, ok


# ---------------------------------------------------------------------------
# poles
# ---------------------------------------------------------------------------

def cmd_poles(cfg, window=None):
    """Rows ``(omega, pol, Re lam, Im lam, residual, status)`` for every frequency and polarization."""
    pdoc = cfg.poles or {}
    window = window or pdoc.get("window")
    if window is None:
        raise ConfigError(["poles needs a search window"])
    if cfg.omega is None:
        raise ConfigError(["poles needs an 'omega' grid"])
    rows = []
    for w in cfg.omega.values:
        scale = w / cfg.stack.units.c if pdoc.get("scale") == "k0" else 1.0
        win = tuple(v * scale for v in window)
        for pol in cfg.polarizations:
            try:
                poles = find_surface_poles(cfg.stack, w, pol, win, strict=False)
            except DomainError as exc:
                rows.append({"omega": w, "pol": pol, "status": f"error:{exc}"})
                continue
            for p in poles:
                rows.append({"omega": w, "pol": pol, "re_lam": p.lam.real, "im_lam": p.lam.imag,
                             "residual": p.residual,
                             "status": "ok" if p.converged else "unpolished"})
    return rows


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="plateio", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("spectrum", "per-mode r, t and energy balance on a grid"),
                        ("green", "one Green tensor (part) at a field/source pair"),
                        ("check", "invariant suites with a pass/fail report"),
                        ("poles", "surface-guided-wave poles in a complex window")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"), help="overrides the config")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomised checks")
        sp.add_argument("--figure", help="also render a PNG/PDF figure (needs matplotlib)")
        if name == "green":
            sp.add_argument("--part", help="part label such as 11, 12:1, 30, total")
        if name == "check":
            sp.add_argument("--inject-fault", choices=("reflection",), help=argparse.SUPPRESS)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    except (OSError, ConfigError) as exc:
        print(f"plateio: {exc}", file=sys.stderr)
        return 2
    fmt = args.format or cfg.format
    exit_code = 0
    try:
        if args.command == "spectrum":
            rows, cols = cmd_spectrum(cfg, jobs=args.jobs), SPECTRUM_COLUMNS
        elif args.command == "green":
            rows, cols = cmd_green(cfg, part=args.part), GREEN_COLUMNS
        elif args.command == "check":
            rows, ok = cmd_check(cfg, seed=args.seed, fault=args.inject_fault)
            cols = CHECK_COLUMNS
            exit_code = 0 if ok else 1
        else:
            rows, cols = cmd_poles(cfg), POLE_COLUMNS
    except (ConfigError, RegionMismatchError, DomainError, NonConvergence, DegenerateError) as exc:
        print(f"plateio: {exc}", file=sys.stderr)
        return 2
    text = render(rows, cols, fmt, args.command)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.figure:
        from .plotting import figure_for
        figure_for(args.command, rows, args.figure)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
