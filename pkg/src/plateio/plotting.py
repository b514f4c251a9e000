"""Optional figures next to the tabular output (``--figure``).

matplotlib is imported lazily and only here; install the ``plot`` extra to
use it.  The figures are quick looks, the CSV/JSON rows stay the data of
record.
"""

import numpy as np


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise RuntimeError("--figure needs matplotlib (pip install 'artifact[plot]')") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _spectrum(ax_row, rows):
    by_key = {}
    for r in rows:
        by_key.setdefault((r["omega"], r["pol"]), []).append(r)
    labels = (("abs_r2", "|r|$^2$"), ("abs_t2", "|t|$^2$"), ("absorbed", "A"))
    for (omega, pol), rs in sorted(by_key.items()):
        x = np.array([r["lam"] for r in rs])
        for ax, (key, name) in zip(ax_row, labels):
            ax.plot(x, [r[key] for r in rs], lw=1, label=f"{pol}, $\\omega$={omega:.3g}")
            ax.set_xlabel(r"$\lambda$")
            ax.set_title(name)
    if len(by_key) <= 8:
        ax_row[0].legend(fontsize="small")


def figure_for(command, rows, path):
    """Render a figure for ``command``'s rows to ``path`` (format from the suffix)."""
    plt = _pyplot()
    if command == "spectrum":
        fig, axes = plt.subplots(1, 3, figsize=(11, 3.4), constrained_layout=True)
        _spectrum(axes, rows)
    elif command == "poles":
        fig, ax = plt.subplots(figsize=(5, 4), constrained_layout=True)
        for pol, marker in (("TE", "o"), ("TM", "s")):
            pts = [r for r in rows if r.get("pol") == pol and "re_lam" in r]
            ax.scatter([r["re_lam"] for r in pts], [r["im_lam"] for r in pts],
                       marker=marker, label=pol)
        ax.set_xlabel(r"Re $\lambda$")
        ax.set_ylabel(r"Im $\lambda$")
        ax.legend()
    elif command == "green":
        mag = np.array([abs(complex(r["re"], r["im"])) for r in rows]).reshape(3, 3)
        fig, ax = plt.subplots(figsize=(4, 3.5), constrained_layout=True)
        im = ax.imshow(mag, cmap="viridis")
        ax.set_xticks(range(3), list("xyz"))
        ax.set_yticks(range(3), list("xyz"))
        fig.colorbar(im, ax=ax, label="|G|")
    else:
        fig, ax = plt.subplots(figsize=(5, 3), constrained_layout=True)
        names = [r["check"] for r in rows]
        vals = [max(r["residual"], 1e-18) if np.isfinite(r["residual"]) else np.nan for r in rows]
        ax.bar(names, vals, color=["tab:red" if r["status"] == "fail" else "tab:green" for r in rows])
        ax.scatter(names, [r["tolerance"] for r in rows], marker="_", s=400, color="k", label="tolerance")
        ax.set_yscale("log")
        ax.legend()
    fig.savefig(path, dpi=120)
    plt.close(fig)
