"""Read juice result CSVs and render the three-panel summary figure.

Plotted values are read from the files, never recomputed; ``dump_series``
exposes the exact series handed to matplotlib so tests can compare them
against the CSV contents value for value.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

# Columns each input must carry.  The sweep file feeds panels (a) and
# (b); the convergence file feeds panel (c).  Extra columns are ignored
# so the format can grow without breaking old renderers.
SWEEP_COLUMNS = ("algorithm", "snr_db", "nase_db", "srr")
CONVERGE_COLUMNS = ("algorithm", "iteration", "nase_db")

# Fixed styles for the algorithms the harness ships; anything unknown
# falls back to the tab palette so the output stays deterministic.
_STYLE = {
    "ADMM": ("tab:blue", "o"),
    "IRW_ADMM": ("tab:orange", "s"),
    "COV_ADMM": ("tab:green", "^"),
    "COV_ADMM_MMSE": ("tab:red", "v"),
    "GENIE_LS": ("tab:gray", "d"),
    "GENIE_MMSE": ("black", "*"),
}
_FALLBACK = ("tab:purple", "tab:brown", "tab:pink", "tab:olive", "tab:cyan")


class FigError(ValueError):
    """Unusable input: missing file content, bad header, malformed value."""


@dataclass
class PlotSpec:
    """Everything render() needs: inputs, output, optional styling."""

    sweep_csv: Path
    converge_csv: Path
    out_path: Path
    styles: dict = field(default_factory=dict)
    figsize: tuple = (15.0, 4.2)
    dpi: int = 150


def _read_rows(path, required):
    """Parse a CSV into dicts, checking the header names it must carry."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FigError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise FigError(f"{path}: empty CSV")
    reader = csv.DictReader(lines)
    header = reader.fieldnames or []
    for col in required:
        if col not in header:
            raise FigError(f"{path}: missing column {col!r}")
    rows = list(reader)
    if not rows:
        raise FigError(f"{path}: no data rows")
    return rows


def _series(rows, xcol, ycol, path):
    """Group (x, y) pairs by algorithm, preserving row order."""
    out = {}
    for ln, row in enumerate(rows, start=2):
        algo = row["algorithm"]
        try:
            x = float(row[xcol])
            y = float(row[ycol])
        except ValueError as exc:
            raise FigError(f"{path} line {ln}: {exc}") from None
        out.setdefault(algo, ([], []))
        out[algo][0].append(x)
        out[algo][1].append(y)
    return out


def read_sweep(path):
    """Panel (a)/(b) series: {algorithm: (snr, nase_db)} and {algorithm: (snr, srr)}."""
    rows = _read_rows(path, SWEEP_COLUMNS)
    return (
        _series(rows, "snr_db", "nase_db", path),
        _series(rows, "snr_db", "srr", path),
    )


def read_converge(path):
    """Panel (c) series: {algorithm: (iteration, nase_db)}."""
    rows = _read_rows(path, CONVERGE_COLUMNS)
    return _series(rows, "iteration", "nase_db", path)


def dump_series(panels):
    """One line per point: panel, algorithm, x, y with full float precision."""
    lines = []
    for panel in sorted(panels):
        for algo, (xs, ys) in panels[panel].items():
            for x, y in zip(xs, ys):
                lines.append(f"{panel}\t{algo}\t{x!r}\t{y!r}")
    return "\n".join(lines)


def _style(algo, styles, fallback_idx):
    if algo in styles:
        return styles[algo], None
    if algo in _STYLE:
        return _STYLE[algo]
    return _FALLBACK[fallback_idx % len(_FALLBACK)], "x"


def _draw(ax, series, styles):
    for idx, (algo, (xs, ys)) in enumerate(series.items()):
        color, marker = _style(algo, styles, idx)
        ax.plot(xs, ys, label=algo, color=color, marker=marker, markersize=4)


def render(spec: PlotSpec):
    """Write the three-panel figure; returns the panel series for dumping."""
    nase, srr = read_sweep(spec.sweep_csv)
    conv = read_converge(spec.converge_csv)
    panels = {"a": nase, "b": srr, "c": conv}

    fig, axes = plt.subplots(1, 3, figsize=spec.figsize)
    _draw(axes[0], nase, spec.styles)
    axes[0].set_xlabel("SNR (dB)")
    axes[0].set_ylabel("NASE (dB)")
    axes[0].set_title("(a) NASE vs SNR")

    _draw(axes[1], srr, spec.styles)
    axes[1].set_xlabel("SNR (dB)")
    axes[1].set_ylabel("SRR")
    axes[1].set_ylim(0.0, 1.05)
    axes[1].set_title("(b) SRR vs SNR")

    _draw(axes[2], conv, spec.styles)
    axes[2].set_xlabel("cumulative iteration")
    axes[2].set_ylabel("NASE (dB)")
    axes[2].set_title("(c) NASE vs iteration")

    for ax in axes:
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=spec.dpi, metadata={"Software": "figgen"})
    plt.close(fig)
    return panels
