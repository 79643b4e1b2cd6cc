"""Outage sweeps over antenna width, observed-port count and method.

Usage::

    python -m fluidport --ports 50 --width 0.5,2 --observed 1-5 \\
        --method reference,spo,aa_spo_lstm --trials 100000 --out outage.csv
    python -m fluidport --preset figs --out figs.csv

A config file (``--config``) holds ``key = value`` lines with ``#`` comments;
keys are the long flag names (dashes or underscores). Flags given on the
command line override the file, which overrides the preset.
"""

import argparse
import concurrent.futures
import csv
import io
import logging
import math
import os
import sys
from dataclasses import dataclass, field

from . import lstm, spo
from .channel import FluidAntennaConfig
from .pipelines import MethodId, TrainBudget, run_method
from .rng import derive_seed
from .selection import evenly_spread_plan

log = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = ("method", "width", "n_ports", "n_observed", "outage", "stderr", "trials",
               "seed", "train_q", "outage_bound")

ALL_METHODS = (MethodId.REFERENCE, MethodId.AA, MethodId.SPO, MethodId.LSTM, MethodId.SPO_LSTM,
               MethodId.AA_SPO_LSTM, MethodId.FIXED_ANTENNA, MethodId.ORACLE)


@dataclass(frozen=True)
class ExperimentSpec:
    n_ports: int = 50
    widths: tuple = (0.5,)
    observed_counts: tuple = (1,)
    methods: tuple = (MethodId.REFERENCE,)
    trials: int = 10_000
    target_snr_db: float = 10.0
    avg_snr_db: float = None  # None: calibrate to 50% single-port outage
    train_q: int = 5000
    epochs: int = 50
    learning_rate: float = 0.05
    spo_iterations: int = 3000
    root_seed: int = 0
    output_path: str = None
    gnuplot_script: str = None
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.n_ports < 2:
            raise ValueError("ports must be >= 2")
        if not self.widths or any(not (w > 0 and math.isfinite(w)) for w in self.widths):
            raise ValueError(f"every width must be positive: {self.widths}")
        if not self.observed_counts or any(not 1 <= n <= self.n_ports for n in self.observed_counts):
            raise ValueError(f"observed counts must lie in [1, {self.n_ports}]: {self.observed_counts}")
        if not self.methods:
            raise ValueError("no methods given")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not math.isfinite(self.target_snr_db):
            raise ValueError("target SNR must be finite")
        if self.avg_snr_db is not None and not math.isfinite(self.avg_snr_db):
            raise ValueError("average SNR must be finite")
        if self.train_q < 1 or self.epochs < 0 or self.learning_rate < 0 or self.spo_iterations < 1:
            raise ValueError("training budget values out of range")

    def config_for(self, width) -> FluidAntennaConfig:
        return FluidAntennaConfig.from_db(self.n_ports, width, self.target_snr_db, self.avg_snr_db)

    def budget(self) -> TrainBudget:
        return TrainBudget(
            q_examples=self.train_q,
            spo_settings=spo.SgdSettings(max_iterations=self.spo_iterations, standardize=True),
            lstm_settings=lstm.TrainSettings(epochs=self.epochs, learning_rate=self.learning_rate),
        )


PRESETS = {
    "figs": dict(n_ports=50, widths=(0.5, 2.0, 5.0), observed_counts=tuple(range(1, 11)),
                 methods=ALL_METHODS, trials=100_000, target_snr_db=10.0),
}


def _int_list(text):
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _float_list(text):
    return tuple(float(p) for p in str(text).split(",") if p.strip())


def _method_list(text):
    if str(text).strip().lower() == "all":
        return ALL_METHODS
    return tuple(MethodId.parse(p) for p in str(text).split(",") if p.strip())


def _optional_float(text):
    if text is None or str(text).strip().lower() in ("", "none", "auto", "calibrate"):
        return None
    return float(text)


# key -> (spec field, converter)
_KEYS = {
    "ports": ("n_ports", int),
    "width": ("widths", _float_list),
    "observed": ("observed_counts", _int_list),
    "method": ("methods", _method_list),
    "trials": ("trials", int),
    "target_snr_db": ("target_snr_db", float),
    "avg_snr_db": ("avg_snr_db", _optional_float),
    "train_q": ("train_q", int),
    "epochs": ("epochs", int),
    "lr": ("learning_rate", float),
    "spo_iterations": ("spo_iterations", int),
    "seed": ("root_seed", int),
    "out": ("output_path", str),
    "gnuplot_script": ("gnuplot_script", str),
}
_ALIASES = {"widths": "width", "methods": "method", "learning_rate": "lr", "root_seed": "seed",
            "n_ports": "ports", "observed_counts": "observed", "output": "out"}


def _canonical_key(key):
    key = key.strip().lower().replace("-", "_")
    return _ALIASES.get(key, key)


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            key = _canonical_key(key)
            if key not in _KEYS and key != "preset":
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value.strip()
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fluidport", description=__doc__.split("\n\n")[0],
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a named sweep")
    p.add_argument("--ports", help="number of ports N")
    p.add_argument("--width", help="antenna width(s) in wavelengths, comma separated")
    p.add_argument("--observed", help="observed-port counts, e.g. 1,5 or 1-10")
    p.add_argument("--method", help="method name(s), comma separated, or 'all'")
    p.add_argument("--trials", help="Monte-Carlo evaluation trials per cell")
    p.add_argument("--target-snr-db", help="outage threshold in dB (default 10)")
    p.add_argument("--avg-snr-db", help="average SNR in dB; default calibrates to target/ln 2")
    p.add_argument("--train-q", help="labelled examples generated for training")
    p.add_argument("--epochs", help="LSTM epochs")
    p.add_argument("--lr", help="LSTM learning rate")
    p.add_argument("--spo-iterations", help="SPO gradient iterations")
    p.add_argument("--seed", help="root seed")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.add_argument("--gnuplot-script", help="also write a gnuplot script plotting the CSV")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def parse_spec(argv=None) -> ExperimentSpec:
    """Merge preset, config file and flags (in increasing priority) into a spec."""
    args = build_parser().parse_args(argv)
    file_values = read_config_file(args.config) if args.config else {}
    preset = args.preset or file_values.pop("preset", None)
    fields = {}
    if preset:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}")
        fields.update(PRESETS[preset])
    merged = dict(file_values)
    for key in _KEYS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    for key, text in merged.items():
        name, conv = _KEYS[key]
        fields[name] = conv(text)
    return ExperimentSpec(**fields, extra={"verbose": args.verbose})


def cell_seed(root_seed, method: MethodId, width, n_observed) -> int:
    return derive_seed(root_seed, method.value, repr(float(width)), int(n_observed))


def sweep_cells(spec: ExperimentSpec):
    """Cells in output order: width, then method, then observed count."""
    for width in spec.widths:
        for method in spec.methods:
            for n_obs in spec.observed_counts:
                yield method, width, n_obs


def run_cell(spec: ExperimentSpec, method: MethodId, width, n_observed) -> dict:
    seed = cell_seed(spec.root_seed, method, width, n_observed)
    config = spec.config_for(width)
    plan = evenly_spread_plan(spec.n_ports, n_observed)
    try:
        res = run_method(method, config, plan, spec.budget(), spec.trials, seed)
    except Exception as exc:
        raise RuntimeError(f"cell method={method.value} width={width:g} "
                           f"n_observed={n_observed} failed: {exc}") from exc
    bound = f"<{1.0 / res.trials:.6g}" if res.outage_probability == 0 else ""
    log.info("%s W=%g n=%d: outage %.6g +- %.2g", method.value, width, n_observed,
             res.outage_probability, res.standard_error)
    return {
        "method": method.value, "width": f"{width:g}", "n_ports": spec.n_ports,
        "n_observed": n_observed, "outage": f"{res.outage_probability:.6g}",
        "stderr": f"{res.standard_error:.6g}", "trials": res.trials, "seed": seed,
        "train_q": spec.train_q, "outage_bound": bound,
    }


def worker_count() -> int:
    value = os.environ.get("FLUIDPORT_THREADS", "1").strip() or "1"
    n = int(value)
    if n < 0:
        raise ValueError("FLUIDPORT_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def _run_cell_args(args):
    return run_cell(*args)


def run_experiment(spec: ExperimentSpec, workers=None) -> list:
    """All result rows, in sweep order, whatever order the cells finish in."""
    cells = list(sweep_cells(spec))
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(cells) <= 1:
        return [run_cell(spec, *cell) for cell in cells]
    with concurrent.futures.ProcessPoolExecutor(max_workers=min(workers, len(cells))) as pool:
        return list(pool.map(_run_cell_args, [(spec, *cell) for cell in cells]))


def format_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def gnuplot_script(spec: ExperimentSpec, csv_path) -> str:
    lines = [
        f"# outage curves from {csv_path} (CSV schema v{CSV_SCHEMA_VERSION})",
        "set datafile separator ','",
        "set logscale y",
        "set xlabel 'observed ports'",
        "set ylabel 'outage probability'",
        "set key outside right",
    ]
    for width in spec.widths:
        lines.append(f"set title 'N={spec.n_ports}, W={width:g}'")
        curves = []
        for method in spec.methods:
            src = f"< grep '^{method.value},{width:g},' {csv_path}"
            curves.append(f"'{src}' using 4:5 with linespoints title '{method.value}'")
        lines.append("plot " + ", \\\n     ".join(curves))
        lines.append("pause -1")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    try:
        spec = parse_spec(argv)
    except (ValueError, OSError) as exc:
        print(f"fluidport: error: {exc}", file=sys.stderr)
        return 2
    verbosity = spec.extra.get("verbose", 0)
    logging.basicConfig(level=logging.INFO if verbosity else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        rows = run_experiment(spec)
    except RuntimeError as exc:
        print(f"fluidport: {exc}", file=sys.stderr)
        return 1
    text = format_csv(rows)
    if spec.output_path:
        with open(spec.output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if spec.gnuplot_script:
        with open(spec.gnuplot_script, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(gnuplot_script(spec, spec.output_path or "outage.csv"))
    return 0
