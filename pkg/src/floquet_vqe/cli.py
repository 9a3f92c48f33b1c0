"""Amplitude sweeps of the driven spin-1/2 benchmark with CSV and SVG output.

Exit codes: 0 success, 1 some point unconverged, 2 configuration error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .fz1 import FZ1Config, FloquetSolution, solve_band_fz1
from .fz2 import FZ2Config, solve_band_fz2
from .model import driven_spin_half
from .oracle import exact_quasienergies
from .variational import OptimizerConfig

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_UNCONVERGED, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

CSV_HEADER = (
    "algorithm,amplitude,branch,epsilon,epsilon_sigma,epsilon_raw,"
    "epsilon_exact,epsilon_truncated,fidelity,loss_star,seed"
)
ALGORITHMS = ("fz1", "fz2", "both")


class ConfigError(ValueError):
    """Bad configuration; ``key`` names the offending setting."""

    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class SweepConfig:
    algorithm: str = "fz1"
    delta: float = 1.0
    omega: float = 2.5
    a_min: float = 0.0
    a_max: float = 2.0
    a_steps: int = 9
    lam: float = 5.0
    trotter_steps: int = 100
    shots: int = 10_000
    iqpe_bits: int = 5
    iqpe_shots: int = 100
    iqpe_repeats: int = 20
    j_max: int = 1
    restarts: int = 8
    seed: int = 0
    out_path: str = "sweep.csv"
    svg_path: str | None = None

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError("algorithm", f"must be one of {', '.join(ALGORITHMS)}, got {self.algorithm!r}")
        if not self.omega > 0:
            raise ConfigError("omega", "must be positive")
        if self.a_steps < 1:
            raise ConfigError("a_steps", "must be >= 1")
        if self.a_min > self.a_max:
            raise ConfigError("a_min", "must not exceed a_max")
        if self.lam <= 0:
            raise ConfigError("lambda", "must be positive")
        for key in ("trotter_steps", "iqpe_bits", "iqpe_shots", "iqpe_repeats", "j_max", "restarts"):
            if getattr(self, key) < 1:
                raise ConfigError(key, "must be >= 1")
        if self.shots < 0:
            raise ConfigError("shots", "must be >= 0 (0 selects exact mode)")
        if self.seed < 0:
            raise ConfigError("seed", "must be a non-negative integer")

    @property
    def amplitudes(self) -> np.ndarray:
        return np.linspace(self.a_min, self.a_max, self.a_steps)


# config-file / flag name -> SweepConfig field
_KEYS = {
    "algorithm": "algorithm",
    "delta": "delta",
    "omega": "omega",
    "a_min": "a_min",
    "a_max": "a_max",
    "a_steps": "a_steps",
    "lambda": "lam",
    "lam": "lam",
    "trotter_steps": "trotter_steps",
    "shots": "shots",
    "iqpe_bits": "iqpe_bits",
    "iqpe_shots": "iqpe_shots",
    "iqpe_repeats": "iqpe_repeats",
    "jmax": "j_max",
    "j_max": "j_max",
    "restarts": "restarts",
    "seed": "seed",
    "out": "out_path",
    "out_path": "out_path",
    "svg": "svg_path",
    "svg_path": "svg_path",
}
_TYPES = {f.name: f.type for f in dataclasses.fields(SweepConfig)}


def _convert(key: str, name: str, text: str) -> object:
    kind = _TYPES[name]
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as {kind}") from None
    return text


def read_config_file(path: str | Path) -> dict[str, object]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"line {lineno} is not 'key = value': {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        name = _KEYS.get(key.replace("-", "_"))
        if name is None:
            raise ConfigError(key, "unknown configuration key")
        values[name] = _convert(key, name, value)
    return values


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="floquet-vqe", description="Sweep the drive amplitude of a driven spin-1/2.")
    p.add_argument("--algorithm", help="fz1, fz2 or both")
    p.add_argument("--delta")
    p.add_argument("--omega")
    p.add_argument("--a-min")
    p.add_argument("--a-max")
    p.add_argument("--a-steps")
    p.add_argument("--lambda", dest="lambda_")
    p.add_argument("--trotter-steps")
    p.add_argument("--shots", help="0 selects exact-expectation mode")
    p.add_argument("--iqpe-bits")
    p.add_argument("--iqpe-shots")
    p.add_argument("--iqpe-repeats")
    p.add_argument("--jmax")
    p.add_argument("--restarts")
    p.add_argument("--seed")
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--svg", help="optional SVG output path")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_config(argv: Sequence[str] | None = None) -> tuple[SweepConfig, bool]:
    """Build a config with precedence flags > config file > defaults.

    Returns the config and the verbosity flag. Raises :class:`ConfigError`.
    """
    parser = _parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except SystemExit as exc:
        if exc.code == 0:
            raise
        raise ConfigError("argv", "could not parse command line") from None
    values = read_config_file(args.config) if args.config else {}
    for dest, text in vars(args).items():
        if dest in ("config", "verbose") or text is None:
            continue
        key = dest.rstrip("_")
        name = _KEYS[key]
        values[name] = _convert("--" + key.replace("_", "-"), name, text)
    return SweepConfig(**values), args.verbose


@dataclass(frozen=True)
class SweepRecord:
    algorithm: str
    amplitude: float
    branch: int
    epsilon: float
    epsilon_sigma: float
    epsilon_raw: float | None
    epsilon_exact: float
    epsilon_truncated: float | None
    fidelity: float
    loss_star: float
    seed: int
    converged: bool = field(default=True, compare=False)

    def sort_key(self) -> tuple:
        return (self.algorithm, self.amplitude, self.branch)


def _records(algorithm: str, amplitude: float, seed: int, sols: list[FloquetSolution]) -> list[SweepRecord]:
    return [
        SweepRecord(
            algorithm, float(amplitude), s.branch, s.epsilon, s.epsilon_sigma, s.epsilon_raw,
            s.epsilon_exact, s.epsilon_truncated, s.fidelity_vs_oracle, s.loss_star, seed, s.converged,
        )
        for s in sols
    ]


def run_point(config: SweepConfig, index: int) -> list[SweepRecord]:
    """All records for one amplitude, seeded with ``config.seed ^ index``."""
    amplitude = float(config.amplitudes[index])
    seed = config.seed ^ index
    h = driven_spin_half(config.delta, amplitude, config.omega)
    oracle = exact_quasienergies(h)
    opt = OptimizerConfig(restarts=config.restarts, seed=seed)
    out: list[SweepRecord] = []
    if config.algorithm in ("fz1", "both"):
        cfg = FZ1Config(
            lam=config.lam, trotter_steps=config.trotter_steps, shots=config.shots,
            iqpe_bits=config.iqpe_bits, iqpe_shots=config.iqpe_shots,
            iqpe_repeats=config.iqpe_repeats, optimizer=opt,
        )
        sols = solve_band_fz1(h, cfg, np.random.default_rng(seed), oracle=oracle)
        out += _records("fz1", amplitude, seed, sols)
    if config.algorithm in ("fz2", "both"):
        cfg2 = FZ2Config(lam=config.lam, shots=config.shots, optimizer=opt)
        sols = solve_band_fz2(h, config.j_max, cfg2, np.random.default_rng(seed), oracle=oracle)
        out += _records("fz2", amplitude, seed, sols)
    return out


def run_sweep(config: SweepConfig) -> list[SweepRecord]:
    records: list[SweepRecord] = []
    for i in range(config.a_steps):
        logger.info("amplitude %d/%d: A = %g", i + 1, config.a_steps, config.amplitudes[i])
        records += run_point(config, i)
    return sorted(records, key=SweepRecord.sort_key)


def _fmt(x: float | int | str | None) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def format_csv(records: Sequence[SweepRecord]) -> str:
    if not records:
        raise ValueError("no records to write")
    names = CSV_HEADER.split(",")
    lines = [CSV_HEADER]
    for r in sorted(records, key=SweepRecord.sort_key):
        row = dataclasses.asdict(r)
        lines.append(",".join(_fmt(row[n]) for n in names))
    return "\n".join(lines) + "\n"


def emit_csv(records: Sequence[SweepRecord], path: str | Path) -> None:
    text = format_csv(records)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def format_svg(records: Sequence[SweepRecord], omega: float | None = None) -> str:
    """Scatter of epsilon vs amplitude with sigma error bars over oracle curves."""
    if not records:
        raise ValueError("no records to plot")
    width, height, pad = 640, 420, 50
    amps = sorted({r.amplitude for r in records})
    a0, a1 = amps[0], amps[-1]
    if a1 == a0:
        a0, a1 = a0 - 0.5, a1 + 0.5
    half = omega / 2 if omega else max(abs(r.epsilon) for r in records) * 1.1 or 1.0

    def px(a: float) -> float:
        return pad + (a - a0) / (a1 - a0) * (width - 2 * pad)

    def py(e: float) -> float:
        return height - pad - (e + half) / (2 * half) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="13">drive amplitude A</text>',
        f'<text x="14" y="{height / 2}" font-size="13" transform="rotate(-90 14 {height / 2})" '
        'text-anchor="middle">quasi-energy</text>',
        f'<text x="{pad - 6}" y="{py(half) + 4:.1f}" text-anchor="end" font-size="11">{half:.3g}</text>',
        f'<text x="{pad - 6}" y="{py(-half) + 4:.1f}" text-anchor="end" font-size="11">{-half:.3g}</text>',
    ]
    # oracle: connect the k-th lowest exact value across amplitudes
    by_amp: dict[float, list[float]] = {}
    for r in records:
        by_amp.setdefault(r.amplitude, [])
        if not any(abs(r.epsilon_exact - e) < 1e-12 for e in by_amp[r.amplitude]):
            by_amp[r.amplitude].append(r.epsilon_exact)
    n_curves = min(len(v) for v in by_amp.values())
    for k in range(n_curves):
        pts = " ".join(f"{px(a):.1f},{py(sorted(by_amp[a])[k]):.1f}" for a in amps)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="gray" stroke-width="1.5"/>')
    colours = {"fz1": "crimson", "fz2": "royalblue"}
    for r in sorted(records, key=SweepRecord.sort_key):
        x, y = px(r.amplitude), py(r.epsilon)
        c = colours.get(r.algorithm, "black")
        if r.epsilon_sigma > 0:
            dy = r.epsilon_sigma / (2 * half) * (height - 2 * pad)
            parts.append(f'<line x1="{x:.1f}" y1="{y - dy:.1f}" x2="{x:.1f}" y2="{y + dy:.1f}" stroke="{c}"/>')
        parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" fill="{c}"><title>{r.algorithm} '
                     f'A={r.amplitude:g} branch {r.branch}</title></circle>')
    for i, (name, c) in enumerate(sorted(colours.items())):
        if any(r.algorithm == name for r in records):
            parts.append(f'<text x="{width - pad}" y="{pad + 14 * i}" text-anchor="end" '
                         f'font-size="12" fill="{c}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_svg(records: Sequence[SweepRecord], path: str | Path, omega: float | None = None) -> None:
    text = format_svg(records, omega)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        config, verbose = parse_config(argv)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    with warnings.catch_warnings():
        if not verbose:
            warnings.simplefilter("ignore", RuntimeWarning)
        records = run_sweep(config)
    try:
        emit_csv(records, config.out_path)
        if config.svg_path:
            emit_svg(records, config.svg_path, config.omega)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    bad = [r for r in records if not r.converged]
    if bad:
        print(f"{len(bad)} of {len(records)} records flagged unconverged", file=sys.stderr)
        return EXIT_UNCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
