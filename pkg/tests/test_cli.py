import numpy as np
import pytest

from floquet_vqe.cli import (
    CSV_HEADER,
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    EXIT_UNCONVERGED,
    ConfigError,
    SweepConfig,
    SweepRecord,
    format_csv,
    format_svg,
    main,
    parse_config,
    run_sweep,
)

FAST = ["--restarts", "2", "--iqpe-repeats", "4", "--shots", "0"]


def record(algorithm="fz1", amplitude=0.0, branch=0, raw=None):
    return SweepRecord(algorithm, amplitude, branch, -0.5, 0.0, raw, -0.5, raw, 1.0, 1.0, 0)


def test_defaults():
    cfg, verbose = parse_config([])
    assert cfg == SweepConfig() and not verbose
    assert (cfg.delta, cfg.omega, cfg.lam, cfg.trotter_steps, cfg.shots) == (1.0, 2.5, 5.0, 100, 10_000)
    assert (cfg.iqpe_bits, cfg.iqpe_shots, cfg.j_max) == (5, 100, 1)


def test_amplitude_grid():
    cfg, _ = parse_config(["--a-min", "0", "--a-max", "2", "--a-steps", "9"])
    np.testing.assert_allclose(cfg.amplitudes, np.arange(9) * 0.25)


def test_precedence(tmp_path):
    f = tmp_path / "sweep.cfg"
    f.write_text("# benchmark file\nshots = 500\nlambda = 7  # stronger\njmax = 2\nseed=4\n")
    cfg, _ = parse_config(["--config", str(f), "--seed", "9"])
    assert (cfg.shots, cfg.lam, cfg.j_max, cfg.seed) == (500, 7.0, 2, 9)
    assert cfg.a_steps == SweepConfig().a_steps


@pytest.mark.parametrize(
    "argv, key",
    [
        (["--shots", "-5"], "shots"),
        (["--omega", "0"], "omega"),
        (["--a-min", "3", "--a-max", "1"], "a_min"),
        (["--a-steps", "0"], "a_steps"),
        (["--algorithm", "fz3"], "algorithm"),
        (["--shots", "many"], "--shots"),
    ],
)
def test_invalid_values_name_the_key(argv, key):
    with pytest.raises(ConfigError) as info:
        parse_config(argv)
    assert info.value.key == key


def test_unknown_config_key(tmp_path):
    f = tmp_path / "bad.cfg"
    f.write_text("shots = 10\ncolour = blue\n")
    with pytest.raises(ConfigError) as info:
        parse_config(["--config", str(f)])
    assert info.value.key == "colour"


def test_main_exit_codes(tmp_path, capsys):
    assert main(["--shots", "-5"]) == EXIT_CONFIG
    assert "shots" in capsys.readouterr().err
    assert main(["--bogus"]) == EXIT_CONFIG
    missing = tmp_path / "nope" / "out.csv"
    args = FAST + ["--a-steps", "1", "--a-max", "0", "--out", str(missing)]
    assert main(args) == EXIT_IO


def test_main_unconverged_exit(tmp_path):
    # lambda = 5 leaves the outer FZ-2 ladder states as duplicates
    out = tmp_path / "fz2.csv"
    args = FAST + ["--algorithm", "fz2", "--a-steps", "1", "--a-max", "0", "--out", str(out)]
    assert main(args) == EXIT_UNCONVERGED
    assert out.read_text().startswith(CSV_HEADER + "\n")


def test_fz1_single_point(tmp_path):
    out, svg = tmp_path / "a.csv", tmp_path / "a.svg"
    args = ["--a-steps", "1", "--a-max", "0", "--out", str(out), "--svg", str(svg)]
    assert main(args) == EXIT_OK
    lines = out.read_bytes().decode("utf-8").split("\n")
    assert lines[0] == CSV_HEADER and lines[-1] == "" and len(lines) == 4
    eps = sorted(float(line.split(",")[3]) for line in lines[1:3])
    assert abs(eps[0] + 0.5) <= 2.5 / 32 and abs(eps[1] - 0.5) <= 2.5 / 32
    assert b"\r" not in out.read_bytes()
    assert svg.read_text().startswith("<svg") and "<polyline" in svg.read_text()


def test_fz2_single_point():
    cfg, _ = parse_config(FAST + ["--algorithm", "fz2", "--a-steps", "1", "--a-max", "0", "--lambda", "12"])
    recs = run_sweep(cfg)
    assert len(recs) == 6
    assert all(abs(abs(r.epsilon) - 0.5) < 1e-6 for r in recs)
    assert all(r.epsilon_raw is not None and r.epsilon_truncated is not None for r in recs)


def test_both_algorithms_sorted_and_seeded():
    cfg, _ = parse_config(FAST + ["--algorithm", "both", "--a-steps", "2", "--a-max", "0.5", "--lambda", "12",
                                  "--seed", "6"])
    recs = run_sweep(cfg)
    keys = [(r.algorithm, r.amplitude, r.branch) for r in recs]
    assert keys == sorted(keys)
    assert [r.algorithm for r in recs] == ["fz1"] * 4 + ["fz2"] * 12
    assert {r.seed for r in recs if r.amplitude == 0.5} == {6 ^ 1}


def test_same_seed_same_bytes():
    cfg, _ = parse_config(["--a-steps", "2", "--a-max", "1", "--restarts", "2"])
    assert format_csv(run_sweep(cfg)) == format_csv(run_sweep(cfg))


def test_csv_format():
    text = format_csv([record()])
    assert text.split("\n") == [CSV_HEADER, "fz1,0.0,0,-0.5,0.0,,-0.5,,1.0,1.0,0", ""]
    mixed = [record("fz2", 0.0, 1, 2.0), record("fz1", 1.0), record("fz2", 0.0, 0, -2.0), record("fz1", 0.0)]
    rows = format_csv(mixed).splitlines()[1:]
    assert [r.split(",")[:3] for r in rows] == [
        ["fz1", "0.0", "0"], ["fz1", "1.0", "0"], ["fz2", "0.0", "0"], ["fz2", "0.0", "1"],
    ]
    with pytest.raises(ValueError):
        format_csv([])


def test_csv_floats_round_trip():
    x = 0.1 + 0.2
    rec = SweepRecord("fz1", 0.25, 0, x, 1e-17, None, -x, None, 0.9999999999999999, 1.0, 3)
    fields = format_csv([rec]).splitlines()[1].split(",")
    assert float(fields[3]) == x and float(fields[4]) == 1e-17 and float(fields[8]) == 0.9999999999999999


def test_svg_needs_records():
    with pytest.raises(ValueError):
        format_svg([])
    assert format_svg([record()], 2.5).count("<circle") == 1
