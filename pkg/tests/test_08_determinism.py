import pytest


@pytest.mark.parametrize(
    "args,profile",
    [
        (["fg-expand"], "poincare.toml"),
        (["fg-expand"], "cusp.toml"),
        (["constraints"], "torus_example.toml"),
    ],
)
def test_reports_are_byte_identical(run_cli, tmp_path, args, profile):
    first, out_a = run_cli(args, profile=profile, outdir=tmp_path / "a")
    second, out_b = run_cli(args, profile=profile, outdir=tmp_path / "b")
    assert first.returncode == 0, first.stderr
    assert second.returncode == 0, second.stderr
    a = (out_a / "report.json").read_bytes()
    b = (out_b / "report.json").read_bytes()
    assert a == b


def test_seed_is_recorded(run_cli, load_json):
    res, outdir = run_cli(["fg-expand", "--seed", "7"], profile="poincare.toml")
    assert res.returncode == 0, res.stderr
    report = load_json(outdir)
    assert report["seed"] == 7
    assert report["config"]["seed"] == 7
    assert "output_dir" not in report["config"]


@pytest.mark.slow
def test_evolve_curve_is_reproducible(run_cli, tmp_path):
    runs = [run_cli(["evolve", "--t1", "0.5"], profile="poincare.toml", outdir=tmp_path / d) for d in "ab"]
    for res in runs:
        assert res.returncode == 0, res.stderr
    assert (runs[0].outdir / "curve.csv").read_bytes() == (runs[1].outdir / "curve.csv").read_bytes()
