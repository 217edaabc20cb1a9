import json
import math

import numpy as np
import pytest

from conftest import sample
from gcvx.cli import main
from gcvx.errors import ConfigInvalid
from gcvx.geometry import PHI
from gcvx.harness import (
    HEADER,
    ExperimentConfig,
    compute_reference,
    generate_karcher,
    run_experiment,
)
from gcvx.manifolds import Euclidean, Hyperbolic
from gcvx.objectives import karcher

SMALL = dict(manifold="hyperbolic", dim=5, n_centers=8, max_iters=300)


def test_single_center_instance():
    inst = generate_karcher(ExperimentConfig(n_centers=1, dim=4))
    M = inst.manifold
    assert inst.R_upper == 2 * M.dist(inst.centers[0], inst.anchor)
    assert karcher(inst.centers, M).minimizer is inst.centers[0]


def test_one_center_keeps_full_radius():
    inst = generate_karcher(ExperimentConfig())
    M, o = inst.manifold, inst.anchor
    norms = np.array([M.norm(o, M.log(o, y)) for y in inst.centers])
    assert len(norms) == 100
    assert np.sum((norms > 0.1) & (norms <= 1.0 + 1e-12)) == 1
    assert np.all(np.delete(norms, np.argmax(norms)) <= 0.1 + 1e-12)
    np.testing.assert_array_equal(o, np.eye(51)[0])


def test_generation_is_deterministic():
    a = generate_karcher(ExperimentConfig(**SMALL, seed=4))
    b = generate_karcher(ExperimentConfig(**SMALL, seed=4))
    c = generate_karcher(ExperimentConfig(**SMALL, seed=5))
    assert all(np.array_equal(x, y) for x, y in zip(a.centers, b.centers))
    assert np.array_equal(a.x0, b.x0)
    assert not np.array_equal(a.centers[0], c.centers[0])


def test_reference_two_centers_midpoint(rng):
    H = Hyperbolic(3)
    y1, y2 = sample(H, rng, 1.5), sample(H, rng, 1.5)
    mid = H.exp(y1, 0.5 * H.log(y1, y2))
    xs, fs, precise, _ = compute_reference(karcher([y1, y2], H), y1, 2 * H.dist(y1, y2))
    assert precise and H.dist(xs, mid) <= 1e-12


def test_reference_euclidean_mean(rng):
    ys = list(rng.standard_normal((10, 4)))
    xs, _, precise, _ = compute_reference(karcher(ys, Euclidean(4)), ys[0], 5.0)
    assert precise
    np.testing.assert_allclose(xs, np.mean(ys, axis=0), atol=1e-14)


def test_reference_inside_enclosing_ball():
    inst = generate_karcher(ExperimentConfig(**SMALL))
    M = inst.manifold
    f = karcher(inst.centers, M)
    xs, _, _, _ = compute_reference(f, inst.anchor, inst.R_upper)
    assert M.dist(xs, inst.anchor) <= max(M.dist(y, inst.anchor) for y in inst.centers)


def test_config_validation():
    with pytest.raises(ConfigInvalid):
        ExperimentConfig(manifold="cap", radius=1.0).validate()
    with pytest.raises(ConfigInvalid):
        ExperimentConfig(algorithm="rgda").validate("karcher")
    with pytest.raises(ConfigInvalid):
        ExperimentConfig(n_centers=0).validate()


@pytest.mark.parametrize("algo", ["rgd-l", "rgd-zeta", "rgd-reduced", "subgrad", "prgd", "crgd", "rippa-prgd", "rippa-crgd", "rppa-exact"])
def test_every_algorithm_runs(algo):
    rows, meta = run_experiment(ExperimentConfig(**SMALL, algorithm=algo))
    assert rows[0][0] == 0 and len(rows) == meta["steps"] + 1
    assert all(math.isfinite(r[1]) for r in rows)


def test_rgd_gap_nonincreasing():
    rows, meta = run_experiment(ExperimentConfig(**SMALL))
    gaps = [r[1] for r in rows]
    assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
    assert meta["reached_tol"] and meta["dist_sq_increases"] == []


def test_metadata_complete(tmp_path):
    out = tmp_path / "t.csv"
    run_experiment(ExperimentConfig(**SMALL, out=str(out)))
    meta = json.loads((tmp_path / "t.csv.meta.json").read_text())
    for key in ("eta", "L", "mu", "zeta_R", "delta_R", "R_upper", "certificate_radius", "phi", "f_star"):
        assert key in meta, key
    assert meta["phi"] == (1 + 5**0.5) / 2 == PHI


def test_csv_is_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"run{i}.csv"
        assert main(["karcher", "--dim", "5", "--centers", "8", "--algo", "rippa-prgd", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    text = outs[0].decode()
    assert text.splitlines()[0] == ",".join(HEADER) and "\r" not in text
    assert all(line.endswith(",0") for line in text.splitlines()[1:])


def test_json_format(tmp_path):
    out = tmp_path / "t.json"
    assert main(["karcher", "--dim", "5", "--centers", "8", "--format", "json", "--out", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert set(rows[0]) == set(HEADER)


def test_minmax_cli(tmp_path):
    out = tmp_path / "m.csv"
    assert main(["minmax", "--mu", "1", "--out", str(out)]) == 0
    meta = json.loads((tmp_path / "m.csv.meta.json").read_text())
    assert meta["reached_tol"]
    assert main(["minmax", "--manifold", "euclidean", "--coupling", "0.5", "--max-iters", "50"]) == 0


def test_exit_codes(tmp_path, capsys):
    assert main(["verify", "--suite", "geometry", "--samples", "10"]) == 0
    assert main(["verify", "--suite", "geometry", "--samples", "10", "--tolerance", "0"]) == 1
    lines = capsys.readouterr().out.splitlines()
    assert any(json.loads(x)["max_violation"] > 0 for x in lines)
    assert main(["karcher", "--manifold", "cap", "--radius", "1.0"]) == 2
    assert main(["minmax", "--coupling", "0.5"]) == 2
    with pytest.raises(SystemExit) as err:
        main(["karcher", "--algo", "nope"])
    assert err.value.code == 2
    out = tmp_path / "d.csv"
    assert main(["karcher", "--manifold", "euclidean", "--dim", "3", "--centers", "5", "--eta", "100", "--out", str(out)]) == 3
    meta = json.loads((tmp_path / "d.csv.meta.json").read_text())
    assert meta["partial"] and "divergence" in meta["error"]


def test_batch(tmp_path):
    batch = tmp_path / "b.json"
    entries = [{"algo": a, "out": str(tmp_path / f"{a}.csv"), "dim": 4, "centers": 6} for a in ("rgd-l", "rgd-zeta")]
    batch.write_text(json.dumps(entries))
    assert main(["karcher", "--batch", str(batch), "--jobs", "2"]) == 0
    assert all((tmp_path / f"{a}.csv").exists() for a in ("rgd-l", "rgd-zeta"))
    batch.write_text(json.dumps([{"algo": "rgd-l"}]))
    assert main(["karcher", "--batch", str(batch)]) == 2
    batch.write_text(json.dumps([{"bogus": 1, "out": "x"}]))
    assert main(["karcher", "--batch", str(batch)]) == 2
