import json
import shutil
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from golden import GOLDEN, fixture_run, golden_text
from pfig.blending import BlendConfig
from pfig.cli import main
from pfig.config import PipelineConfig, load_config
from pfig.errors import ConfigError, MissingDirectory, MissingImage
from pfig.imaging import load_image
from pfig.pipeline import (
    MANIFEST_KEYS,
    ingest,
    lint_manifest,
    lint_record,
    process_pair,
    read_manifest,
    run,
    sample_seed,
)
from pfig.preview import preview
from pfig.synthetic import write_config, write_fixture


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("fixture")
    write_fixture(root, pairs=10, seed=0)
    return root


@pytest.fixture(scope="module")
def serial(tmp_path_factory, dataset):
    root = tmp_path_factory.mktemp("serial")
    return fixture_run(root, workers=1, data=dataset)


def make_cfg(tmp_path, data, **kw):
    cfg = load_config(write_config(tmp_path / "config.toml", data, tmp_path / "out"))
    return replace(cfg, **kw) if kw else cfg


def test_ingest_empty_and_missing(tmp_path):
    for sub in ("real", "fake", "landmarks"):
        (tmp_path / sub).mkdir()
    cfg = make_cfg(tmp_path, tmp_path)
    assert ingest(cfg) == ([], [])
    report, records = run(cfg)
    assert records == [] and report.pairs_scanned == 0
    assert Path(cfg.manifest).read_text() == ""
    shutil.rmtree(tmp_path / "fake")
    with pytest.raises(MissingDirectory):
        ingest(cfg)


def test_ingest_pairs_by_stem(tmp_path, dataset):
    data = tmp_path / "data"
    shutil.copytree(dataset, data)
    for k in range(3, 10):
        (data / "landmarks" / f"pair_{k:03d}.json").unlink()
    for sub in ("real", "fake"):
        for k in range(4, 10):
            (data / sub / f"pair_{k:03d}.png").unlink()
    # nested stems pair up by relative path
    for sub, name in (("real", "a.png"), ("fake", "a.png"), ("landmarks", "a.json")):
        (data / sub / "nested").mkdir()
        shutil.copy(dataset / sub / f"pair_000{Path(name).suffix}", data / sub / "nested" / name)
    cfg = make_cfg(tmp_path, data)
    entries, unmatched = ingest(cfg)
    assert [e.stem for e in entries] == ["nested/a", "pair_000", "pair_001", "pair_002"]
    assert unmatched == ["pair_003"]
    report, _ = run(cfg)
    assert report.pairs_scanned == 5 and report.skips["unpaired"] == 1
    assert report.consistent()


def test_sample_seed_stable():
    assert sample_seed(0, "a") == sample_seed(0, "a")
    assert sample_seed(0, "a") != sample_seed(1, "a")
    assert sample_seed(0, "a") != sample_seed(0, "b")
    assert 0 <= sample_seed(7, "x") < 2**64


def test_identical_pair_skipped(tmp_path, dataset):
    cfg = make_cfg(tmp_path, dataset)
    entry = {e.stem: e for e in ingest(cfg)[0]}["pair_005"]
    out = process_pair(entry, cfg)
    assert out.record is None and out.skip == "no-region"


def test_mouth_pair_with_alpha_only(tmp_path, dataset):
    cfg = make_cfg(tmp_path, dataset, blend=BlendConfig(theta_b=1.0))
    entry = {e.stem: e for e in ingest(cfg)[0]}["pair_000"]
    rec = process_pair(entry, cfg).record
    assert rec["region"] == "mouth" and rec["blend_method"] == "alpha"
    assert rec["selected_type"] == "blend boundary"
    assert rec["prompt"] == "this is a fake person, the forgery region is mouth, the forgery type is blend boundary"
    assert rec["blend_params"] == {"alpha": 0.9}
    assert tuple(rec) == MANIFEST_KEYS and lint_record(rec) == []
    mixed = load_image(Path(cfg.manifest).parent / rec["mixed_path"])
    real, fake = load_image(entry.real_path), load_image(entry.fake_path)
    changed = np.any(mixed != real, axis=-1)
    assert np.all(changed <= np.any(fake != real, axis=-1))


def test_process_pair_deterministic(tmp_path, dataset):
    cfg = make_cfg(tmp_path, dataset)
    entry = ingest(cfg)[0][1]
    a = process_pair(entry, cfg).record
    b = process_pair(entry, cfg).record
    assert a == b
    assert process_pair(entry, cfg, sample_index=1).record["id"] == "pair_001#1"


def test_poisson_records_pass_lint(serial):
    _, report, records = serial
    assert report.consistent()
    assert report.samples_emitted == len(records) == 9 and report.skips["no-region"] == 1
    for rec in records:
        assert lint_record(rec) == []
        if rec["blend_method"] == "poisson":
            assert rec["type_verdicts"][rec["selected_type"]] is True
            assert rec["blend_params"]["residual"] < 1e-6


def test_report_file(serial):
    cfg, report, _ = serial
    doc = json.loads(Path(cfg.report_path).read_text())
    assert doc["pairs_scanned"] == 10 and doc["samples_emitted"] == 9
    assert doc["pairs_scanned"] == doc["samples_emitted"] + sum(doc["skips"].values())


def test_golden_manifest(tmp_path):
    assert golden_text(tmp_path) == GOLDEN.read_text(encoding="utf-8")


def test_parallel_matches_serial(tmp_path, dataset, serial):
    cfg, _, _ = fixture_run(tmp_path, workers=8, data=dataset)
    assert Path(cfg.manifest).read_bytes() == Path(serial[0].manifest).read_bytes()
    for rec in read_manifest(cfg.manifest):
        a = Path(cfg.manifest).parent / rec["mixed_path"]
        b = Path(serial[0].manifest).parent / rec["mixed_path"]
        assert a.read_bytes() == b.read_bytes()


def test_seed_changes_output(tmp_path, dataset, serial):
    cfg, _, _ = fixture_run(tmp_path, workers=1, data=dataset, seed=1)
    seeds = {r["seed"] for r in read_manifest(cfg.manifest)}
    assert seeds.isdisjoint({r["seed"] for r in serial[2]})


def test_samples_per_pair(tmp_path, dataset):
    cfg = make_cfg(tmp_path, dataset, samples_per_pair=2)
    report, records = run(cfg)
    assert report.pairs_scanned == 20 and report.consistent()
    assert len({r["id"] for r in records}) == len(records)


def test_bad_inputs_are_skipped(tmp_path, dataset):
    data = tmp_path / "data"
    shutil.copytree(dataset, data)
    (data / "real" / "pair_000.png").write_bytes(b"not a png")
    (data / "landmarks" / "pair_001.json").write_text('{"points": [[1, 2]]}')
    Image.new("RGB", (50, 50)).save(data / "fake" / "pair_002.png")
    report, _ = run(make_cfg(tmp_path, data))
    assert report.skips["unreadable-image"] == 1
    assert report.skips["bad-landmarks"] == 1
    assert report.skips["size-mismatch"] == 1
    assert report.consistent()


def test_lint_flags_tampering(tmp_path, serial):
    recs = [dict(r) for r in serial[2]]
    recs[0]["prompt"] = recs[0]["prompt"].replace("mouth", "nose")
    bad = dict(recs[1])
    bad["selected_type"] = "blend boundary" if bad["blend_method"] == "poisson" else "blur"
    recs[1] = bad
    path = tmp_path / "m.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in recs + [recs[2]]))
    problems = lint_manifest(path)
    assert any("prompt does not match" in p for p in problems)
    assert any("blend boundary" in p for p in problems)
    assert any("duplicate id" in p for p in problems)


def test_preview(tmp_path, serial):
    cfg = serial[0]
    ids = [r["id"] for r in serial[2][:2]]
    a = Image.open(preview(cfg.manifest, ids, tmp_path / "a.png"))
    assert a.width == 4 * 96
    assert a.height > 2 * 96
    preview(cfg.manifest, ids, tmp_path / "b.png")
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()
    with pytest.raises(MissingImage):
        preview(cfg.manifest, ["nope"], tmp_path / "c.png")


def test_config_errors(tmp_path, dataset):
    good = write_config(tmp_path / "c.toml", dataset, tmp_path / "out").read_text()
    cases = {
        "unknown key": good.replace("theta_b = 0.5", "theta_b = 0.5\nbeta = 1"),
        "bad theta": good.replace("theta = 0.05", "theta = 1.5"),
        "missing input": good.replace('real_dir = ', 'realdir = '),
        "bad seed": good.replace("seed = 0", "seed = -1"),
        "not toml": "seed = = 1",
    }
    for name, text in cases.items():
        path = tmp_path / f"{name.replace(' ', '_')}.toml"
        path.write_text(text)
        with pytest.raises(ConfigError):
            load_config(path)


def test_config_relative_paths(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('[input]\nreal_dir = "r"\nfake_dir = "f"\nlandmarks_dir = "l"\n'
                    '[output]\nimages_dir = "o/img"\nmanifest = "o/m.jsonl"\n')
    cfg = load_config(path)
    assert cfg.real_dir == tmp_path / "r"
    assert cfg.report_path == tmp_path / "o" / "m.report.json"
    assert cfg.with_overrides(seed=5, workers=None).seed == 5
    with pytest.raises(ConfigError):
        PipelineConfig(tmp_path, tmp_path, tmp_path / "l", tmp_path / "i", tmp_path / "m")


def test_cli_end_to_end(tmp_path, capsys):
    assert main(["fixture", "--out", str(tmp_path), "--pairs", "4"]) == 0
    config = str(tmp_path / "config.toml")
    assert main(["generate", "--config", config, "--workers", "2"]) == 0
    manifest = tmp_path / "out" / "manifest.jsonl"
    assert main(["lint", "--manifest", str(manifest)]) == 0
    first = read_manifest(manifest)[0]["id"]
    assert main(["preview", "--manifest", str(manifest), "--ids", first, "--out", str(tmp_path / "p.png")]) == 0
    assert main(["preview", "--manifest", str(manifest), "--ids", "zzz", "--out", str(tmp_path / "q.png")]) == 1
    assert main(["generate", "--config", str(tmp_path / "missing.toml")]) == 1
    bad = tmp_path / "bad.jsonl"
    rec = read_manifest(manifest)[0]
    rec["prompt"] = "this is a real person"
    bad.write_text(json.dumps(rec) + "\n")
    assert main(["lint", "--manifest", str(bad)]) == 2
    capsys.readouterr()


def _write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return str(path)


def test_cli_losses_match_gradcheck(tmp_path, capsys):
    rng = np.random.default_rng(0)
    d = 6
    text = rng.standard_normal((22, d))
    tf = _write_jsonl(tmp_path / "text.jsonl", [{"prompt_index": i, "vector": v.tolist()} for i, v in enumerate(text)])
    ct = _write_jsonl(tmp_path / "ct.jsonl", [{"prompt_index": i, "vector": text[i].tolist()} for i in range(2)])
    coarse = _write_jsonl(tmp_path / "c.jsonl", [{"id": f"s{i}", "vector": rng.standard_normal(d).tolist()} for i in range(4)])
    labels = _write_jsonl(tmp_path / "l.jsonl", [{"id": f"s{i}", "label": i % 2} for i in range(4)])
    fi = _write_jsonl(tmp_path / "fi.jsonl", [{"id": f"f{i}", "vector": rng.standard_normal(d).tolist()} for i in range(3)])
    ft = _write_jsonl(tmp_path / "ft.jsonl", [{"prompt_index": i, "vector": rng.standard_normal(d).tolist()} for i in range(3)])
    capsys.readouterr()
    assert main(["losses", "--coarse", coarse, "--coarse-text", ct, "--labels", labels,
                 "--fine-image", fi, "--fine-text", ft]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["total"] == pytest.approx(out["coarse"] + 0.1 * out["fine"], abs=1e-12)

    img = _write_jsonl(tmp_path / "img.jsonl", [{"id": "x", "vector": text[7].tolist()}])
    assert main(["match", "--image-features", img, "--text-features", tf, "--mode", "fine"]) == 0
    m = json.loads(capsys.readouterr().out)
    assert m["prompt_index"] == 7 and m["region"] == "nose" and m["type"] == "color difference"
    assert main(["match", "--image-features", img, "--text-features", tf]) == 0
    assert json.loads(capsys.readouterr().out)["label"] in ("real", "fake")

    assert main(["gradcheck", "--trials", "3", "--n", "3", "--d", "4"]) == 0
    assert json.loads(capsys.readouterr().out)["passed"] is True
    assert main(["gradcheck", "--trials", "1", "--n", "3", "--d", "4", "--tolerance", "1e-30"]) == 2
