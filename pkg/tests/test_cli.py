import json

import numpy as np
import pytest

from washseg.cli import main
from washseg.model import ArchConfig, GestureNet
from washseg.scoring import PROFESSIONAL_DURATIONS
from washseg.signal_data import write_csv
from washseg.synth import GenSpec, generate_procedure
from conftest import make_series


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    assert main(["synth", "--seed", "5", "--participants", "2", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def checkpoint(tmp_path_factory, corpus_dir):
    path = tmp_path_factory.mktemp("model") / "model.ckpt"
    rc = main([
        "train", "--data", str(corpus_dir), "--seed", "0", "--out", str(path),
        "--epochs", "2", "--batch", "256", "--stride", "16", "--quiet",
    ])
    assert rc == 0
    return path


def test_synth_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["synth", "--seed", "9", "--participants", "1", "--out", str(a)]) == 0
    assert main(["synth", "--seed", "9", "--participants", "1", "--out", str(b)]) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_train_is_deterministic(tmp_path, corpus_dir):
    outs = []
    for tag in ("x", "y"):
        path = tmp_path / f"{tag}.ckpt"
        rc = main([
            "train", "--data", str(corpus_dir), "--seed", "3", "--out", str(path),
            "--epochs", "1", "--stride", "32", "--quiet",
        ])
        assert rc == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_infer_writes_track_and_svg(tmp_path, checkpoint):
    series = generate_procedure(GenSpec(seed=5, participants=2), 0, 0, 5)
    csv_path = tmp_path / "series.csv"
    write_csv(series, csv_path)
    out = tmp_path / "track.csv"
    rc = main([
        "infer", "--checkpoint", str(checkpoint), "--series", str(csv_path),
        "--smooth", "mtv+tmf", "--out", str(out),
    ])
    assert rc == 0
    assert out.exists() and (tmp_path / "track.svg").exists()
    header = out.read_text().splitlines()[0]
    assert header == "index,t,predicted,ground_truth"


def test_score_on_perfect_track(tmp_path):
    # durations all meet the targets -> total 100
    labels = np.concatenate(
        [np.zeros(100, int)]
        + [np.full(int(round(d * 50)) + 10, g + 1, dtype=int) for g, d in enumerate(PROFESSIONAL_DURATIONS)]
        + [np.zeros(100, int)]
    )
    track_path = tmp_path / "track.csv"
    with open(track_path, "w") as f:
        f.write("index,t,predicted,ground_truth\n")
        for i, lab in enumerate(labels):
            f.write(f"{i},{i / 50.0},{lab},{lab}\n")
    out = tmp_path / "score.json"
    rc = main(["score", "--track", str(track_path), "--out", str(out)])
    assert rc == 0
    report = json.loads(out.read_text())
    assert report["total"] == pytest.approx(100.0)


def test_inspect_reports_size(capsys, checkpoint):
    assert main(["inspect", "--checkpoint", str(checkpoint)]) == 0
    out = capsys.readouterr().out
    assert "serialized size" in out
    model = GestureNet.load(checkpoint)
    kbits = model.size_report()["total_kbits"]
    assert f"{kbits:.3f} Kbit" in out


def test_eval_emits_reports(tmp_path, corpus_dir):
    out = tmp_path / "eval"
    rc = main([
        "eval", "--data", str(corpus_dir), "--split", "user-dep", "--seed", "0",
        "--out", str(out), "--epochs", "1", "--stride", "32", "--quiet",
    ])
    assert rc == 0
    metrics = json.loads((out / "metrics.json").read_text())
    fold = metrics["user-dependent"]
    assert set(fold) == {"raw", "mtv", "tmf", "mtv+tmf"}
    assert (out / "user-dependent_confusion.csv").exists()
    assert (out / "user-dependent_participants.csv").exists()


def test_missing_input_fails_cleanly(capsys, tmp_path):
    rc = main(["train", "--data", str(tmp_path / "nope"), "--seed", "0",
               "--out", str(tmp_path / "m.ckpt"), "--quiet"])
    assert rc != 0
    err = capsys.readouterr().err
    assert err.startswith("error: ")
    assert err.count("\n") == 1


def test_bad_checkpoint_fails_cleanly(capsys, tmp_path):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"not a checkpoint")
    rc = main(["inspect", "--checkpoint", str(bad)])
    assert rc != 0
    assert "error: BadMagicError" in capsys.readouterr().err


def test_help_lists_commands(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    out = capsys.readouterr().out
    for cmd in ("synth", "train", "infer", "score", "eval", "inspect"):
        assert cmd in out
