"""End-to-end command tests, run in process through ``main``."""

import numpy as np
import pytest

from sta_lstm.checkpoint import save_checkpoint
from sta_lstm.cli import main
from sta_lstm.data import load_generic
from sta_lstm.model import ModelShape, zero_model
from sta_lstm.training import init_params


@pytest.fixture
def dataset(tmp_path):
    path = tmp_path / "data.txt"
    rc = main(["gen-synth", "--out", str(path), "--n", "8", "--classes", "2",
               "--joints", "3", "--t-min", "4", "--t-max", "6", "--seed", "3"])
    assert rc == 0
    return path


def train_args(dataset, out, extra=()):
    return ["train", "--data", str(dataset), "--out", str(out), "--variant", "lstm",
            "--hidden", "4", "--n1", "2", "--n2", "1", "--batch-size", "4",
            "--dropout", "0.0", "--seed", "1", *extra]


def test_gen_synth_writes_loadable_file(tmp_path, capsys):
    path = tmp_path / "fresh.txt"
    assert main(["gen-synth", "--out", str(path), "--n", "8", "--classes", "2",
                 "--joints", "3", "--t-min", "4", "--t-max", "6", "--seed", "3"]) == 0
    assert "wrote 8 sequences" in capsys.readouterr().out
    seqs = load_generic(path)
    assert len(seqs) == 8
    assert sorted({s.label for s in seqs}) == [0, 1]
    assert all(s.joints == 3 for s in seqs)


def test_train_writes_checkpoints_and_trace(dataset, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(train_args(dataset, out)) == 0
    printed = capsys.readouterr().out
    assert "trained variant=lstm stages=1 iterations=3" in printed
    assert "final training accuracy" in printed
    names = sorted(p.name for p in out.iterdir())
    assert names == ["final.ckpt", "loss_trace.csv", "stage01-plain.ckpt"]
    lines = (out / "loss_trace.csv").read_text().strip().split("\n")
    assert lines[0] == "iteration,stage,loss,ce,reg1,reg2,reg3"
    assert len(lines) == 4


def test_train_rerun_is_byte_identical(dataset, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(train_args(dataset, a)) == 0
    assert main(train_args(dataset, b)) == 0
    assert (a / "loss_trace.csv").read_bytes() == (b / "loss_trace.csv").read_bytes()
    assert (a / "final.ckpt").read_bytes() == (b / "final.ckpt").read_bytes()


def test_eval_reports_uniform_model_tiebreak(dataset, tmp_path, capsys):
    # All-zero weights give uniform class scores, and prediction breaks the
    # tie toward class 0; on a balanced two-class set that is 50 percent.
    ckpt = tmp_path / "zero.ckpt"
    save_checkpoint(ckpt, zero_model(ModelShape(joints=3, classes=2, hidden=4, main_layers=3, dropout=0.0)))
    assert main(["eval", "--checkpoint", str(ckpt), "--data", str(dataset)]) == 0
    printed = capsys.readouterr().out
    assert "overall accuracy 0.5000 (4/8)" in printed
    assert "confusion matrix" in printed
    assert "class 0: 4/4 = 1.0000" in printed


def test_eval_trained_model(dataset, tmp_path, capsys):
    out = tmp_path / "run"
    main(train_args(dataset, out))
    capsys.readouterr()
    assert main(["eval", "--checkpoint", str(out / "final.ckpt"), "--data", str(dataset)]) == 0
    assert "overall accuracy" in capsys.readouterr().out


def test_eval_rejects_labels_beyond_model(dataset, tmp_path, capsys):
    ckpt = tmp_path / "one-class.ckpt"
    save_checkpoint(ckpt, zero_model(ModelShape(joints=3, classes=1, hidden=4, main_layers=1, dropout=0.0)))
    assert main(["eval", "--checkpoint", str(ckpt), "--data", str(dataset)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error:") and "label" in err


def test_export_attention_outputs(tmp_path, dataset, capsys):
    model = init_params(ModelShape(joints=3, classes=2, hidden=4, attn_hidden=3, main_layers=3, dropout=0.0), 5)
    ckpt = tmp_path / "sta.ckpt"
    save_checkpoint(ckpt, model)
    out = tmp_path / "attn"
    assert main(["export-attention", "--checkpoint", str(ckpt), "--data", str(dataset),
                 "--index", "1", "--out", str(out)]) == 0

    alpha = np.loadtxt(out / "alpha.csv", delimiter=",", skiprows=1)
    frames = int(alpha[:, 0].max())
    per_frame = alpha[:, 2].reshape(frames, 3)
    assert np.abs(per_frame.sum(axis=1) - 1.0).max() < 1e-9
    assert alpha[:, 1].min() == 1.0 and alpha[:, 1].max() == 3.0

    beta = np.loadtxt(out / "beta.csv", delimiter=",", skiprows=1, ndmin=2)
    assert beta.shape[0] == frames
    assert beta[:, 1].min() >= 0.0
    assert beta[0, 1] == beta[0, 2]  # nothing precedes the first frame
    assert np.abs(np.diff(beta[:, 1]) - beta[1:, 2]).max() < 1e-16


def test_export_attention_index_out_of_range(tmp_path, dataset, capsys):
    model = init_params(ModelShape(joints=3, classes=2, hidden=4, main_layers=3, dropout=0.0), 5)
    ckpt = tmp_path / "sta.ckpt"
    save_checkpoint(ckpt, model)
    rc = main(["export-attention", "--checkpoint", str(ckpt), "--data", str(dataset),
               "--index", "99", "--out", str(tmp_path / "attn")])
    assert rc == 2
    assert "out of range" in capsys.readouterr().err


def test_unknown_config_key_is_reported(tmp_path, dataset, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("hiden = 4\n")
    rc = main(["train", "--data", str(dataset), "--config", str(cfg), "--out", str(tmp_path / "x")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "hiden" in err and ":1:" in err


def test_missing_data_is_reported(capsys):
    assert main(["train", "--out", "unused"]) == 2
    assert "--data" in capsys.readouterr().err


def test_grad_check_passes(capsys):
    rc = main(["grad-check", "--joints", "2", "--classes", "2", "--hidden", "2",
               "--attn-hidden", "2", "--frames", "3", "--seed", "0"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "PASS" in out and "max relative gradient error" in out
