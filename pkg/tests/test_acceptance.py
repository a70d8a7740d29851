"""Acceptance gate: one test per release criterion, each printing a
[ACCEPT] pass/fail line with the measured quantity."""

import csv
import time

import numpy as np
import pytest

from conftest import textured_frame
from vtinv.cli import main
from vtinv.corpus import CorpusConfig, generate_synthetic_corpus
from vtinv.frontend import (
    AnalysisConfig,
    apply_normalizer,
    extract_features,
    fit_normalizer,
    read_features,
    scale_pixels,
)
from vtinv.metrics import cwssim, ssim
from vtinv.models import (
    build_cnn,
    build_fcdnn,
    build_lstm,
    count_params,
    make_windows,
)
from vtinv.nn import (
    LSTM,
    Conv2D,
    Dense,
    MaxPool2,
    Upsample2,
    check_layer,
    check_model,
    mse_loss,
    mse_loss_grad,
)
from vtinv.train import EarlyStopper, TrainConfig, train
from test_metrics import brute_force_ssim


def _report(name, ok, detail):
    print(f"[ACCEPT] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# Criterion 1: gradient fidelity, 20 seeds, < 60 s


def test_gradient_fidelity():
    start = time.monotonic()
    worst = {"dense": 0.0, "conv2d": 0.0, "maxpool2": 0.0, "upsample2": 0.0,
             "lstm": 0.0, "mse": 0.0, "cnn_model": 0.0, "lstm_model": 0.0}
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n_in, n_out, batch = rng.integers(2, 6, 3)
        worst["dense"] = max(worst["dense"], check_layer(
            Dense(n_in, n_out, rng), rng.standard_normal((batch, n_in)), rng=rng))

        ci, co = rng.integers(1, 4, 2)
        h = 2 * rng.integers(2, 4)
        worst["conv2d"] = max(worst["conv2d"], check_layer(
            Conv2D(ci, co, rng), rng.standard_normal((1, h, h, ci)), rng=rng))

        x = rng.standard_normal((1, 4, 4, 1))
        x += rng.uniform(1e-3, 2e-3, x.shape)  # exclude pooling ties
        worst["maxpool2"] = max(worst["maxpool2"], check_layer(MaxPool2(), x, rng=rng))
        worst["upsample2"] = max(worst["upsample2"], check_layer(
            Upsample2(), rng.standard_normal((1, 3, 3, 2)), rng=rng))

        steps = int(rng.integers(2, 5))
        worst["lstm"] = max(worst["lstm"], check_layer(
            LSTM(3, 3, rng=rng), rng.standard_normal((2, steps, 3)), rng=rng))

        pred = rng.standard_normal((3, 5))
        target = rng.standard_normal((3, 5))
        _, grad = mse_loss_grad(pred, target)
        hstep = 1e-4
        for i in range(pred.size):
            orig = pred.flat[i]
            pred.flat[i] = orig + hstep
            fp = mse_loss(pred, target)
            pred.flat[i] = orig - hstep
            fm = mse_loss(pred, target)
            pred.flat[i] = orig
            numeric = (fp - fm) / (2 * hstep)
            err = abs(numeric - grad.flat[i]) / max(abs(numeric) + abs(grad.flat[i]), 1e-4)
            worst["mse"] = max(worst["mse"], err)

        if seed < 5:  # whole-model stacks at toy size
            cnn = build_cnn(dense_units=5, grid=2, filters=2, input_dim=4, seed=seed)
            lstm = build_lstm(hidden=4, n_fc_layers=2, seq_len=3, input_dim=3,
                              output_dim=6, seed=seed)
            for model in (cnn, lstm):
                for arr in model.params().values():
                    arr += rng.uniform(0.01, 0.05, arr.shape)  # move off ReLU kinks
            worst["cnn_model"] = max(worst["cnn_model"], check_model(
                cnn, rng.standard_normal((2, 4)), rng.standard_normal((2, 64))))
            worst["lstm_model"] = max(worst["lstm_model"], check_model(
                lstm, rng.standard_normal((2, 3, 3)), rng.standard_normal((2, 6))))

    elapsed = time.monotonic() - start
    overall = max(worst.values())
    detail = ", ".join(f"{k}={v:.1e}" for k, v in worst.items()) + f", {elapsed:.1f}s"
    _report("gradient-fidelity", overall < 1e-5 and elapsed < 60.0, detail)
    # tighter per-layer bounds from the operation contracts
    assert worst["dense"] < 1e-6
    assert worst["conv2d"] < 1e-6
    assert worst["maxpool2"] < 1e-6
    assert worst["upsample2"] < 1e-6
    assert worst["mse"] < 1e-8
    assert worst["lstm"] < 1e-5


# ---------------------------------------------------------------------------
# Criterion 2: parameter budget


def test_parameter_budget():
    fc = count_params(build_fcdnn())
    rec = count_params(build_lstm())
    ok = (
        fc == 8_658_624
        and rec == 8_635_374
        and abs(fc - 8.6e6) / 8.6e6 < 0.01
        and abs(rec - 8.6e6) / 8.6e6 < 0.01
        and abs(rec - fc) / fc < 0.005
    )
    _report("parameter-budget", ok, f"fc={fc}, lstm={rec}")


# ---------------------------------------------------------------------------
# Criterion 3: architecture shapes


def test_architecture_shapes():
    model = build_cnn()
    x = np.zeros((1, 25))
    shapes = []
    for layer in model.layers:
        x, _ = layer.forward(x)
        shapes.append(x.shape[1:])
    required = [(500,), (2312,), (17, 17, 8), (34, 34, 8), (68, 68, 8), (4624,)]
    cnn_ok = all(s in shapes for s in required) and shapes[-1] == (4624,)
    lstm_ok = build_lstm().seq_len == 10
    windows = make_windows(np.zeros((7, 25)), 10)
    detail = f"cnn stages {shapes}, lstm window {windows.shape[1]}"
    _report("architecture-shapes", cnn_ok and lstm_ok and windows.shape[1] == 10, detail)


# ---------------------------------------------------------------------------
# Criterion 4: training protocol


def test_training_protocol():
    # scripted early stopping
    stopper = EarlyStopper(patience=5)
    verdicts = [stopper.update(e, v) for e, v in
                enumerate([5, 4, 3, 3.1, 3.2, 3.3, 3.4, 3.5], start=1)]
    scripted_ok = verdicts[-1] == "stop" and len(verdicts) == 8 and stopper.best_epoch == 3

    # epoch cap on noise-only targets
    rng = np.random.default_rng(0)
    x = rng.standard_normal((40, 25))
    y = rng.random((40, 4624))
    model = build_fcdnn(hidden=4, n_hidden_layers=1, seed=0)
    config = TrainConfig(max_epochs=100, patience=5, batch_size=128, seed=0)
    _, history = train(model, (x, y), (x, y), config)
    cap_ok = len(history.val_loss) <= 100
    assert config.max_epochs == 100 and TrainConfig().max_epochs == 100

    # batch size 128 observed, final partial batch included
    x2 = rng.standard_normal((300, 25))
    y2 = rng.random((300, 4624))
    model2 = build_fcdnn(hidden=4, n_hidden_layers=1, seed=1)
    _, hist2 = train(model2, (x2, y2), (x2[:5], y2[:5]),
                     TrainConfig(max_epochs=1, batch_size=128, seed=1))
    batches_ok = hist2.batch_sizes[0] == [128, 128, 44]

    # deterministic rerun with a fixed seed
    runs = []
    for _ in range(2):
        m = build_fcdnn(hidden=6, n_hidden_layers=1, seed=5)
        _, h = train(m, (x2[:64], y2[:64]), (x2[:16], y2[:16]),
                     TrainConfig(max_epochs=4, batch_size=16, seed=5))
        runs.append((h.train_loss, h.val_loss, {k: v.copy() for k, v in m.params().items()}))
    det_ok = (
        runs[0][0] == runs[1][0]
        and runs[0][1] == runs[1][1]
        and all(np.array_equal(runs[0][2][k], runs[1][2][k]) for k in runs[0][2])
    )

    detail = (f"scripted stop@8 best@3: {scripted_ok}, epochs={len(history.val_loss)}, "
              f"batches={hist2.batch_sizes[0]}, deterministic={det_ok}")
    _report("training-protocol", scripted_ok and cap_ok and batches_ok and det_ok, detail)


# ---------------------------------------------------------------------------
# Criterion 5: overfit smoke test, < 5 min


@pytest.fixture(scope="module")
def smoke_data():
    ccfg = CorpusConfig()
    acfg = AnalysisConfig()
    utts = generate_synthetic_corpus(7, 2, 50, ccfg)
    feats = [extract_features(u.audio, ccfg.frame_shift, acfg) for u in utts]
    norm = fit_normalizer(np.concatenate(feats))
    x = np.concatenate([apply_normalizer(f, norm) for f in feats])
    y = np.concatenate([scale_pixels(u.frames).reshape(u.n_frames, -1) for u in utts])
    return x, y


def test_overfit_smoke(smoke_data):
    x, y = smoke_data
    start = time.monotonic()

    fc = build_fcdnn(hidden=64, n_hidden_layers=2, seed=1)
    fc_cfg = TrainConfig(max_epochs=100, patience=100, batch_size=16, lr=1e-2, seed=1)
    _, fc_hist = train(fc, (x, y), (x, y), fc_cfg)
    fc_mse = fc_hist.train_loss[-1]

    xw = make_windows(x[:50], 10)
    xw2 = make_windows(x[50:], 10)
    xl = np.concatenate([xw, xw2])
    rec = build_lstm(hidden=32, n_fc_layers=2, seq_len=10, seed=1)
    rec_cfg = TrainConfig(max_epochs=100, patience=100, batch_size=16, lr=1e-2, seed=1)
    _, rec_hist = train(rec, (xl, y), (xl, y), rec_cfg)
    rec_mse = rec_hist.train_loss[-1]

    elapsed = time.monotonic() - start
    ok = fc_mse < 1e-3 and rec_mse < 5e-3 and elapsed < 300.0
    _report("overfit-smoke", ok,
            f"fcdnn mse={fc_mse:.2e} (<1e-3), lstm mse={rec_mse:.2e} (<5e-3), {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# Criterion 6: metric oracles


def test_metric_oracles():
    rng = np.random.default_rng(0)
    brute_err = 0.0
    for _ in range(10):
        a = rng.random((16, 16))
        b = np.clip(a + rng.normal(0, 0.1, a.shape), 0, 1)
        brute_err = max(brute_err, abs(ssim(a, b) - brute_force_ssim(a, b)))

    utts = generate_synthetic_corpus(7, 2, 50, CorpusConfig())
    frames = np.concatenate([scale_pixels(u.frames) for u in utts])
    assert frames.shape[0] == 100
    self_err = 0.0
    for frame in frames:
        self_err = max(self_err, abs(ssim(frame, frame) - 1.0),
                       abs(cwssim(frame, frame) - 1.0))

    a = np.full((68, 68), 0.2)
    b = np.full((68, 68), 0.4)
    c1 = 0.01**2
    closed_form = (2 * 0.2 * 0.4 + c1) / (0.2**2 + 0.4**2 + c1)
    const_err = abs(ssim(a, b) - closed_form)

    ok = brute_err < 1e-10 and self_err < 1e-9 and const_err < 1e-6
    _report("metric-oracles", ok,
            f"brute={brute_err:.1e} (<1e-10), self={self_err:.1e} (<1e-9), "
            f"const={const_err:.1e} (<1e-6, value {closed_form:.6f})")


# ---------------------------------------------------------------------------
# Criterion 7: CW-SSIM translation robustness


def test_cwssim_robustness():
    wins = 0
    for seed in range(100):
        x = textured_frame(seed)
        shifted = np.roll(x, 1, axis=1)
        wins += cwssim(x, shifted) > ssim(x, shifted)
    _report("cwssim-robustness", wins >= 95, f"{wins}/100 frames (need >= 95)")


# ---------------------------------------------------------------------------
# Criterion 8: end-to-end desk pipeline


def test_end_to_end_pipeline(tmp_path):
    corpus = tmp_path / "corpus"
    features = tmp_path / "features"
    overrides = [
        "--set", "n_train=5", "--set", "n_val=2", "--set", "n_test=1",
        "--set", "fc_hidden=48", "--set", "fc_layers=2",
        "--set", "lr=0.01", "--set", "batch_size=32", "--set", "max_epochs=12",
    ]
    rcs = [
        main(["synth", "--seed", "7", "--utterances", "8", "--frames", "40",
              "--out", str(corpus)]),
        main(["extract", "--corpus", str(corpus), "--out", str(features)]),
        main([*overrides, "train", "--corpus", str(corpus), "--features", str(features),
              "--arch", "fcdnn", "--out-model", str(tmp_path / "model.vtmc"),
              "--history", str(tmp_path / "history.csv")]),
        main(["predict", "--model", str(tmp_path / "model.vtmc"),
              "--features", str(features), "--out-frames", str(tmp_path / "pred")]),
        main([*overrides, "evaluate", "--ref-corpus", str(corpus),
              "--pred-frames", str(tmp_path / "pred"),
              "--out-report", str(tmp_path / "report.csv")]),
    ]

    # untrained baseline with the same normalizer
    from vtinv.train import save_model

    untrained = build_fcdnn(hidden=48, n_hidden_layers=2, seed=123)
    untrained.norm = fit_normalizer(
        np.concatenate([read_features(p) for p in sorted(features.glob("*.vtf1"))])
    )
    save_model(untrained, tmp_path / "untrained.vtmc")
    rcs.append(main(["predict", "--model", str(tmp_path / "untrained.vtmc"),
                     "--features", str(features), "--out-frames", str(tmp_path / "pred0")]))
    rcs.append(main([*overrides, "evaluate", "--ref-corpus", str(corpus),
                     "--pred-frames", str(tmp_path / "pred0"),
                     "--out-report", str(tmp_path / "report0.csv")]))

    def read_report(path):
        rows = list(csv.DictReader(open(path)))
        speaker_row = [r for r in rows if r["utterance_id"] == "mean"][0]
        values = [float(r[k]) for r in rows for k in ("nmse", "ssim", "cwssim")]
        return float(speaker_row["nmse"]), values, rows

    trained_nmse, trained_vals, trained_rows = read_report(tmp_path / "report.csv")
    untrained_nmse, _, _ = read_report(tmp_path / "report0.csv")
    per_frame_rows = [r for r in trained_rows if r["frame_index"] not in ("mean",)]

    ok = (
        all(rc == 0 for rc in rcs)
        and all(np.isfinite(v) for v in trained_vals)
        and len(per_frame_rows) == 40  # one test utterance, 40 frames
        and trained_nmse < untrained_nmse
    )
    _report("end-to-end-pipeline", ok,
            f"exit codes {rcs}, trained nmse {trained_nmse:.4f} < "
            f"untrained {untrained_nmse:.4f}")


# ---------------------------------------------------------------------------
# Criterion 9: full-data reproduction (manual)


@pytest.mark.skip(reason="manual procedure: requires USC-TIMIT speaker f1 and "
                         "hours-scale training; see README 'Full-scale runs'")
def test_full_data_reproduction_manual():
    """Expected when run manually: full-size LSTM test NMSE within +/-50% of
    0.0036 and CW-SSIM >= 0.90 on the USC-TIMIT f1 test split."""
