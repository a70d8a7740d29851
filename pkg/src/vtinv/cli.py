"""Command-line pipeline: synth, extract, train, predict, evaluate.

Configuration is a UTF-8 key=value file ('#' starts a comment); every key has
a default matching the full-size setup, and any key can be overridden on the
command line with --set key=value. Exit codes: 0 success, 2 validation error,
3 data error, 4 numeric/divergence error.
"""

import argparse
import dataclasses
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import frontend, metrics, models, train as train_mod
from .errors import (
    CoverageError,
    DataError,
    NumericError,
    ShapeError,
    ValidationError,
    VtinvError,
)


@dataclass
class RunConfig:
    # corpus geometry
    audio_rate: int = 20000
    frame_rate: float = 23.18
    frame_shift: int = 863
    image_size: int = 68
    # spectral analysis
    order: int = 24
    alpha: float = 0.42
    window_len: int = 1024
    fft_len: int = 2048
    floor_db: float = -120.0
    # corpus split
    n_train: int = 430
    n_val: int = 20
    n_test: int = 10
    # training
    max_epochs: int = 100
    patience: int = 5
    batch_size: int = 128
    lr: float = 1e-3
    seed: int = 0
    shuffle: bool = True
    grad_clip: float = 5.0
    # architecture sizes (defaults are the full-size models)
    fc_hidden: int = 1000
    fc_layers: int = 5
    cnn_dense: int = 500
    cnn_grid: int = 17
    cnn_filters: int = 8
    lstm_hidden: int = 575
    lstm_fc_layers: int = 3
    seq_len: int = 10
    # metrics
    ssim_window: int = 11
    ssim_sigma: float = 1.5
    ssim_k1: float = 0.01
    ssim_k2: float = 0.03
    cwssim_scales: int = 2
    cwssim_orientations: int = 4
    cwssim_window: int = 7
    cwssim_k: float = 0.01
    cwssim_global: bool = False

    def corpus_config(self) -> corpus_mod.CorpusConfig:
        return corpus_mod.CorpusConfig(
            audio_rate=self.audio_rate,
            frame_rate=self.frame_rate,
            frame_shift=self.frame_shift,
            image_size=self.image_size,
        )

    def analysis_config(self) -> frontend.AnalysisConfig:
        return frontend.AnalysisConfig(
            order=self.order,
            alpha=self.alpha,
            window_len=self.window_len,
            fft_len=self.fft_len,
            floor_db=self.floor_db,
        )

    def train_config(self) -> train_mod.TrainConfig:
        return train_mod.TrainConfig(
            max_epochs=self.max_epochs,
            patience=self.patience,
            batch_size=self.batch_size,
            lr=self.lr,
            seed=self.seed,
            shuffle=self.shuffle,
            grad_clip=self.grad_clip,
        )

    def ssim_config(self) -> metrics.SsimConfig:
        return metrics.SsimConfig(
            window_size=self.ssim_window,
            sigma=self.ssim_sigma,
            k1=self.ssim_k1,
            k2=self.ssim_k2,
        )

    def cwssim_config(self) -> metrics.CwSsimConfig:
        return metrics.CwSsimConfig(
            scales=self.cwssim_scales,
            orientations=self.cwssim_orientations,
            window_size=self.cwssim_window,
            k=self.cwssim_k,
            global_window=self.cwssim_global,
        )


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(key: str, raw: str):
    ftype = _FIELD_TYPES[key]
    tname = ftype if isinstance(ftype, str) else ftype.__name__
    raw = raw.strip()
    if tname == "bool":
        low = raw.lower()
        if low in {"1", "true", "yes", "on"}:
            return True
        if low in {"0", "false", "no", "off"}:
            return False
        raise ValidationError(f"config key {key}: expected boolean, got {raw!r}")
    try:
        if tname == "int":
            return int(raw)
        if tname == "float":
            return float(raw)
    except ValueError as exc:
        raise ValidationError(f"config key {key}: {exc}") from exc
    return raw


def load_config(path=None, overrides=()) -> RunConfig:
    """Defaults, then config-file values, then --set overrides."""
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in _FIELD_TYPES:
                raise ValidationError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _coerce(key, raw)
    for item in overrides:
        if "=" not in item:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ValidationError(f"unknown config key {key!r}")
        values[key] = _coerce(key, raw)
    return RunConfig(**values)


# ---------------------------------------------------------------------------
# Shared pipeline helpers


def _load_aligned(corpus_dir, features_dir, ids, ccfg):
    """Per-utterance (features, [0,1] frames) pairs truncated to equal length."""
    out = {}
    for utt_dir in corpus_mod.list_utterance_dirs(corpus_dir):
        utt = corpus_mod.load_utterance_dir(utt_dir, ccfg)
        if utt.id not in ids:
            continue
        feat_path = Path(features_dir) / f"{utt.id}.vtf1"
        if not feat_path.exists():
            raise CoverageError(f"missing feature file {feat_path}")
        feats = frontend.read_features(feat_path)
        n = min(feats.shape[0], utt.n_frames)
        targets = frontend.scale_pixels(utt.frames[:n]).reshape(n, -1)
        out[utt.id] = (feats[:n], targets)
    missing = sorted(set(ids) - set(out))
    if missing:
        raise CoverageError(f"utterances missing from corpus: {missing}")
    return out


def _build_pairs(data, ids, arch, seq_len):
    xs, ys = [], []
    for utt_id in ids:
        feats, targets = data[utt_id]
        if arch == "LSTM":
            xs.append(models.make_windows(feats, seq_len))
        else:
            xs.append(feats)
        ys.append(targets)
    return np.concatenate(xs), np.concatenate(ys)


def _build_model(arch: str, cfg: RunConfig) -> models.Model:
    output_dim = cfg.image_size * cfg.image_size
    input_dim = cfg.order + 1  # gain + LSPs
    if arch == "FC_DNN":
        return models.build_fcdnn(hidden=cfg.fc_hidden, n_hidden_layers=cfg.fc_layers,
                                  input_dim=input_dim, output_dim=output_dim, seed=cfg.seed)
    if arch == "CNN":
        if 4 * cfg.cnn_grid != cfg.image_size:
            raise ValidationError(
                f"cnn_grid {cfg.cnn_grid} incompatible with image_size {cfg.image_size}"
            )
        return models.build_cnn(dense_units=cfg.cnn_dense, grid=cfg.cnn_grid,
                                filters=cfg.cnn_filters, input_dim=input_dim, seed=cfg.seed)
    if arch == "LSTM":
        return models.build_lstm(hidden=cfg.lstm_hidden, n_fc_layers=cfg.lstm_fc_layers,
                                 seq_len=cfg.seq_len, input_dim=input_dim,
                                 output_dim=output_dim, seed=cfg.seed)
    raise ValidationError(f"unknown architecture {arch!r}")


_ARCH_BY_FLAG = {"fcdnn": "FC_DNN", "cnn": "CNN", "lstm": "LSTM"}


# ---------------------------------------------------------------------------
# Subcommands


def cmd_synth(args, cfg: RunConfig) -> int:
    ccfg = cfg.corpus_config()
    utterances = corpus_mod.generate_synthetic_corpus(
        args.seed, args.utterances, args.frames, ccfg, speaker=args.speaker
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for utt in utterances:
        corpus_mod.save_utterance(utt, out / utt.id, ccfg)
    print(f"wrote {len(utterances)} utterances to {out}")
    return 0


def cmd_extract(args, cfg: RunConfig) -> int:
    ccfg = cfg.corpus_config()
    acfg = cfg.analysis_config()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    utt_dirs = corpus_mod.list_utterance_dirs(args.corpus)
    if not utt_dirs:
        raise DataError(f"no utterances found under {args.corpus}")
    for utt_dir in utt_dirs:
        try:
            utt = corpus_mod.load_utterance_dir(utt_dir, ccfg)
            feats = frontend.extract_features(utt.audio, ccfg.frame_shift, acfg)
        except VtinvError as exc:
            raise type(exc)(f"utterance {utt_dir.name}: {exc}") from exc
        n = min(feats.shape[0], utt.n_frames)
        frontend.write_features(out / f"{utt.id}.vtf1", feats[:n])
    print(f"extracted features for {len(utt_dirs)} utterances to {out}")
    return 0


def cmd_train(args, cfg: RunConfig) -> int:
    ccfg = cfg.corpus_config()
    arch = _ARCH_BY_FLAG[args.arch]
    ids = [d.name for d in corpus_mod.list_utterance_dirs(args.corpus)]
    if not ids:
        raise DataError(f"no utterances found under {args.corpus}")
    split = corpus_mod.split_corpus(ids, (cfg.n_train, cfg.n_val, cfg.n_test))
    data = _load_aligned(args.corpus, args.features, split.train + split.validation, ccfg)

    train_feats = np.concatenate([data[u][0] for u in split.train])
    norm = frontend.fit_normalizer(train_feats)
    normed = {u: (frontend.apply_normalizer(f, norm), t) for u, (f, t) in data.items()}

    x_train, y_train = _build_pairs(normed, split.train, arch, cfg.seq_len)
    x_val, y_val = _build_pairs(normed, split.validation, arch, cfg.seq_len)

    model = _build_model(arch, cfg)
    model.norm = norm
    model, history = train_mod.train(
        model, (x_train, y_train), (x_val, y_val), cfg.train_config(),
        checkpoint_path=args.out_model,
    )
    train_mod.save_model(model, args.out_model)
    if args.history:
        train_mod.history_to_csv(history, args.history)
    print(
        f"trained {arch}: {len(history.val_loss)} epochs, "
        f"best epoch {history.best_epoch}, "
        f"best val mse {min(history.val_loss):.6g}, model -> {args.out_model}"
    )
    return 0


def cmd_predict(args, cfg: RunConfig) -> int:
    model = train_mod.load_model(args.model)
    feat_paths = sorted(Path(args.features).glob("*.vtf1"))
    if args.ids:
        wanted = set(args.ids.split(","))
        feat_paths = [p for p in feat_paths if p.stem in wanted]
    if not feat_paths:
        raise DataError(f"no feature files to predict under {args.features}")
    out = Path(args.out_frames)
    for path in feat_paths:
        feats = frontend.read_features(path)
        if model.norm is not None:
            feats = frontend.apply_normalizer(feats, model.norm)
        images = models.predict_sequence(model, feats)
        frames_dir = out / path.stem
        frames_dir.mkdir(parents=True, exist_ok=True)
        pixels = np.rint(images * 255.0).astype(np.uint8)
        for k in range(pixels.shape[0]):
            corpus_mod.write_pgm(frames_dir / f"frame_{k + 1:05d}.pgm", pixels[k])
    print(f"predicted {len(feat_paths)} utterances to {out}")
    return 0


def cmd_evaluate(args, cfg: RunConfig) -> int:
    ccfg = cfg.corpus_config()
    utt_dirs = corpus_mod.list_utterance_dirs(args.ref_corpus)
    if not utt_dirs:
        raise DataError(f"no utterances found under {args.ref_corpus}")
    ids = [d.name for d in utt_dirs]
    split = corpus_mod.split_corpus(ids, (cfg.n_train, cfg.n_val, cfg.n_test))
    selected = {
        "train": split.train,
        "val": split.validation,
        "test": split.test,
        "all": sorted(ids),
    }[args.split]

    references = {}
    speakers = {}
    for utt_dir in utt_dirs:
        if utt_dir.name not in selected:
            continue
        utt = corpus_mod.load_utterance_dir(utt_dir, ccfg)
        references[utt.id] = frontend.scale_pixels(utt.frames)
        speakers[utt.id] = utt.speaker

    predictions = {}
    pred_root = Path(args.pred_frames)
    for utt_id in selected:
        frames_dir = pred_root / utt_id
        if not frames_dir.is_dir():
            continue
        frame_paths = sorted(frames_dir.glob("frame_*.pgm"))
        pred = np.stack([corpus_mod.read_pgm(p) for p in frame_paths]) if frame_paths else None
        if pred is None:
            continue
        pred = frontend.scale_pixels(pred)
        ref = references[utt_id]
        # corpus alignment tolerance: trim a single boundary frame if needed
        if pred.shape[0] != ref.shape[0]:
            if abs(pred.shape[0] - ref.shape[0]) > 1:
                raise ShapeError(
                    f"{utt_id}: {pred.shape[0]} predicted vs {ref.shape[0]} reference frames"
                )
            n = min(pred.shape[0], ref.shape[0])
            pred = pred[:n]
            references[utt_id] = ref[:n]
        predictions[utt_id] = pred

    report = metrics.evaluate_corpus(
        predictions, references, speakers, selected,
        ssim_config=cfg.ssim_config(), cw_config=cfg.cwssim_config(),
    )
    report.write_csv(args.out_report)
    for speaker, (m_nmse, m_ssim, m_cw) in report.speaker_means().items():
        print(f"{speaker}: nmse={m_nmse:.6g} ssim={m_ssim:.4f} cwssim={m_cw:.4f}")
    print(f"report -> {args.out_report}")
    return 0


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vtinv",
        description="Speech spectral features to vocal-tract image sequences.",
    )
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--utterances", type=int, required=True)
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--speaker", default="s1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="extract spectral features")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train an inversion model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--arch", choices=sorted(_ARCH_BY_FLAG), required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--history", help="write per-epoch loss CSV here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict image sequences from features")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out-frames", required=True)
    p.add_argument("--ids", help="comma-separated utterance ids (default: all)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against references")
    p.add_argument("--ref-corpus", required=True)
    p.add_argument("--pred-frames", required=True)
    p.add_argument("--out-report", required=True)
    p.add_argument("--split", choices=["train", "val", "test", "all"], default="test")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
        return args.func(args, cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
