"""``prosodike`` command line: corpus building, features, detection, the
toy predictor and the bias analysis.

Exit codes: 0 success, 1 usage, 2 data/validation, 3 numeric failure.
Results go to files or stdout; log lines go to stderr.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import control, cwt, datamodel, detector, dsp, emphfeat, ingestion
from .config import ConfigError, RunConfig, load_config
from .datamodel import AlignedUtterance, EmphasisFeatures, FeatureStats
from .neural import model as nm
from .neural.synth import make_synthetic_corpus

log = logging.getLogger("prosodike")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
FAMILIES = ("variance", "wavelet", "combined")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# file helpers
# ---------------------------------------------------------------------------


def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def _write(path: str | Path, text: str, cfg: RunConfig, command: str, sidecar: bool = True) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")
    if sidecar:
        meta = {"command": command, "config_hash": cfg.config_hash, "config": cfg.to_dict()}
        _meta_path(p).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log.info("wrote %s", p)
    return p


def _check_hash(path: str | Path, cfg: RunConfig, embedded: str | None = None) -> None:
    """Warn when an input was produced under a different configuration."""
    found = embedded
    meta = _meta_path(Path(path))
    if found is None and meta.exists():
        try:
            found = json.loads(meta.read_text(encoding="utf-8")).get("config_hash")
        except json.JSONDecodeError:
            found = None
    if found and found != cfg.config_hash:
        log.warning("%s was produced with config %s, current config is %s", path, found[:12], cfg.config_hash[:12])


def _read_text(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"{path}: no such file") from None
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not UTF-8 text ({exc})") from None


def _read_json(path: str | Path) -> Any:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None


def _load_corpus(path: str | Path, cfg: RunConfig) -> list[AlignedUtterance]:
    corpus = datamodel.loads_corpus(_read_text(path))
    _check_hash(path, cfg)
    return corpus


def _load_features(path: str | Path, cfg: RunConfig) -> list[EmphasisFeatures]:
    out = []
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if line.strip():
            try:
                out.append(EmphasisFeatures.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}: line {lineno}: bad feature record ({exc})") from None
    _check_hash(path, cfg)
    return out


def _load_stats(path: str | Path, cfg: RunConfig) -> FeatureStats:
    d = _read_json(path)
    try:
        stats = FeatureStats.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: bad statistics file ({exc})") from None
    _check_hash(path, cfg, stats.config_hash or None)
    return stats


def _load_weights(path: str | Path, cfg: RunConfig) -> emphfeat.CombinedWeights:
    d = _read_json(path)
    try:
        w = emphfeat.CombinedWeights(tuple(float(x) for x in d["weights"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: bad weights file ({exc})") from None
    _check_hash(path, cfg, d.get("config_hash"))
    return w


def _load_model(path: str | Path, cfg: RunConfig) -> nm.PredictorModel:
    try:
        model = nm.PredictorModel.from_json(_read_text(path))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: bad checkpoint ({exc})") from None
    _check_hash(path, cfg)
    return model


def _features_jsonl(features: Sequence[EmphasisFeatures]) -> str:
    return "".join(json.dumps(f.to_dict(), sort_keys=True) + "\n" for f in features)


def _by_id(features: Sequence[EmphasisFeatures], corpus: Sequence[AlignedUtterance]) -> list[EmphasisFeatures]:
    index = {f.utterance_id: f for f in features}
    out = []
    for u in corpus:
        f = index.get(u.id)
        if f is None:
            raise DataError(f"no features for utterance {u.id!r}")
        if len(f.per_word) != len(u.words):
            raise DataError(f"utterance {u.id!r}: {len(f.per_word)} feature rows for {len(u.words)} words")
        out.append(f)
    return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _fit_length(x: np.ndarray, n: int, pad: str) -> np.ndarray:
    if len(x) >= n:
        return x[:n]
    if pad == "zero" or len(x) == 0:
        return np.concatenate([x, np.zeros(n - len(x))])
    return np.concatenate([x, np.full(n - len(x), x[-1])])


def _emphasis_marks(doc: ingestion.TextGridDocument, tier: str, utt_words, phones, shift_s: float) -> list[bool]:
    try:
        marks = [iv for iv in doc.tier(tier).intervals if iv.text.strip()]
    except KeyError:
        raise DataError(f"no tier named {tier!r}") from None
    out = []
    for w in utt_words:
        a = phones[w.phone_start].start_frame * shift_s
        b = phones[w.phone_end - 1].end_frame * shift_s
        mid = (a + b) / 2
        out.append(any(iv.xmin <= mid < iv.xmax for iv in marks))
    return out


def cmd_ingest(args, cfg: RunConfig) -> int:
    shift = cfg.stft.frame_shift_ms
    corpus = []
    for tg_path in map(Path, args.textgrids):
        doc = ingestion.parse_textgrid(_read_text(tg_path))
        phones, words = ingestion.align_to_utterance(doc, args.phone_tier, args.word_tier, shift)
        if not phones:
            raise DataError(f"{tg_path}: empty phone tier")
        n = phones[-1].end_frame
        stem = tg_path.with_suffix("")
        wav, pcsv, ecsv = stem.with_suffix(".wav"), Path(f"{stem}.pitch.csv"), Path(f"{stem}.energy.csv")
        audio = None
        if wav.exists():
            audio = ingestion.read_wav(wav.read_bytes())
        pitch = energy = None
        if pcsv.exists():
            pitch = ingestion.read_track_csv(_read_text(pcsv), shift)
        if ecsv.exists():
            energy = ingestion.read_track_csv(_read_text(ecsv), shift)
        if (pitch is None or energy is None) and audio is None:
            raise DataError(f"{tg_path}: need {wav.name} or both {pcsv.name} and {ecsv.name}")
        if pitch is None:
            pitch = dsp.estimate_pitch_acf(audio.samples, audio.sample_rate_hz, cfg.stft, cfg.pitch)
        if energy is None:
            energy = dsp.frame_energy_db(dsp.stft_power(audio.samples, audio.sample_rate_hz, cfg.stft))
        for name, track in (("pitch", pitch), ("energy", energy)):
            if abs(len(track) - n) > 2:
                log.warning("%s: %s track has %d frames, alignment has %d", tg_path, name, len(track), n)
        pitch = _fit_length(np.asarray(pitch, float), n, "zero")
        energy = _fit_length(np.asarray(energy, float), n, "edge")
        if args.emphasis_tier:
            marks = _emphasis_marks(doc, args.emphasis_tier, words, phones, shift / 1000.0)
            words = tuple(datamodel.WordSpan(w.text, w.phone_start, w.phone_end, m) for w, m in zip(words, marks))
        utt = AlignedUtterance(
            id=stem.name,
            phones=phones,
            words=words,
            pitch_hz=pitch,
            energy_db=energy,
            sample_rate_hz=audio.sample_rate_hz if audio is not None else 24000,
            frame_shift_ms=shift,
        )
        problems = datamodel.validate(utt)
        if problems:
            raise DataError(f"{tg_path}: " + "; ".join(problems[:5]))
        corpus.append(utt)
        if args.dump_mel and audio is not None:
            mel = dsp.log_mel_spectrogram(audio.samples, audio.sample_rate_hz, cfg.stft, cfg.mel)
            buf = io.StringIO()
            np.savetxt(buf, mel, delimiter=",", fmt="%.9g")
            _write(Path(args.dump_mel) / f"{stem.name}.mel.csv", buf.getvalue(), cfg, "ingest --dump-mel")
    _write(args.out, datamodel.dumps_corpus(corpus), cfg, "ingest")
    return EXIT_OK


def cmd_synth(args, cfg: RunConfig) -> int:
    n = args.n if args.n is not None else cfg.synth.n_utterances
    corpus = make_synthetic_corpus(cfg.seed, n)
    _write(args.out, datamodel.dumps_corpus(corpus), cfg, "synth-corpus")
    return EXIT_OK


def _raw(corpus, cfg: RunConfig) -> list[EmphasisFeatures]:
    return [emphfeat.raw_features(u, cfg.cwt) for u in corpus]


def cmd_fit_stats(args, cfg: RunConfig) -> int:
    corpus = _load_corpus(args.corpus, cfg)
    stats = emphfeat.fit_stats(_raw(corpus, cfg), cfg.config_hash)
    for name, v in stats.variances.items():
        if v == 0:
            log.warning("feature %s has zero variance; normalization will fail", name)
    _write(args.out, json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n", cfg, "fit-stats")
    return EXIT_OK


def _family_features(utt: AlignedUtterance, family: str, cfg: RunConfig) -> EmphasisFeatures:
    n = len(utt.words)
    pv = dv = wv = np.zeros(n)
    if family in ("variance", "combined"):
        pv, dv = emphfeat.variance_features(utt)
    if family in ("wavelet", "combined"):
        wv = emphfeat.wavelet_feature(utt, cfg.cwt)
    rows = tuple(datamodel.WordFeatures(float(a), float(b), float(c)) for a, b, c in zip(pv, dv, wv))
    return EmphasisFeatures(utt.id, rows, raw=True)


def _normalize_family(f: EmphasisFeatures, family: str, stats: FeatureStats, weights, exponent: int) -> EmphasisFeatures:
    cols = {"variance": ("pitch_var", "dur_var"), "wavelet": ("wavelet",), "combined": datamodel.FEATURE_NAMES}[family]
    vals = {
        name: emphfeat.normalize(f.column(name), stats.variances[name], exponent) if name in cols
        else np.zeros(len(f.per_word))
        for name in datamodel.FEATURE_NAMES
    }
    m = np.stack([vals[k] for k in datamodel.FEATURE_NAMES], axis=1)
    comb = emphfeat.combined_feature(m, weights) if weights is not None else np.zeros(len(m))
    rows = tuple(datamodel.WordFeatures(*map(float, r), float(c)) for r, c in zip(m, comb))
    return EmphasisFeatures(f.utterance_id, rows, raw=False)


def cmd_extract(args, cfg: RunConfig) -> int:
    corpus = _load_corpus(args.corpus, cfg)
    family = args.features
    stats = _load_stats(args.stats, cfg) if args.stats else None
    weights = _load_weights(args.weights, cfg) if args.weights else None
    if family == "combined" and stats is not None and weights is None:
        raise UsageError("--features combined with --stats needs --weights (see fit-combined)")
    out = []
    for u in corpus:
        f = _family_features(u, family, cfg)
        if stats is not None:
            f = _normalize_family(f, family, stats, weights if family == "combined" else None,
                                  cfg.features.norm_exponent)
        out.append(f)
    _write(args.out, _features_jsonl(out), cfg, f"extract --features {family}")
    if args.dump_scaleogram:
        _dump_scaleograms(corpus, args, cfg)
    return EXIT_OK


def _dump_scaleograms(corpus, args, cfg: RunConfig) -> None:
    from .plotting import plot_scaleogram

    wanted = set(args.dump_ids.split(",")) if args.dump_ids else {corpus[0].id} if corpus else set()
    missing = wanted - {u.id for u in corpus}
    if missing:
        raise DataError(f"--dump-ids: unknown utterance(s) {sorted(missing)}")
    outdir = Path(args.dump_scaleogram)
    for u in corpus:
        if u.id not in wanted:
            continue
        comp = cwt.build_composite(u, cfg.cwt.weights, cfg.cwt.smoothing)
        sg = cwt.cwt_transform(comp.values, cfg.cwt.num_scales, cfg.cwt.base_scale, cfg.cwt.octave_step)
        buf = io.StringIO()
        buf.write("scale," + ",".join(str(i) for i in range(sg.coefficients.shape[1])) + "\n")
        for s, row in zip(sg.scales, sg.coefficients):
            buf.write(repr(float(s)) + "," + ",".join(repr(float(v)) for v in row) + "\n")
        path = _write(outdir / f"{u.id}.scaleogram.csv", buf.getvalue(), cfg, "extract --dump-scaleogram")
        plot_scaleogram(sg.coefficients, sg.scales, path.with_suffix(".png"), comp.values)


def cmd_tune(args, cfg: RunConfig) -> int:
    corpus = _load_corpus(args.corpus, cfg)
    report = detector.tune(corpus, cfg.tune)
    log.info("best F1 %.4f with %s", report.best_f1, report.rows[report.best_index]["config"])
    _write(args.out, json.dumps(report.to_dict(cfg.config_hash), indent=2) + "\n", cfg, "tune")
    return EXIT_OK


def _detection_values(features: Sequence[EmphasisFeatures], family: str) -> np.ndarray:
    if family == "variance":
        m = np.concatenate([np.stack([f.column("pitch_var"), f.column("dur_var")], axis=1) for f in features])
        return emphfeat.variance_score(m)
    col = "wavelet" if family == "wavelet" else "combined"
    return np.concatenate([f.column(col) for f in features])


def cmd_detect(args, cfg: RunConfig) -> int:
    corpus = _load_corpus(args.corpus, cfg)
    features = _by_id(_load_features(args.features, cfg), corpus)
    values = _detection_values(features, args.family)
    annotations = [w.emphasized for u in corpus for w in u.words]
    if not any(a is not None for a in annotations):
        raise DataError("corpus has no annotated words to score against")
    res, scores = detector.detect(values, annotations)
    lines = []
    k = 0
    for u in corpus:
        for i, w in enumerate(u.words):
            rec = {"utterance_id": u.id, "word_index": i, "word": w.text, "value": float(values[k]),
                   "predicted": bool(res.predictions[k]), "annotated": w.emphasized}
            lines.append(json.dumps(rec, sort_keys=True) + "\n")
            k += 1
    if args.out:
        _write(args.out, "".join(lines), cfg, f"detect --family {args.family}")
    summary = {"family": args.family, "threshold": res.threshold, "centroids": list(res.centroids),
               **scores, "config_hash": cfg.config_hash}
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_fit_combined(args, cfg: RunConfig) -> int:
    corpus = _load_corpus(args.corpus, cfg)
    stats = _load_stats(args.stats, cfg)
    m = np.concatenate([emphfeat.normalized_matrix(f, stats, cfg.features.norm_exponent) for f in _raw(corpus, cfg)])
    annotations = [w.emphasized for u in corpus for w in u.words]
    weights, f1 = emphfeat.fit_combined_weights(m, annotations)
    out = {"weights": list(weights.w), "f1": f1, "config_hash": cfg.config_hash}
    _write(args.out, json.dumps(out, indent=2, sort_keys=True) + "\n", cfg, "fit-combined")
    return EXIT_OK


def cmd_train(args, cfg: RunConfig) -> int:
    corpus = _load_corpus(args.corpus, cfg)
    features = _by_id(_load_features(args.features, cfg), corpus)
    mc = cfg.model_config
    model, history = nm.train(corpus, features, mc, log=log.info)
    out = Path(args.out)
    _write(out, model.to_json(), cfg, f"train --mode {mc.mode}")
    loss_path = out.with_name(out.stem + ".loss.csv")
    _write(loss_path, nm.history_csv(history), cfg, "train")
    from .plotting import plot_loss

    plot_loss(history, loss_path.with_suffix(".png"))
    return EXIT_OK


def _parse_words(text: str | None) -> tuple[int, ...]:
    if not text:
        return ()
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"--words expects comma-separated integers, got {text!r}") from None


def cmd_infer(args, cfg: RunConfig) -> int:
    model = _load_model(args.model, cfg)
    corpus = _load_corpus(args.corpus, cfg)
    if args.id:
        corpus = [u for u in corpus if u.id == args.id]
        if not corpus:
            raise DataError(f"no utterance with id {args.id!r}")
    words = _parse_words(args.words)
    lines = []
    for u in corpus:
        ids = model.encode_labels([p.label for p in u.phones])
        directive = control.EmphasisDirective(words, args.bias) if words else None
        res = nm.infer(ids, model, u.words, directive)
        rec = {"utterance_id": u.id, "phones": [p.label for p in u.phones], "words": list(words),
               "bias": args.bias, **res.to_dict()}
        lines.append(json.dumps(rec, sort_keys=True))
    text = "".join(line + "\n" for line in lines)
    if args.out:
        _write(args.out, text, cfg, "infer")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_analyze(args, cfg: RunConfig) -> int:
    model = _load_model(args.model, cfg)
    corpus = _load_corpus(args.corpus, cfg)
    biases = cfg.control.biases
    if args.biases:
        try:
            biases = tuple(float(x) for x in args.biases.split(","))
        except ValueError:
            raise UsageError(f"--biases expects comma-separated numbers, got {args.biases!r}") from None
    reports = control.analyze_deltas(model, corpus, biases, cfg.control.target)
    outdir = Path(args.out_dir)
    path = _write(outdir / "deltas.csv", control.deltas_csv(reports), cfg, "analyze")
    from .plotting import plot_deltas

    plot_deltas(reports, path.with_suffix(".png"), title=f"{model.config.mode} emphasis, bias sweep")
    return EXIT_OK


def example_corpus_text() -> str:
    return resources.files("prosodike").joinpath("data/example_corpus.jsonl").read_text(encoding="utf-8")


def cmd_validate(args, cfg: RunConfig) -> int:
    if args.corpus:
        text, name = _read_text(args.corpus), args.corpus
    else:
        text, name = example_corpus_text(), "example corpus"
    corpus = datamodel.loads_corpus(text)
    n_bad = 0
    for u in corpus:
        for problem in datamodel.validate(u):
            print(f"{u.id}: {problem}")
            n_bad += 1
    print(f"{name}: {len(corpus)} utterances, {n_bad} violations")
    return EXIT_OK if n_bad == 0 else EXIT_DATA


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="prosodike", description=__doc__.split("\n\n")[0].replace("\n", " "),
                epilog="exit codes: 0 success, 1 usage, 2 data/validation, 3 numeric failure")
    p.add_argument("--config", help="run configuration (JSON)")
    p.add_argument("--seed", type=int, help="overrides the config seed and PROSODIKE_SEED")
    p.add_argument("--norm-exponent", type=int, choices=(1, 2), help="normalize by 3 std (1) or 3 variances (2)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", help="TextGrid + WAV/CSV tracks -> corpus JSON lines")
    s.add_argument("textgrids", nargs="+")
    s.add_argument("-o", "--out", required=True)
    s.add_argument("--phone-tier", default="phones")
    s.add_argument("--word-tier", default="words")
    s.add_argument("--emphasis-tier", help="tier whose non-empty intervals mark emphasized words")
    s.add_argument("--dump-mel", metavar="DIR", help="also write log-mel spectrogram CSVs")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("synth-corpus", help="synthetic corpus with one emphasized word per utterance")
    s.add_argument("-n", type=int, help="number of utterances (default: config synth.n_utterances)")
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("fit-stats", help="feature means and variances over a corpus")
    s.add_argument("--corpus", required=True)
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_fit_stats)

    s = sub.add_parser("extract", help="per-word emphasis features")
    s.add_argument("--corpus", required=True)
    s.add_argument("--features", choices=FAMILIES, required=True)
    s.add_argument("--stats", help="normalize with these statistics")
    s.add_argument("--weights", help="combined-feature weights from fit-combined")
    s.add_argument("-o", "--out", required=True)
    s.add_argument("--dump-scaleogram", metavar="DIR", help="write scaleogram CSV + PNG")
    s.add_argument("--dump-ids", help="comma-separated utterance ids to dump (default: first)")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("tune", help="grid search of wavelet settings by detection F1")
    s.add_argument("--corpus", required=True)
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_tune)

    s = sub.add_parser("detect", help="2-means emphasis detection and F-score")
    s.add_argument("--corpus", required=True)
    s.add_argument("--features", required=True, help="normalized features from extract")
    s.add_argument("--family", choices=FAMILIES, required=True)
    s.add_argument("-o", "--out", help="per-word predictions (JSON lines)")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("fit-combined", help="simplex weights for the combined feature")
    s.add_argument("--corpus", required=True)
    s.add_argument("--stats", required=True)
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_fit_combined)

    s = sub.add_parser("train", help="train the toy prosody predictor")
    s.add_argument("--corpus", required=True)
    s.add_argument("--features", required=True, help="normalized features from extract")
    s.add_argument("--mode", choices=nm.MODES)
    s.add_argument("--steps", type=int)
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("infer", help="predict emphasis and prosody, optionally biased")
    s.add_argument("--model", required=True)
    s.add_argument("--corpus", required=True)
    s.add_argument("--id", help="only this utterance")
    s.add_argument("--bias", type=float, default=0.0)
    s.add_argument("--words", help="comma-separated word indices to bias")
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_infer)

    s = sub.add_parser("analyze", help="bias sweep: deltas.csv + deltas.png")
    s.add_argument("--model", required=True)
    s.add_argument("--corpus", required=True)
    s.add_argument("--biases", help="comma-separated bias grid (default: config)")
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("validate", help="check corpus invariants")
    s.add_argument("corpus", nargs="?", help="corpus JSON lines (default: shipped example)")
    s.set_defaults(func=cmd_validate)
    return p


def _resolve(args, cfg: RunConfig) -> RunConfig:
    if args.seed is not None:
        cfg = cfg.with_section("seed", value=args.seed)
    if args.norm_exponent is not None:
        cfg = cfg.with_section("features", norm_exponent=args.norm_exponent)
    model_changes = {}
    if getattr(args, "mode", None):
        model_changes["mode"] = args.mode
    if getattr(args, "steps", None) is not None:
        model_changes["steps"] = args.steps
    if model_changes:
        cfg = cfg.with_section("model", **model_changes)
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr, force=True)
    try:
        cfg = _resolve(args, load_config(args.config))
        return args.func(args, cfg)
    except (UsageError, ConfigError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (emphfeat.DegenerateFeatureError, detector.DegenerateValuesError, FloatingPointError) as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except (DataError, datamodel.CorpusFormatError, ingestion.TextGridError, ingestion.AlignmentError,
            ingestion.UnsupportedAudioError, ingestion.TrackFormatError, nm.ModelError,
            control.DirectiveError, emphfeat.FeatureError, cwt.CompositeError,
            cwt.SignalTooShortError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
