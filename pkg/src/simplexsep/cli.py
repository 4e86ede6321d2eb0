"""Command-line interface.

Subcommands:
    simulate  synthesize a multichannel mixture and per-speaker images
    count     estimate the number of concurrent speakers in a WAV
    separate  run the full blind separation pipeline on a WAV
    toy       run the abstract mixture model and export its simplex data
    validate  run the statistical-model property suites
    bench     Monte-Carlo counting / separation tables
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import dataio, geometry, mixture, spectral
from .experiments import (
    ExperimentConfig,
    monte_carlo,
    save_counting_report,
    save_separation_report,
)
from .separation import PipelineConfig, run_pipeline
from .simulate import RoomSpec, simulate_mixture, speech_like_signal
from .stft import StftConfig


def _stft_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window-len", type=int, default=2048)
    p.add_argument("--overlap", type=float, default=0.75)


def cmd_simulate(args) -> int:
    angles = [float(a) for a in args.angles.split(",")]
    distances = (
        [float(d) for d in args.distances.split(",")]
        if args.distances
        else [1.0] * len(angles)
    )
    spec = RoomSpec(
        angles=tuple(angles),
        distances=tuple(distances),
        num_mics=args.mics,
        sample_rate=args.sample_rate,
        decay=args.decay,
        seed=args.seed,
    )
    rng = np.random.default_rng(args.seed)
    clean = np.stack(
        [
            speech_like_signal(args.duration, args.sample_rate, rng)
            for _ in range(spec.num_sources)
        ]
    )
    mixture_sig, images = simulate_mixture(spec, clean)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    dataio.write_wav(f"{out}_mixture.wav", mixture_sig, args.sample_rate)
    for j in range(spec.num_sources):
        dataio.write_wav(f"{out}_image{j}.wav", images[j], args.sample_rate)
    dataio.write_json_report(
        f"{out}_scene.json",
        {
            "angles": angles,
            "distances": distances,
            "num_mics": args.mics,
            "decay": args.decay,
            "seed": args.seed,
            "duration": args.duration,
            "sample_rate": args.sample_rate,
        },
    )
    print(f"wrote {out}_mixture.wav and {spec.num_sources} image files")
    return 0


def cmd_count(args) -> int:
    from .features import assemble_features, instantaneous_rtf
    from .stft import stft

    signal, rate = dataio.read_wav(args.wav)
    cfg = PipelineConfig(
        stft=StftConfig(
            window_len=args.window_len, overlap=args.overlap, sample_rate=rate
        ),
        alpha=args.alpha,
        beta=args.beta,
        smoothing_frames=args.smoothing,
    )
    S_cfg = cfg.counting_features()
    S = stft(signal, cfg.stft)
    obs = assemble_features(instantaneous_rtf(S, S_cfg), S, S_cfg)
    corr = spectral.build_correlation(obs)
    count = spectral.count_sources(corr, cfg.alpha)
    print(f"estimated speakers: {count}")
    if args.spectrum_csv:
        dataio.write_spectrum_csv(args.spectrum_csv, corr.eigenvalues)
        print(f"wrote {args.spectrum_csv}")
    if args.json:
        dataio.write_json_report(
            args.json,
            {
                "estimated_sources": count,
                "alpha": cfg.alpha,
                "eigenvalues": corr.eigenvalues[:20],
            },
        )
    return 0


def cmd_separate(args) -> int:
    signal, rate = dataio.read_wav(args.wav)
    cfg = PipelineConfig(
        stft=StftConfig(
            window_len=args.window_len, overlap=args.overlap, sample_rate=rate
        ),
        alpha=args.alpha,
        beta=args.beta,
        smoothing_frames=args.smoothing,
        num_sources=args.sources,
    )
    result = run_pipeline(signal, cfg)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    for j in range(result.num_sources):
        dataio.write_wav(f"{out}_source{j}.wav", result.signals[j], rate)
    report = {
        "estimated_sources": result.num_sources,
        "counted_sources": result.counted_sources,
        "beta_used": result.diagnostics.get("beta_used"),
        "frames_per_source": [int(s.size) for s in result.frame_sets],
        "counting_eigenvalues": result.diagnostics.get("counting_eigenvalues"),
        "separation_eigenvalues": result.diagnostics.get("separation_eigenvalues"),
        "ill_conditioned_bins": result.diagnostics.get("ill_conditioned_bins"),
    }
    dataio.write_json_report(f"{out}_report.json", report)
    if args.embedding_csv:
        dataio.write_embedding_csv(
            args.embedding_csv,
            result.probabilities.Phat,
            frames=result.diagnostics["kept_frames"],
        )
    print(
        f"separated {result.num_sources} sources; "
        f"wrote {out}_source*.wav and {out}_report.json"
    )
    return 0


def cmd_toy(args) -> int:
    h = mixture.generate_hidden_sources(args.sources, args.dimension, args.seed)
    P = mixture.generate_probabilities(args.frames, args.sources, args.seed + 1)
    obs, _ = mixture.generate_observations(h, P, args.seed + 2)
    corr = spectral.build_correlation(obs)
    emb = spectral.embed(corr, args.sources)
    vertices = geometry.find_vertices(emb)
    recovered = geometry.recover_probabilities(emb, vertices)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    dataio.write_spectrum_csv(f"{out}_eigenvalues.csv", corr.eigenvalues)
    dataio.write_embedding_csv(f"{out}_embedding.csv", emb.nu)
    dataio.write_probabilities_csv(f"{out}_probabilities.csv", recovered.Phat)
    dataio.write_probabilities_csv(f"{out}_oracle_probabilities.csv", P.P)
    err = float(np.abs(_match_columns(recovered.Phat, P.P) - P.P).mean())
    dataio.write_json_report(
        f"{out}_summary.json",
        {
            "sources": args.sources,
            "dimension": args.dimension,
            "frames": args.frames,
            "seed": args.seed,
            "eigenvalues": corr.eigenvalues[:10],
            "vertex_frames": vertices.frame_indices,
            "mean_abs_probability_error": err,
        },
    )
    print(
        f"toy model: J={args.sources} D={args.dimension} L={args.frames}; "
        f"mean |p_hat - p| = {err:.4f}; wrote {out}_*.csv"
    )
    return 0


def _match_columns(Phat: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Permute recovered columns to best match the oracle columns."""
    import itertools

    J = P.shape[1]
    best = min(
        itertools.permutations(range(J)),
        key=lambda perm: float(np.abs(Phat[:, perm] - P).sum()),
    )
    return Phat[:, best]


def cmd_validate(args) -> int:
    checks: list[tuple[str, bool, str]] = []
    rng_seed = args.seed

    # Correlation expectation: Monte-Carlo mean against the closed form.
    P = mixture.generate_probabilities(8, 3, rng_seed)
    rep = mixture.correlation_variance_check(P, D=400, trials=800, seed=rng_seed + 1)
    se = np.sqrt(rep.empirical_variance / rep.trials)
    dev = np.abs(rep.empirical_mean - rep.oracle_mean)
    ok = bool(np.all(dev <= 4 * se))
    checks.append(
        (
            "correlation expectation (4 standard errors)",
            ok,
            f"max deviation {dev.max():.2e}",
        )
    )

    # Variance bound and 1/D scaling.
    dims = (100, 400, 1600)
    variances = []
    worst = 0.0
    for i, D in enumerate(dims):
        r = mixture.correlation_variance_check(
            P, D=D, trials=args.trials, seed=rng_seed + 10 + i
        )
        variances.append(float(np.mean(r.empirical_variance)))
        worst = max(worst, r.max_ratio)
    ok = worst <= 1.1
    checks.append(("variance bound (<= 1.1 of limit)", ok, f"worst ratio {worst:.3f}"))
    slope = np.polyfit(np.log(dims), np.log(variances), 1)[0]
    ok = abs(slope + 1.0) <= 0.15
    checks.append(("variance 1/D scaling", ok, f"log-log slope {slope:.3f}"))

    # Eigenstructure robustness to the diagonal correction.
    worst_shift, worst_align = 0.0, 1.0
    for t in range(20):
        Pt = mixture.generate_probabilities(500, 3, rng_seed + 100 + t)
        rep2 = spectral.perturbation_check(Pt)
        worst_shift = max(worst_shift, rep2.max_eigenvalue_shift)
        worst_align = min(worst_align, rep2.min_alignment)
    ok = worst_shift < 1.0
    checks.append(
        ("eigenvalue shift under diagonal correction < 1", ok,
         f"max shift {worst_shift:.3f}")
    )
    ok = worst_align > 0.99
    checks.append(
        ("eigenvector alignment > 0.99", ok, f"min alignment {worst_align:.5f}")
    )

    failed = 0
    for name, ok, detail in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failed += 0 if ok else 1
    if args.json:
        dataio.write_json_report(
            args.json,
            {
                "checks": [
                    {"name": n, "passed": ok, "detail": d} for n, ok, d in checks
                ],
                "failed": failed,
            },
        )
    return 1 if failed else 0


def cmd_bench(args) -> int:
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
    else:
        cfg = ExperimentConfig(
            task=args.task,
            trials=args.trials,
            seed=args.seed,
            num_sources=args.sources,
            duration=args.duration,
        )
    report = monte_carlo(cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if cfg.task == "counting":
        save_counting_report(report, f"{out}_counting.csv", f"{out}_counting.json")
        best = float(report.accuracy.max())
        print(
            f"counting over J in {cfg.source_counts}: best accuracy "
            f"{best:.1%} at alpha={report.alphas[int(report.accuracy.argmax())]:.3f}"
        )
    else:
        save_separation_report(
            report, f"{out}_separation.csv", f"{out}_separation.json"
        )
        for name, v in report.variants.items():
            print(
                f"{name}: SIR {v['mean_sir']:.1f} dB, SDR {v['mean_sdr']:.1f} dB "
                f"({v['trials']} trials)"
            )
    if report.failures:
        print(f"warning: {report.failures} trial(s) failed and were skipped")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simplexsep",
        description="Blind speaker counting and separation via the "
        "correlation simplex of RTF features.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize a multichannel mixture")
    p.add_argument("--angles", required=True, help="comma-separated degrees")
    p.add_argument("--distances", default=None, help="comma-separated meters")
    p.add_argument("--mics", type=int, default=8)
    p.add_argument("--duration", type=float, default=10.0)
    p.add_argument("--decay", type=float, default=0.03)
    p.add_argument("--sample-rate", type=float, default=16000.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("count", help="estimate the number of speakers")
    p.add_argument("wav")
    _stft_args(p)
    p.add_argument("--alpha", type=float, default=0.12)
    p.add_argument("--beta", type=float, default=0.95)
    p.add_argument("--smoothing", type=int, default=2)
    p.add_argument("--spectrum-csv", default=None)
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("separate", help="blindly separate a mixture WAV")
    p.add_argument("wav")
    _stft_args(p)
    p.add_argument("--alpha", type=float, default=0.12)
    p.add_argument("--beta", type=float, default=0.95)
    p.add_argument("--smoothing", type=int, default=2)
    p.add_argument("--sources", type=int, default=None,
                   help="pin the speaker count instead of estimating it")
    p.add_argument("--embedding-csv", default=None)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("toy", help="run the abstract mixture model")
    p.add_argument("--sources", type=int, default=3)
    p.add_argument("--dimension", type=int, default=1000)
    p.add_argument("--frames", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("validate", help="statistical-model property suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bench", help="Monte-Carlo experiment tables")
    p.add_argument("--task", choices=("counting", "separation"),
                   default="counting")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--sources", type=int, default=2)
    p.add_argument("--duration", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
