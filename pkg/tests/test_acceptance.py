"""Acceptance suite: one test per release criterion, at stated tolerances.

Run with ``pytest tests/test_acceptance.py -s`` to see one PASS/FAIL line
per criterion.  Budgeted criteria assert their own wall-clock limits.
"""

import itertools
import time

import numpy as np
import pytest

from simplexsep import (
    PipelineConfig,
    RtfEstimate,
    StftConfig,
    build_correlation,
    build_unmixer,
    correlation_variance_check,
    count_sources,
    embed,
    find_vertices,
    generate_hidden_sources,
    generate_observations,
    generate_probabilities,
    interior_slice,
    istft,
    perturbation_check,
    recover_probabilities,
    stft,
    unmix_bins,
)
from simplexsep.cli import main as cli_main
from simplexsep.experiments import ExperimentConfig, counting_experiment, separation_experiment
from simplexsep.geometry import SimplexEmbedding
from simplexsep.spectral import CorrelationMatrix
from simplexsep.stft import Spectrogram


def report(criterion, passed, detail):
    print(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
    assert passed, f"{criterion}: {detail}"


@pytest.fixture(scope="module")
def synthetic_trials():
    """100 seeded trials per J of the reference synthetic regime."""
    start = time.time()
    results = {}
    for J in (2, 3, 4):
        counts, maes, ratios = [], [], []
        for t in range(100):
            s1, s2, s3 = np.random.SeedSequence((J, t)).spawn(3)
            h = generate_hidden_sources(J, 1000, s1)
            P = generate_probabilities(500, J, s2)
            obs, _ = generate_observations(h, P, s3)
            C = build_correlation(obs)
            counts.append(count_sources(C, 0.12))
            ratios.append(C.eigenvalue_ratios()[: J + 1])
            E = embed(C, J)
            R = recover_probabilities(E, find_vertices(E))
            best = min(
                itertools.permutations(range(J)),
                key=lambda p: float(np.abs(R.Phat[:, p] - P.P).sum()),
            )
            maes.append(float(np.abs(R.Phat[:, best] - P.P).mean()))
        results[J] = {
            "counts": np.array(counts),
            "maes": np.array(maes),
            "ratios": np.array(ratios),
        }
    results["elapsed"] = time.time() - start
    return results


def test_criterion_1_synthetic_simplex_recovery(synthetic_trials):
    details = []
    ok = True
    for J in (2, 3, 4):
        r = synthetic_trials[J]
        hit_rate = float(np.mean(r["counts"] == J))
        mean_mae = float(r["maes"].mean())
        ok &= hit_rate >= 0.99 and mean_mae <= 0.05
        details.append(f"J={J}: count {hit_rate:.0%}, MAE {mean_mae:.3f}")
    elapsed = synthetic_trials["elapsed"]
    ok &= elapsed <= 120.0
    report(
        "criterion 1 (synthetic simplex recovery)",
        ok,
        "; ".join(details) + f"; {elapsed:.0f}s",
    )


def test_criterion_2_eigenvalue_decay(synthetic_trials):
    details = []
    ok = True
    for J in (2, 3, 4):
        ratios = synthetic_trials[J]["ratios"]
        decay_ok = (ratios[:, J] <= 0.05) & (ratios[:, J - 1] >= 0.15)
        rate = float(decay_ok.mean())
        ok &= rate >= 0.95
        details.append(f"J={J}: {rate:.0%}")
    report("criterion 2 (eigenvalue decay)", ok, "; ".join(details))


def test_criterion_3_variance_law():
    start = time.time()
    P = generate_probabilities(8, 3, seed=300)
    dims = (100, 400, 1600)
    worst_ratio = 0.0
    mean_variances = []
    for i, D in enumerate(dims):
        rep = correlation_variance_check(P, D=D, trials=1000, seed=301 + i)
        worst_ratio = max(worst_ratio, rep.max_ratio)
        mean_variances.append(float(np.mean(rep.empirical_variance)))
    slope = float(np.polyfit(np.log(dims), np.log(mean_variances), 1)[0])
    elapsed = time.time() - start
    ok = worst_ratio <= 1.1 and abs(slope + 1.0) <= 0.15 and elapsed <= 60.0
    report(
        "criterion 3 (variance law)",
        ok,
        f"worst ratio {worst_ratio:.3f}, slope {slope:.3f}, {elapsed:.0f}s",
    )


def test_criterion_4_perturbation_bounds():
    start = time.time()
    worst_shift, worst_align = 0.0, 1.0
    for t in range(20):
        P = generate_probabilities(500, 3, seed=(400, t))
        rep = perturbation_check(P)
        worst_shift = max(worst_shift, rep.max_eigenvalue_shift)
        worst_align = min(worst_align, rep.min_alignment)
    elapsed = time.time() - start
    ok = worst_shift < 1.0 and worst_align > 0.99 and elapsed <= 60.0
    report(
        "criterion 4 (diagonal-correction perturbation)",
        ok,
        f"max shift {worst_shift:.3f}, min alignment {worst_align:.5f}, {elapsed:.0f}s",
    )


def test_criterion_5_exact_vertex_recovery():
    start = time.time()
    rng = np.random.default_rng(500)
    worst = 0.0
    for trial in range(200):
        J = int(rng.integers(2, 7))
        L = int(rng.integers(J, 201))
        while True:
            Q = rng.standard_normal((J, J))
            sv = np.linalg.svd(Q, compute_uv=False)
            if sv[-1] > 0 and sv[0] / sv[-1] < 50:
                break
        P = np.vstack([np.eye(J), rng.dirichlet(np.ones(J), size=L - J)])
        P = P[rng.permutation(L)]
        E = SimplexEmbedding(P @ Q.T)
        R = recover_probabilities(E, find_vertices(E))
        best = min(
            itertools.permutations(range(J)),
            key=lambda p: float(np.abs(R.Phat[:, p] - P).sum()),
        )
        worst = max(worst, float(np.abs(R.Phat[:, best] - P).max()))
    elapsed = time.time() - start
    ok = worst <= 1e-9 and elapsed <= 30.0
    report(
        "criterion 5 (exact convex-geometry recovery)",
        ok,
        f"worst entry error {worst:.2e} over 200 instances, {elapsed:.0f}s",
    )


def test_criterion_6_stft_round_trip():
    worst_rec, worst_parseval = 0.0, 0.0
    rng = np.random.default_rng(600)
    for N in (256, 2048):
        for eta in (0.5, 0.75):
            cfg = StftConfig(window_len=N, overlap=eta, sample_rate=16000)
            x = rng.standard_normal((2, 40_000))
            S = stft(x, cfg)
            rec = istft(S)
            sl = interior_slice(cfg, 40_000)
            worst_rec = max(worst_rec, float(np.abs(rec[:, sl] - x[:, sl]).max()))

            hop, w = cfg.hop, cfg.window_values
            pad = (S.num_frames - 1) * hop + N - 40_000
            xp = np.concatenate([x, x[:, -2 : -2 - pad : -1]], axis=1) if pad else x
            for l in range(0, S.num_frames, 7):
                frame = xp[0, l * hop : l * hop + N] * w
                te = float(np.sum(frame**2))
                X = S.data[0, l]
                se = (
                    np.abs(X[0]) ** 2
                    + 2 * np.sum(np.abs(X[1:-1]) ** 2)
                    + np.abs(X[-1]) ** 2
                ) / N
                worst_parseval = max(
                    worst_parseval, abs(te - se) / max(te, 1e-30)
                )
    ok = worst_rec <= 1e-10 and worst_parseval <= 1e-9
    report(
        "criterion 6 (STFT round trip)",
        ok,
        f"interior error {worst_rec:.2e}, Parseval {worst_parseval:.2e}",
    )


def test_criterion_7_exact_unmixing():
    start = time.time()
    rng = np.random.default_rng(700)
    worst = 0.0
    for J in (2, 3, 4):
        for trial in range(5):
            while True:
                atfs = rng.standard_normal((J, 8, 32)) + 1j * rng.standard_normal(
                    (J, 8, 32)
                )
                ref = atfs[:, 0, :]
                atfs[:, 0, :] = ref / np.abs(ref) * (1.0 + 0.3 * np.abs(ref))
                rtfs = atfs / atfs[:, 0:1, :]
                conds = [np.linalg.cond(rtfs[:, :, f].T) for f in range(32)]
                if max(conds) < 10:
                    break
            src = rng.standard_normal((J, 30, 32)) + 1j * rng.standard_normal(
                (J, 30, 32)
            )
            Y = np.einsum("jmk,jlk->mlk", atfs, src)
            cfg = StftConfig(window_len=62, overlap=0.5)
            S = Spectrogram(data=Y, config=cfg, num_samples=0)
            Z = unmix_bins(S, build_unmixer(RtfEstimate(H=rtfs)))
            expected = atfs[:, 0, :][:, None, :] * src
            scale = float(np.abs(expected).max())
            worst = max(worst, float(np.abs(Z - expected).max()) / scale)
    elapsed = time.time() - start
    ok = worst <= 1e-6 and elapsed <= 10.0
    report(
        "criterion 7 (exact unmixing algebra)",
        ok,
        f"worst relative bin error {worst:.2e}, {elapsed:.0f}s",
    )


def test_criterion_8_end_to_end_separation():
    start = time.time()
    cfg = ExperimentConfig(
        task="separation", num_sources=2, trials=20, seed=800, duration=8.0,
        decay=0.03,
    )
    rep = separation_experiment(cfg)
    elapsed = time.time() - start
    assert rep.failures == 0
    proposed = rep.variants["proposed"]
    semi = rep.variants["semi_ideal"]
    ideal = rep.variants["ideal"]
    input_sirs = [t["input_sir"] for t in rep.trials]
    ok = (
        proposed["mean_sir"] >= 10.0
        and proposed["mean_sdr"] >= 4.0
        and ideal["mean_sir"] >= semi["mean_sir"] - 0.5
        and semi["mean_sir"] >= proposed["mean_sir"] - 0.5
        and max(abs(s) for s in input_sirs) <= 2.0
        and elapsed <= 600.0
    )
    report(
        "criterion 8 (desk-scale separation)",
        ok,
        f"proposed SIR {proposed['mean_sir']:.1f} dB / SDR "
        f"{proposed['mean_sdr']:.1f} dB; semi-ideal {semi['mean_sir']:.1f}; "
        f"ideal {ideal['mean_sir']:.1f}; {elapsed:.0f}s",
    )


def test_criterion_9_counting_on_audio():
    cfg = ExperimentConfig(
        task="counting",
        source_counts=(1, 2, 3),
        trials=20,
        seed=900,
        duration=10.0,
        alpha_sweep=(0.09, 0.16, 15),
    )
    rep = counting_experiment(cfg)
    assert rep.failures == 0
    ok = float(rep.accuracy.min()) >= 0.90 and float(rep.accuracy.max()) >= 0.95
    report(
        "criterion 9 (counting accuracy sweep)",
        ok,
        f"accuracy {rep.accuracy.min():.0%}..{rep.accuracy.max():.0%} over "
        f"alpha in [{rep.alphas[0]:.2f}, {rep.alphas[-1]:.2f}]",
    )


def test_criterion_10_determinism(tmp_path):
    outputs = {}
    for tag in ("first", "second"):
        prefix = tmp_path / tag / "run"
        prefix.parent.mkdir()
        cli_main(
            ["toy", "--sources", "3", "--dimension", "400", "--frames", "200",
             "--seed", "77", "--out", str(prefix)]
        )
        cli_main(
            ["bench", "--task", "counting", "--trials", "1", "--duration",
             "4.0", "--seed", "77", "--out", str(prefix)]
        )
        outputs[tag] = {
            p.name: p.read_bytes() for p in sorted(prefix.parent.iterdir())
        }
    same = outputs["first"] == outputs["second"]
    n = len(outputs["first"])
    report(
        "criterion 10 (bit-identical reruns)",
        same and n >= 7,
        f"{n} JSON/CSV artifacts compared byte-for-byte",
    )
