"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 3 and 4 assert targets that are statistically unattainable at the
stated operating point (exact binomials: honest accept probability 0.9634,
optimal-classical accept probability 0.2709); they are implemented as stated
and fail honestly. The README's "Known-red acceptance targets" section
carries the analysis.
"""

import math
import time

import numpy as np

from vkecm.attacks import (
    CiphertextOnlyDistinguisher,
    ClassicalRecordAdversary,
    LeakyAdversary,
    run_cloning_attack,
    run_distinguishing_attack,
)
from vkecm.devices import U_KEEP, XT_BLANK, LeakageExceeded, make_honest_devices
from vkecm.ecc import LinearCode, compute_syndrome, decode_guess, syndrome_length
from vkecm.extract import (
    amplitude_identity,
    find_zero_sum_counterexample,
    perfect_ip_oracle,
    random_ip_oracle,
    run_bv_extraction,
)
from vkecm.games import (
    chsh_value,
    classical_chsh_value,
    ideal_chsh_strategy,
    monogamy_broadcast_value,
)
from vkecm.protocol import (
    ACCEPT,
    ProtocolParams,
    dec,
    enc,
    key_rel,
    random_message,
    uncloneability_bounds,
)
from vkecm.qcore import make_rng, spawn_rngs, werner_state

OPERATING = dict(lam=512, gamma=0.2, alpha=0.3, q=0.004, xi=2.0, delta=0.03, t_max=4)


def criterion(number: int, ok: bool, detail: str):
    print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {number}: {detail}"


def honest_trial(params, seed):
    g_enc, g_key, g_dec, g_misc = spawn_rngs(np.random.SeedSequence(entropy=seed), 4)
    client, receiver = make_honest_devices(params.lam, params.q)
    m = random_message(params, g_misc)
    res = enc(params, m, client, receiver, g_enc)
    key = key_rel(params, res.private_key, g_key)
    decoded = dec(params, res.ciphertext, key, receiver, g_dec)
    correct = np.array_equal(decoded, m) if params.variant == "string" else decoded == m
    return res.flag == ACCEPT, correct


def test_criterion_1_exact_game_values():
    start = time.monotonic()
    ideal = chsh_value(ideal_chsh_strategy())
    classical = classical_chsh_value().value
    monogamy = monogamy_broadcast_value()
    elapsed = time.monotonic() - start
    ok = (
        abs(ideal - 0.8535533906) < 1e-9
        and float(classical) == 0.75
        and abs(monogamy - 0.8535533906) < 1e-9
        and elapsed < 1.0
    )
    criterion(1, ok, f"chsh={ideal:.10f} classical={classical} monogamy={monogamy:.10f} t={elapsed:.2f}s")


def test_criterion_2_noisy_device_law():
    law_ok = all(
        abs(chsh_value(ideal_chsh_strategy(werner_state(q))) - ((1 - 2 * q) * 0.85355339059 + q))
        < 1e-9
        for q in (0.0, 0.05, 0.25)
    )
    l, q = 100_000, 0.05
    rng = make_rng(1002)
    client, receiver = make_honest_devices(l, q)
    x = rng.integers(0, 2, l, dtype=np.uint8)
    a = client.measure(x, rng)
    receiver.round1(np.full(l, U_KEEP, dtype=np.uint8), rng)
    out = receiver.round2((x + 2).astype(np.uint8), rng)
    agree = (out == a).mean()
    se = math.sqrt(q * (1 - q) / l)
    agree_ok = abs(agree - (1 - q)) < 4 * se
    criterion(2, law_ok and agree_ok, f"agreement={agree:.5f} target={1 - q} (4se={4 * se:.5f})")


def test_criterion_3_completeness():
    params = ProtocolParams(**OPERATING)
    start = time.monotonic()
    trials = 500
    results = [honest_trial(params, (3001, t)) for t in range(trials)]
    elapsed = time.monotonic() - start
    accept = sum(r[0] for r in results) / trials
    joint = sum(r[0] and r[1] for r in results) / trials
    # True values at this operating point: accept 0.9634, joint ~0.91
    # (exact binomial against threshold count 22, plus EC coset collisions).
    ok = joint >= 0.97 and accept >= 0.99 and elapsed < 60.0
    criterion(3, ok, f"joint={joint:.4f} (>=0.97) accept={accept:.4f} (>=0.99) t={elapsed:.1f}s")


def test_criterion_4_self_test_catches_classical_devices():
    params = ProtocolParams(**OPERATING)
    stats = run_cloning_attack(params, ClassicalRecordAdversary(), 500, 4001)
    # True accept probability of the optimal classical strategy here is
    # P[Bin(512, 0.05) <= 22] = 0.2709.
    ok = stats.accept_rate <= 0.2
    criterion(4, ok, f"classical accept={stats.accept_rate:.4f} (<=0.2)")


def test_criterion_5_perfect_indistinguishability():
    params = ProtocolParams(lam=32, q=0.0, ec_seed=11)
    trials = 10_000
    rng = make_rng(5001)
    paired_equal = True
    for t in range(trials):
        seed = int(rng.integers(2**63))
        m = make_rng((seed, 7)).integers(0, 2, 32, dtype=np.uint8)
        res_m = enc(params, m, *make_honest_devices(32, 0.0), make_rng(seed))
        pad = np.bitwise_xor(res_m.private_key.r, m)
        res_0 = enc(
            params,
            np.zeros(32, dtype=np.uint8),
            *make_honest_devices(32, 0.0),
            make_rng(seed),
            pad_override=pad,
        )
        if not np.array_equal(res_m.ciphertext.c, res_0.ciphertext.c):
            paired_equal = False
            break
    dparams = ProtocolParams(lam=64, q=0.0, ec_seed=11)
    stats = run_distinguishing_attack(dparams, CiphertextOnlyDistinguisher(), 4000, 5002)
    target = stats.accept_rate / 2
    se = math.sqrt(0.25 / stats.trials)
    dist_ok = abs(stats.joint_rate - target) < 4 * se
    criterion(
        5,
        paired_equal and dist_ok,
        f"paired_equal={paired_equal} distinguisher={stats.joint_rate:.4f} vs {target:.4f}",
    )


def test_criterion_6_extraction_oracle_equivalence():
    start = time.monotonic()
    worst = 0.0
    perfect_ok = True
    for p, ls in ((2, (1, 2, 3)), (3, (1, 2))):
        for l in ls:
            rng = make_rng(6000 + 10 * p + l)
            perfect = run_bv_extraction(
                perfect_ip_oracle(p, l, tuple(rng.integers(0, p, l)), tuple(rng.integers(0, p, l)))
            )
            perfect_ok &= abs(perfect.recovery_prob - 1.0) < 1e-9
            for _ in range(50):
                oracle = random_ip_oracle(p, l, rng)
                res = run_bv_extraction(oracle)
                ident = amplitude_identity(oracle.aggregated_classes(), p)
                worst = max(worst, abs(res.recovery_prob - ident))
    a0 = 1 / 3 + 0.15
    grid = np.linspace(0.0, 1.0 - a0, 4001)
    grid_min = min(amplitude_identity([a0, a1, 1 - a0 - a1], 3) for a1 in grid)
    p3_ok = abs(grid_min - 0.25 * (3 * a0 - 1) ** 2) < 1e-6
    _, _, p5_value = find_zero_sum_counterexample(0.05)
    elapsed = time.monotonic() - start
    ok = worst < 1e-9 and perfect_ok and p3_ok and p5_value < 1e-12 and elapsed < 120.0
    criterion(
        6,
        ok,
        f"max_dev={worst:.2e} perfect={perfect_ok} p3_min_ok={p3_ok} p5={p5_value:.1e} t={elapsed:.1f}s",
    )


def test_criterion_7_variable_keys():
    params = ProtocolParams(lam=64, q=0.0, delta=0.2, ec_seed=12)
    failures = 0
    accepted = 0
    seed = 7001
    while accepted < 100:
        seed += 1
        rng = make_rng(seed)
        client, receiver = make_honest_devices(64, 0.0)
        m = random_message(params, rng)
        res = enc(params, m, client, receiver, rng)
        if res.flag != ACCEPT:
            continue
        accepted += 1
        for _ in range(5):
            key = key_rel(params, res.private_key, rng)
            decoded = dec(params, res.ciphertext, key, receiver.snapshot(), rng)
            failures += not np.array_equal(decoded, m)
    # Reveal-pattern independence across repeated releases of one key.
    rng = make_rng(7999)
    client, receiver = make_honest_devices(64, 0.0)
    res = enc(params, random_message(params, rng), client, receiver, rng)
    n = 10_000
    prod = tot1 = tot2 = 0.0
    for _ in range(n):
        b1 = (key_rel(params, res.private_key, rng).xt == XT_BLANK).astype(float)
        b2 = (key_rel(params, res.private_key, rng).xt == XT_BLANK).astype(float)
        prod += (b1 * b2).sum()
        tot1 += b1.sum()
        tot2 += b2.sum()
    samples = n * 64
    cov = prod / samples - (tot1 / samples) * (tot2 / samples)
    se = math.sqrt((0.3 * 0.7) ** 2 / samples)
    indep_ok = abs(cov) < 4 * se
    criterion(7, failures == 0 and indep_ok, f"failures={failures}/500 cov={cov:.2e} (4se={4 * se:.2e})")


def test_criterion_8_ec_operating_point():
    l, q, gamma, alpha = 512, 0.004, 0.2, 0.3
    n_syn = syndrome_length(2.0, gamma, alpha, q, l)
    code = LinearCode(l=l, n_syn=n_syn, seed=13, t_max=4)
    rng = make_rng(8001)
    trials = 1000
    sentinel = wrong = clean_ok = 0
    for t in range(trials):
        mask = rng.random(l) < (1 - gamma) * (1 - alpha)
        at = np.zeros(l, dtype=np.uint8)
        at[mask] = rng.integers(0, 2, int(mask.sum()), dtype=np.uint8)
        syn = compute_syndrome(code, at)
        clean = decode_guess(code, at, syn, support=mask)
        clean_ok += clean is not None and (clean == at).all()
        st = at.copy()
        st[mask & (rng.random(l) < q)] ^= 1
        got = decode_guess(code, st, syn, support=mask)
        if got is None:
            sentinel += 1
        elif not (got == at).all():
            wrong += 1
    ok = sentinel / trials < 0.01 and clean_ok == trials
    criterion(
        8,
        ok,
        f"decode_failures={sentinel / trials:.4f} (<0.01) wrong_decodes={wrong / trials:.4f} "
        f"identity_on_clean={clean_ok}/{trials}",
    )


def test_criterion_9_bound_formulas():
    grids = [
        dict(gamma=0.2, alpha=0.3, q=0.004, xi=2.0, delta=0.03, kappa=1.0, nu=0.0),
        dict(gamma=0.2, alpha=0.3, q=0.0, xi=2.0, delta=0.03, kappa=1.0, nu=0.0),
        dict(gamma=0.1, alpha=0.5, q=0.01, xi=1.5, delta=0.1, kappa=0.5, nu=0.001),
        dict(gamma=0.5, alpha=0.2, q=0.02, xi=3.0, delta=0.2, kappa=2.0, nu=0.01),
        dict(gamma=0.3, alpha=0.4, q=0.001, xi=1.1, delta=0.05, kappa=1.0, nu=1e-5),
        dict(gamma=0.25, alpha=0.25, q=0.03, xi=2.5, delta=0.15, kappa=0.1, nu=0.0),
        dict(gamma=0.4, alpha=0.6, q=0.005, xi=4.0, delta=0.07, kappa=5.0, nu=0.002),
        dict(gamma=0.15, alpha=0.35, q=0.008, xi=2.0, delta=0.04, kappa=1.0, nu=0.0005),
        dict(gamma=0.6, alpha=0.1, q=0.015, xi=1.2, delta=0.08, kappa=0.8, nu=0.0),
        dict(gamma=0.35, alpha=0.45, q=0.002, xi=2.2, delta=0.012, kappa=1.5, nu=3e-6),
    ]
    worst = 0.0
    for grid in grids:
        lam = 512
        params = ProtocolParams(lam=lam, **grid)
        report = uncloneability_bounds(params)
        # Independent recomputation, spreadsheet style.
        h = -grid["q"] * math.log2(grid["q"]) - (1 - grid["q"]) * math.log2(1 - grid["q"]) if grid["q"] else 0.0
        game = grid["kappa"] * grid["delta"] ** 3 * grid["alpha"] ** 4
        ec = 2 * grid["xi"] * (1 - grid["gamma"]) * (1 - grid["alpha"]) * h
        t_lambda = (1 - game + ec + grid["nu"]) * lam
        max_leak = game - ec
        zero_rhs = game - 2 * (1 - grid["gamma"]) * (1 - grid["alpha"]) * h
        n_syn = math.ceil(grid["xi"] * (1 - grid["gamma"]) * (1 - grid["alpha"]) * h * lam)
        echo = -game * lam + 2 * n_syn
        worst = max(
            worst,
            abs(report["t_lambda"] - t_lambda),
            abs(report["max_leak_rate"] - max_leak),
            abs(report["zero_unc_rhs"] - zero_rhs),
            abs(report["game_bound_echo_log2"] - echo),
            abs(report["syndrome_bits"] - n_syn),
        )
        assert report["nontrivial"] == (grid["nu"] < max_leak)
        assert report["zero_unc_ok"] == (3 * grid["nu"] < zero_rhs)
    criterion(9, worst < 1e-12, f"max recomputation gap {worst:.2e}")


def test_criterion_10_leakage_enforcement():
    params = ProtocolParams(lam=16, q=0.0, nu=0.5, ec_seed=14)
    budget = math.floor(params.nu * params.lam)
    run_cloning_attack(params, LeakyAdversary(budget), 5, 10_001)
    rejected = False
    try:
        run_cloning_attack(params, LeakyAdversary(budget + 1), 5, 10_001)
    except LeakageExceeded:
        rejected = True
    rates, radii = [], []
    for k in (0, 2, 4, 8):
        stats = run_cloning_attack(params, LeakyAdversary(k), 5000, 10_002)
        rates.append(stats.joint_rate)
        radii.append(stats.ci95(stats.joint_rate))
    monotone = all(
        rates[i + 1] + radii[i + 1] >= rates[i] - radii[i] for i in range(len(rates) - 1)
    )
    ok = rejected and monotone
    criterion(
        10,
        ok,
        f"over_budget_rejected={rejected} rates={['%.4f' % r for r in rates]} monotone={monotone}",
    )
