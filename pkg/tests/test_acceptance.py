"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Criterion 3 includes a waypoint that is unattainable under the stated
topology (node 1 cannot aggregate (8, 2) by round 2; see the replay
deriver's report).  The check is asserted as stated and is expected to
fail; everything else must pass.
"""
from __future__ import annotations

import itertools
from dataclasses import replace
from random import Random

from harq_consensus import (
    HaltConfig,
    HarqChannel,
    LinkParams,
    PRESETS,
    SweepConfig,
    compare_lambda,
    derive_example1_schedule,
    init_world,
    iterations_to_convergence,
    random_strongly_connected,
    replay_trace,
    run,
    run_scenario,
    run_sweep,
)

GRID_N = (4, 10, 20)
GRID_P = (0.3, 0.6, 0.8)
GRID_LAM = (0.0, 0.3, 1.0)
GRID_RETX = (1, 2, 3)


def _report(number: int, ok: bool, detail: str) -> bool:
    print(f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def _grid_world(n, p, lam, retx, seed):
    graph = random_strongly_connected(n, 0.2, Random(seed))
    rng = Random(seed ^ 0x5EED)
    y0 = [rng.randint(-100, 100) for _ in range(n)]
    world = init_world(graph, y0, HarqChannel(LinkParams(p, lam, retx)))
    return world, rng


def test_criterion_1_mass_conservation():
    """1000 randomized runs: total mass equals (sum y0, n) at every round."""
    configs = list(itertools.product(GRID_N, GRID_P, GRID_LAM, GRID_RETX))
    checked_rounds = 0
    violations = 0
    for i in range(1000):
        n, p, lam, retx = configs[i % len(configs)]
        world, rng = _grid_world(n, p, lam, retx, seed=40_000 + i)
        target = (world.y_target, n)
        trace = run(world, HaltConfig(max_rounds=60), rng)
        checked_rounds += len(trace.totals)
        violations += sum(total != target for total in trace.totals)
    ok = violations == 0
    assert _report(1, ok, f"0 violations over {checked_rounds} round boundaries"
                   if ok else f"{violations} conservation violations")


def test_criterion_2_finite_time_convergence_grid():
    """100 seeds per (n, p, lam, retx) cell all converge within 20000 rounds."""
    failures = []
    total = 0
    for n, p, lam, retx in itertools.product(GRID_N, GRID_P, GRID_LAM, GRID_RETX):
        for s in range(100):
            seed = 1_000_000 + 1009 * s
            world, rng = _grid_world(n, p, lam, retx, seed)
            total += 1
            if iterations_to_convergence(world, rng, 20_000) is None:
                failures.append((n, p, lam, retx, s))
    ok = not failures
    assert _report(2, ok, f"{total} runs converged, zero failures"
                   if ok else f"non-converged runs: {failures[:5]}")


def test_criterion_3_example_replay_waypoints():
    """Scripted replay: (6,1) at node 3 round 1; (8,2) at node 1 round 2;
    all nodes (16,4) by round 8."""
    derived = derive_example1_schedule()
    trace = replay_trace(derived.entries)

    v3_at_1 = trace.states[1][2][2:] == (6, 1)
    v1_at_2 = trace.states[2][0][2:] == (8, 2)
    final_by_8 = (
        trace.first_converged is not None
        and trace.first_converged <= 8
        and all((ys, zs) == (16, 4) for (_, _, ys, zs) in trace.states[-1])
    )

    v1_actual = trace.states[2][0][2:]
    v1_8_2_round = next(
        (k for k, row in enumerate(trace.states) if row[0][2:] == (8, 2)), None
    )
    detail = (
        f"node3@1=(6,1): {v3_at_1}; all (16,4) by 8: {final_by_8}; "
        f"node1@2=(8,2): {v1_at_2} (actual {v1_actual}; (8,2) reached at "
        f"round {v1_8_2_round})"
    )
    ok = v3_at_1 and v1_at_2 and final_by_8
    _report(3, ok, detail)
    assert v3_at_1, "node 3 must hold (6,1) at round 1"
    assert final_by_8, "all nodes must hold (16,4) by round 8"
    # Unattainable as specified: node 1's only in-neighbor is node 2, which
    # cannot deliver (8,2)-worth of mass by round 2 under any outcome
    # schedule; the aggregate first appears at node 2 in round 2.
    assert v1_at_2, (
        f"node 1 state at round 2 is {v1_actual}, not (8, 2); no outcome "
        "schedule can satisfy this waypoint (see the replay deriver report)"
    )


def test_criterion_4_ideal_channel_speed():
    """Ideal channel on the example graph: error exactly 0 by round 6, stays 0."""
    result = run_scenario(replace(PRESETS["sc1"], max_rounds=30,
                                  stability_window=24))
    trace = result.trace
    first_zero = next((k for k, err in enumerate(trace.errors) if err == 0.0), None)
    ok = (
        first_zero is not None
        and first_zero <= 6
        and all(err == 0.0 for err in trace.errors[first_zero:])
    )
    assert _report(4, ok, f"error reaches exactly 0 at round {first_zero} "
                          f"and stays 0 through round {trace.rounds}")


def test_criterion_5_decay_ordering():
    """200 paired seeds: median rounds at lam=0.3 <= median at lam=1."""
    cfg = replace(PRESETS["sc3"], seed=2024)
    result = compare_lambda(cfg, 0.3, 1.0, replicas=200)
    ok = result.median_a <= result.median_b
    assert _report(5, ok, f"median lam=0.3: {result.median_a}, "
                          f"median lam=1: {result.median_b}")


def test_criterion_6_sweep_trends():
    """20-node sweep, retry budget 3, 100 replicas per cell."""
    cfg = SweepConfig(
        error_rates=(0.0, 0.2, 0.4, 0.6, 0.8),
        lambdas=(0.0, 0.1, 0.5, 0.8, 1.0),
        max_retx=3,
        replicas=100,
        base_seed=424242,
        n=20,
        extra_edge_prob=0.1,
        max_rounds=20_000,
    )
    result = run_sweep(cfg)

    # (a) zero error rate: identical iteration counts across decay values.
    zero_row = [result.cell(0.0, lam).iterations for lam in cfg.lambdas]
    identical = all(cell == zero_row[0] for cell in zero_row)

    # (b) medians non-decreasing in error rate, one adjacent inversion allowed.
    monotone = True
    for lam in cfg.lambdas:
        medians = [result.cell(rate, lam).median for rate in cfg.error_rates]
        inversions = sum(b < a for a, b in zip(medians, medians[1:]))
        if inversions > 1:
            monotone = False

    # (c) at the highest error rate the decay gap dominates both spreads.
    low = result.cell(0.8, 0.0)
    high = result.cell(0.8, 1.0)
    gap = high.median - low.median
    separated = (
        low.median < high.median
        and gap > low.iqr()
        and gap > high.iqr()
    )

    no_failures = all(cell.failures == 0 for cell in result.cells.values())
    ok = identical and monotone and separated and no_failures
    assert _report(
        6, ok,
        f"rate-0 identical across decay: {identical}; medians monotone: "
        f"{monotone}; rate-0.8 medians {low.median} vs {high.median} "
        f"(gap {gap:.1f} > IQRs {low.iqr():.1f}/{high.iqr():.1f}): {separated}",
    )


def test_criterion_7_arq_reduction():
    """lam=1: success frequency independent of attempt; lam=0.3: matches
    1 - 0.6 * 0.3**r within 0.01."""
    from scipy.stats import chi2_contingency

    samples = 100_000
    arq = HarqChannel(LinkParams(0.6, 1.0, 2))
    rng = Random(777)
    table = []
    for r in (0, 1, 2):
        hits = sum(arq.resolve(0, 1, 2, 0, r, rng).success for _ in range(samples))
        table.append([hits, samples - hits])
    p_value = chi2_contingency(table).pvalue
    independent = p_value >= 0.01

    harq = HarqChannel(LinkParams(0.6, 0.3, 2))
    rng = Random(778)
    deviations = []
    for r in (0, 1, 2):
        hits = sum(harq.resolve(0, 1, 2, 0, r, rng).success for _ in range(samples))
        deviations.append(abs(hits / samples - (1.0 - 0.6 * 0.3**r)))
    matches = all(d <= 0.01 for d in deviations)

    ok = independent and matches
    assert _report(7, ok, f"chi-square p={p_value:.3f} (>=0.01); max decay "
                          f"deviation {max(deviations):.4f} (<=0.01)")


def test_criterion_8_deterministic_exports(tmp_path):
    """Same preset and seed twice: byte-identical CSV exports."""
    identical = True
    for preset in ("sc3", "example1"):
        cfg = replace(PRESETS[preset], seed=99)
        first = run_scenario(cfg, out_dir=tmp_path / f"{preset}_a")
        second = run_scenario(cfg, out_dir=tmp_path / f"{preset}_b")
        for name in ("states", "events", "metrics"):
            if (first.csv_paths[name].read_bytes()
                    != second.csv_paths[name].read_bytes()):
                identical = False
    assert _report(8, identical, "states/events/metrics byte-identical for "
                                 "sc3 and example1 reruns")


def test_criterion_9_protocol_invariants():
    """Invariant sweep over seeded stochastic runs."""
    problems = []
    for seed in range(30):
        n = GRID_N[seed % 3]
        p = GRID_P[seed % 3]
        lam = GRID_LAM[(seed // 3) % 3]
        retx = GRID_RETX[(seed // 9) % 3]
        graph = random_strongly_connected(n, 0.25, Random(seed))
        rng = Random(9_000 + seed)
        y0 = [rng.randint(-50, 50) for _ in range(n)]
        world = init_world(graph, y0, HarqChannel(LinkParams(p, lam, retx)))

        target = (world.y_target, n)
        attempts_log = []  # (round, src, dst, y, z, r, kind)
        zs_prev = [None] * (n + 1)
        converged_seen = False
        rows = 0
        while world.round < 400:
            for packet, kind in world.outbox:
                attempts_log.append(
                    (world.round, packet.src, packet.dst, packet.y, packet.z,
                     packet.r, kind)
                )
            world.step(rng)
            rows += 1
            # state token counts monotone, within [1, n]
            for j in range(1, n + 1):
                zs = world.nodes[j].zs
                if not 1 <= zs <= n:
                    problems.append((seed, "zs bounds", j, zs))
                if zs_prev[j] is not None and zs < zs_prev[j]:
                    problems.append((seed, "zs monotone", j, zs))
                zs_prev[j] = zs
            if converged_seen and not world.converged():
                problems.append((seed, "persistence", world.round))
            converged_seen = converged_seen or world.converged()
            if world.converged() and world.round >= 150:
                break

        # attempt bound: counters never exceed the budget
        for rec in attempts_log:
            if not 0 <= rec[5] <= retx:
                problems.append((seed, "attempt bound", rec))

        # retransmission content identical to the prior attempt on the link
        earlier: dict[tuple, set] = {}
        for rnd, src, dst, y, z, r, kind in attempts_log:
            if kind == "retx" and (r - 1, y, z) not in earlier.get((src, dst), set()):
                problems.append((seed, "snapshot chain", (src, dst, r, y, z)))
            earlier.setdefault((src, dst), set()).add((r, y, z))

        # round-robin: fresh packet counts per out-neighbor differ by <= 1
        # and consecutive fresh packets use consecutive ports
        for j in range(1, n + 1):
            ports = graph.ports(j)
            degree = graph.out_degree(j)
            seq = [ports[dst] for (_, src, dst, _, _, _, kind) in attempts_log
                   if src == j and kind == "fresh"]
            counts = [seq.count(port) for port in range(1, degree + 1)]
            if counts and max(counts) - min(counts) > 1:
                problems.append((seed, "round robin counts", j, counts))
            for a, b in zip(seq, seq[1:]):
                if b != a % degree + 1:
                    problems.append((seed, "round robin order", j, a, b))

        if not converged_seen:
            # Not required within this short horizon, but convergence
            # persistence only bites when convergence happens; note it.
            pass

    ok = not problems
    assert _report(9, ok, "zs-monotone/bounds, snapshot chains, attempt "
                          "bound, round-robin, persistence all hold over 30 runs"
                   if ok else f"violations: {problems[:5]}")
