"""Acceptance criteria. Each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` to see the lines
inline; they also appear in the terminal summary.
"""
import math
import statistics
import time
from contextlib import contextmanager
from dataclasses import replace

import numpy as np
import pytest

from mrga.blockstore import (PopulationFileHeader, block_count_for_bytes,
                             generate_population_file, read_population, split_into_blocks,
                             write_population)
from mrga.cli import main
from mrga.engine import JobConfig, Mode, reduce_basic, reduce_phase, run_map_phase, run_modes, shuffle
from mrga.experiments import run_baseline
from mrga.ga import (GaParams, Population, blend_pairs, evaluate, mutate, random_population,
                     rank, rank_weights, run_generations)
from mrga.objective import ObjectiveSpec, lookup_objective, sphere
from mrga.rng import make_rng

MiB = 2**20
RESULTS = []


@contextmanager
def criterion(number, title, budget_s):
    t0 = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - t0
        assert elapsed < budget_s, f"took {elapsed:.1f}s, budget {budget_s}s"
    except BaseException as exc:
        line = f"FAIL criterion {number}: {title} ({time.perf_counter() - t0:.1f}s): {exc}"
        RESULTS.append(line)
        print(line)
        raise
    line = f"PASS criterion {number}: {title} ({elapsed:.1f}s)"
    RESULTS.append(line)
    print(line)


@pytest.fixture(scope="module", autouse=True)
def _summary(request):
    yield
    reporter = request.config.pluginmanager.getplugin("terminalreporter")
    if reporter is not None:
        reporter.write_sep("=", "acceptance criteria")
        for line in RESULTS:
            reporter.write_line(line)


def _job(tmp_path, count, dim, capacity, params, seed, name="pop.bin", parallelism=1):
    spec = ObjectiveSpec("sphere", dim, params.lower_bound, params.upper_bound)
    path = tmp_path / name
    header = generate_population_file(path, count, spec, seed)
    manifest = split_into_blocks(header, capacity * header.record_size)
    return JobConfig(path, manifest, ga_params=params, objective=spec, parallelism=parallelism)


def test_c1_block_arithmetic():
    with criterion(1, "map counts 240/860/1700 MB -> 2/7/14", 1):
        for mb, maps in ((240, 2), (860, 7), (1700, 14)):
            assert block_count_for_bytes(mb * MiB, 128 * MiB) == maps
            header = PopulationFileHeader(300, (mb * MiB) // 2408, -100.0, 100.0)
            assert len(split_into_blocks(header, 128 * MiB)) == maps


def test_c2_dominance(tmp_path):
    with criterion(2, "mer(elite) <= mer(basic) on 20 random configs", 120):
        rng = np.random.default_rng(2024)
        for k in range(20):
            dim = int(rng.integers(2, 30))
            capacity = int(rng.integers(20, 120))
            count = capacity * int(rng.integers(1, 5)) + int(rng.integers(0, capacity // 2)) + 4
            params = GaParams(dimension=dim, iterations=int(rng.integers(1, 30)),
                              elite_rate=float(rng.uniform(0.05, 0.3)),
                              mutation_rate=float(rng.uniform(0, 0.1)),
                              crossover_rate=float(rng.uniform(0, 1)),
                              master_seed=int(rng.integers(0, 2**63)))
            config = _job(tmp_path, count, dim, capacity, params, k, name=f"c2_{k}.bin")
            outputs = run_map_phase(config)
            basic = reduce_phase(Mode.BASIC, outputs, config)
            elite = reduce_phase(Mode.ELITE_REDUCE, outputs, config)
            assert elite.mer <= basic.mer, (k, elite.mer, basic.mer)


def test_c3_scheduling_independence(tmp_path):
    with criterion(3, "parallelism 1/2/8 bit-identical on 5 seeds", 120):
        for seed in range(5):
            params = GaParams(dimension=20, iterations=25, elite_rate=0.05,
                              master_seed=1000 + seed)
            base = _job(tmp_path, 500, 20, 100, params, seed, name=f"c3_{seed}.bin")
            results = []
            for par in (1, 2, 8):
                res = run_modes(replace(base, parallelism=par), list(Mode))
                results.append(res)
            for mode in Mode:
                ref = results[0][mode]
                for other in results[1:]:
                    got = other[mode]
                    assert got.best_chromosome.genes.tobytes() == ref.best_chromosome.genes.tobytes()
                    assert got.mer == ref.mer


def test_c4_oracle_equivalence(tmp_path):
    with criterion(4, "reduce_basic == linear-scan minimum on 10 jobs", 60):
        for k in range(10):
            params = GaParams(dimension=8, iterations=10, elite_rate=0.04, master_seed=k)
            config = _job(tmp_path, 300 + 37 * k, 8, 100, params, k, name=f"c4_{k}.bin")
            outputs = run_map_phase(config)
            records = [r for out in outputs for r in out.records]
            best_val, best_genes = math.inf, None
            for r in records:
                value = sphere(r.value.genes)
                if value < best_val:
                    best_val, best_genes = value, r.value.genes
            result = reduce_basic(shuffle(records))
            assert result.mer == best_val
            assert np.array_equal(result.best_chromosome.genes, best_genes)


def test_c5_plateau_and_improvement(tmp_path):
    # sphere D=300, 1500 chromosomes per block, I=200, S=1%, 5 seeds
    capacity, sizes, seeds = 1500, (1500, 7500, 15000), range(5)
    with criterion(5, "basic plateau / elite scaling / elite < basic at 10 blocks", 900):
        mer = {}
        for size in sizes:
            for seed in seeds:
                params = GaParams(dimension=300, iterations=200, elite_rate=0.01,
                                  master_seed=seed)
                config = _job(tmp_path, size, 300, capacity, params, seed,
                              name=f"c5_{size}_{seed}.bin")
                assert len(config.manifest) == size // capacity
                for mode, res in run_modes(config, list(Mode)).items():
                    mer.setdefault((mode, size), []).append(res.mer)
        med = {k: statistics.median(v) for k, v in mer.items()}
        for (mode, size), value in sorted(med.items(), key=lambda kv: (kv[0][0].value, kv[0][1])):
            print(f"  median mer {mode.value:5s} n={size:>6d}: {value:.6g}")
        b1, b10 = med[Mode.BASIC, 1500], med[Mode.BASIC, 15000]
        e1, e10 = med[Mode.ELITE_REDUCE, 1500], med[Mode.ELITE_REDUCE, 15000]
        failures = []
        if not b10 >= 0.5 * b1:
            failures.append(f"(a) basic@10={b10:.6g} < 0.5*basic@1={0.5 * b1:.6g}")
        if not e10 <= 0.5 * e1:
            failures.append(f"(b) elite@10={e10:.6g} > 0.5*elite@1={0.5 * e1:.6g} "
                            f"(ratio {e10 / e1:.3f})")
        if not e10 < b10:
            failures.append(f"(c) elite@10={e10:.6g} >= basic@10={b10:.6g}")
        assert not failures, "; ".join(failures)


def test_c6_operator_properties():
    with criterion(6, "operator property suite", 120):
        rng = make_rng(6)
        # elitist monotonicity over every recorded generation
        for seed in range(5):
            p = GaParams(dimension=30, iterations=100, master_seed=seed)
            obj = lookup_objective(ObjectiveSpec("sphere", 30))
            r = make_rng(seed)
            pop = evaluate(random_population(60, p, r), obj, p)
            hist = [float(pop.fitness.min())]
            run_generations(pop, p, obj, r, hist)
            assert all(b <= a for a, b in zip(hist, hist[1:]))

        # blend containment on 10^4 crossovers
        d = 12
        m = rng.uniform(-100, 100, (10_000, d))
        f = rng.uniform(-100, 100, (10_000, d))
        m[:100] = f[:100]
        alpha = rng.integers(0, d, 10_000)
        beta = rng.random(10_000)
        beta[:50] = 1.0
        c1, c2 = blend_pairs(m, f, alpha, beta)
        rows = np.arange(10_000)
        lo = np.minimum(m[rows, alpha], f[rows, alpha])
        hi = np.maximum(m[rows, alpha], f[rows, alpha])
        for c in (c1, c2):
            assert np.all((c[rows, alpha] >= lo) & (c[rows, alpha] <= hi))

        # rank-weight normalization
        for n_keep in range(2, 51):
            w = rank_weights(n_keep)
            assert abs(w.sum() - 1.0) < 1e-12 and np.all(np.diff(w) < 0)

        # mutation counts: binomial(999*300, 0.01) within 5 sigma, 100 trials
        p = GaParams(dimension=300, mutation_rate=0.01)
        n = 999 * 300
        mean, sd = n * 0.01, math.sqrt(n * 0.01 * 0.99)
        base = rank(Population(np.zeros((1000, 300)), np.arange(1000, dtype=float)))
        counts = [int((mutate(base, rng, p).genes != 0).sum()) for _ in range(100)]
        assert all(abs(c - mean) < 5 * sd for c in counts)
        assert abs(np.mean(counts) - mean) < 5 * sd / math.sqrt(100)

        # bound closure fuzzed over 10^4 operator applications
        p = GaParams(dimension=5, mutation_rate=0.3, lower_bound=-3.0, upper_bound=7.0)
        obj = lookup_objective(ObjectiveSpec("sphere", 5, -3.0, 7.0))
        pop = evaluate(Population(rng.uniform(-50, 50, (20, 5))), obj, p)
        for i in range(10_000):
            op = i % 3
            if op == 0:
                pop = evaluate(Population(pop.genes + rng.normal(0, 5, pop.genes.shape)), obj, p)
            elif op == 1:
                pop = mutate(rank(pop), rng, p)
                pop = evaluate(pop, obj, p)
            else:
                a = rng.integers(0, 20, 10)
                b = rng.integers(0, 20, 10)
                c1, c2 = blend_pairs(pop.genes[a], pop.genes[b], rng.integers(0, 5, 10), rng.random(10))
                pop = evaluate(Population(np.vstack([c1, c2])), obj, p)
            assert np.all((pop.genes >= -3.0) & (pop.genes <= 7.0))


def test_c7_baseline(capsys):
    with criterion(7, "baseline resource-limit exit and growing wall time", 300):
        assert main(["baseline", "--count", str(10**6), "--dim", "300", "--mem-limit", "1MB"]) == 3
        assert "2408000000" in capsys.readouterr().err
        p = GaParams(dimension=300, iterations=20, master_seed=1)
        small = run_baseline(300, p)
        large = run_baseline(3000, p)
        assert large.wall_time_s > small.wall_time_s


def test_c8_roundtrip(tmp_path):
    with criterion(8, "file round-trip for 1/1499/1500/1501 records", 60):
        rng = np.random.default_rng(8)
        for n in (1, 1499, 1500, 1501):
            fitness = rng.random(n) * 100
            fitness[rng.random(n) < 0.3] = np.nan
            pop = Population(rng.uniform(-100, 100, (n, 300)), fitness)
            write_population(tmp_path / f"r{n}.bin", pop)
            back = read_population(tmp_path / f"r{n}.bin")
            assert back.genes.tobytes() == pop.genes.tobytes()
            assert back.fitness.tobytes() == pop.fitness.tobytes()
