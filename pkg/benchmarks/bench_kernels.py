"""Compare the compiled question-scoring kernel against the numpy fallback.

Question scoring dominates replay and sweep runtime: every controller
step evaluates H(items | question) for all unasked questions over all
belief cells. This script times both backends on the same inputs and
checks they agree to float precision.

Run:  python3 benchmarks/bench_kernels.py
"""

from __future__ import annotations

import time

import numpy as np

from convrec import compile_model, generate_synthetic_catalog
from convrec import _kernels_py

try:
    from convrec import _kernels as _compiled
except ImportError:
    _compiled = None


def bench_backend(fn, model, belief, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        acc = 0.0
        for qid in model.question_ids:
            grid = model.grids[qid]
            acc += fn(belief, grid, model.cell_state, model.cell_item, model.n_items)
        best = min(best, time.perf_counter() - t0)
    return best, acc


def main() -> None:
    rng = np.random.default_rng(42)
    print(f"{'items':>7} {'questions':>9} {'cells':>8} {'numpy':>10} {'compiled':>10} {'speedup':>8}")
    for n_items, n_questions in [(200, 16), (1000, 24), (4000, 32), (12000, 32)]:
        catalog = generate_synthetic_catalog(
            n_items, n_questions, answers_range=(4, 8), seed=1
        )
        model = compile_model(catalog)
        belief = rng.random(len(model.prior))
        belief /= belief.sum()
        repeats = 5 if n_items <= 4000 else 3

        t_py, a_py = bench_backend(_kernels_py.cond_entropy, model, belief, repeats)
        if _compiled is None:
            print(f"{n_items:>7} {n_questions:>9} {len(belief):>8} {t_py*1e3:>9.2f}ms {'absent':>10} {'-':>8}")
            continue
        t_cy, a_cy = bench_backend(_compiled.cond_entropy, model, belief, repeats)
        assert abs(a_py - a_cy) < 1e-9 * max(1.0, abs(a_py)), (a_py, a_cy)
        print(
            f"{n_items:>7} {n_questions:>9} {len(belief):>8} "
            f"{t_py*1e3:>9.2f}ms {t_cy*1e3:>9.2f}ms {t_py/t_cy:>7.1f}x"
        )


if __name__ == "__main__":
    main()
