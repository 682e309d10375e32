"""Numpy implementation of the scoring kernels.

Same contract as the compiled module `_kernels`; used when the extension
is unavailable or CONVREC_PURE_PYTHON is set. Kept intentionally close to
the mathematical definition; the compiled version fuses the loops.
"""

import numpy as np


def cond_entropy(belief, grid, cell_state, cell_item, n_items):
    """Expected posterior item entropy of one question, log base n_items.

    The belief lives on "cells" (items, or (item, joint-state) pairs);
    ``grid[cell_state[c], a]`` is the likelihood of answer ``a`` in cell
    ``c`` and ``cell_item`` maps cells back to items. Answers with zero
    predictive probability contribute nothing.
    """
    if n_items <= 1:
        return 0.0
    like = grid[cell_state]  # (n_cells, n_answers), gathers rows
    w = belief[:, None] * like
    acc = 0.0
    for a in range(w.shape[1]):
        item_w = np.bincount(cell_item, weights=w[:, a], minlength=n_items)
        z = float(item_w.sum())
        if z <= 0.0:
            continue
        pos = item_w[item_w > 0.0]
        acc += z * np.log(z) - float(pos @ np.log(pos))
    return float(acc / np.log(n_items))
