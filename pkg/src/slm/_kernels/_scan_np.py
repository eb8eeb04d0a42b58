"""Numpy implementation of the binned split-scan kernels.

Each scan takes one projected column (or a batch of them, one per row),
partitions [f_min, f_max] into `bins` uniform bins, and evaluates the
weighted two-sided loss at every interior bin boundary, returning the
feasible minimum (ties broken toward the smallest threshold).

The compiled twin in _scan_cy.pyx must stay bit-identical to this module,
so both follow one accumulation convention:

- thresholds are t_b = f_min + b*w with w = (f_max - f_min)/bins;
- a sample's bin index is the count of thresholds <= value (exact
  comparisons, not float rounding of (v - f_min)/w);
- per-bin partial sums accumulate over samples in ascending index order;
- left aggregates are ascending prefix sums over bins, right aggregates
  descending suffix sums;
- side losses and the weighted combination use the exact expression forms
  written here (entropy: sum of p*log(p) in ascending class order;
  mse: (sumsq - sum*sum/n)/n clamped at 0; gain: G*G/(H+lam), left term
  first; combined: (n_l/L)*loss_l + (n_r/L)*loss_r).

A boundary b is feasible only when both sides are nonempty; a degenerate
column (f_max <= f_min) yields loss = +inf with no threshold.
"""

import numpy as np

INFEASIBLE = (np.inf, np.nan, 0, 0)


def _bin_indices(values, f_min, f_max, bins):
    # Number of thresholds <= v; searchsorted uses exact comparisons, which
    # keeps the partition identical to a direct per-threshold scan.
    w = (f_max - f_min) / bins
    thresholds = f_min + np.arange(1, bins) * w
    return np.searchsorted(thresholds, values, side="right")


def _pick(losses, counts_left, total, bins, f_min, f_max):
    """Select the feasible boundary with minimal loss (smallest index on ties)."""
    n_left = counts_left
    n_right = total - n_left
    feasible = (n_left > 0) & (n_right > 0)
    if not feasible.any():
        return INFEASIBLE
    losses = np.where(feasible, losses, np.inf)
    b = int(np.argmin(losses))
    w = (f_max - f_min) / bins
    threshold = f_min + (b + 1) * w
    return float(losses[b]), float(threshold), int(n_left[b]), int(n_right[b])


def scan_entropy(values, labels, n_classes, bins, f_min, f_max):
    """Best entropy split of one projected column.

    Returns (loss, threshold, n_left, n_right); loss is +inf when no
    feasible boundary exists.
    """
    if not f_max > f_min:
        return INFEASIBLE
    total = values.shape[0]
    j = _bin_indices(values, f_min, f_max, bins)
    counts = np.zeros((bins, n_classes), dtype=np.int64)
    np.add.at(counts, (j, labels), 1)

    left = np.cumsum(counts, axis=0)[: bins - 1]
    right = np.cumsum(counts[::-1], axis=0)[::-1][1:]
    n_left = left.sum(axis=1)
    n_right = right.sum(axis=1)

    def side_entropy(cnt, n):
        # Accumulate classes in ascending order to match the compiled loop.
        s = np.zeros(cnt.shape[0])
        safe_n = np.where(n > 0, n, 1)
        for c in range(cnt.shape[1]):
            col = cnt[:, c]
            p = col / safe_n
            term = np.zeros_like(s)
            nz = col > 0
            term[nz] = p[nz] * np.log(p[nz])
            s = s + term
        return -s

    h_left = side_entropy(left, n_left)
    h_right = side_entropy(right, n_right)
    p_l = n_left / total
    p_r = n_right / total
    losses = p_l * h_left + p_r * h_right
    return _pick(losses, n_left, total, bins, f_min, f_max)


def scan_mse(values, y, bins, f_min, f_max):
    """Best mean-squared-error split of one projected column."""
    if not f_max > f_min:
        return INFEASIBLE
    total = values.shape[0]
    j = _bin_indices(values, f_min, f_max, bins)
    n_bin = np.zeros(bins, dtype=np.int64)
    s_bin = np.zeros(bins)
    q_bin = np.zeros(bins)
    np.add.at(n_bin, j, 1)
    np.add.at(s_bin, j, y)
    np.add.at(q_bin, j, y * y)

    n_l = np.cumsum(n_bin)[: bins - 1]
    s_l = np.cumsum(s_bin)[: bins - 1]
    q_l = np.cumsum(q_bin)[: bins - 1]
    n_r = np.cumsum(n_bin[::-1])[::-1][1:]
    s_r = np.cumsum(s_bin[::-1])[::-1][1:]
    q_r = np.cumsum(q_bin[::-1])[::-1][1:]

    def side_mse(n, s, q):
        safe_n = np.where(n > 0, n, 1)
        sse = q - (s * s) / safe_n
        sse = np.maximum(sse, 0.0)
        return sse / safe_n

    losses = (n_l / total) * side_mse(n_l, s_l, q_l) + (n_r / total) * side_mse(
        n_r, s_r, q_r
    )
    return _pick(losses, n_l, total, bins, f_min, f_max)


def scan_gain(values, g, h, lam, bins, f_min, f_max):
    """Best second-order gain split; lower (more negative) is better.

    The per-boundary loss is -(G_l^2/(H_l+lam) + G_r^2/(H_r+lam)).
    """
    if not f_max > f_min:
        return INFEASIBLE
    total = values.shape[0]
    j = _bin_indices(values, f_min, f_max, bins)
    n_bin = np.zeros(bins, dtype=np.int64)
    g_bin = np.zeros(bins)
    h_bin = np.zeros(bins)
    np.add.at(n_bin, j, 1)
    np.add.at(g_bin, j, g)
    np.add.at(h_bin, j, h)

    n_l = np.cumsum(n_bin)[: bins - 1]
    g_l = np.cumsum(g_bin)[: bins - 1]
    h_l = np.cumsum(h_bin)[: bins - 1]
    g_r = np.cumsum(g_bin[::-1])[::-1][1:]
    h_r = np.cumsum(h_bin[::-1])[::-1][1:]

    def side_score(gs, hs):
        denom = hs + lam
        out = np.zeros_like(gs)
        ok = denom > 0
        out[ok] = (gs[ok] * gs[ok]) / denom[ok]
        return out

    losses = -(side_score(g_l, h_l) + side_score(g_r, h_r))
    return _pick(losses, n_l, total, bins, f_min, f_max)


def _row_minmax(row):
    return float(row.min()), float(row.max())


def scan_entropy_many(columns, labels, n_classes, bins):
    """Scan each row of `columns` (shape n_candidates x n_samples)."""
    n = columns.shape[0]
    loss = np.empty(n)
    thr = np.empty(n)
    n_left = np.empty(n, dtype=np.int64)
    n_right = np.empty(n, dtype=np.int64)
    for i in range(n):
        f_min, f_max = _row_minmax(columns[i])
        loss[i], thr[i], n_left[i], n_right[i] = scan_entropy(
            columns[i], labels, n_classes, bins, f_min, f_max
        )
    return loss, thr, n_left, n_right


def scan_mse_many(columns, y, bins):
    n = columns.shape[0]
    loss = np.empty(n)
    thr = np.empty(n)
    n_left = np.empty(n, dtype=np.int64)
    n_right = np.empty(n, dtype=np.int64)
    for i in range(n):
        f_min, f_max = _row_minmax(columns[i])
        loss[i], thr[i], n_left[i], n_right[i] = scan_mse(
            columns[i], y, bins, f_min, f_max
        )
    return loss, thr, n_left, n_right


def scan_gain_many(columns, g, h, lam, bins):
    n = columns.shape[0]
    loss = np.empty(n)
    thr = np.empty(n)
    n_left = np.empty(n, dtype=np.int64)
    n_right = np.empty(n, dtype=np.int64)
    for i in range(n):
        f_min, f_max = _row_minmax(columns[i])
        loss[i], thr[i], n_left[i], n_right[i] = scan_gain(
            columns[i], g, h, lam, bins, f_min, f_max
        )
    return loss, thr, n_left, n_right
