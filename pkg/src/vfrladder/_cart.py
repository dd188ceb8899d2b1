"""Compiled kernels for exact greedy CART regression trees.

Features are pre-binned to the sorted unique values of the training matrix,
so a split between bins j < k of a node uses the midpoint of those two
values, which is the same threshold exact CART picks from the node's own
sorted values.
"""

import numpy as np
from numba import njit

LEAF = -1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def _splitmix(state):
    z = state[0] + _GOLDEN
    state[0] = z
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _choose_features(n_features, mtry, state, out):
    perm = np.arange(n_features)
    for i in range(mtry):
        span = np.uint64(n_features - i)
        j = i + np.int64(_splitmix(state) % span)
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
    chosen = np.sort(perm[:mtry])
    for i in range(mtry):
        out[i] = chosen[i]


@njit(cache=True, nogil=True)
def build_tree(codes, uniq, nbins, y, sample_idx, max_depth, min_split, min_leaf, mtry, seed):
    n_features = codes.shape[1]
    m_total = sample_idx.shape[0]
    cap = 2 * m_total - 1
    if max_depth < 62:
        cap = min(cap, (1 << (max_depth + 1)) - 1)

    feature = np.full(cap, LEAF, dtype=np.int32)
    threshold = np.zeros(cap)
    left = np.full(cap, LEAF, dtype=np.int32)
    right = np.full(cap, LEAF, dtype=np.int32)
    value = np.zeros(cap)
    n_node = np.zeros(cap, dtype=np.int64)
    sse_node = np.zeros(cap)

    idx = sample_idx.copy()
    tmp = np.empty(m_total, dtype=np.int64)
    max_bins = uniq.shape[1]
    cnt = np.zeros(max_bins, dtype=np.int64)
    sm = np.zeros(max_bins)
    gbin = np.empty(max_bins, dtype=np.int64)
    gcnt = np.empty(max_bins, dtype=np.int64)
    gsum = np.empty(max_bins)
    cbuf = np.empty(m_total, dtype=np.int64)
    ybuf = np.empty(m_total)
    feats = np.empty(n_features, dtype=np.int64)
    state = np.empty(1, dtype=np.uint64)
    state[0] = seed

    stack_node = np.empty(cap, dtype=np.int64)
    stack_start = np.empty(cap, dtype=np.int64)
    stack_end = np.empty(cap, dtype=np.int64)
    stack_depth = np.empty(cap, dtype=np.int64)
    top = 0
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = m_total
    stack_depth[0] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        depth = stack_depth[top]
        m = end - start

        total = 0.0
        ymin = np.inf
        ymax = -np.inf
        for k in range(start, end):
            v = y[idx[k]]
            total += v
            if v < ymin:
                ymin = v
            if v > ymax:
                ymax = v
        mean = total / m
        sse = 0.0
        for k in range(start, end):
            d = y[idx[k]] - mean
            sse += d * d
        value[node] = mean
        n_node[node] = m
        sse_node[node] = sse

        if depth >= max_depth or m < min_split or m < 2 * min_leaf or ymax == ymin:
            continue

        if mtry >= n_features:
            for i in range(n_features):
                feats[i] = i
            n_try = n_features
        else:
            _choose_features(n_features, mtry, state, feats)
            n_try = mtry

        # split scores use node-centred sums so equal gains compare equal
        # up to rounding; ties within 1e-12 * sse go to the earlier candidate
        total_c = 0.0
        for k in range(start, end):
            total_c += y[idx[k]] - mean
        parent_proxy = total_c * total_c / m
        tol = 1e-12 * sse
        best_proxy = -np.inf
        best_f = -1
        best_bin = -1
        best_thr = 0.0
        for fi in range(n_try):
            f = feats[fi]
            nb = nbins[f]
            if nb < 2:
                continue
            ng = 0
            if nb <= 8 * m:
                for b in range(nb):
                    cnt[b] = 0
                    sm[b] = 0.0
                for k in range(start, end):
                    s = idx[k]
                    b = codes[s, f]
                    cnt[b] += 1
                    sm[b] += y[s] - mean
                for b in range(nb):
                    if cnt[b] > 0:
                        gbin[ng] = b
                        gcnt[ng] = cnt[b]
                        gsum[ng] = sm[b]
                        ng += 1
            else:
                for k in range(m):
                    s = idx[start + k]
                    cbuf[k] = codes[s, f]
                    ybuf[k] = y[s] - mean
                order = np.argsort(cbuf[:m], kind="mergesort")
                prev = -1
                for k in range(m):
                    o = order[k]
                    b = cbuf[o]
                    if b != prev:
                        gbin[ng] = b
                        gcnt[ng] = 0
                        gsum[ng] = 0.0
                        ng += 1
                        prev = b
                    gcnt[ng - 1] += 1
                    gsum[ng - 1] += ybuf[o]
            if ng < 2:
                continue
            n_left = 0
            s_left = 0.0
            for g in range(ng - 1):
                n_left += gcnt[g]
                s_left += gsum[g]
                n_right = m - n_left
                if n_left < min_leaf:
                    continue
                if n_right < min_leaf:
                    break
                s_right = total_c - s_left
                proxy = s_left * s_left / n_left + s_right * s_right / n_right
                if best_f < 0 or proxy > best_proxy + tol:
                    best_proxy = proxy
                    best_f = f
                    best_bin = gbin[g]
                    lo = uniq[f, gbin[g]]
                    best_thr = 0.5 * (lo + uniq[f, gbin[g + 1]])
                    if best_thr >= uniq[f, gbin[g + 1]]:
                        best_thr = lo

        if best_f < 0 or best_proxy - parent_proxy <= tol:
            continue

        nl = 0
        nr = 0
        for k in range(start, end):
            s = idx[k]
            if codes[s, best_f] <= best_bin:
                idx[start + nl] = s
                nl += 1
            else:
                tmp[nr] = s
                nr += 1
        for k in range(nr):
            idx[start + nl + k] = tmp[k]

        feature[node] = best_f
        threshold[node] = best_thr
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc

        stack_node[top] = rc
        stack_start[top] = start + nl
        stack_end[top] = end
        stack_depth[top] = depth + 1
        top += 1
        stack_node[top] = lc
        stack_start[top] = start
        stack_end[top] = start + nl
        stack_depth[top] = depth + 1
        top += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy(), n_node[:n_nodes].copy(),
            sse_node[:n_nodes].copy())


@njit(cache=True, nogil=True)
def predict_forest(feature, threshold, left, right, value, offsets, X):
    """Mean of per-tree outputs; trees are concatenated, `offsets` has n_trees + 1 entries."""
    n = X.shape[0]
    n_trees = offsets.shape[0] - 1
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for t in range(n_trees):
            base = offsets[t]
            node = 0
            while feature[base + node] != LEAF:
                if X[i, feature[base + node]] <= threshold[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            acc += value[base + node]
        out[i] = acc / n_trees
    return out
