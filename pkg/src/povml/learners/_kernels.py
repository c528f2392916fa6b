"""Compiled inner loops for the tree learners.

Classification trees grow depth-first and order each node's rows per
candidate feature by a radix sort of precomputed value ranks; binary (0/1)
features skip the sort.  Regression trees
for boosting grow level by level over a presorted index, since every
boosting stage reuses the same feature matrix.

Randomness comes from an explicit splitmix64 stream so results depend only
on the integer seed handed in, never on thread or global state.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MIN_DECREASE = 1e-12
TIE_TOL = 1e-12
_MASK64 = (1 << 64) - 1


@njit(cache=True, nogil=True)
def _splitmix_next(state):
    # state is a 1-element uint64 array
    state[0] = state[0] + np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _randbelow(state, n):
    return np.int64(_splitmix_next(state) % np.uint64(n))


@njit(cache=True, nogil=True)
def gini_weighted(counts):
    total = 0.0
    for c in counts:
        total += c
    if total <= 0.0:
        return 0.0
    s = 0.0
    for c in counts:
        p = c / total
        s += p * p
    return 1.0 - s


@njit(cache=True, nogil=True)
def _better(gain, f, best_gain, best_f):
    """Strictly better gain, or an equal gain on a lower feature index."""
    if best_f < 0:
        return gain > MIN_DECREASE
    if gain > best_gain + TIE_TOL:
        return True
    if gain >= best_gain - TIE_TOL and f < best_f:
        return True
    return False


@njit(cache=True, nogil=True)
def _sort_by_rank(keys, pos, n, n_pass, keys_tmp, pos_tmp, hist):
    """Stable sort of keys[:n] (non-negative integer ranks), carrying pos[:n].

    Short runs use insertion sort; longer ones an LSD radix sort with 8-bit
    digits, ``n_pass`` passes.  The result always ends up in keys/pos.
    """
    if n <= 48:
        for t in range(1, n):
            k = keys[t]
            q = pos[t]
            j = t
            while j > 0 and keys[j - 1] > k:
                keys[j] = keys[j - 1]
                pos[j] = pos[j - 1]
                j -= 1
            keys[j] = k
            pos[j] = q
        return
    src_k, src_p, dst_k, dst_p = keys, pos, keys_tmp, pos_tmp
    for d in range(n_pass):
        shift = 8 * d
        for b in range(256):
            hist[b] = 0
        for t in range(n):
            hist[(src_k[t] >> shift) & 255] += 1
        acc = 0
        for b in range(256):
            c = hist[b]
            hist[b] = acc
            acc += c
        for t in range(n):
            b = (src_k[t] >> shift) & 255
            dst_k[hist[b]] = src_k[t]
            dst_p[hist[b]] = src_p[t]
            hist[b] += 1
        src_k, src_p, dst_k, dst_p = dst_k, dst_p, src_k, src_p
    if n_pass % 2 == 1:
        for t in range(n):
            keys[t] = keys_tmp[t]
            pos[t] = pos_tmp[t]


@njit(cache=True, nogil=True)
def _radix_passes(ranks):
    top = 0
    for f in range(ranks.shape[0]):
        for r in range(ranks.shape[1]):
            if ranks[f, r] > top:
                top = ranks[f, r]
    n_pass = 1
    while top >= (1 << (8 * n_pass)):
        n_pass += 1
    return n_pass


@njit(cache=True, nogil=True)
def _split_feature(Xt, R, n_pass, y, w, idx, s, e, f, is_binary, n_classes, parent_counts,
                   parent_w, parent_imp, min_leaf, best, left, keys, order, keys_tmp, pos_tmp, hist):
    """Evaluate feature f on rows idx[s:e]; update best = [gain, f, thr, wl, wr].

    ``Xt`` is the feature-major design matrix and ``R`` the matching value
    ranks (equal values share a rank), which order rows without comparisons.
    ``left`` and the remaining arrays are scratch space.  Returns 0 if the
    feature is constant on the node, 1 otherwise.
    """
    xf = Xt[f]
    n = e - s
    for c in range(n_classes):
        left[c] = 0.0
    if is_binary[f]:
        nl = 0
        for t in range(s, e):
            r = idx[t]
            if xf[r] <= 0.5:
                left[y[r]] += w[r]
                nl += 1
        if nl == 0 or nl == n:
            return 0
        if nl < min_leaf or n - nl < min_leaf:
            return 1
        wl = 0.0
        for c in range(n_classes):
            wl += left[c]
        wr = parent_w - wl
        if wl <= 0.0 or wr <= 0.0:
            return 1
        gl = 0.0
        gr = 0.0
        for c in range(n_classes):
            pl = left[c] / wl
            pr = (parent_counts[c] - left[c]) / wr
            gl += pl * pl
            gr += pr * pr
        gain = parent_imp - (wl / parent_w) * (1.0 - gl) - (wr / parent_w) * (1.0 - gr)
        if _better(gain, f, best[0], np.int64(best[1])):
            best[0] = gain
            best[1] = f
            best[2] = 0.5
            best[3] = wl
            best[4] = wr
        return 1

    rf = R[f]
    lo_k = rf[idx[s]]
    hi_k = lo_k
    for t in range(n):
        r = idx[s + t]
        k = rf[r]
        keys[t] = k
        order[t] = r
        if k < lo_k:
            lo_k = k
        if k > hi_k:
            hi_k = k
    if lo_k == hi_k:
        return 0
    _sort_by_rank(keys, order, n, n_pass, keys_tmp, pos_tmp, hist)
    wl = 0.0
    cur_best = best[0]
    cur_f = np.int64(best[1])
    for t in range(n - 1):
        r = order[t]
        left[y[r]] += w[r]
        wl += w[r]
        if keys[t] == keys[t + 1]:
            continue
        v, v_next = xf[r], xf[order[t + 1]]
        nl = t + 1
        if nl < min_leaf or n - nl < min_leaf:
            continue
        wr = parent_w - wl
        if wl <= 0.0 or wr <= 0.0:
            continue
        gl = 0.0
        gr = 0.0
        for c in range(n_classes):
            pl = left[c] / wl
            pr = (parent_counts[c] - left[c]) / wr
            gl += pl * pl
            gr += pr * pr
        gain = parent_imp - (wl / parent_w) * (1.0 - gl) - (wr / parent_w) * (1.0 - gr)
        if cur_f == f:
            # later thresholds on the same feature must be strictly better
            take = gain > cur_best + TIE_TOL
        else:
            take = _better(gain, f, cur_best, cur_f)
        if take:
            thr = (v + v_next) / 2.0
            if thr >= v_next:
                thr = v
            cur_best = gain
            cur_f = f
            best[0] = gain
            best[1] = f
            best[2] = thr
            best[3] = wl
            best[4] = wr
    return 1


@njit(cache=True, nogil=True)
def best_split_kernel(Xt, R, y, w, idx, n_classes, features, is_binary, min_leaf):
    """Best Gini split of rows ``idx`` over ``features``; best[1] == -1 if none.

    ``Xt`` is feature-major (``Xt[f, r]`` is feature f of row r) and ``R``
    holds the per-feature value ranks.
    """
    counts = np.zeros(n_classes)
    for r in idx:
        counts[y[r]] += w[r]
    total = counts.sum()
    imp = gini_weighted(counts)
    best = np.array([0.0, -1.0, 0.0, 0.0, 0.0])
    work = idx.copy()
    left = np.zeros(n_classes)
    m = len(work)
    keys, order = np.empty(m, dtype=R.dtype), np.empty(m, dtype=np.int64)
    keys_tmp, pos_tmp = np.empty(m, dtype=R.dtype), np.empty(m, dtype=np.int64)
    hist = np.empty(256, dtype=np.int64)
    n_pass = _radix_passes(R)
    for f in features:
        _split_feature(Xt, R, n_pass, y, w, work, 0, m, f, is_binary, n_classes,
                       counts, total, imp, min_leaf, best, left, keys, order, keys_tmp, pos_tmp, hist)
    return best


@njit(cache=True, nogil=True)
def build_class_tree(Xt, R, y, w, samples, n_classes, max_depth, min_samples_split,
                     min_samples_leaf, max_features, is_binary, seed):
    """Depth-first CART growth over feature-major ``Xt`` with value ranks ``R``.

    max_depth < 0 means unlimited.
    """
    n = len(samples)
    p = Xt.shape[0]
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, n_classes))
    weight = np.zeros(cap)
    n_samples = np.zeros(cap, dtype=np.int64)
    improvement = np.zeros(cap)

    idx = samples.copy()
    buf = np.empty(n, dtype=np.int64)
    st_s = np.empty(cap, dtype=np.int64)
    st_e = np.empty(cap, dtype=np.int64)
    st_d = np.empty(cap, dtype=np.int64)
    st_node = np.empty(cap, dtype=np.int64)
    top = 0
    st_s[0] = 0
    st_e[0] = n
    st_d[0] = 0
    st_node[0] = 0
    top = 1
    node_count = 1

    rng = np.zeros(1, dtype=np.uint64)
    rng[0] = np.uint64(seed)
    perm = np.arange(p)
    best = np.zeros(5)
    left_buf = np.zeros(n_classes)
    keys, order = np.empty(n, dtype=R.dtype), np.empty(n, dtype=np.int64)
    keys_tmp, pos_tmp = np.empty(n, dtype=R.dtype), np.empty(n, dtype=np.int64)
    hist = np.empty(256, dtype=np.int64)
    n_pass = _radix_passes(R)
    counts = np.zeros(n_classes)

    while top > 0:
        top -= 1
        s, e, d, node = st_s[top], st_e[top], st_d[top], st_node[top]
        for c in range(n_classes):
            counts[c] = 0.0
        for t in range(s, e):
            r = idx[t]
            counts[y[r]] += w[r]
        total = counts.sum()
        n_samples[node] = e - s
        weight[node] = total
        if total > 0:
            for c in range(n_classes):
                value[node, c] = counts[c] / total
        imp = gini_weighted(counts)

        if (max_depth >= 0 and d >= max_depth) or (e - s) < min_samples_split \
                or (e - s) < 2 * min_samples_leaf or imp <= 1e-15 or total <= 0:
            continue

        best[0] = 0.0
        best[1] = -1.0
        if max_features >= p:
            for f in range(p):
                _split_feature(Xt, R, n_pass, y, w, idx, s, e, f, is_binary, n_classes,
                               counts, total, imp, min_samples_leaf, best,
                               left_buf, keys, order, keys_tmp, pos_tmp, hist)
        else:
            for i in range(p):
                perm[i] = i
            visited = 0
            for i in range(p):
                j = i + _randbelow(rng, p - i)
                tmp = perm[i]
                perm[i] = perm[j]
                perm[j] = tmp
                visited += _split_feature(Xt, R, n_pass, y, w, idx, s, e, perm[i], is_binary,
                                          n_classes, counts, total, imp, min_samples_leaf, best,
                                          left_buf, keys, order, keys_tmp, pos_tmp, hist)
                if visited >= max_features:
                    break
        bf = np.int64(best[1])
        if bf < 0:
            continue
        thr = best[2]
        xb = Xt[bf]
        # stable partition of idx[s:e]
        nl = 0
        for t in range(s, e):
            if xb[idx[t]] <= thr:
                buf[nl] = idx[t]
                nl += 1
        m = nl
        for t in range(s, e):
            if xb[idx[t]] > thr:
                buf[m] = idx[t]
                m += 1
        for t in range(e - s):
            idx[s + t] = buf[t]

        lc = node_count
        rc = node_count + 1
        node_count += 2
        feature[node] = bf
        threshold[node] = thr
        left[node] = lc
        right[node] = rc
        improvement[node] = total * best[0]
        # push right first so the left subtree is grown first
        st_s[top] = s + nl
        st_e[top] = e
        st_d[top] = d + 1
        st_node[top] = rc
        top += 1
        st_s[top] = s
        st_e[top] = s + nl
        st_d[top] = d + 1
        st_node[top] = lc
        top += 1

    k = node_count
    return (feature[:k].copy(), threshold[:k].copy(), left[:k].copy(), right[:k].copy(),
            value[:k].copy(), weight[:k].copy(), n_samples[:k].copy(), improvement[:k].copy())


@njit(cache=True, nogil=True)
def apply_tree(X, feature, threshold, left, right):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@njit(cache=True, nogil=True)
def build_reg_tree(X, sorted_idx, sorted_vals, grad, hess, w, in_sample, max_depth,
                   min_samples_leaf, leaf_scale):
    """Least-squares regression tree on ``grad`` with Newton leaf values.

    Leaf value = leaf_scale * sum(w*grad) / sum(w*hess).  Grown level-wise;
    ``sorted_idx[f]`` lists all rows ordered by feature f and
    ``sorted_vals[f]`` the matching feature values.  Also returns the leaf
    reached by every in-sample row (-1 for the rest).
    """
    n, p = X.shape
    cap = 1
    for _ in range(max_depth + 1):
        cap *= 2
    if cap > 2 * n + 1:
        cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    improvement = np.zeros(cap)
    sw = np.zeros(cap)
    sg = np.zeros(cap)
    sh = np.zeros(cap)
    cnt = np.zeros(cap, dtype=np.int64)

    pos = np.full(n, -1, dtype=np.int64)
    for r in range(n):
        if in_sample[r]:
            pos[r] = 0
            sw[0] += w[r]
            sg[0] += w[r] * grad[r]
            sh[0] += w[r] * hess[r]
            cnt[0] += 1
    node_count = 1
    level_start = 0
    level_end = 1

    lw = np.zeros(cap)
    lg = np.zeros(cap)
    lc = np.zeros(cap, dtype=np.int64)
    last = np.zeros(cap)
    bgain = np.zeros(cap)
    bfeat = np.full(cap, -1, dtype=np.int64)
    bthr = np.zeros(cap)

    for depth in range(max_depth):
        if level_end <= level_start:
            break
        if node_count + 2 * (level_end - level_start) > cap:
            break
        for nd in range(level_start, level_end):
            bgain[nd] = 0.0
            bfeat[nd] = -1
        for f in range(p):
            for nd in range(level_start, level_end):
                lw[nd] = 0.0
                lg[nd] = 0.0
                lc[nd] = 0
            for i in range(n):
                r = sorted_idx[f, i]
                nd = pos[r]
                if nd < level_start:
                    continue
                x = sorted_vals[f, i]
                if lc[nd] > 0 and x != last[nd]:
                    nl = lc[nd]
                    nr = cnt[nd] - nl
                    if nl >= min_samples_leaf and nr >= min_samples_leaf:
                        wl = lw[nd]
                        wr = sw[nd] - wl
                        if wl > 0.0 and wr > 0.0:
                            gr = sg[nd] - lg[nd]
                            gain = lg[nd] * lg[nd] / wl + gr * gr / wr - sg[nd] * sg[nd] / sw[nd]
                            if _better(gain, f, bgain[nd], bfeat[nd]) and not (
                                    bfeat[nd] == f and gain <= bgain[nd] + TIE_TOL):
                                thr = (last[nd] + x) / 2.0
                                if thr >= x:
                                    thr = last[nd]
                                bgain[nd] = gain
                                bfeat[nd] = f
                                bthr[nd] = thr
                lw[nd] += w[r]
                lg[nd] += w[r] * grad[r]
                lc[nd] += 1
                last[nd] = x
        new_start = node_count
        for nd in range(level_start, level_end):
            if bfeat[nd] >= 0:
                feature[nd] = bfeat[nd]
                threshold[nd] = bthr[nd]
                left[nd] = node_count
                right[nd] = node_count + 1
                improvement[nd] = bgain[nd]
                node_count += 2
        for r in range(n):
            nd = pos[r]
            if nd < level_start or feature[nd] < 0:
                continue
            if X[r, feature[nd]] <= threshold[nd]:
                c = left[nd]
            else:
                c = right[nd]
            pos[r] = c
            sw[c] += w[r]
            sg[c] += w[r] * grad[r]
            sh[c] += w[r] * hess[r]
            cnt[c] += 1
        level_start = new_start
        level_end = node_count

    for nd in range(node_count):
        if feature[nd] < 0:
            if sh[nd] > 1e-150:
                value[nd] = leaf_scale * sg[nd] / sh[nd]
            else:
                value[nd] = 0.0
    k = node_count
    return (feature[:k].copy(), threshold[:k].copy(), left[:k].copy(), right[:k].copy(),
            value[:k].copy(), improvement[:k].copy(), pos)


@njit(cache=True, nogil=True)
def knn_votes(train, labels, weights, queries, k, n_classes):
    """Weighted class tallies of the k nearest training rows per query.

    Distance ties go to the lower training index (stable sort).
    """
    nq = queries.shape[0]
    nt, p = train.shape
    out = np.zeros((nq, n_classes))
    d2 = np.empty(nt)
    for q in range(nq):
        for t in range(nt):
            s = 0.0
            for j in range(p):
                diff = queries[q, j] - train[t, j]
                s += diff * diff
            d2[t] = s
        order = np.argsort(d2, kind="mergesort")
        for i in range(k):
            t = order[i]
            out[q, labels[t]] += weights[t]
    return out
