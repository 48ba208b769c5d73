"""Compiled inner loops for the superpixel algorithms.

Everything here works on flat or 2-D contiguous numpy arrays and is
sequential; callers own validation and bookkeeping.  Labels use -1 for
"not a segment pixel" (masked out, or not yet assigned).
"""

import heapq
import math

import numpy as np
from numba import njit

DY4 = np.array([-1, 0, 1, 0], dtype=np.int64)
DX4 = np.array([0, 1, 0, -1], dtype=np.int64)
# 8-ring in circular order N, NE, E, SE, S, SW, W, NW; consecutive cells are 4-adjacent
RING_DY = np.array([-1, -1, 0, 1, 1, 1, 0, -1], dtype=np.int64)
RING_DX = np.array([0, 1, 1, 1, 0, -1, -1, -1], dtype=np.int64)


@njit(cache=True)
def label_components(labels):
    """Number 4-connected equal-label regions in row-major order of first pixel.

    Label -1 is the sentinel and is left out (component -1).
    """
    h, w = labels.shape
    comp = np.full((h, w), -1, dtype=np.int64)
    stack = np.empty(h * w, dtype=np.int64)
    n = 0
    for y0 in range(h):
        for x0 in range(w):
            lab = labels[y0, x0]
            if lab == -1 or comp[y0, x0] >= 0:
                continue
            comp[y0, x0] = n
            top = 0
            stack[top] = y0 * w + x0
            top += 1
            while top > 0:
                top -= 1
                p = stack[top]
                y = p // w
                x = p % w
                for d in range(4):
                    yy = y + DY4[d]
                    xx = x + DX4[d]
                    if 0 <= yy < h and 0 <= xx < w and comp[yy, xx] < 0 and labels[yy, xx] == lab:
                        comp[yy, xx] = n
                        stack[top] = yy * w + xx
                        top += 1
            n += 1
    return comp


@njit(cache=True)
def adjacency_pairs(comp):
    """Unique-ish list of 4-adjacent component id pairs (a < b), with repeats."""
    h, w = comp.shape
    out = []
    for y in range(h):
        for x in range(w):
            a = comp[y, x]
            if a < 0:
                continue
            if x + 1 < w:
                b = comp[y, x + 1]
                if b >= 0 and b != a:
                    out.append((min(a, b), max(a, b)))
            if y + 1 < h:
                b = comp[y + 1, x]
                if b >= 0 and b != a:
                    out.append((min(a, b), max(a, b)))
    return out


@njit(cache=True)
def can_remove(labels, y, x, lab):
    """True when pixel (y, x) can leave segment ``lab`` without splitting it.

    Sufficient local test: all 4-neighbours in ``lab`` lie on one run of the
    8-ring, so every path through the pixel can detour around it.  Refuses
    when the pixel is the segment's only pixel.
    """
    h, w = labels.shape
    inside = np.zeros(8, dtype=np.bool_)
    n4 = 0
    for i in range(8):
        yy = y + RING_DY[i]
        xx = x + RING_DX[i]
        if 0 <= yy < h and 0 <= xx < w and labels[yy, xx] == lab:
            inside[i] = True
            if i % 2 == 0:
                n4 += 1
    if n4 == 0:
        return False
    if n4 == 1:
        return True
    start = -1
    for i in range(8):
        if not inside[i]:
            start = i
            break
    if start < 0:
        return True
    runs_with_4 = 0
    in_run = False
    has4 = False
    for k in range(1, 9):
        i = (start + k) % 8
        if inside[i]:
            if not in_run:
                in_run = True
                has4 = False
            if i % 2 == 0:
                has4 = True
        else:
            if in_run:
                if has4:
                    runs_with_4 += 1
                in_run = False
    return runs_with_4 <= 1


# -- SLIC ---------------------------------------------------------------------

@njit(cache=True)
def slic_iterate(img, valid, centers, step, compactness, n_iter):
    """k-means in (intensity, y, x) with d = |dI| + (m/S) * d_xy, window 2S x 2S."""
    h, w = img.shape
    k = centers.shape[0]
    labels = np.full((h, w), -1, dtype=np.int64)
    dist = np.empty((h, w), dtype=np.float64)
    ratio = compactness / step
    for _ in range(n_iter):
        labels[:, :] = -1
        dist[:, :] = np.inf
        for c in range(k):
            cy = centers[c, 0]
            cx = centers[c, 1]
            ci = centers[c, 2]
            y0 = max(0, int(math.floor(cy - step)))
            y1 = min(h, int(math.ceil(cy + step)) + 1)
            x0 = max(0, int(math.floor(cx - step)))
            x1 = min(w, int(math.ceil(cx + step)) + 1)
            for y in range(y0, y1):
                for x in range(x0, x1):
                    if not valid[y, x]:
                        continue
                    d = abs(img[y, x] - ci) + ratio * math.sqrt((y - cy) ** 2 + (x - cx) ** 2)
                    if d < dist[y, x]:
                        dist[y, x] = d
                        labels[y, x] = c
        acc = np.zeros((k, 4))
        for y in range(h):
            for x in range(w):
                c = labels[y, x]
                if c >= 0:
                    acc[c, 0] += y
                    acc[c, 1] += x
                    acc[c, 2] += img[y, x]
                    acc[c, 3] += 1.0
        for c in range(k):
            if acc[c, 3] > 0:
                centers[c, 0] = acc[c, 0] / acc[c, 3]
                centers[c, 1] = acc[c, 1] / acc[c, 3]
                centers[c, 2] = acc[c, 2] / acc[c, 3]
    return labels


# -- ERGC ---------------------------------------------------------------------

@njit(cache=True)
def ergc_march(img, valid, seeds, ratio):
    """Fast-marching region growing from ``seeds`` (flat indices).

    The local potential of pixel q for region r is
    ``|I(q) - mean_r| + ratio * ||q - seed_r||``; arrival times follow the
    first-order upwind Eikonal update over frozen pixels of the same region
    and never drop below the time of the pixel that triggered them.
    Returns labels, arrival times and the sequence of popped times.
    """
    h, w = img.shape
    n = h * w
    labels = np.full((h, w), -1, dtype=np.int64)
    times = np.full((h, w), np.inf)
    frozen = np.zeros((h, w), dtype=np.bool_)
    k = seeds.shape[0]
    rsum = np.zeros(k)
    rcount = np.zeros(k)
    sy = np.empty(k)
    sx = np.empty(k)
    pops = np.empty(n)
    npop = 0
    heap = [(0.0, np.int64(0), np.int64(0))]
    heap.pop()
    for r in range(k):
        sy[r] = seeds[r] // w
        sx[r] = seeds[r] % w
        heapq.heappush(heap, (0.0, np.int64(r), np.int64(seeds[r])))
    while len(heap) > 0:
        t, r, p = heapq.heappop(heap)
        y = p // w
        x = p % w
        if frozen[y, x]:
            continue
        frozen[y, x] = True
        labels[y, x] = r
        times[y, x] = t
        pops[npop] = t
        npop += 1
        rsum[r] += img[y, x]
        rcount[r] += 1.0
        mean = rsum[r] / rcount[r]
        for d in range(4):
            yy = y + DY4[d]
            xx = x + DX4[d]
            if not (0 <= yy < h and 0 <= xx < w) or frozen[yy, xx] or not valid[yy, xx]:
                continue
            pot = abs(img[yy, xx] - mean) + ratio * math.sqrt((yy - sy[r]) ** 2 + (xx - sx[r]) ** 2)
            a = np.inf
            for xn in (xx - 1, xx + 1):
                if 0 <= xn < w and frozen[yy, xn] and labels[yy, xn] == r:
                    a = min(a, times[yy, xn])
            b = np.inf
            for yn in (yy - 1, yy + 1):
                if 0 <= yn < h and frozen[yn, xx] and labels[yn, xx] == r:
                    b = min(b, times[yn, xx])
            if a < np.inf and b < np.inf and abs(a - b) < pot:
                u = 0.5 * (a + b + math.sqrt(2.0 * pot * pot - (a - b) ** 2))
            else:
                u = min(a, b) + pot
            if u < t:
                u = t
            heapq.heappush(heap, (u, r, np.int64(yy * w + xx)))
    return labels, times, pops[:npop]


# -- RSS ----------------------------------------------------------------------

@njit(cache=True)
def rss_forest(img, valid, seeds, spatial):
    """Competitive seeded path forest (image foresting transform).

    A path from root r carries its largest absolute step, its intensity range
    and its hop count.  Its cost is ``max(max_step, hi - lo) + spatial * hops``; among
    candidate extensions the smallest (cost, hops, root, pixel, predecessor)
    tuple is conquered first.  Returns labels, costs and hops.
    """
    h, w = img.shape
    labels = np.full((h, w), -1, dtype=np.int64)
    cost = np.full((h, w), np.inf)
    hops = np.zeros((h, w), dtype=np.int64)
    mstep = np.zeros((h, w))
    lo = np.zeros((h, w))
    hi = np.zeros((h, w))
    heap = [(0.0, np.int64(0), np.int64(0), np.int64(0), np.int64(0))]
    heap.pop()
    for r in range(seeds.shape[0]):
        s = np.int64(seeds[r])
        heapq.heappush(heap, (0.0, np.int64(0), np.int64(r), s, s))
    while len(heap) > 0:
        c, hp, r, q, u = heapq.heappop(heap)
        y = q // w
        x = q % w
        if labels[y, x] >= 0:
            continue
        uy = u // w
        ux = u % w
        v = img[y, x]
        labels[y, x] = r
        cost[y, x] = c
        hops[y, x] = hp
        if q == u:
            mstep[y, x] = 0.0
            lo[y, x] = v
            hi[y, x] = v
        else:
            mstep[y, x] = max(mstep[uy, ux], abs(v - img[uy, ux]))
            lo[y, x] = min(lo[uy, ux], v)
            hi[y, x] = max(hi[uy, ux], v)
        for d in range(4):
            yy = y + DY4[d]
            xx = x + DX4[d]
            if not (0 <= yy < h and 0 <= xx < w) or not valid[yy, xx] or labels[yy, xx] >= 0:
                continue
            nv = img[yy, xx]
            ms = max(mstep[y, x], abs(nv - v))
            rng = max(hi[y, x], nv) - min(lo[y, x], nv)
            nc = max(ms, rng) + spatial * (hp + 1)
            heapq.heappush(heap, (nc, hp + 1, r, np.int64(yy * w + xx), q))
    return labels, cost, hops


# -- contour relaxation (CRS) -------------------------------------------------

@njit(cache=True)
def gauss_loglik(n, s, ss, var_floor):
    if n <= 0:
        return 0.0
    sse = ss - s * s / n
    if sse < 0.0:
        sse = 0.0
    var = sse / n
    if var < var_floor:
        var = var_floor
    return -0.5 * n * math.log(2.0 * math.pi * var) - sse / (2.0 * var)


@njit(cache=True)
def boundary_length(labels):
    h, w = labels.shape
    total = 0
    for y in range(h):
        for x in range(w):
            a = labels[y, x]
            if a < 0:
                continue
            if x + 1 < w and labels[y, x + 1] >= 0 and labels[y, x + 1] != a:
                total += 1
            if y + 1 < h and labels[y + 1, x] >= 0 and labels[y + 1, x] != a:
                total += 1
    return total


@njit(cache=True)
def segment_stats(img, labels, k):
    n = np.zeros(k)
    s = np.zeros(k)
    ss = np.zeros(k)
    h, w = labels.shape
    for y in range(h):
        for x in range(w):
            c = labels[y, x]
            if c >= 0:
                v = img[y, x]
                n[c] += 1.0
                s[c] += v
                ss[c] += v * v
    return n, s, ss


@njit(cache=True)
def crs_objective(img, labels, k, compactness, var_floor):
    n, s, ss = segment_stats(img, labels, k)
    total = 0.0
    for c in range(k):
        total += gauss_loglik(n[c], s[c], ss[c], var_floor)
    return total - compactness * boundary_length(labels)


@njit(cache=True)
def _neighbour_labels(labels, y, x, own):
    """Distinct 4-neighbour labels other than ``own``, ascending, and per-label counts."""
    h, w = labels.shape
    cand = np.full(4, -1, dtype=np.int64)
    nc = 0
    for d in range(4):
        yy = y + DY4[d]
        xx = x + DX4[d]
        if 0 <= yy < h and 0 <= xx < w:
            b = labels[yy, xx]
            if b >= 0 and b != own:
                dup = False
                for j in range(nc):
                    if cand[j] == b:
                        dup = True
                if not dup:
                    cand[nc] = b
                    nc += 1
    out = np.sort(cand[:nc])
    return out


@njit(cache=True)
def _count_label(labels, y, x, lab):
    h, w = labels.shape
    cnt = 0
    for d in range(4):
        yy = y + DY4[d]
        xx = x + DX4[d]
        if 0 <= yy < h and 0 <= xx < w and labels[yy, xx] == lab:
            cnt += 1
    return cnt


@njit(cache=True)
def crs_relax(img, labels, k, compactness, max_sweeps, var_floor, eps):
    """Greedy contour relaxation maximising sum of Gaussian log-likelihoods
    minus ``compactness`` times boundary length.  Moves that would split a
    segment are refused.  Returns the objective after each sweep."""
    h, w = labels.shape
    n, s, ss = segment_stats(img, labels, k)
    obj = crs_objective(img, labels, k, compactness, var_floor)
    trace = np.empty(max_sweeps + 1)
    trace[0] = obj
    used = 1
    for _ in range(max_sweeps):
        moved = 0
        for y in range(h):
            for x in range(w):
                a = labels[y, x]
                if a < 0:
                    continue
                cand = _neighbour_labels(labels, y, x, a)
                if cand.shape[0] == 0:
                    continue
                if not can_remove(labels, y, x, a):
                    continue
                v = img[y, x]
                na = _count_label(labels, y, x, a)
                ll_a_old = gauss_loglik(n[a], s[a], ss[a], var_floor)
                ll_a_new = gauss_loglik(n[a] - 1, s[a] - v, ss[a] - v * v, var_floor)
                best = eps
                best_b = -1
                for j in range(cand.shape[0]):
                    b = cand[j]
                    nb = _count_label(labels, y, x, b)
                    delta = (ll_a_new - ll_a_old
                             + gauss_loglik(n[b] + 1, s[b] + v, ss[b] + v * v, var_floor)
                             - gauss_loglik(n[b], s[b], ss[b], var_floor)
                             - compactness * (na - nb))
                    if delta > best:
                        best = delta
                        best_b = b
                if best_b >= 0:
                    labels[y, x] = best_b
                    n[a] -= 1
                    s[a] -= v
                    ss[a] -= v * v
                    n[best_b] += 1
                    s[best_b] += v
                    ss[best_b] += v * v
                    obj += best
                    moved += 1
        trace[used] = obj
        used += 1
        if moved == 0:
            break
    return trace[:used]


# -- coarse-to-fine block moves (ETPS) ----------------------------------------

@njit(cache=True)
def sse(n, s, ss):
    if n <= 0:
        return 0.0
    v = ss - s * s / n
    return v if v > 0.0 else 0.0


@njit(cache=True)
def etps_energy(img, labels, k, compactness):
    n, s, ss = segment_stats(img, labels, k)
    total = 0.0
    for c in range(k):
        total += sse(n[c], s[c], ss[c])
    return total + compactness * boundary_length(labels)


@njit(cache=True)
def _connected_without(labels, lab, y0, y1, x0, x1, start_y, start_x, expect, stamp, stamps, queue):
    """BFS over ``lab`` skipping the block [y0,y1)x[x0,x1); True when it reaches ``expect`` pixels."""
    h, w = labels.shape
    head = 0
    tail = 0
    stamps[start_y, start_x] = stamp
    queue[tail] = start_y * w + start_x
    tail += 1
    while head < tail:
        p = queue[head]
        head += 1
        y = p // w
        x = p % w
        for d in range(4):
            yy = y + DY4[d]
            xx = x + DX4[d]
            if not (0 <= yy < h and 0 <= xx < w):
                continue
            if labels[yy, xx] != lab or stamps[yy, xx] == stamp:
                continue
            if y0 <= yy < y1 and x0 <= xx < x1:
                continue
            stamps[yy, xx] = stamp
            queue[tail] = yy * w + xx
            tail += 1
    return tail == expect


@njit(cache=True)
def etps_refine(img, valid, labels, k, compactness, block_sizes, max_passes, eps):
    """Coarse-to-fine boundary block moves minimising
    ``sum of within-segment squared deviations + compactness * boundary length``.

    At each block size, aligned fully-valid blocks lying wholly inside one
    segment and touching another are moved to the neighbour giving the
    largest energy decrease, provided the donor stays 4-connected.
    Returns the energy after every accepted move (first entry: initial energy).
    """
    h, w = labels.shape
    n, s, ss = segment_stats(img, labels, k)
    energy = etps_energy(img, labels, k, compactness)
    trace = [energy]
    stamps = np.zeros((h, w), dtype=np.int64)
    queue = np.empty(h * w, dtype=np.int64)
    stamp = 0
    cand = np.empty(4 * (h + w) + 4, dtype=np.int64)
    cnt = np.empty(4 * (h + w) + 4, dtype=np.int64)
    for lvl in range(block_sizes.shape[0]):
        bs = block_sizes[lvl]
        for _ in range(max_passes):
            moved = 0
            for by in range(0, h, bs):
                for bx in range(0, w, bs):
                    y1 = min(by + bs, h)
                    x1 = min(bx + bs, w)
                    a = labels[by, bx]
                    if a < 0:
                        continue
                    pure = True
                    nb_ = 0.0
                    sb = 0.0
                    ssb = 0.0
                    for y in range(by, y1):
                        for x in range(bx, x1):
                            if labels[y, x] != a or not valid[y, x]:
                                pure = False
                            v = img[y, x]
                            nb_ += 1.0
                            sb += v
                            ssb += v * v
                    if not pure or nb_ >= n[a]:
                        continue
                    # perimeter edges: tally labels just outside the block
                    nc = 0
                    cnt_a = 0
                    ay = -1
                    ax = -1
                    for side in range(4):
                        if side == 0:
                            length = x1 - bx
                        elif side == 1:
                            length = y1 - by
                        elif side == 2:
                            length = x1 - bx
                        else:
                            length = y1 - by
                        for t in range(length):
                            if side == 0:
                                yy = by - 1
                                xx = bx + t
                            elif side == 1:
                                yy = by + t
                                xx = x1
                            elif side == 2:
                                yy = y1
                                xx = bx + t
                            else:
                                yy = by + t
                                xx = bx - 1
                            if not (0 <= yy < h and 0 <= xx < w):
                                continue
                            b = labels[yy, xx]
                            if b < 0:
                                continue
                            if b == a:
                                cnt_a += 1
                                ay = yy
                                ax = xx
                                continue
                            found = False
                            for j in range(nc):
                                if cand[j] == b:
                                    cnt[j] += 1
                                    found = True
                            if not found:
                                cand[nc] = b
                                cnt[nc] = 1
                                nc += 1
                    if nc == 0:
                        continue
                    e_a_old = sse(n[a], s[a], ss[a])
                    e_a_new = sse(n[a] - nb_, s[a] - sb, ss[a] - ssb)
                    best = -eps
                    best_b = -1
                    for j in range(nc):
                        b = cand[j]
                        delta = (e_a_new - e_a_old
                                 + sse(n[b] + nb_, s[b] + sb, ss[b] + ssb) - sse(n[b], s[b], ss[b])
                                 + compactness * (cnt_a - cnt[j]))
                        if delta < best or (delta == best and best_b >= 0 and b < best_b):
                            best = delta
                            best_b = b
                    if best_b < 0:
                        continue
                    if bs == 1:
                        if not can_remove(labels, by, bx, a):
                            continue
                    else:
                        if ay < 0:
                            continue
                        stamp += 1
                        if not _connected_without(labels, a, by, y1, bx, x1, ay, ax,
                                                  int(n[a] - nb_), stamp, stamps, queue):
                            continue
                    for y in range(by, y1):
                        for x in range(bx, x1):
                            labels[y, x] = best_b
                    n[a] -= nb_
                    s[a] -= sb
                    ss[a] -= ssb
                    n[best_b] += nb_
                    s[best_b] += sb
                    ss[best_b] += ssb
                    energy += best
                    trace.append(energy)
                    moved += 1
            if moved == 0:
                break
    return np.array(trace)
