"""Compiled inner loops for clique enumeration and Z/2 column reduction."""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def neighbor_lists(adj):
    """CSR lists of the neighbours of each vertex that have a larger index."""
    n = adj.shape[0]
    counts = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        c = 0
        for j in range(i + 1, n):
            if adj[i, j]:
                c += 1
        counts[i + 1] = counts[i] + c
    nbrs = np.empty(counts[n], dtype=np.int64)
    for i in range(n):
        k = counts[i]
        for j in range(i + 1, n):
            if adj[i, j]:
                nbrs[k] = j
                k += 1
    return counts, nbrs


@njit(cache=True, nogil=True)
def count_cofaces(simp, adj, starts, nbrs, cap):
    """Number of (p+1)-cliques extending each p-clique by a larger vertex.

    Stops early and returns cap + 1 once the running total passes ``cap``.
    """
    total = 0
    p1 = simp.shape[1]
    for s in range(simp.shape[0]):
        last = simp[s, p1 - 1]
        for t in range(starts[last], starts[last + 1]):
            v = nbrs[t]
            ok = True
            for q in range(p1 - 1):
                if not adj[simp[s, q], v]:
                    ok = False
                    break
            if ok:
                total += 1
        if total > cap:
            return cap + 1
    return total


@njit(cache=True, nogil=True)
def fill_cofaces(simp, vals, dist, adj, starts, nbrs, total):
    p1 = simp.shape[1]
    out = np.empty((total, p1 + 1), dtype=np.int64)
    out_vals = np.empty(total, dtype=np.float64)
    k = 0
    for s in range(simp.shape[0]):
        last = simp[s, p1 - 1]
        for t in range(starts[last], starts[last + 1]):
            v = nbrs[t]
            ok = True
            for q in range(p1 - 1):
                if not adj[simp[s, q], v]:
                    ok = False
                    break
            if not ok:
                continue
            val = vals[s]
            for q in range(p1):
                out[k, q] = simp[s, q]
                dv = dist[simp[s, q], v]
                if dv > val:
                    val = dv
            out[k, p1] = v
            out_vals[k] = val
            k += 1
    return out, out_vals


@njit(cache=True, nogil=True)
def _xor_into(work, wl, col, tmp):
    """Symmetric difference of sorted work[:wl] and col into tmp; returns length."""
    i = 0
    j = 0
    k = 0
    nc = col.shape[0]
    while i < wl and j < nc:
        a = work[i]
        b = col[j]
        if a < b:
            tmp[k] = a
            i += 1
            k += 1
        elif b < a:
            tmp[k] = b
            j += 1
            k += 1
        else:
            i += 1
            j += 1
    while i < wl:
        tmp[k] = work[i]
        i += 1
        k += 1
    while j < nc:
        tmp[k] = col[j]
        j += 1
        k += 1
    return k


@njit(cache=True, nogil=True)
def _heap_push(hv, hi, size, v, i):
    k = size
    hv[k] = v
    hi[k] = i
    while k > 0:
        p = (k - 1) // 2
        if hv[p] <= hv[k]:
            break
        hv[p], hv[k] = hv[k], hv[p]
        hi[p], hi[k] = hi[k], hi[p]
        k = p
    return size + 1


@njit(cache=True, nogil=True)
def _heap_pop(hv, hi, size):
    size -= 1
    hv[0] = hv[size]
    hi[0] = hi[size]
    k = 0
    while True:
        a = 2 * k + 1
        if a >= size:
            break
        if a + 1 < size and hv[a + 1] < hv[a]:
            a += 1
        if hv[k] <= hv[a]:
            break
        hv[a], hv[k] = hv[k], hv[a]
        hi[a], hi[k] = hi[k], hi[a]
        k = a
    return size


@njit(cache=True, nogil=True)
def _lowest_odd(chain, cl, cnt, cof, bound, hv, hi, ptr):
    """Smallest coface index >= bound hit an odd number of times by the
    coboundaries of chain[:cl], or -1."""
    size = 0
    for q in range(cl):
        e = chain[q]
        lo = cnt[e]
        hi_ = cnt[e + 1]
        while lo < hi_:
            mid = (lo + hi_) // 2
            if cof[mid] < bound:
                lo = mid + 1
            else:
                hi_ = mid
        ptr[q] = lo
        if lo < cnt[e + 1]:
            size = _heap_push(hv, hi, size, cof[lo], q)
    while size > 0:
        v = hv[0]
        c = 0
        while size > 0 and hv[0] == v:
            q = hi[0]
            size = _heap_pop(hv, hi, size)
            c += 1
            ptr[q] += 1
            if ptr[q] < cnt[chain[q] + 1]:
                size = _heap_push(hv, hi, size, cof[ptr[q]], q)
        if c % 2 == 1:
            return v
    return -1


@njit(cache=True, nogil=True)
def negative_top_columns(faces, nfaces, low, top):
    """Mark the top-dimensional columns that reduce to a nonzero column.

    Pairs are the same in homology and cohomology, so the negative top
    columns are the pivots of the coboundary matrix of the simplexes one
    dimension down, reduced in reverse filtration order.  Simplexes that are
    already negative (``low >= 0``) reduce to zero there and are cleared.
    Only the chain of summed simplexes is kept per column; its pivot is found
    by merging their sorted coboundaries lazily.
    """
    S = faces.shape[0]
    below = top - 1
    # coboundary lists in CSR form; cofaces come out in ascending order
    cnt = np.zeros(S + 1, dtype=np.int64)
    for j in range(S):
        if nfaces[j] == top:
            for q in range(top):
                cnt[faces[j, q] + 1] += 1
    for i in range(S):
        cnt[i + 1] += cnt[i]
    fill = cnt[:S].copy()
    cof = np.empty(cnt[S], dtype=np.int64)
    for j in range(S):
        if nfaces[j] == top:
            for q in range(top):
                f = faces[j, q]
                cof[fill[f]] = j
                fill[f] += 1
    neg = np.zeros(S, dtype=np.bool_)
    owner = np.full(S, -1, dtype=np.int64)
    vstart = np.full(S, -1, dtype=np.int64)
    vlength = np.zeros(S, dtype=np.int64)
    vbuf = np.empty(1024, dtype=np.int64)
    used = 0
    chain = np.empty(64, dtype=np.int64)
    tmp = np.empty(64, dtype=np.int64)
    hv = np.empty(64, dtype=np.int64)
    hi = np.empty(64, dtype=np.int64)
    ptr = np.empty(64, dtype=np.int64)
    for f in range(S - 1, -1, -1):
        if nfaces[f] != below or low[f] >= 0 or cnt[f + 1] == cnt[f]:
            continue
        chain[0] = f
        cl = 1
        bound = 0
        while True:
            if hv.shape[0] < cl:
                hv = np.empty(2 * cl, dtype=np.int64)
                hi = np.empty(2 * cl, dtype=np.int64)
                ptr = np.empty(2 * cl, dtype=np.int64)
            piv = _lowest_odd(chain, cl, cnt, cof, bound, hv, hi, ptr)
            if piv < 0:
                break
            o = owner[piv]
            if o < 0:
                owner[piv] = f
                neg[piv] = True
                if used + cl > vbuf.shape[0]:
                    nb = np.empty(2 * (used + cl), dtype=np.int64)
                    nb[:used] = vbuf[:used]
                    vbuf = nb
                # chains are kept sorted so they can be merged
                vbuf[used:used + cl] = np.sort(chain[:cl])
                vstart[f] = used
                vlength[f] = cl
                used += cl
                break
            # entries below the shared pivot cancel, so the search resumes past it
            col = vbuf[vstart[o]:vstart[o] + vlength[o]]
            srt = np.sort(chain[:cl])
            need = cl + col.shape[0]
            if tmp.shape[0] < need:
                tmp = np.empty(2 * need, dtype=np.int64)
            cl = _xor_into(srt, cl, col, tmp)
            if chain.shape[0] < cl:
                chain = np.empty(2 * cl, dtype=np.int64)
            chain[:cl] = tmp[:cl]
            bound = piv + 1
    return neg


@njit(cache=True, nogil=True)
def reduce_columns(faces, nfaces):
    """Standard reduction over Z/2, column by column within each dimension.

    ``faces[j, :nfaces[j]]`` holds the sorted boundary of column j.  Columns
    only ever absorb columns of their own dimension, so all lower-dimensional
    columns are reduced first.  Each nonzero top-dimensional column then
    consumes one distinct positive simplex one dimension down as its low; once
    every such simplex is paired the remaining top columns must reduce to
    zero and are skipped.  Top columns of dimension >= 2 that reduce to zero
    are found beforehand (``negative_top_columns``) and skipped as well; the
    others see exactly the same additions as in the plain left-to-right pass.
    Nonzero reduced columns are packed into ``buf``.
    """
    S = faces.shape[0]
    low = np.full(S, -1, dtype=np.int64)
    pivot_of = np.full(S, -1, dtype=np.int64)
    start = np.full(S, -1, dtype=np.int64)
    length = np.zeros(S, dtype=np.int64)
    buf = np.empty(max(16, 4 * S), dtype=np.int64)
    used = 0
    work = np.empty(64, dtype=np.int64)
    tmp = np.empty(64, dtype=np.int64)
    top = 0
    for j in range(S):
        if nfaces[j] > top:
            top = nfaces[j]
    order = np.empty(S, dtype=np.int64)
    k = 0
    for j in range(S):
        if nfaces[j] < top:
            order[k] = j
            k += 1
    first_top = k
    for j in range(S):
        if nfaces[j] == top:
            order[k] = j
            k += 1
    left = -1
    neg = np.zeros(0, dtype=np.bool_)
    for t in range(S):
        j = order[t]
        if t == first_top and top > 2:
            neg = negative_top_columns(faces, nfaces, low, top)
        if t == first_top and top > 0:
            # positive simplexes one dimension below the top, all unpaired so far
            left = 0
            below = top - 1 if top > 2 else 0
            for q in range(S):
                if nfaces[q] == below and low[q] < 0:
                    left += 1
        if left == 0:
            break
        if t >= first_top and top > 2 and not neg[j]:
            continue
        wl = nfaces[j]
        if wl == 0:
            continue
        for q in range(wl):
            work[q] = faces[j, q]
        while wl > 0:
            piv = pivot_of[work[wl - 1]]
            if piv < 0:
                break
            col = buf[start[piv]:start[piv] + length[piv]]
            need = wl + col.shape[0]
            if tmp.shape[0] < need:
                tmp = np.empty(2 * need, dtype=np.int64)
            wl = _xor_into(work, wl, col, tmp)
            work, tmp = tmp, work
        if wl > 0:
            lo = work[wl - 1]
            low[j] = lo
            pivot_of[lo] = j
            if used + wl > buf.shape[0]:
                nb = np.empty(2 * (used + wl), dtype=np.int64)
                nb[:used] = buf[:used]
                buf = nb
            buf[used:used + wl] = work[:wl]
            start[j] = used
            length[j] = wl
            used += wl
            if left > 0:
                left -= 1
    return low, pivot_of, start, length, buf[:used].copy()


@njit(cache=True, nogil=True)
def reduce_columns_tracked(faces, nfaces):
    """As ``reduce_columns`` but also records the V column (the chain of
    original columns summed into each reduced column) for every column."""
    S = faces.shape[0]
    low = np.full(S, -1, dtype=np.int64)
    pivot_of = np.full(S, -1, dtype=np.int64)
    start = np.full(S, -1, dtype=np.int64)
    length = np.zeros(S, dtype=np.int64)
    vstart = np.zeros(S, dtype=np.int64)
    vlength = np.zeros(S, dtype=np.int64)
    buf = np.empty(max(16, 4 * S), dtype=np.int64)
    vbuf = np.empty(max(16, 2 * S), dtype=np.int64)
    used = 0
    vused = 0
    work = np.empty(64, dtype=np.int64)
    tmp = np.empty(64, dtype=np.int64)
    vwork = np.empty(64, dtype=np.int64)
    vtmp = np.empty(64, dtype=np.int64)
    for j in range(S):
        wl = nfaces[j]
        for q in range(wl):
            work[q] = faces[j, q]
        vwork[0] = j
        vl = 1
        while wl > 0:
            piv = pivot_of[work[wl - 1]]
            if piv < 0:
                break
            col = buf[start[piv]:start[piv] + length[piv]]
            need = wl + col.shape[0]
            if tmp.shape[0] < need:
                tmp = np.empty(2 * need, dtype=np.int64)
            wl = _xor_into(work, wl, col, tmp)
            work, tmp = tmp, work
            vcol = vbuf[vstart[piv]:vstart[piv] + vlength[piv]]
            need = vl + vcol.shape[0]
            if vtmp.shape[0] < need:
                vtmp = np.empty(2 * need, dtype=np.int64)
            vl = _xor_into(vwork, vl, vcol, vtmp)
            vwork, vtmp = vtmp, vwork
        if wl > 0:
            lo = work[wl - 1]
            low[j] = lo
            pivot_of[lo] = j
            if used + wl > buf.shape[0]:
                nb = np.empty(2 * (used + wl), dtype=np.int64)
                nb[:used] = buf[:used]
                buf = nb
            buf[used:used + wl] = work[:wl]
            start[j] = used
            length[j] = wl
            used += wl
        if vused + vl > vbuf.shape[0]:
            nb = np.empty(2 * (vused + vl), dtype=np.int64)
            nb[:vused] = vbuf[:vused]
            vbuf = nb
        vbuf[vused:vused + vl] = vwork[:vl]
        vstart[j] = vused
        vlength[j] = vl
        vused += vl
    return low, pivot_of, start, length, buf[:used].copy(), vstart, vlength, vbuf[:vused].copy()


@njit(cache=True, nogil=True)
def find_clique(adj, size):
    """Lexicographically first ``size``-clique of the graph, or -1s."""
    n = adj.shape[0]
    chosen = np.full(size, -1, dtype=np.int64)
    if size > n or size < 1:
        return chosen
    # cand[d, :cnt[d]] are the vertices still compatible with chosen[:d]
    cand = np.empty((size, n), dtype=np.int64)
    cnt = np.zeros(size, dtype=np.int64)
    pos = np.zeros(size, dtype=np.int64)
    for v in range(n):
        cand[0, v] = v
    cnt[0] = n
    d = 0
    while d >= 0:
        if pos[d] >= cnt[d] or cnt[d] - pos[d] < size - d:
            d -= 1
            if d >= 0:
                pos[d] += 1
            continue
        v = cand[d, pos[d]]
        chosen[d] = v
        if d == size - 1:
            return chosen
        nn = 0
        for b in range(pos[d] + 1, cnt[d]):
            w = cand[d, b]
            if adj[v, w]:
                cand[d + 1, nn] = w
                nn += 1
        d += 1
        cnt[d] = nn
        pos[d] = 0
    return np.full(size, -1, dtype=np.int64)


@njit(cache=True, nogil=True)
def face_positions(vertices, dims, binom):
    """Sorted positions of the codimension-1 faces of every simplex.

    Simplexes are identified by their colex rank (sum of C(v_i, i+1)); each
    dimension's ranks are sorted once and faces are found by binary search.
    """
    S, width = vertices.shape
    faces = np.full((S, width), -1, dtype=np.int64)
    keys = np.zeros(S, dtype=np.int64)
    for s in range(S):
        for i in range(dims[s] + 1):
            keys[s] += binom[vertices[s, i], i + 1]
    max_dim = 0
    for s in range(S):
        if dims[s] > max_dim:
            max_dim = dims[s]
    tables_key = []
    tables_pos = []
    for p in range(max_dim + 1):
        sel = np.flatnonzero(dims == p)
        k = keys[sel]
        o = np.argsort(k)
        tables_key.append(k[o])
        tables_pos.append(sel[o])
    for s in range(S):
        p = dims[s]
        if p == 0:
            continue
        tk = tables_key[p - 1]
        tp = tables_pos[p - 1]
        for omit in range(p + 1):
            fk = 0
            c = 0
            for i in range(p + 1):
                if i == omit:
                    continue
                fk += binom[vertices[s, i], c + 1]
                c += 1
            pos = tp[np.searchsorted(tk, fk)]
            # insertion into the sorted row
            q = omit
            while q > 0 and faces[s, q - 1] > pos:
                faces[s, q] = faces[s, q - 1]
                q -= 1
            faces[s, q] = pos
    return faces
