"""Slow, independent reference computations used only by the tests."""

import math

import numpy as np


def census_bits_naive(img, radius):
    """Census vectors as Python ints plus a validity mask, via explicit loops."""
    a = np.asarray(img, dtype=np.int64)
    h, w = a.shape
    vec = np.zeros((h, w), dtype=object)
    valid = np.zeros((h, w), dtype=bool)
    for y in range(radius, h - radius):
        for x in range(radius, w - radius):
            v, k = 0, 0
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    if dx == 0 and dy == 0:
                        continue
                    if a[y + dy, x + dx] < a[y, x]:
                        v |= 1 << k
                    k += 1
            vec[y, x] = v
            valid[y, x] = True
    return vec, valid


def cost_volume_loops(I1, I2, measure, r, dmin, dmax, census_radius=2):
    """Per-pixel, per-disparity double loop straight from the window definitions."""
    a = np.asarray(I1, dtype=np.int64)
    b = np.asarray(I2, dtype=np.int64)
    h, w = a.shape
    n = dmax - dmin + 1
    cost = np.zeros((n, h, w), dtype=np.float64)
    valid = np.zeros((n, h, w), dtype=bool)
    if measure == "shd":
        c1, v1 = census_bits_naive(a, census_radius)
        c2, v2 = census_bits_naive(b, census_radius)
    for k, d in enumerate(range(dmin, dmax + 1)):
        for y in range(h):
            for x in range(w):
                if not (r <= y < h - r and r <= x < w - r and x + d + r < w):
                    continue
                if measure == "shd":
                    ok = all(
                        v1[y + j, x + i] and v2[y + j, x + d + i]
                        for j in range(-r, r + 1) for i in range(-r, r + 1)
                    )
                    if not ok:
                        continue
                    total = 0
                    for j in range(-r, r + 1):
                        for i in range(-r, r + 1):
                            total += bin(c1[y + j, x + i] ^ c2[y + j, x + d + i]).count("1")
                    cost[k, y, x] = total
                elif measure == "ncc":
                    cross = e1 = e2 = 0
                    for j in range(-r, r + 1):
                        for i in range(-r, r + 1):
                            p, q = int(a[y + j, x + i]), int(b[y + j, x + d + i])
                            cross += p * q
                            e1 += p * p
                            e2 += q * q
                    sim = 0.0 if e1 * e2 == 0 else min(cross / math.sqrt(e1 * e2), 1.0)
                    cost[k, y, x] = 1.0 - sim
                else:
                    total = 0
                    for j in range(-r, r + 1):
                        for i in range(-r, r + 1):
                            diff = int(a[y + j, x + i]) - int(b[y + j, x + d + i])
                            total += abs(diff) if measure == "sad" else diff * diff
                    cost[k, y, x] = total
                valid[k, y, x] = True
    return cost, valid


def _census_direct(a, radius):
    """Census vectors as an (h, w, nbits) bool array by direct comparison of shifted copies."""
    h, w = a.shape
    out = np.zeros((h, w, (2 * radius + 1) ** 2 - 1), dtype=bool)
    valid = np.zeros((h, w), dtype=bool)
    valid[radius:h - radius, radius:w - radius] = True
    pad = np.pad(a, radius, mode="edge")
    k = 0
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dx == 0 and dy == 0:
                continue
            nb = pad[radius + dy:radius + dy + h, radius + dx:radius + dx + w]
            out[..., k] = (nb < a) & valid
            k += 1
    return out, valid


def cost_volume_direct(I1, I2, measure, r, dmin, dmax, census_radius=2):
    """Direct summation over window offsets (no running sums), vectorized over pixels.

    Validity follows the definitions: every window sample in bounds, and for
    SHD every sample on a census-valid pixel.
    """
    a = np.asarray(I1, dtype=np.int64)
    b = np.asarray(I2, dtype=np.int64)
    h, w = a.shape
    n = dmax - dmin + 1
    cost = np.zeros((n, h, w), dtype=np.float64)
    valid = np.zeros((n, h, w), dtype=bool)
    if measure == "shd":
        ca, va = _census_direct(a, census_radius)
        cb, vb = _census_direct(b, census_radius)
    for k, d in enumerate(range(dmin, dmax + 1)):
        # per-pixel terms for reference column x against match column x + d
        m = w - d
        if m <= 0:
            continue
        p, q = a[:, :m], b[:, d:]
        if measure == "shd":
            terms = [np.count_nonzero(ca[:, :m] != cb[:, d:], axis=-1)]
            ok_px = va[:, :m] & vb[:, d:]
        elif measure == "sad":
            terms = [np.abs(p - q)]
        elif measure == "ssd":
            terms = [(p - q) ** 2]
        else:
            terms = [p * q, p * p, q * q]
        ys, xs = slice(r, h - r), slice(r, m - r)
        if h - 2 * r <= 0 or m - 2 * r <= 0:
            continue
        sums = [np.zeros((h - 2 * r, m - 2 * r), dtype=np.int64) for _ in terms]
        ok = np.ones((h - 2 * r, m - 2 * r), dtype=bool)
        for j in range(-r, r + 1):
            for i in range(-r, r + 1):
                win = (slice(r + j, h - r + j), slice(r + i, m - r + i))
                for acc, t in zip(sums, terms):
                    acc += t[win]
                if measure == "shd":
                    ok &= ok_px[win]
        if measure == "ncc":
            cross, e1, e2 = sums
            prod = e1 * e2
            sim = np.zeros(prod.shape)
            nz = prod != 0
            sim[nz] = np.minimum(cross[nz] / np.sqrt(prod[nz].astype(np.float64)), 1.0)
            vals = 1.0 - sim
        else:
            vals = sums[0].astype(np.float64)
        cost[k, ys, xs] = np.where(ok, vals, 0.0)
        valid[k, ys, xs] = ok
    return cost, valid


def wta_loops(cost, valid, dmin):
    """Scalar winner-take-all with the low-disparity tie rule."""
    n, h, w = cost.shape
    out = np.full((h, w), -1, dtype=np.int64)
    for y in range(h):
        for x in range(w):
            best = None
            for k in range(n):
                if valid[k, y, x] and (best is None or cost[k, y, x] < cost[best, y, x]):
                    best = k
            if best is not None:
                out[y, x] = dmin + best
    return out


def textured(rng, h, w, lo=0, hi=255):
    return rng.integers(lo, hi + 1, size=(h, w)).astype(np.uint8)


def shifted_pair(rng, h, w, s, lo=30, hi=220):
    """Random texture pair with match(x + s) == reference(x)."""
    canvas = rng.integers(lo, hi + 1, size=(h, w + s)).astype(np.uint8)
    return canvas[:, s:s + w].copy(), canvas[:, :w].copy()
