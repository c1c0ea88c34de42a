"""Compiled inner loops.

Every kernel takes the random stream as three arrays so that one compiled
function serves both engine kinds:

    prm  int64[3]    (mode, multiplier, increment); mode 0 = LCG48, 1 = recorded
    ist  int64[3]    (lcg state, recorded cursor, draws produced)
    buf  float64[:]  recorded values (empty for LCG48)

Draw order inside each kernel is part of the public contract: changing it
changes every trace.
"""
import math

import numpy as np
from numba import njit

from .errors import SourceExhausted

MASK48 = 0xFFFFFFFFFFFF
INV_2_48 = 1.0 / 281474976710656.0
TWO_PI = 2.0 * math.pi

F0 = 0
SPHERE = 1
ACKLEY = 2
RASTRIGIN = 3
GRIEWANK_ROSENBROCK = 4
SCAFFER_F6 = 5


# --------------------------------------------------------------------------
# random stream

@njit(cache=True)
def uniform(prm, ist, buf):
    if prm[0] == 0:
        # int64 products wrap mod 2^64; 2^48 divides 2^64 so the mask is exact
        s = (prm[1] * ist[0] + prm[2]) & MASK48
        ist[0] = s
        ist[2] += 1
        return s * INV_2_48
    cur = ist[1]
    if cur >= buf.shape[0]:
        raise SourceExhausted("recorded source exhausted")
    ist[1] = cur + 1
    ist[2] += 1
    return buf[cur]


@njit(cache=True)
def index(prm, ist, buf, n):
    i = int(uniform(prm, ist, buf) * n)
    if i >= n:
        i = n - 1
    return i


HALF_ULP48 = 0.5 * INV_2_48
BELOW_ONE = 1.0 - 2.0 ** -53


@njit(cache=True)
def ppnd16(p):
    """Inverse standard normal CDF (Wichura 1988, AS 241), ~1e-16 relative."""
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    v = num / den
    return -v if q < 0.0 else v


@njit(cache=True)
def to_normal(u):
    """Inverse CDF at the centre of the 2^-48 cell holding ``u``.

    The half-cell shift keeps the argument inside (0, 1) and makes the LCG
    lattice map symmetrically onto the normal quantiles.  Scalar-only so hot
    loops avoid per-call array reference counting.
    """
    p = u + HALF_ULP48
    if p >= 1.0:
        p = BELOW_ONE
    return ppnd16(p)


@njit(cache=True)
def std_normal(prm, ist, buf):
    """One uniform per normal."""
    return to_normal(uniform(prm, ist, buf))


@njit(cache=True)
def fill_uniform(prm, ist, buf, out):
    for i in range(out.shape[0]):
        out[i] = uniform(prm, ist, buf)


@njit(cache=True)
def fill_normal(prm, ist, buf, out):
    for i in range(out.shape[0]):
        out[i] = to_normal(uniform(prm, ist, buf))


# --------------------------------------------------------------------------
# objectives

@njit(cache=True)
def classic(kind, x):
    n = x.shape[0]
    if kind == SPHERE:
        s = 0.0
        for i in range(n):
            s += x[i] * x[i]
        return s
    if kind == ACKLEY:
        sq = 0.0
        cs = 0.0
        for i in range(n):
            sq += x[i] * x[i]
            cs += math.cos(TWO_PI * x[i])
        return (-20.0 * math.exp(-0.2 * math.sqrt(sq / n))
                - math.exp(cs / n) + 20.0 + math.e)
    if kind == RASTRIGIN:
        s = 0.0
        for i in range(n):
            s += x[i] * x[i] - 10.0 * math.cos(TWO_PI * x[i]) + 10.0
        return s
    if kind == GRIEWANK_ROSENBROCK:
        s = 0.0
        for i in range(n):
            a = x[i] + 1.0
            b = x[(i + 1) % n] + 1.0
            r = 100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2
            s += r * r / 4000.0 - math.cos(r) + 1.0
        return s
    if kind == SCAFFER_F6:
        s = 0.0
        for i in range(n):
            a = x[i]
            b = x[(i + 1) % n]
            r2 = a * a + b * b
            t = math.sin(math.sqrt(r2))
            s += 0.5 + (t * t - 0.5) / (1.0 + 0.001 * r2) ** 2
        return s
    return math.nan


@njit(cache=True)
def evaluate(kind, x, prm, ist, buf):
    if kind == F0:
        return uniform(prm, ist, buf)
    return classic(kind, x)


@njit(cache=True)
def _clamp(v, lo, hi):
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


# --------------------------------------------------------------------------
# steady-state GA

@njit(cache=True)
def init_population(prm, ist, buf, kind, lo, width, pop, fit):
    n, dim = pop.shape
    for i in range(n):
        for c in range(dim):
            pop[i, c] = lo[c] + width[c] * uniform(prm, ist, buf)
    for i in range(n):
        fit[i] = evaluate(kind, pop[i], prm, ist, buf)


@njit(cache=True)
def tournament(prm, ist, buf, fit, n_t):
    n = fit.shape[0]
    best = index(prm, ist, buf, n)
    for _ in range(n_t - 1):
        j = index(prm, ist, buf, n)
        if fit[j] < fit[best]:
            best = j
    return best


@njit(cache=True)
def worst_index(fit):
    w = 0
    for i in range(1, fit.shape[0]):
        if fit[i] > fit[w]:
            w = i
    return w


@njit(cache=True)
def ga_advance(prm, ist, buf, kind, lo, hi, width, pop, fit,
               n_t, d, md, p_mut, evals, target):
    dim = pop.shape[1]
    child = np.empty(dim)
    span = 1.0 + 2.0 * d
    while evals < target:
        p1 = tournament(prm, ist, buf, fit, n_t)
        p2 = tournament(prm, ist, buf, fit, n_t)
        for c in range(dim):
            a = -d + span * uniform(prm, ist, buf)
            v = pop[p1, c] + a * (pop[p2, c] - pop[p1, c])
            child[c] = _clamp(v, lo[c], hi[c])
        if p_mut >= 1.0 or uniform(prm, ist, buf) < p_mut:
            for c in range(dim):
                v = child[c] + md * width[c] * to_normal(uniform(prm, ist, buf))
                child[c] = _clamp(v, lo[c], hi[c])
        f = evaluate(kind, child, prm, ist, buf)
        evals += 1
        w = worst_index(fit)
        if f <= fit[w]:
            for c in range(dim):
                pop[w, c] = child[c]
            fit[w] = f
    return evals


# --------------------------------------------------------------------------
# PSO (synchronous: global best refreshed after each full sweep)

@njit(cache=True)
def pso_init(prm, ist, buf, kind, lo, width, v_init, pos, vel, fit, pb, pbf, gb, gbf):
    n, dim = pos.shape
    for i in range(n):
        for c in range(dim):
            pos[i, c] = lo[c] + width[c] * uniform(prm, ist, buf)
    for i in range(n):
        fit[i] = evaluate(kind, pos[i], prm, ist, buf)
    for i in range(n):
        for c in range(dim):
            vel[i, c] = v_init * width[c] * uniform(prm, ist, buf)
    best = 0
    for i in range(n):
        pbf[i] = fit[i]
        for c in range(dim):
            pb[i, c] = pos[i, c]
        if fit[i] < fit[best]:
            best = i
    gbf[0] = fit[best]
    for c in range(dim):
        gb[c] = pos[best, c]


@njit(cache=True)
def pso_advance(prm, ist, buf, kind, lo, hi, width, pos, vel, fit, pb, pbf, gb, gbf,
                cursor, c0, c1, c2, v_clamp, saturate, evals, target):
    n, dim = pos.shape
    i = cursor[0]
    while evals < target:
        a1 = uniform(prm, ist, buf)
        a2 = uniform(prm, ist, buf)
        norm2 = 0.0
        for c in range(dim):
            v = (c0 * vel[i, c] + c1 * a1 * (pb[i, c] - pos[i, c])
                 + c2 * a2 * (gb[c] - pos[i, c]))
            vel[i, c] = v
            u = v / width[c]
            norm2 += u * u
        norm = math.sqrt(norm2)
        if norm > v_clamp:
            k = v_clamp / norm
            for c in range(dim):
                vel[i, c] = k * vel[i, c]
        for c in range(dim):
            p = pos[i, c] + vel[i, c]
            if saturate:
                p = _clamp(p, lo[c], hi[c])
            pos[i, c] = p
        f = evaluate(kind, pos[i], prm, ist, buf)
        evals += 1
        fit[i] = f
        if f < pbf[i]:
            pbf[i] = f
            for c in range(dim):
                pb[i, c] = pos[i, c]
        i += 1
        if i == n:
            i = 0
            best = 0
            for j in range(1, n):
                if pbf[j] < pbf[best]:
                    best = j
            if pbf[best] < gbf[0]:
                gbf[0] = pbf[best]
                for c in range(dim):
                    gb[c] = pb[best, c]
    cursor[0] = i
    return evals


# --------------------------------------------------------------------------
# simplified GA: uniform parents, unconditional replacement of a random member

@njit(cache=True)
def sga_step(prm, ist, buf, x, d, sigma):
    n = x.shape[0]
    j = index(prm, ist, buf, n)
    k = index(prm, ist, buf, n)
    a = -d + (1.0 + 2.0 * d) * uniform(prm, ist, buf)
    z = sigma * to_normal(uniform(prm, ist, buf))
    y = x[k] + a * (x[j] - x[k]) + z
    i = index(prm, ist, buf, n)
    x[i] = _clamp(y, 0.0, 1.0)
    return i, y


@njit(cache=True)
def sga_advance(prm, ist, buf, kind, lo, hi, width, pop, fit, d, sigma, evals, target):
    n, dim = pop.shape
    child = np.empty(dim)
    span = 1.0 + 2.0 * d
    alpha = np.empty(dim)
    while evals < target:
        j = index(prm, ist, buf, n)
        k = index(prm, ist, buf, n)
        for c in range(dim):
            alpha[c] = -d + span * uniform(prm, ist, buf)
        for c in range(dim):
            z = sigma * width[c] * to_normal(uniform(prm, ist, buf))
            y = pop[k, c] + alpha[c] * (pop[j, c] - pop[k, c]) + z
            child[c] = _clamp(y, lo[c], hi[c])
        f = evaluate(kind, child, prm, ist, buf)
        evals += 1
        i = index(prm, ist, buf, n)
        for c in range(dim):
            pop[i, c] = child[c]
        fit[i] = f
    return evals


# --------------------------------------------------------------------------
# pure random search baseline

@njit(cache=True)
def ra_advance(prm, ist, buf, kind, lo, width, pop, fit, evals, target):
    n, dim = pop.shape
    child = np.empty(dim)
    while evals < target:
        for c in range(dim):
            child[c] = lo[c] + width[c] * uniform(prm, ist, buf)
        f = evaluate(kind, child, prm, ist, buf)
        evals += 1
        i = index(prm, ist, buf, n)
        for c in range(dim):
            pop[i, c] = child[c]
        fit[i] = f
    return evals


# --------------------------------------------------------------------------
# Monte-Carlo drift of the sample variance for one simplified-GA step

@njit(cache=True)
def drift_mc(prm, ist, buf, x, d, sigma, trials, res):
    """Welford accumulators for (unabsorbed, absorbed, absorbed - unabsorbed).

    Each trial draws exactly as ``sga_step`` does, applied to the fixed x.
    Sums are taken relative to x[0] to avoid cancellation.
    """
    n = x.shape[0]
    shift = x[0]
    s1 = 0.0
    for i in range(n):
        s1 += x[i] - shift
    span = 1.0 + 2.0 * d
    mean = np.zeros(3)
    m2 = np.zeros(3)
    diff = np.empty(3)
    for t in range(trials):
        j = index(prm, ist, buf, n)
        k = index(prm, ist, buf, n)
        a = -d + span * uniform(prm, ist, buf)
        z = sigma * to_normal(uniform(prm, ist, buf))
        y = x[k] + a * (x[j] - x[k]) + z
        i = index(prm, ist, buf, n)
        xi = x[i] - shift
        yu = y - shift
        ya = _clamp(y, 0.0, 1.0) - shift
        du = yu - xi
        da = ya - xi
        diff[0] = (yu * yu - xi * xi - du * (2.0 * s1 + du) / n) / (n - 1)
        diff[1] = (ya * ya - xi * xi - da * (2.0 * s1 + da) / n) / (n - 1)
        diff[2] = diff[1] - diff[0]
        for q in range(3):
            delta = diff[q] - mean[q]
            mean[q] += delta / (t + 1)
            m2[q] += delta * (diff[q] - mean[q])
    for q in range(3):
        res[2 * q] = mean[q]
        res[2 * q + 1] = m2[q]


# --------------------------------------------------------------------------
# Algorithm K, split arithmetic so every intermediate fits in int64

@njit(cache=True)
def _mid_square(x, y):
    # floor(x*y / 10^5) mod 10^10 for x, y < 10^10
    xh = x // 100000
    xl = x % 100000
    yh = y // 100000
    yl = y % 100000
    # x*y = xh*yh*1e10 + (xh*yl + xl*yh)*1e5 + xl*yl
    hi = (xh * yh) % 100000
    mid = xh * yl + xl * yh
    lo = (xl * yl) // 100000
    return (hi * 100000 + mid + lo) % 10000000000


@njit(cache=True)
def _mul_1001001001(x):
    t = 10000000000
    return (x + (x % 10000000) * 1000 + (x % 10000) * 1000000
            + (x % 10) * 1000000000) % t


@njit(cache=True)
def algk_step_fast(x):
    y = x // 1000000000
    while True:
        z = (x // 100000000) % 10
        step = 3 + z
        if step <= 3:
            if x < 5000000000:
                x += 5000000000
        if step <= 4:
            x = _mid_square(x, x)
        if step <= 5:
            x = _mul_1001001001(x)
        if step <= 6:
            if x < 100000000:
                x += 9814055677
            else:
                x = 10000000000 - x
        if step <= 7:
            x = 100000 * (x % 100000) + x // 100000
        if step <= 8:
            x = _mul_1001001001(x)
        if step <= 9:
            r = 0
            p = 1
            v = x
            while v > 0:
                dgt = v % 10
                if dgt > 0:
                    dgt -= 1
                r += dgt * p
                p *= 10
                v //= 10
            x = r
        if step <= 10:
            if x < 100000:
                x = x * x + 99999
            else:
                x = x - 99999
        if step <= 11:
            if x == 0:
                return -1
            while x < 1000000000:
                x *= 10
        if step <= 12:
            x = _mid_square(x, x - 1) if x > 0 else 0
        if y > 0:
            y -= 1
        else:
            return x


@njit(cache=True)
def brent_orbit(x0, max_steps):
    """Returns (preperiod, period, evaluations); period -1 when undecided."""
    power = 1
    lam = 1
    tortoise = x0
    hare = algk_step_fast(x0)
    evals = 1
    while tortoise != hare:
        if evals >= max_steps:
            return -1, -1, evals
        if power == lam:
            tortoise = hare
            power *= 2
            lam = 0
        hare = algk_step_fast(hare)
        evals += 1
        lam += 1
    tortoise = x0
    hare = x0
    for _ in range(lam):
        hare = algk_step_fast(hare)
    mu = 0
    while tortoise != hare:
        tortoise = algk_step_fast(tortoise)
        hare = algk_step_fast(hare)
        mu += 1
    return mu, lam, evals
