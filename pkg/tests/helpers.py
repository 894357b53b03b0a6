"""Independent reference computations used by several test modules."""

import numpy as np
from scipy import stats


def brute_force_identification(y, d, pi, f):
    """Identification formula evaluated class by class with plain Python loops."""
    classes = sorted(set(d))
    total_pi = sum(pi)
    num = den = 0.0
    for k in classes:
        members = [i for i in range(len(y)) if d[i] == k]
        w_k = sum(pi[i] for i in members)
        sampled_mean = sum(pi[i] * y[i] for i in members) / w_k
        share = w_k / total_pi
        num += sampled_mean * share / f(k)
        den += share / f(k)
    return num / den


def exact_power_law(exponent, K):
    w = [k ** (-exponent) for k in range(1, K + 1)]
    total = sum(w)
    return [x / total for x in w]


def thinned_visit_chisquare(visits, degrees, lag):
    """Chi-square test of node visit counts against d_i / sum d, using every ``lag``-th visit.

    Thinning makes the retained visits close to independent draws from the
    stationary law, which the chi-square reference distribution assumes.
    """
    kept = np.concatenate([np.asarray(v)[::lag] for v in visits])
    counts = np.bincount(kept, minlength=len(degrees))
    p = np.asarray(degrees, dtype=float) / np.sum(degrees)
    return stats.chisquare(counts, kept.size * p)
