"""Bundled example data: a simulated two-line test and the jute-fibre strengths.

The jute data are breaking strengths of fibres at gauge lengths 10 mm
(line 1) and 20 mm (line 2), thirty observations each.
"""

from __future__ import annotations

import numpy as np

from .censoring import CensoringPlan, JointSample
from .dist import WGParams

__all__ = [
    "JUTE_10MM",
    "JUTE_20MM",
    "simulated_example",
    "jute_example",
    "forecast_schemes",
    "FORECAST_SETTINGS",
]

JUTE_10MM = np.array(
    [
        693.73, 704.66, 323.83, 778.17, 123.06, 637.66, 383.43, 151.48, 108.94, 50.16,
        671.49, 183.16, 257.44, 727.23, 291.27, 101.15, 376.42, 163.40, 141.38, 700.74,
        262.90, 353.24, 422.11, 43.93, 590.48, 212.13, 303.90, 506.60, 530.55, 177.25,
    ]
)  # fmt: skip

JUTE_20MM = np.array(
    [
        71.46, 419.02, 284.64, 585.57, 456.60, 113.85, 187.85, 688.16, 662.66, 45.58,
        578.62, 756.70, 594.29, 166.49, 99.72, 707.36, 765.14, 187.13, 145.96, 350.70,
        547.44, 116.99, 375.81, 581.60, 119.86, 48.01, 200.16, 36.75, 244.53, 83.55,
    ]
)  # fmt: skip

_SIM_TIMES = [1.6875, 1.8412, 3.8437, 4.318, 4.497, 4.677, 4.7634, 4.8032, 4.8869, 5.0482]
_SIM_LINES = [2, 2, 1, 1, 2, 1, 1, 1, 1, 1]
_SIM_S = [
    [2, 0, 0, 0, 2, 0, 1, 2, 0, 9],
    [0, 2, 0, 2, 0, 1, 0, 0, 0, 16],
]

_JUTE_TIMES = [
    36.75, 43.93, 45.58, 48.01, 50.16, 71.46, 83.55, 99.72, 101.15, 108.94,
    113.85, 116.99, 141.38, 145.96, 151.48, 163.4, 166.49, 177.25, 187.13, 187.85,
]  # fmt: skip

_JUTE_S = [
    [2, 0, 0, 0, 2, 0, 1, 2, 0, 0, 2, 0, 0, 0, 0, 0, 1, 0, 0, 10],
    [0, 2, 0, 2, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 2, 0, 11],
]


def simulated_example() -> JointSample:
    """Ten joint failures from n = (24, 23) simulated units.

    The published withdrawal counts exceed line 2's sample size by one
    unit, so building the sample emits an ``InconsistentSampleWarning``.
    """
    plan = CensoringPlan(n=(24, 23), r=10, s=np.array(_SIM_S).T)
    return JointSample(times=np.array(_SIM_TIMES), line_of=np.array(_SIM_LINES), plan=plan)


def jute_example() -> JointSample:
    """Twenty joint failures censored from the two jute data sets (n = 30 each).

    The withdrawn units (for instance 119.86 and 123.06) are not among the
    observed failures, so the sample is not simply the 20 smallest values.
    """
    times = np.array(_JUTE_TIMES)
    line_of = np.where(np.isin(times, JUTE_10MM), 1, 2)
    plan = CensoringPlan(n=(30, 30), r=20, s=np.array(_JUTE_S).T)
    return JointSample(times=times, line_of=line_of, plan=plan)


# The two parameter settings of the forecast study.  Under the first one a
# line-1 unit outlives a line-2 unit with probability about 0.87.
FORECAST_SETTINGS = {
    "p=0.13": (WGParams(6, 3, 4), WGParams(2, 5, 1.5)),
    "p=0.87": (WGParams(2, 5, 1.5), WGParams(6, 3, 4)),
}


def _R(r, first=0, last=0, middle=None):
    R = [0] * r
    R[0] += first
    R[-1] += last
    if middle:
        for i, v in middle.items():
            R[i] += v
    return tuple(R)


def forecast_schemes() -> dict[int, CensoringPlan]:
    """The 45 pooled plans of the forecast study, keyed by scheme number."""
    groups = [
        # (N, r, R-vectors in order, sample-size triple)
        (30, 10, [_R(10, last=20), _R(10, middle={4: 10, 5: 10}), _R(10, first=20)]),
        (30, 15, [_R(15, last=15), _R(15, first=15)]),
        (30, 20, [_R(20, last=10), _R(20, first=10)]),
        (50, 20, [_R(20, last=30), _R(20, first=30)]),
        (50, 25, [_R(25, last=25), _R(25, first=25)]),
        (70, 30, [_R(30, last=40), _R(30, first=40)]),
        (70, 35, [_R(35, last=35), _R(35, first=35)]),
    ]
    sizes = {30: [(20, 10), (15, 15), (10, 20)], 50: [(30, 20), (25, 25), (20, 30)], 70: [(40, 30), (35, 35), (30, 40)]}
    out = {}
    number = 1
    for N, r, Rs in groups:
        for R in Rs:
            for n in sizes[N]:
                out[number] = CensoringPlan.pooled(n, r, R)
                number += 1
    return out
