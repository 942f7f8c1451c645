"""Recorded 3x3 runs of the stretch-and-project iteration, used as
regression oracles.

Entries are transcribed at four decimals, so the starts are orthogonal only
to about 1e-4 and replays are compared at 5e-5 per entry.  For the
ninth-power run only the endpoint is pinned: the high power amplifies the
transcription rounding far past print precision, so intermediate iterates of
that run are not reproducible from the rounded start.
"""

import numpy as np

# Fourth-power run: start, the elementwise cube of the start, and the next
# three iterates; the last iterate is an exact signed permutation.
L4_RUN = {
    "a0": np.array(
        [
            [-0.8249, 0.3820, -0.4168],
            [-0.5240, -0.2398, 0.8173],
            [-0.2122, -0.8925, -0.3979],
        ]
    ),
    "a0_cubed": np.array(
        [
            [-0.5613, 0.0557, -0.0724],
            [-0.1439, -0.0138, 0.5459],
            [-0.0096, -0.7109, -0.0630],
        ]
    ),
    "a1": np.array(
        [
            [-0.9795, 0.0621, -0.1917],
            [-0.1953, -0.0594, 0.9789],
            [-0.0494, -0.9963, -0.0703],
        ]
    ),
    "a2": np.array(
        [
            [-1.0000, 0.0002, -0.0077],
            [-0.0077, -0.0003, 1.0000],
            [-0.0002, -1.0000, -0.0003],
        ]
    ),
    "a3": np.array(
        [
            [-1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, -1.0, 0.0],
        ]
    ),
}

# Ninth-power (order 10) run: reaches a signed permutation in two rounds.
L10_RUN = {
    "a0": np.array(
        [
            [-0.6142, 0.3943, 0.6836],
            [-0.2039, 0.7575, -0.6201],
            [0.7623, 0.5203, 0.3849],
        ]
    ),
    "final": np.array(
        [
            [0.0, 0.0, 1.0],
            [0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0],
        ]
    ),
    "rounds": 2,
}

ENTRY_TOL = 5e-5
