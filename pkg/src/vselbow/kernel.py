"""Inner-loop kernel selection and the packed state/parameter layouts.

The compiled extension ``vselbow._kernel`` is used when it was built;
otherwise the pure-Python twin runs.  Set ``VSELBOW_PURE_PYTHON=1`` to
force the fallback.
"""
import os

import numpy as np

from . import _kernel_py

# state vector S
TH1, TH2, W1, W2, THO, VO, T, STUCK = range(8)
WORK1, WORK2, TAU_CONTACT, FLAGS, LOAD1, LOAD2, FAULT_T, ELASTIC, PEAK1, PEAK2 = range(8, 18)
STATE_SIZE = 18

# parameter vector P
(DT, LAYOUT, SYNC,
 KP1, WMAX1, TAUM1, LOCK1, ACC1,
 KP2, WMAX2, TAUM2, LOCK2, ACC2,
 A0, GAIN, TS_LO, TS_SPAN, A1, PRE0, PRE1,
 INERTIA, GCOEF, DAMP,
 TAU_ST, TAU_FR, THETA_OBS) = range(26)
PARAM_SIZE = 26

FLAG_OVERLOAD_1 = 1
FLAG_OVERLOAD_2 = 2
FLAG_INTEGRATION = 4

NO_OBSTACLE = 1e300

py_advance = _kernel_py.advance

try:  # pragma: no cover - depends on the build
    if os.environ.get("VSELBOW_PURE_PYTHON"):
        raise ImportError("pure Python requested")
    from ._kernel import advance as c_advance
except ImportError:  # pragma: no cover - depends on the build
    c_advance = None

advance = c_advance if c_advance is not None else py_advance
BACKEND = "cython" if c_advance is not None else "python"


def new_state():
    s = np.zeros(STATE_SIZE)
    s[FAULT_T] = -1.0
    return s
