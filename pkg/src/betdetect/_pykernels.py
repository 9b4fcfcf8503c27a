"""Pure-Python detector loops.

Mirror of ``_ckernels.pyx`` operation for operation, so both backends
produce bit-identical trajectories.  Selected automatically when the
compiled extension is missing.

Shared conventions
------------------
``g[i]`` is the outcome of betting step ``i`` and ``d[i]`` its bound;
``d`` carries one extra entry, the bound for the step after the last one.
Violation flags are bit fields: 1 = ``|g| > d``, 2 = nonpositive factor on
the simple side or side A, 4 = nonpositive factor on side B.
"""

import numpy as np

VIOL_BOUND = 1
VIOL_FACTOR_A = 2
VIOL_FACTOR_B = 4


def run_simple(g, d, gamma, threshold, abort):
    """Run the simple betting loop until ``wealth >= threshold`` or ``g`` ends.

    Returns ``(wealth, theta, flags, n_steps, declared, abort_step)``;
    arrays are truncated to ``n_steps``.  ``abort_step`` is the index of
    the first nonpositive factor when ``abort`` is set, else -1.
    """
    n = len(g)
    if len(d) < n + 1:
        raise ValueError("d must have len(g) + 1 entries")
    g = [float(v) for v in g]
    d = [float(v) for v in d]
    wealth = np.empty(n)
    theta_out = np.empty(n)
    flags = np.zeros(n, dtype=np.uint8)

    half = 1.0 / (2.0 * d[0])
    theta = max(min(0.0, half), -half)
    a = 1.0
    w = 1.0
    declared = False
    i = 0
    while i < n:
        gi = g[i]
        flag = 0
        if abs(gi) > d[i]:
            flag |= VIOL_BOUND
        factor = 1.0 - gi * theta
        if factor <= 0.0:
            flag |= VIOL_FACTOR_A
            if abort:
                flags[i] = flag
                return wealth[:i], theta_out[:i], flags[:i], i, False, i
            w = 0.0
        else:
            w = w * factor
        flags[i] = flag
        wealth[i] = w
        theta_out[i] = theta
        if w >= threshold:
            declared = True
            i += 1
            break
        half = 1.0 / (2.0 * d[i + 1])
        if factor > 0.0:
            z = gi / factor
            a = a + z * z
            theta = theta - z / (gamma * a)
        theta = max(min(theta, half), -half)
        i += 1
    return wealth[:i], theta_out[:i], flags[:i], i, declared, -1


def run_composite(g, d, epsilon, gamma, threshold, abort):
    """Two coupled one-sided loops on ``g - eps`` (side A) and ``-g - eps`` (side B).

    Returns ``(wealth_a, wealth_b, theta_a, theta_b, flags, n_steps,
    declared, abort_step)``.
    """
    n = len(g)
    if len(d) < n + 1:
        raise ValueError("d must have len(g) + 1 entries")
    g = [float(v) for v in g]
    d = [float(v) for v in d]
    eps = float(epsilon)
    wa_out = np.empty(n)
    wb_out = np.empty(n)
    ta_out = np.empty(n)
    tb_out = np.empty(n)
    flags = np.zeros(n, dtype=np.uint8)

    lo = -(1.0 / (2.0 * d[0]))
    ta = max(min(0.0, 0.0), lo)
    tb = ta
    aa = 1.0
    ab = 1.0
    wa = 1.0
    wb = 1.0
    declared = False
    i = 0
    while i < n:
        gi = g[i]
        ga = gi - eps
        gb = -gi - eps
        flag = 0
        if abs(gi) > d[i]:
            flag |= VIOL_BOUND
        fa = 1.0 - ga * ta
        fb = 1.0 - gb * tb
        if fa <= 0.0:
            flag |= VIOL_FACTOR_A
        if fb <= 0.0:
            flag |= VIOL_FACTOR_B
        if abort and (fa <= 0.0 or fb <= 0.0):
            flags[i] = flag
            return (wa_out[:i], wb_out[:i], ta_out[:i], tb_out[:i], flags[:i], i, False, i)
        wa = wa * fa if fa > 0.0 else 0.0
        wb = wb * fb if fb > 0.0 else 0.0
        flags[i] = flag
        wa_out[i] = wa
        wb_out[i] = wb
        ta_out[i] = ta
        tb_out[i] = tb
        if wa >= threshold or wb >= threshold:
            declared = True
            i += 1
            break
        lo = -(1.0 / (2.0 * d[i + 1]))
        if fa > 0.0:
            z = ga / fa
            aa = aa + z * z
            ta = ta - z / (gamma * aa)
        if fb > 0.0:
            z = gb / fb
            ab = ab + z * z
            tb = tb - z / (gamma * ab)
        ta = max(min(ta, 0.0), lo)
        tb = max(min(tb, 0.0), lo)
        i += 1
    return (wa_out[:i], wb_out[:i], ta_out[:i], tb_out[:i], flags[:i], i, declared, -1)
