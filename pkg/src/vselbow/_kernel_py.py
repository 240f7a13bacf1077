"""Pure-Python motor + plant inner loop.

Mirrors ``_kernel.pyx`` operation for operation; the two must produce
bitwise-identical trajectories.  Layouts of ``S`` (state) and ``P``
(parameters) are defined in :mod:`vselbow.kernel`.
"""
from math import isfinite, sin


def advance(S, P, R, n):
    out = S
    S = S.tolist() if hasattr(S, "tolist") else list(S)
    P = P.tolist() if hasattr(P, "tolist") else P
    R = R.tolist() if hasattr(R, "tolist") else R
    dt = P[0]
    aa = P[1] == 0.0
    sync = P[2] != 0.0
    kp1, wmax1, taum1, lock1, acc1 = P[3], P[4], P[5], P[6], P[7]
    kp2, wmax2, taum2, lock2, acc2 = P[8], P[9], P[10], P[11], P[12]
    a0, gain, lo, span, a1, pre0, pre1 = P[13], P[14], P[15], P[16], P[17], P[18], P[19]
    inertia, gcoef, damp = P[20], P[21], P[22]
    tau_st, tau_fr = P[23], P[24]
    theta_obs = P[25]
    if tau_st < tau_fr:
        tau_st = tau_fr
    r1, r2 = R[0], R[1]

    th1, th2, w1, w2, tho, vo, t, stuck = S[0], S[1], S[2], S[3], S[4], S[5], S[6], S[7]
    work1, work2, flags = S[8], S[9], S[11]
    pk1, pk2 = S[16], S[17]
    tc = 0.0
    f = 0.0
    tau1 = 0.0
    tau2 = 0.0

    status = 0
    for _ in range(n):
        p_th1, p_th2, p_w1, p_w2, p_t = th1, th2, w1, w2, t
        # loads reflected on the motors at the current configuration
        if aa:
            ths = th2 - th1
            thp = 0.5 * (th1 + th2)
        else:
            ths = th2
            thp = th1
        u = (ths - lo) / span
        inside = 1.0
        if u < 0.0:
            u = 0.0
            inside = 0.0
        elif u > 1.0:
            u = 1.0
            inside = 0.0
        g = 1.0 + gain * u * u
        d = tho - thp
        f = a0 * g * d + a1 * d * d * d
        pre = pre0 + (pre1 - pre0) * u
        if aa:
            gp = inside * 2.0 * gain * u / span
            ts_load = pre + 0.5 * a0 * gp * d * d
            tau1 = -0.5 * f - ts_load
            tau2 = -0.5 * f + ts_load
        else:
            tau1 = -f
            tau2 = pre

        # proportional motor loops, torque-limited speed availability
        u1 = kp1 * (r1 - th1)
        u2 = kp2 * (r2 - th2)
        av1 = 0.0
        av2 = 0.0
        if u1 != 0.0:
            x = 1.0 - (tau1 if u1 > 0.0 else -tau1) / taum1
            av1 = wmax1 * (0.0 if x < 0.0 else (1.0 if x > 1.0 else x))
        if u2 != 0.0:
            x = 1.0 - (tau2 if u2 > 0.0 else -tau2) / taum2
            av2 = wmax2 * (0.0 if x < 0.0 else (1.0 if x > 1.0 else x))
        if sync:
            s = 1.0
            if u1 != 0.0:
                q = av1 / abs(u1)
                if q < s:
                    s = q
            if u2 != 0.0:
                q = av2 / abs(u2)
                if q < s:
                    s = q
            tg1 = u1 * s
            tg2 = u2 * s
        else:
            tg1 = u1 if abs(u1) <= av1 else (av1 if u1 > 0.0 else -av1)
            tg2 = u2 if abs(u2) <= av2 else (av2 if u2 > 0.0 else -av2)

        if u1 == 0.0:
            w1 = 0.0
        elif acc1 > 0.0:
            x = tg1 - w1
            lim = acc1 * dt
            w1 += lim if x > lim else (-lim if x < -lim else x)
        else:
            w1 = tg1
        if u2 == 0.0:
            w2 = 0.0
        elif acc2 > 0.0:
            x = tg2 - w2
            lim = acc2 * dt
            w2 += lim if x > lim else (-lim if x < -lim else x)
        else:
            w2 = tg2
        th1 += w1 * dt
        th2 += w2 * dt

        a_t1 = abs(tau1)
        a_t2 = abs(tau2)
        if a_t1 > pk1:
            pk1 = a_t1
        if a_t2 > pk2:
            pk2 = a_t2
        if a_t1 > lock1 and not (int(flags) & 1):
            flags = float(int(flags) | 1)
            S[14] = t if S[14] < 0.0 else S[14]
        if a_t2 > lock2 and not (int(flags) & 2):
            flags = float(int(flags) | 2)
            S[14] = t if S[14] < 0.0 else S[14]
        work1 += a_t1 * abs(w1) * dt
        work2 += a_t2 * abs(w2) * dt

        # elastic joint, semi-implicit Euler with implicit Coulomb projection;
        # f is the elastic torque of the start-of-step configuration
        vp = 0.5 * (w1 + w2) if aa else w1
        vfree = vo + dt * (-f - damp * vo - gcoef * sin(tho)) / inertia
        rel = vfree - vp
        cap = dt * (tau_st if stuck != 0.0 else tau_fr) / inertia
        if abs(rel) <= cap:
            vn = vp
            stuck = 1.0
        else:
            slip = dt * tau_fr / inertia
            vn = vfree - slip if rel > 0.0 else vfree + slip
            stuck = 0.0
        thn = tho + dt * vn
        tc = 0.0
        if thn > theta_obs:
            tc = -inertia * vn / dt
            thn = theta_obs
            vn = 0.0
        t += dt

        if not (isfinite(thn) and isfinite(vn) and isfinite(th1) and isfinite(th2)):
            flags = float(int(flags) | 4)
            th1, th2, w1, w2 = p_th1, p_th2, p_w1, p_w2
            t = p_t
            status = 1
            break
        tho = thn
        vo = vn

    S[0], S[1], S[2], S[3], S[4], S[5], S[6], S[7] = th1, th2, w1, w2, tho, vo, t, stuck
    S[8], S[9], S[10], S[11] = work1, work2, tc, flags
    S[12], S[13] = tau1, tau2
    S[15] = f
    S[16], S[17] = pk1, pk2
    out[:] = S
    return status
