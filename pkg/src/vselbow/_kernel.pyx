# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled motor + plant inner loop; operation-for-operation twin of ``_kernel_py``."""
from libc.math cimport sin, fabs, isfinite


def advance(double[::1] S, const double[::1] P, const double[::1] R, long n):
    cdef double dt = P[0]
    cdef bint aa = P[1] == 0.0
    cdef bint sync = P[2] != 0.0
    cdef double kp1 = P[3], wmax1 = P[4], taum1 = P[5], lock1 = P[6], acc1 = P[7]
    cdef double kp2 = P[8], wmax2 = P[9], taum2 = P[10], lock2 = P[11], acc2 = P[12]
    cdef double a0 = P[13], gain = P[14], lo = P[15], span = P[16], a1 = P[17]
    cdef double pre0 = P[18], pre1 = P[19]
    cdef double inertia = P[20], gcoef = P[21], damp = P[22]
    cdef double tau_st = P[23], tau_fr = P[24]
    cdef double theta_obs = P[25]
    if tau_st < tau_fr:
        tau_st = tau_fr
    cdef double r1 = R[0], r2 = R[1]

    cdef double th1 = S[0], th2 = S[1], w1 = S[2], w2 = S[3]
    cdef double tho = S[4], vo = S[5], t = S[6], stuck = S[7]
    cdef double work1 = S[8], work2 = S[9]
    cdef long flags = <long>S[11]
    cdef double pk1 = S[16], pk2 = S[17]
    cdef double tc = 0.0, f = 0.0, tau1 = 0.0, tau2 = 0.0
    cdef double p_th1, p_th2, p_w1, p_w2, p_t
    cdef double ths, thp, vp, u, inside, g, d, pre, gp, ts_load
    cdef double u1, u2, av1, av2, x, s, q, tg1, tg2, lim, a_t1, a_t2
    cdef double vfree, rel, cap, slip, vn, thn
    cdef long k
    cdef int status = 0

    for k in range(n):
        p_th1 = th1
        p_th2 = th2
        p_w1 = w1
        p_w2 = w2
        p_t = t
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
                q = av1 / fabs(u1)
                if q < s:
                    s = q
            if u2 != 0.0:
                q = av2 / fabs(u2)
                if q < s:
                    s = q
            tg1 = u1 * s
            tg2 = u2 * s
        else:
            tg1 = u1 if fabs(u1) <= av1 else (av1 if u1 > 0.0 else -av1)
            tg2 = u2 if fabs(u2) <= av2 else (av2 if u2 > 0.0 else -av2)

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

        a_t1 = fabs(tau1)
        a_t2 = fabs(tau2)
        if a_t1 > pk1:
            pk1 = a_t1
        if a_t2 > pk2:
            pk2 = a_t2
        if a_t1 > lock1 and not (flags & 1):
            flags = flags | 1
            if S[14] < 0.0:
                S[14] = t
        if a_t2 > lock2 and not (flags & 2):
            flags = flags | 2
            if S[14] < 0.0:
                S[14] = t
        work1 += a_t1 * fabs(w1) * dt
        work2 += a_t2 * fabs(w2) * dt

        # elastic torque from the start-of-step configuration (f above)
        if aa:
            vp = 0.5 * (w1 + w2)
        else:
            vp = w1
        vfree = vo + dt * (-f - damp * vo - gcoef * sin(tho)) / inertia
        rel = vfree - vp
        cap = dt * (tau_st if stuck != 0.0 else tau_fr) / inertia
        if fabs(rel) <= cap:
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
            flags = flags | 4
            th1 = p_th1
            th2 = p_th2
            w1 = p_w1
            w2 = p_w2
            t = p_t
            status = 1
            break
        tho = thn
        vo = vn

    S[0] = th1
    S[1] = th2
    S[2] = w1
    S[3] = w2
    S[4] = tho
    S[5] = vo
    S[6] = t
    S[7] = stuck
    S[8] = work1
    S[9] = work2
    S[10] = tc
    S[11] = <double>flags
    S[12] = tau1
    S[13] = tau2
    S[15] = f
    S[16] = pk1
    S[17] = pk2
    return status
