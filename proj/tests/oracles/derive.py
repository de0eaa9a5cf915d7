# Copyright 2026 The Cotune Authors
# SPDX-License-Identifier: Apache-2.0
"""Independent reference values frozen into the C++ tests.

Run with `python3 tests/oracles/derive.py`. Uses mpmath for the single-step
references and numpy/scipy for the LQR rollout reference.
"""
import mpmath as mp
import numpy as np
import scipy.linalg

mp.mp.dps = 40
G = mp.mpf("9.81")


def cartpole_deriv(x, u, mc=1, mp_=mp.mpf("0.1"), l=mp.mpf("0.5"), gear=1,
                   fc=0, fp=0):
    """Cart-pole with a massive pole of half length l, viscous frictions."""
    _, th, xd, thd = x
    total = mc + mp_
    f = gear * u - fc * xd
    s, c = mp.sin(th), mp.cos(th)
    # Solve the 2x2 mass matrix system from the Lagrangian directly.
    # [total, mp l c; mp l c, 4/3 mp l^2] [xdd; thdd] = rhs
    m11, m12 = total, mp_ * l * c
    m21, m22 = mp_ * l * c, mp.mpf(4) / 3 * mp_ * l * l
    r1 = f + mp_ * l * thd * thd * s
    r2 = mp_ * G * l * s - fp * thd
    det = m11 * m22 - m12 * m21
    xdd = (r1 * m22 - m12 * r2) / det
    thdd = (m11 * r2 - m21 * r1) / det
    return xdd, thdd


def euler_step(x, u, dt, **kw):
    xdd, thdd = cartpole_deriv(x, u, **kw)
    xd = x[2] + dt * xdd
    thd = x[3] + dt * thdd
    return [x[0] + dt * xd, x[1] + dt * thd, xd, thd]


def rk4_step(x, u, dt, **kw):
    def f(s):
        a, b = cartpole_deriv(s, u, **kw)
        return [s[2], s[3], a, b]
    k1 = f(x)
    k2 = f([x[i] + dt / 2 * k1[i] for i in range(4)])
    k3 = f([x[i] + dt / 2 * k2[i] for i in range(4)])
    k4 = f([x[i] + dt * k3[i] for i in range(4)])
    return [x[i] + dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
            for i in range(4)]


def show(name, xs):
    print(name, ", ".join(mp.nstr(v, 17) for v in xs))


dt = mp.mpf("0.02")
show("cartpole euler step x=0 u=1:", euler_step([0, 0, 0, 0], 1, dt))
show("cartpole rk4 step x=0 u=1:", rk4_step([0, 0, 0, 0], 1, dt))
show("cartpole euler step x=(0.1,0.2,-0.3,0.4) u=-2 frictions 0.1/0.01:",
     euler_step([mp.mpf("0.1"), mp.mpf("0.2"), mp.mpf("-0.3"),
                 mp.mpf("0.4")], -2, dt, fc=mp.mpf("0.1"),
                fp=mp.mpf("0.01")))


def np_step(x, u, dtf):
    xs = [mp.mpf(v) for v in x]
    return np.array([float(v) for v in euler_step(xs, mp.mpf(u), mp.mpf(dtf))])


# Linearization by central differences about the upright equilibrium.
h = 1e-6
A = np.zeros((4, 4))
B = np.zeros((4, 1))
for i in range(4):
    e = np.zeros(4)
    e[i] = h
    A[:, i] = (np_step(e, 0, 0.02) - np_step(-e, 0, 0.02)) / (2 * h)
B[:, 0] = (np_step(np.zeros(4), h, 0.02) - np_step(np.zeros(4), -h, 0.02)) / (2 * h)
np.set_printoptions(precision=12)
print("A =", A.tolist())
print("B =", B.ravel().tolist())

Q = np.eye(4)
R = np.eye(1)
P = scipy.linalg.solve_discrete_are(A, B, Q, R)
K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
print("K(Q=I,R=1) =", K.ravel().tolist())
print("spectral radius =", max(abs(np.linalg.eigvals(A - B @ K))))

# Nominal closed-loop task loss from x0 = (0, 0.2, 0, 0), T = 250.
x = np.array([0.0, 0.2, 0.0, 0.0])
total = 0.0
for _ in range(250):
    u = -float((K @ x)[0])
    x = np.array([float(v) for v in euler_step([mp.mpf(v) for v in x],
                                                mp.mpf(u), dt)])
    total += float(x @ x)
print("J_task nominal LQR =", repr(total / 250))

print("scalar riccati K =", mp.nstr((mp.sqrt(5) - 1) / 2, 17))
