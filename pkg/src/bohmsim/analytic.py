"""Closed-form benchmark: two unit-mass particles on a line bound by the
quadratic pair potential V(x, y) = (x - y)^2 / 4, prepared in the product
of two unit-width Gaussians (hbar = m = 1).

In normal modes the relative coordinate starts in the interaction ground
state (so it only accumulates phase) while the centre of mass spreads like
a free Gaussian. That makes the full wave function, the trajectories, and
the conditional slice all available in closed form, which is what every
propagation and guidance test leans on.
"""

import numpy as np

COUPLING = 0.5  # kappa in V = kappa (x-y)^2 / 2
RELATIVE_MODE_ENERGY = 0.5


def ab_coefficients(t):
    """Mixing coefficients of the linear trajectory map:
    a(t) = (sqrt(1+t^2)+1)/2, b(t) = (sqrt(1+t^2)-1)/2."""
    s = np.sqrt(1.0 + np.asarray(t, dtype=np.float64) ** 2)
    return 0.5 * (s + 1.0), 0.5 * (s - 1.0)


def coupled_oscillator_wavefunction(x, y, t):
    """Exact wave function at time t (principal branch square root):

    psi(x,y,t) = pi^(-1/2) e^(-it/2) (1+it)^(-1/2)
                 exp(-[(x-y)^2 + (x+y)^2/(1+it)] / 4)
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = 1.0 + 1j * np.asarray(t, dtype=np.float64)
    pref = np.pi ** -0.5 * np.exp(-0.5j * np.asarray(t)) / np.sqrt(z)
    return pref * np.exp(-0.25 * ((x - y) ** 2 + (x + y) ** 2 / z))


def coupled_oscillator_trajectory(x0, y0, t):
    """Trajectory through initial configuration (x0, y0):
    X_t = a X + b Y, Y_t = b X + a Y."""
    a, b = ab_coefficients(t)
    return a * x0 + b * y0, b * x0 + a * y0


def coupled_oscillator_velocity(x, y, t):
    """Velocity field of the closed form: both components equal
    t (x + y) / (2 (1 + t^2))."""
    v = np.asarray(t) * (np.asarray(x) + np.asarray(y)) / (2.0 * (1.0 + np.asarray(t) ** 2))
    return v, v


def conditional_oracle(x0, y0, t, x):
    """Wave function of the first particle conditioned on the second one
    actually sitting on its trajectory: psi_t(x) = Psi_t(x, Y_t)."""
    _, yt = coupled_oscillator_trajectory(x0, y0, t)
    return coupled_oscillator_wavefunction(np.asarray(x), yt, t)
