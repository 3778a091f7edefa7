"""The guidance law: velocity fields derived from wave functions (scalar and
spinor), node handling, and trajectory integration dQ/dt = v(Q, t) by fixed-step
RK4 on time-interpolated evolution records."""

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fields import SpinorWaveFunction, density, gradient, gradient_array
from .kernels import interp_cubic_1d, interp_cubic_2d

COMPLETED = "Completed"
HIT_NODE = "HitNode"
LEFT_GRID = "LeftGrid"

_STATUS_NAMES = {0: COMPLETED, 1: HIT_NODE, 2: LEFT_GRID}

HALT = "halt"
CAP_SPEED = "cap-speed"

DEFAULT_NODE_FRACTION = 1e-12  # of the peak density

_CHUNK = 2048  # fixed batch split so results do not depend on thread count


class OutOfBoundsError(Exception):
    pass


class HitNodeError(Exception):
    pass


@dataclass(frozen=True)
class Configuration:
    coordinates: tuple
    time: float = 0.0

    def __post_init__(self):
        coords = tuple(float(c) for c in np.atleast_1d(self.coordinates))
        if not all(np.isfinite(coords)):
            raise ValueError("configuration coordinates must be finite")
        object.__setattr__(self, "coordinates", coords)


@dataclass(frozen=True)
class NodePolicy:
    """What to do when the density under a trajectory drops below threshold.

    A None threshold resolves to DEFAULT_NODE_FRACTION times the peak density
    of the field being sampled. Halting detects node approaches (the default,
    used for reporting rates); capping the speed is a diagnostic mode only.
    """

    density_threshold: float = None
    action: str = HALT
    v_max: float = None

    def __post_init__(self):
        if self.action not in (HALT, CAP_SPEED):
            raise ValueError(f"unknown node action {self.action!r}")
        if self.action == CAP_SPEED and not self.v_max:
            raise ValueError("cap-speed policy needs v_max")
        if self.density_threshold is not None and self.density_threshold <= 0:
            raise ValueError("density threshold must be positive")

    def resolve(self, peak_density):
        if self.density_threshold is not None:
            return self.density_threshold
        return DEFAULT_NODE_FRACTION * peak_density


def _check_inside(grid, coords):
    for q, ax in zip(coords, grid.axes):
        if not (ax.lower <= q <= ax.upper):
            raise OutOfBoundsError(f"coordinate {q} outside [{ax.lower}, {ax.upper}]")


def _interp_any(grid, values, pts):
    """Batch cubic interpolation of one gridded complex array; pts is (B, d)."""
    if grid.dimension == 1:
        ax = grid.axes[0]
        return interp_cubic_1d(values, ax.lower, ax.spacing, ax.periodic,
                               np.ascontiguousarray(pts[:, 0]))
    ax0, ax1 = grid.axes
    return interp_cubic_2d(values, ax0.lower, ax0.spacing, ax0.periodic,
                           ax1.lower, ax1.spacing, ax1.periodic,
                           np.ascontiguousarray(pts[:, 0]),
                           np.ascontiguousarray(pts[:, 1]))


def interpolate(psi, q):
    """Off-grid evaluation of the field by separable cubic interpolation.
    Exact at grid points."""
    coords = q.coordinates if isinstance(q, Configuration) else tuple(np.atleast_1d(q))
    if len(coords) != psi.grid.dimension:
        raise ValueError("configuration dimension mismatch")
    _check_inside(psi.grid, coords)
    pts = np.asarray(coords, dtype=np.float64).reshape(1, -1)
    return complex(_interp_any(psi.grid, psi.amplitudes, pts)[0])


class FieldSampler:
    """Interpolated values and gradients of a single frozen field."""

    def __init__(self, psi):
        self.grid = psi.grid
        self.amps = psi.amplitudes
        self.grads = [gradient(psi, k) for k in range(psi.grid.dimension)]
        self.peak_density = float(np.max(np.abs(psi.amplitudes) ** 2))

    def sample(self, pts, t=None):
        val = _interp_any(self.grid, self.amps, pts)
        grads = np.stack([_interp_any(self.grid, g, pts) for g in self.grads],
                         axis=1)
        return val, grads


class RecordSampler:
    """Values and gradients of an evolution linearly interpolated in time.

    Per-snapshot gradient arrays are computed lazily and cached for the two
    bracketing snapshots; the cache is guarded so many trajectory batches can
    share one record across threads.
    """

    def __init__(self, record):
        self.record = record
        self.grid = record.grid
        self._cache = {}
        self._lock = threading.Lock()
        self.peak_density = float(np.max(density(record.snapshots[0])))

    def _fetch(self, idx):
        with self._lock:
            hit = self._cache.get(idx)
            if hit is None:
                amps = self.record.snapshots[idx].amplitudes
                grads = [gradient_array(self.grid, amps, k)
                         for k in range(self.grid.dimension)]
                hit = (amps, grads)
                self._cache[idx] = hit
                for old in [k for k in self._cache if k < idx - 2]:
                    del self._cache[old]
            return hit

    def sample(self, pts, t):
        i0, i1, theta = self.record.bracket(t)
        a0, g0 = self._fetch(i0)
        v = _interp_any(self.grid, a0, pts)
        grads = np.stack([_interp_any(self.grid, g, pts) for g in g0], axis=1)
        if i1 != i0 and theta != 0.0:
            a1, g1 = self._fetch(i1)
            v = (1.0 - theta) * v + theta * _interp_any(self.grid, a1, pts)
            grads1 = np.stack([_interp_any(self.grid, g, pts) for g in g1],
                              axis=1)
            grads = (1.0 - theta) * grads + theta * grads1
        return v, grads


def _velocity_batch(sampler, pts, t, constants, threshold, action, v_max):
    """Velocity (B, d) plus node mask from interpolated psi and grad psi."""
    val, grads = sampler.sample(pts, t)
    dens = np.abs(val) ** 2
    node = dens < threshold
    safe = np.where(node, 1.0, val)
    ratios = grads / safe[:, None]
    scale = constants.hbar / np.asarray(constants.masses)
    v = scale[None, :] * np.imag(ratios)
    if action == CAP_SPEED:
        speed = np.sqrt(np.sum(v * v, axis=1))
        over = speed > v_max
        if np.any(over):
            v[over] *= (v_max / speed[over])[:, None]
        node[:] = False
    else:
        v[node] = 0.0
    return v, node


def velocity(psi, q, constants, policy=None):
    """Guidance velocity at one configuration; raises HitNodeError under a
    halting policy when |psi(q)|^2 falls below the node threshold."""
    coords = q.coordinates if isinstance(q, Configuration) else tuple(np.atleast_1d(q))
    _check_inside(psi.grid, coords)
    constants.check_dimension(psi.grid)
    policy = policy or NodePolicy()
    sampler = FieldSampler(psi)
    threshold = policy.resolve(sampler.peak_density)
    pts = np.asarray(coords, dtype=np.float64).reshape(1, -1)
    v, node = _velocity_batch(sampler, pts, None, constants, threshold,
                              policy.action, policy.v_max)
    if node[0]:
        raise HitNodeError(f"density below {threshold:g} at {coords}")
    return [float(c) for c in v[0]]


# --- spinor fields -------------------------------------------------------------


def spinor_velocity(psi, q, constants, policy=None):
    """Velocity from the spinor inner product:
    (hbar/m) Im(up* d up + down* d down) / (|up|^2 + |down|^2)."""
    coords = q.coordinates if isinstance(q, Configuration) else (float(np.atleast_1d(q)[0]),)
    _check_inside(psi.grid, coords)
    policy = policy or NodePolicy()
    pts = np.asarray(coords, dtype=np.float64).reshape(1, 1)
    ax = psi.grid.axes[0]

    def at(arr):
        return interp_cubic_1d(arr, ax.lower, ax.spacing, ax.periodic,
                               np.ascontiguousarray(pts[:, 0]))[0]

    up, down = at(psi.up), at(psi.down)
    dup = at(gradient_array(psi.grid, psi.up, 0))
    ddown = at(gradient_array(psi.grid, psi.down, 0))
    den = abs(up) ** 2 + abs(down) ** 2
    peak = float(np.max(np.abs(psi.up) ** 2 + np.abs(psi.down) ** 2))
    threshold = policy.resolve(peak)
    if den < threshold:
        if policy.action == HALT:
            raise HitNodeError(f"spinor density below {threshold:g}")
        return [0.0]
    num = (np.conj(up) * dup + np.conj(down) * ddown).imag
    v = constants.hbar / constants.masses[0] * num / den
    if policy.action == CAP_SPEED and abs(v) > policy.v_max:
        v = np.sign(v) * policy.v_max
    return [float(v)]


def step_spinor_pauli(psi, b_field, potential, constants, dt, mu=1.0):
    """One Strang step of the two-component evolution with a uniform magnetic
    coupling: local factor = potential phase times the exact 2x2 rotation
    exp(-i mu dt B.sigma / hbar), kinetic factor per component via FFT.
    Requires a periodic 1-d grid."""
    ax = psi.grid.axes[0]
    if not ax.periodic:
        raise ValueError("spinor stepping uses the periodic Fourier kinetic term")
    v = potential.evaluate(psi.grid, constants)
    bx, by, bz = (float(c) for c in b_field)
    bmag = np.sqrt(bx * bx + by * by + bz * bz)

    def local_half(up, down):
        phase = np.exp(-0.5j * dt * v / constants.hbar)
        up, down = phase * up, phase * down
        if bmag == 0.0:
            return up, down
        theta = 0.5 * mu * dt * bmag / constants.hbar
        c, s = np.cos(theta), np.sin(theta)
        nx, ny, nz = bx / bmag, by / bmag, bz / bmag
        u2 = (c - 1j * s * nz) * up + (-1j * s * (nx - 1j * ny)) * down
        d2 = (-1j * s * (nx + 1j * ny)) * up + (c + 1j * s * nz) * down
        return u2, d2

    k = 2.0 * np.pi * np.fft.fftfreq(ax.count, d=ax.spacing)
    kin = np.exp(-1j * dt * constants.hbar * k**2 / (2.0 * constants.masses[0]))
    up, down = local_half(psi.up, psi.down)
    up = np.fft.ifft(kin * np.fft.fft(up))
    down = np.fft.ifft(kin * np.fft.fft(down))
    up, down = local_half(up, down)
    return SpinorWaveFunction(psi.grid, up, down)


# --- trajectory integration ----------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    points: np.ndarray  # (T, d)
    status: str

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        p = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        if np.any(np.diff(t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", p)

    @property
    def final(self):
        return self.points[-1]

    def to_csv(self, path):
        d = self.points.shape[1]
        header = "t,q1" if d == 1 else "t,q1,q2"
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for t, row in zip(self.times, self.points):
                fh.write(",".join(repr(float(v)) for v in (t, *row)) + "\n")
            fh.write(f"status,{self.status}\n")


class FlowResult:
    """Batched integration output: endpoints, status codes, optional paths."""

    def __init__(self, times, points, statuses, stop_index, paths=None):
        self.times = times
        self.points = points          # (B, d) final (frozen) positions
        self.statuses = statuses      # (B,) int codes
        self.stop_index = stop_index  # (B,) step index where each froze
        self.paths = paths            # (T, B, d) when recorded

    def status_names(self):
        return [_STATUS_NAMES[int(s)] for s in self.statuses]

    def count(self, name):
        code = {v: k for k, v in _STATUS_NAMES.items()}[name]
        return int(np.sum(self.statuses == code))


def _inside_mask(grid, pts):
    ok = np.ones(pts.shape[0], dtype=bool)
    for k, ax in enumerate(grid.axes):
        ok &= (pts[:, k] >= ax.lower) & (pts[:, k] <= ax.upper)
    return ok


def _flow_chunk(sampler, pts0, times, constants, threshold, action, v_max,
                store_path):
    b, d = pts0.shape
    q = pts0.copy()
    statuses = np.zeros(b, dtype=np.int8)
    stop = np.full(b, len(times) - 1, dtype=np.int64)
    active = np.ones(b, dtype=bool)
    paths = np.empty((len(times), b, d)) if store_path else None
    if store_path:
        paths[0] = q

    def eval_v(pts, t):
        v, node = _velocity_batch(sampler, pts, t, constants, threshold,
                                  action, v_max)
        oob = ~_inside_mask(sampler.grid, pts)
        return v, node, oob

    for j in range(len(times) - 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            if store_path:
                paths[j + 1] = q
            continue
        t0, t1 = times[j], times[j + 1]
        h = t1 - t0
        qa = q[idx]
        k1, n1, o1 = eval_v(qa, t0)
        k2, n2, o2 = eval_v(qa + 0.5 * h * k1, t0 + 0.5 * h)
        k3, n3, o3 = eval_v(qa + 0.5 * h * k2, t0 + 0.5 * h)
        k4, n4, o4 = eval_v(qa + h * k3, t1)
        node = n1 | n2 | n3 | n4
        oob = (o1 | o2 | o3 | o4) & ~node
        dead = node | oob
        statuses[idx[node]] = 1
        statuses[idx[oob]] = 2
        stop[idx[dead]] = j
        live = idx[~dead]
        qn = qa[~dead] + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)[~dead]
        # landing outside the domain is a grid exit as well
        landed_in = _inside_mask(sampler.grid, qn)
        q[live] = qn
        statuses[live[~landed_in]] = 2
        stop[live[~landed_in]] = j + 1
        active[idx[dead]] = False
        active[live[~landed_in]] = False
        if store_path:
            paths[j + 1] = q
    return FlowResult(times, q, statuses, stop, paths)


def _ode_times(record, dt_ode):
    span = record.t_final - record.t_initial
    n = int(round(span / dt_ode))
    if n <= 0 or abs(n * dt_ode - span) > 1e-9 * max(1.0, span):
        raise ValueError("dt_ode must evenly divide the record span")
    return record.t_initial + dt_ode * np.arange(n + 1)


def integrate_flow(points, record, constants, policy=None, dt_ode=None,
                   store_path=False, threads=1):
    """Integrate a batch of configurations through the record's velocity
    field. Members are split into fixed-size chunks whose results do not
    depend on the worker count."""
    constants.check_dimension(record.grid)
    policy = policy or NodePolicy()
    dt_ode = dt_ode if dt_ode is not None else record.dt
    if record.step_dt * record.stride > dt_ode + 1e-12:
        raise ValueError("snapshot spacing exceeds dt_ode; densify snapshots")
    times = _ode_times(record, dt_ode)
    sampler = RecordSampler(record)
    threshold = policy.resolve(sampler.peak_density)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    chunks = [slice(i, min(i + _CHUNK, pts.shape[0]))
              for i in range(0, pts.shape[0], _CHUNK)]

    def run(sl):
        return _flow_chunk(sampler, pts[sl], times, constants, threshold,
                           policy.action, policy.v_max, store_path)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(sl) for sl in chunks]
    out = FlowResult(
        times,
        np.concatenate([p.points for p in parts]),
        np.concatenate([p.statuses for p in parts]),
        np.concatenate([p.stop_index for p in parts]),
        np.concatenate([p.paths for p in parts], axis=1) if store_path else None,
    )
    return out


def integrate_trajectory(q0, record, constants, policy=None, dt_ode=None):
    """Classical RK4 on the time-dependent guidance field, with the wave
    function linearly interpolated between snapshots. Returns the path and a
    status explaining any early stop (node hit or grid exit)."""
    coords = q0.coordinates if isinstance(q0, Configuration) else tuple(np.atleast_1d(q0))
    if not record.grid.contains(coords):
        raise OutOfBoundsError(f"initial configuration {coords} outside grid")
    res = integrate_flow(np.asarray(coords).reshape(1, -1), record, constants,
                         policy=policy, dt_ode=dt_ode, store_path=True)
    stop = int(res.stop_index[0])
    return Trajectory(res.times[: stop + 1], res.paths[: stop + 1, 0, :],
                      res.status_names()[0])
