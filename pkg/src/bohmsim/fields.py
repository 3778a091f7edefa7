"""Complex wave-function fields on a grid: norms, densities, derivatives,
probability currents, and the binary/CSV serialization of fields."""

import io
import struct
from dataclasses import dataclass

import numpy as np

from .grids import BOXED, PERIODIC, Axis, Grid, PhysicalConstants

NORM_TOL = 1e-9


def _require_finite(arr, what):
    if not np.all(np.isfinite(arr.view(np.float64))):
        raise ValueError(f"{what} contains NaN or Inf")


@dataclass(frozen=True)
class ScalarWaveFunction:
    grid: Grid
    amplitudes: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != self.grid.shape:
            raise ValueError(f"amplitudes {amps.shape} vs grid {self.grid.shape}")
        _require_finite(amps, "wave function")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        if self.normalized and abs(norm(self) - 1.0) >= NORM_TOL:
            raise ValueError("normalized flag set but norm deviates from 1")

    @classmethod
    def from_callable(cls, grid, fn, normalize=False):
        """Sample fn(x) or fn(x, y) on the grid."""
        psi = cls(grid, np.asarray(fn(*grid.meshgrid()), dtype=np.complex128))
        return psi.normalize() if normalize else psi

    def normalize(self):
        n = norm(self)
        if n <= 0:
            raise ValueError("cannot normalize a zero field")
        return ScalarWaveFunction(self.grid, self.amplitudes / n, normalized=True)

    def with_amplitudes(self, amps, normalized=False):
        return ScalarWaveFunction(self.grid, amps, normalized=normalized)


@dataclass(frozen=True)
class SpinorWaveFunction:
    """Two-component field on a 1-d grid."""

    grid: Grid
    up: np.ndarray
    down: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        if self.grid.dimension != 1:
            raise ValueError("spinor fields live on 1-d grids")
        for name in ("up", "down"):
            comp = np.ascontiguousarray(getattr(self, name), dtype=np.complex128)
            if comp.shape != self.grid.shape:
                raise ValueError(f"{name} component shape mismatch")
            _require_finite(comp, f"spinor {name} component")
            comp.flags.writeable = False
            object.__setattr__(self, name, comp)
        if self.normalized and abs(self.joint_norm() - 1.0) >= NORM_TOL:
            raise ValueError("normalized flag set but joint norm deviates from 1")

    def joint_norm(self):
        w = self.grid.quadrature_weights()
        total = np.sum(w * (np.abs(self.up) ** 2 + np.abs(self.down) ** 2))
        return float(np.sqrt(total))

    def normalize(self):
        n = self.joint_norm()
        return SpinorWaveFunction(self.grid, self.up / n, self.down / n,
                                  normalized=True)

    def densities(self):
        return np.abs(self.up) ** 2, np.abs(self.down) ** 2


@dataclass(frozen=True)
class CurrentField:
    grid: Grid
    components: tuple

    def __post_init__(self):
        comps = tuple(np.asarray(c, dtype=np.float64) for c in self.components)
        for c in comps:
            if c.shape != self.grid.shape:
                raise ValueError("current component shape mismatch")
            _require_finite(c, "current")
        object.__setattr__(self, "components", comps)


def norm(psi):
    """L2 norm of the field under the grid quadrature rule."""
    w = psi.grid.quadrature_weights()
    return float(np.sqrt(np.sum(w * np.abs(psi.amplitudes) ** 2)))


def density(psi):
    """Pointwise |psi|^2 (integrates to norm^2)."""
    return np.abs(psi.amplitudes) ** 2


def _spectral_derivative(arr, h, axis):
    n = arr.shape[axis]
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    if n % 2 == 0:
        k[n // 2] = 0.0  # drop the unpaired Nyquist mode
    shape = [1] * arr.ndim
    shape[axis] = n
    ft = np.fft.fft(arr, axis=axis)
    return np.fft.ifft(1j * k.reshape(shape) * ft, axis=axis)


# One-sided 4th-order edge stencils (numerator coefficients over 12 h).
_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0])
_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0])


def _fd4_derivative(arr, h, axis):
    a = np.moveaxis(arr, axis, 0)
    out = np.empty_like(a)
    out[2:-2] = (a[:-4] - 8.0 * a[1:-3] + 8.0 * a[3:-1] - a[4:]) / (12.0 * h)
    out[0] = np.tensordot(_EDGE0, a[:5], axes=(0, 0)) / (12.0 * h)
    out[1] = np.tensordot(_EDGE1, a[:5], axes=(0, 0)) / (12.0 * h)
    out[-1] = -np.tensordot(_EDGE0, a[::-1][:5], axes=(0, 0)) / (12.0 * h)
    out[-2] = -np.tensordot(_EDGE1, a[::-1][:5], axes=(0, 0)) / (12.0 * h)
    return np.moveaxis(out, 0, axis)


def gradient(psi, axis):
    """d psi / d q_axis: spectral on periodic axes, 4th-order finite
    differences with one-sided closure on boxed axes."""
    if axis >= psi.grid.dimension:
        raise ValueError("axis out of range")
    ax = psi.grid.axes[axis]
    if ax.periodic:
        return _spectral_derivative(psi.amplitudes, ax.spacing, axis)
    return _fd4_derivative(psi.amplitudes, ax.spacing, axis)


def gradient_array(grid, amplitudes, axis):
    """gradient() for a bare array already living on grid."""
    ax = grid.axes[axis]
    if ax.periodic:
        return _spectral_derivative(amplitudes, ax.spacing, axis)
    return _fd4_derivative(amplitudes, ax.spacing, axis)


def probability_current(psi, constants):
    """Per-axis current (hbar/m_k) Im(conj(psi) d_k psi)."""
    constants.check_dimension(psi.grid)
    comps = []
    for k in range(psi.grid.dimension):
        g = gradient(psi, k)
        comps.append(
            (constants.hbar / constants.masses[k])
            * np.imag(np.conj(psi.amplitudes) * g)
        )
    return CurrentField(psi.grid, tuple(comps))


def divergence(current):
    """Divergence of a CurrentField using the module derivative stencils."""
    out = np.zeros(current.grid.shape)
    for k, comp in enumerate(current.components):
        out += np.real(gradient_array(current.grid, comp.astype(np.complex128), k))
    return out


# --- serialization -----------------------------------------------------------

_MAGIC = b"BWF1"
_FLAGS = {BOXED: 0, PERIODIC: 1}
_FLAG_NAMES = {v: k for k, v in _FLAGS.items()}


def write_wavefunction(psi, constants, path_or_stream):
    """Binary container: header (dimension, axes, constants) followed by
    little-endian float64 interleaved (re, im) amplitudes in C order."""
    close = False
    if isinstance(path_or_stream, (str, bytes)) or hasattr(path_or_stream, "__fspath__"):
        stream = open(path_or_stream, "wb")
        close = True
    else:
        stream = path_or_stream
    try:
        stream.write(_MAGIC)
        stream.write(struct.pack("<B", psi.grid.dimension))
        for ax in psi.grid.axes:
            stream.write(struct.pack("<dQdB", ax.lower, ax.count, ax.spacing,
                                     _FLAGS[ax.boundary]))
        stream.write(struct.pack("<dB", constants.hbar, len(constants.masses)))
        for m in constants.masses:
            stream.write(struct.pack("<d", m))
        stream.write(struct.pack("<B", 1 if psi.normalized else 0))
        interleaved = np.empty(psi.amplitudes.size * 2, dtype="<f8")
        interleaved[0::2] = psi.amplitudes.real.ravel()
        interleaved[1::2] = psi.amplitudes.imag.ravel()
        stream.write(interleaved.tobytes())
    finally:
        if close:
            stream.close()


def read_wavefunction(path_or_stream):
    """Inverse of write_wavefunction; returns (ScalarWaveFunction, constants)."""
    close = False
    if isinstance(path_or_stream, (str, bytes)) or hasattr(path_or_stream, "__fspath__"):
        stream = open(path_or_stream, "rb")
        close = True
    else:
        stream = path_or_stream
    try:
        if stream.read(4) != _MAGIC:
            raise ValueError("not a wave-function container")
        (dim,) = struct.unpack("<B", stream.read(1))
        axes = []
        for _ in range(dim):
            lower, count, spacing, flag = struct.unpack("<dQdB", stream.read(25))
            axes.append(Axis(lower, count, spacing, _FLAG_NAMES[flag]))
        hbar, nm = struct.unpack("<dB", stream.read(9))
        masses = struct.unpack(f"<{nm}d", stream.read(8 * nm))
        (normalized,) = struct.unpack("<B", stream.read(1))
        grid = Grid(axes=tuple(axes))
        raw = np.frombuffer(stream.read(grid.total_points * 16), dtype="<f8")
        amps = (raw[0::2] + 1j * raw[1::2]).reshape(grid.shape)
        psi = ScalarWaveFunction(grid, amps, normalized=bool(normalized))
        return psi, PhysicalConstants(hbar=hbar, masses=masses)
    finally:
        if close:
            stream.close()


def wavefunction_to_csv(psi, path):
    """Plot-ready CSV: x[,y], re, im — one row per grid point (C order)."""
    coords = psi.grid.meshgrid()
    cols = [c.ravel() for c in coords]
    cols += [psi.amplitudes.real.ravel(), psi.amplitudes.imag.ravel()]
    header = ("x,re,im" if psi.grid.dimension == 1 else "x,y,re,im")
    data = np.column_stack(cols)
    np.savetxt(path, data, delimiter=",", header=header, comments="")


def roundtrip_bytes(psi, constants):
    buf = io.BytesIO()
    write_wavefunction(psi, constants, buf)
    return buf.getvalue()
