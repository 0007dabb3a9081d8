"""Periodic unit-box spectral grids, Fourier calculus, and raw field snapshots.

Conventions, fixed for the whole package:

    * domain is the unit torus [0,1)^dim, grid spacing 1/n, collocation
      points x_j = j/n;
    * physical wavenumbers kappa = 2*pi*k with k the integer FFT lattice;
    * field arrays are real float64, grid axes LAST, component axes first:
      scalar (n, ..), vector (ncomp, n, ..), tensor (dim, dim, n, ..);
    * (grad f)[i, c] = d f_c / d x_i, (div T)_j = d_i T_ij;
    * the dealias mask keeps |k_j| <= floor(n/3) on every axis.  n is a
      power of two, so 3*floor(n/3) <= n - 1 and products of three masked
      fields are evaluated alias-free by the collocation grid sum.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import ParameterError

SNAPSHOT_MAGIC = b"NMFLOW01"
SNAPSHOT_VERSION = 1
_HEADER_FMT = "<8sIIIId"
_HEADER_SIZE = struct.calcsize(_HEADER_FMT)  # 32 bytes


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


class SpectralGrid:
    """Collocation grid with cached wavenumbers, masks, and transform helpers."""

    def __init__(self, dim: int, n: int):
        if dim not in (2, 3):
            raise ParameterError(f"dim must be 2 or 3, got {dim}")
        if not isinstance(n, (int, np.integer)) or n < 8 or not _is_power_of_two(int(n)):
            raise ParameterError(f"n must be a power of two >= 8, got {n}")
        self.dim = int(dim)
        self.n = int(n)
        self.shape = (self.n,) * self.dim
        self.npoints = self.n ** self.dim
        self.band = self.n // 3

        k1 = np.fft.fftfreq(self.n, d=1.0 / self.n)  # integers as floats
        mesh = np.meshgrid(*([k1] * self.dim), indexing="ij")
        self.k = np.stack(mesh)                      # (dim,) + shape, integer lattice
        self.kappa = 2.0 * np.pi * self.k            # physical wavenumbers
        self.ksq = np.sum(self.kappa ** 2, axis=0)
        with np.errstate(divide="ignore"):
            inv = np.where(self.ksq > 0.0, 1.0 / np.where(self.ksq > 0.0, self.ksq, 1.0), 0.0)
        self.inv_ksq = inv                           # zero at the mean mode
        self.dealias_mask = np.all(np.abs(self.k) <= self.band, axis=0)

        # Odd-derivative multipliers zero the unpaired Nyquist mode: k = -n/2
        # has no +n/2 partner, so i*kappa there would break conjugate symmetry
        # and real-to-real differentiation.  Band-limited fields never carry
        # those bins; this only hardens the operators for raw input.
        self.kappa_d = self.kappa.copy()
        for i in range(self.dim):
            self.kappa_d[i][np.abs(self.k[i]) == self.n // 2] = 0.0
        ksq_d = np.sum(self.kappa_d ** 2, axis=0)
        self.inv_ksq_d = np.where(ksq_d > 0.0, 1.0 / np.where(ksq_d > 0.0, ksq_d, 1.0), 0.0)

        self._axes = tuple(range(-self.dim, 0))

    # -- transforms ---------------------------------------------------------

    def fft(self, f: np.ndarray) -> np.ndarray:
        return np.fft.fftn(f, axes=self._axes)

    def ifft(self, fhat: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(fhat, axes=self._axes).real

    def coords(self) -> np.ndarray:
        """Collocation coordinates, shape (dim,) + grid shape."""
        x1 = np.arange(self.n) / self.n
        return np.stack(np.meshgrid(*([x1] * self.dim), indexing="ij"))

    # -- validation ---------------------------------------------------------

    def _check(self, f: np.ndarray, what: str, ncomp_axes: int | None = None):
        f = np.asarray(f)
        if f.shape[-self.dim:] != self.shape:
            raise ParameterError(
                f"{what}: trailing axes {f.shape[-self.dim:]} do not match grid {self.shape}"
            )
        if ncomp_axes is not None and f.ndim != self.dim + ncomp_axes:
            raise ParameterError(
                f"{what}: expected {ncomp_axes} component axes, got shape {f.shape}"
            )
        if not np.isfinite(f).all():
            raise ParameterError(f"{what}: non-finite values in input field")
        return f

    # -- calculus (exact on the retained modes) ------------------------------

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """d/dx_i along a new leading axis: result[i, ...] = d f[...] / d x_i."""
        f = self._check(f, "gradient")
        fhat = self.fft(f)
        dhat = np.stack([1j * self.kappa_d[i] * fhat for i in range(self.dim)])
        return self.ifft(dhat)

    def divergence(self, v: np.ndarray) -> np.ndarray:
        """Scalar d_i v_i for a velocity-like field of shape (dim,) + grid."""
        v = self._check(v, "divergence", ncomp_axes=1)
        if v.shape[0] != self.dim:
            raise ParameterError(f"divergence: expected {self.dim} components, got {v.shape[0]}")
        vhat = self.fft(v)
        out = np.zeros(self.shape, dtype=complex)
        for i in range(self.dim):
            out += 1j * self.kappa_d[i] * vhat[i]
        return self.ifft(out)

    def div_tensor(self, T: np.ndarray) -> np.ndarray:
        """(div T)_j = d_i T_ij for T of shape (dim, dim) + grid."""
        T = self._check(T, "div_tensor", ncomp_axes=2)
        if T.shape[:2] != (self.dim, self.dim):
            raise ParameterError(f"div_tensor: expected leading shape {(self.dim, self.dim)}, got {T.shape[:2]}")
        That = self.fft(T)
        out = np.zeros((self.dim,) + self.shape, dtype=complex)
        for j in range(self.dim):
            for i in range(self.dim):
                out[j] += 1j * self.kappa_d[i] * That[i, j]
        return self.ifft(out)

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        f = self._check(f, "laplacian")
        return self.ifft(-self.ksq * self.fft(f))

    def curl(self, u: np.ndarray) -> np.ndarray:
        """Scalar vorticity d_1 u_2 - d_2 u_1 in 2D, the full curl vector in 3D."""
        u = self._check(u, "curl", ncomp_axes=1)
        if u.shape[0] != self.dim:
            raise ParameterError(f"curl: expected {self.dim} components, got {u.shape[0]}")
        uhat = self.fft(u)
        if self.dim == 2:
            w = 1j * self.kappa_d[0] * uhat[1] - 1j * self.kappa_d[1] * uhat[0]
            return self.ifft(w)
        w = np.empty((3,) + self.shape, dtype=complex)
        w[0] = 1j * self.kappa_d[1] * uhat[2] - 1j * self.kappa_d[2] * uhat[1]
        w[1] = 1j * self.kappa_d[2] * uhat[0] - 1j * self.kappa_d[0] * uhat[2]
        w[2] = 1j * self.kappa_d[0] * uhat[1] - 1j * self.kappa_d[1] * uhat[0]
        return self.ifft(w)

    def leray(self, v: np.ndarray) -> np.ndarray:
        """Project onto divergence-free fields; the mean mode passes through."""
        v = self._check(v, "leray", ncomp_axes=1)
        if v.shape[0] != self.dim:
            raise ParameterError(f"leray: expected {self.dim} components, got {v.shape[0]}")
        vhat = self.fft(v)
        dot = np.zeros(self.shape, dtype=complex)
        for i in range(self.dim):
            dot += self.kappa_d[i] * vhat[i]
        dot *= self.inv_ksq_d
        for i in range(self.dim):
            vhat[i] -= self.kappa_d[i] * dot
        return self.ifft(vhat)

    # -- filters -------------------------------------------------------------

    def dealias(self, f: np.ndarray) -> np.ndarray:
        """Zero every mode with any |k_j| > floor(n/3)."""
        f = self._check(f, "dealias")
        return self.ifft(self.fft(f) * self.dealias_mask)

    def truncate_modes(self, f: np.ndarray, M: int) -> np.ndarray:
        """Zero every mode with max_j |k_j| > M.  Requires 1 <= M <= n/2."""
        if not isinstance(M, (int, np.integer)) or not (1 <= int(M) <= self.n // 2):
            raise ParameterError(f"truncate_modes: M must be an integer in [1, {self.n // 2}], got {M}")
        f = self._check(f, "truncate_modes")
        mask = np.all(np.abs(self.k) <= int(M), axis=0)
        return self.ifft(self.fft(f) * mask)

    def sobolev_filter(self, f: np.ndarray, s: float) -> np.ndarray:
        """Apply the multiplier (1 + |kappa|^2)^(s/2) mode by mode."""
        f = self._check(f, "sobolev_filter")
        return self.ifft((1.0 + self.ksq) ** (0.5 * s) * self.fft(f))

    def sobolev_norm(self, f: np.ndarray, s: float) -> float:
        """|| (1+|kappa|^2)^(s/2) f ||_{L2}; s = 0 is the plain L2 norm."""
        f = self._check(f, "sobolev_norm")
        fhat = self.fft(f)
        w = (1.0 + self.ksq) ** s
        total = float(np.sum(w * (fhat.real ** 2 + fhat.imag ** 2)))
        return float(np.sqrt(total)) / self.npoints

    # -- quadrature (collocation sums on the unit box) ------------------------

    def mean(self, f: np.ndarray) -> float:
        """Grid average of a scalar field == its integral over the unit box."""
        f = self._check(f, "mean", ncomp_axes=0)
        return float(f.mean())

    def l2_inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """<a, b> = mean over the grid of the full component contraction."""
        a = self._check(a, "l2_inner lhs")
        b = self._check(b, "l2_inner rhs")
        if a.shape != b.shape:
            raise ParameterError(f"l2_inner: shape mismatch {a.shape} vs {b.shape}")
        return float(np.sum(a * b)) / self.npoints

    def l2_norm(self, f: np.ndarray) -> float:
        f = self._check(f, "l2_norm")
        return float(np.sqrt(np.sum(f * f) / self.npoints))

    def sup_norm(self, f: np.ndarray) -> float:
        """max over grid points of the pointwise Euclidean (Frobenius) magnitude."""
        f = self._check(f, "sup_norm")
        if f.ndim == self.dim:
            return float(np.abs(f).max())
        mag2 = np.sum(f * f, axis=tuple(range(f.ndim - self.dim)))
        return float(np.sqrt(mag2.max()))

    # -- derived kinematics ----------------------------------------------------

    def strain_rate(self, u: np.ndarray) -> np.ndarray:
        """A = (grad u + grad u^T)/2, shape (dim, dim) + grid."""
        G = self.gradient(u)
        if G.shape[1] != self.dim:
            raise ParameterError(f"strain_rate: expected {self.dim}-component velocity")
        return 0.5 * (G + G.swapaxes(0, 1))

    def vorticity_tensor(self, u: np.ndarray) -> np.ndarray:
        """omega = (grad u - grad u^T)/2, shape (dim, dim) + grid."""
        G = self.gradient(u)
        if G.shape[1] != self.dim:
            raise ParameterError(f"vorticity_tensor: expected {self.dim}-component velocity")
        return 0.5 * (G - G.swapaxes(0, 1))


def random_band_limited(grid: SpectralGrid, ncomp: int, kmax: int, rng: np.random.Generator) -> np.ndarray:
    """Real random field with modes confined to |k_j| <= kmax, unit sup norm.

    Deterministic given the generator state; used by initial-condition presets
    and by randomized tests.
    """
    if not (1 <= kmax <= grid.band):
        raise ParameterError(f"kmax must be in [1, {grid.band}], got {kmax}")
    mask = np.all(np.abs(grid.k) <= kmax, axis=0)
    f = rng.standard_normal((ncomp,) + grid.shape)
    f = grid.ifft(grid.fft(f) * mask)
    peak = np.sqrt(np.sum(f * f, axis=0).max())
    if peak == 0.0:
        raise ParameterError("degenerate random draw, zero field")
    return f / peak


# -- snapshots: raw little-endian float64 with a fixed 32-byte header ----------


def save_snapshot(path, field: np.ndarray, time: float, grid: SpectralGrid) -> None:
    """Write one multi-component field (shape (ncomp,) + grid shape) to disk."""
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != grid.dim + 1 or field.shape[1:] != grid.shape:
        raise ParameterError(
            f"save_snapshot: expected shape (ncomp,) + {grid.shape}, got {field.shape}"
        )
    if not np.isfinite(field).all():
        raise ParameterError("save_snapshot: non-finite values in field")
    header = struct.pack(
        _HEADER_FMT, SNAPSHOT_MAGIC, SNAPSHOT_VERSION,
        grid.dim, grid.n, field.shape[0], float(time),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field).astype("<f8").tobytes())


def read_snapshot_header(path) -> dict:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER_SIZE)
    if len(raw) < _HEADER_SIZE:
        raise ParameterError(f"{path}: truncated snapshot header")
    magic, version, dim, n, ncomp, time = struct.unpack(_HEADER_FMT, raw)
    if magic != SNAPSHOT_MAGIC:
        raise ParameterError(f"{path}: bad magic {magic!r}, not a field snapshot")
    if version != SNAPSHOT_VERSION:
        raise ParameterError(f"{path}: unsupported snapshot version {version}")
    if dim not in (2, 3) or n < 8 or not _is_power_of_two(n) or not (1 <= ncomp <= 9):
        raise ParameterError(f"{path}: implausible header dim={dim} n={n} ncomp={ncomp}")
    return {"dim": dim, "n": n, "ncomp": ncomp, "time": time}


def load_snapshot(path) -> tuple[np.ndarray, float, dict]:
    """Read a snapshot back; returns (field, time, header dict).  Validates
    magic, version, payload size, and finiteness."""
    meta = read_snapshot_header(path)
    dim, n, ncomp = meta["dim"], meta["n"], meta["ncomp"]
    expected = ncomp * n ** dim * 8
    with open(path, "rb") as fh:
        fh.seek(_HEADER_SIZE)
        payload = fh.read()
    if len(payload) != expected:
        raise ParameterError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    field = np.frombuffer(payload, dtype="<f8").reshape((ncomp,) + (n,) * dim).copy()
    if not np.isfinite(field).all():
        raise ParameterError(f"{path}: non-finite values in stored field")
    return field, meta["time"], meta
