"""Periodic lattice boxes, fields, convolution, and Fourier transforms.

All computations live on the discrete torus (Z/MZ)^d with the fundamental
domain centred at the origin: each axis runs over coordinates
-M/2, ..., -1, 0, 1, ..., M/2 - 1 stored in FFT order (0, 1, ..., M/2 - 1,
-M/2, ..., -1).  The Fourier convention is

    fhat(k) = sum_x f(x) exp(+i k.x),   k in (2 pi / M) Z^d,

so that fhat(0) is the plain lattice sum and convolution goes to a pointwise
product without extra factors.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

# Hard cap on sites per box: 2^27 doubles is ~1 GiB, beyond that the FFT
# work arrays exhaust desk machines.
MAX_SITES = 2 ** 27

# convolve_direct is a quadratic-cost reference implementation; refuse to
# run it on boxes where it would take minutes.
DIRECT_CAP = 2 ** 16


class LatticeError(ValueError):
    """Raised for invalid box/field geometry or serialization problems."""


@dataclass(frozen=True)
class Box:
    """A periodic box (Z/MZ)^d with even side M."""

    d: int
    M: int

    @property
    def shape(self):
        return (self.M,) * self.d

    @property
    def n_sites(self):
        return self.M ** self.d

    def axis_coords(self):
        """Signed coordinates along one axis, in FFT storage order."""
        c = np.arange(self.M)
        return np.where(c < self.M // 2, c, c - self.M)

    def coord_grids(self):
        """d arrays of shape `shape` giving the signed coordinate per axis."""
        ax = self.axis_coords()
        return np.meshgrid(*([ax] * self.d), indexing="ij")

    def radius(self):
        """Euclidean |x| on the fundamental domain, shape `shape`."""
        grids = self.coord_grids()
        return np.sqrt(sum(g.astype(float) ** 2 for g in grids))

    def kfreqs(self):
        """d arrays of Fourier frequencies k_j in (-pi, pi], FFT order."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.M)
        # fftfreq puts -pi at index M/2; move it to +pi so the grid is the
        # set of representatives in (-pi, pi] (matters only for reporting).
        k = np.where(np.isclose(k, -np.pi), np.pi, k)
        return np.meshgrid(*([k] * self.d), indexing="ij")

    def index_of(self, x):
        """Flat index of the site with signed coordinates x (length d)."""
        x = np.asarray(x, dtype=int)
        if x.shape != (self.d,):
            raise LatticeError(f"coordinate has shape {x.shape}, expected ({self.d},)")
        idx = np.mod(x, self.M)
        return int(np.ravel_multi_index(tuple(idx), self.shape))


@dataclass
class Field:
    """Scalar field on a Box; values stored in FFT order, row-major."""

    box: Box
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.box.shape:
            raise LatticeError(
                f"values shape {self.values.shape} != box shape {self.box.shape}"
            )

    def copy(self):
        return Field(self.box, self.values.copy())

    def at(self, x):
        """Value at signed coordinate vector x."""
        return self.values.flat[self.box.index_of(x)]

    def total(self):
        """Lattice sum over the whole box."""
        return self.values.sum()


def make_box(d, M):
    """Create a Box, validating geometry and memory budget.

    M must be even and >= 2 so the fundamental domain is symmetric about the
    origin up to the single unpaired coordinate -M/2.
    """
    if d < 1:
        raise LatticeError(f"dimension must be >= 1, got {d}")
    if M < 2 or M % 2 != 0:
        raise LatticeError(f"side M must be even and >= 2, got {M}")
    if M ** d > MAX_SITES:
        raise LatticeError(f"box with {M}^{d} sites exceeds budget {MAX_SITES}")
    return Box(int(d), int(M))


def zero_field(box, dtype=float):
    return Field(box, np.zeros(box.shape, dtype=dtype))


def delta_field(box, amplitude=1.0):
    """Kronecker delta at the origin."""
    f = zero_field(box)
    f.values.flat[0] = amplitude
    return f


def _check_same_box(f, g):
    if f.box != g.box:
        raise LatticeError(f"boxes differ: {f.box} vs {g.box}")


def convolve(f, g):
    """Torus convolution (f*g)(x) = sum_y f(y) g(x-y) via FFT.

    Real inputs use the real-input transform; complex inputs fall back to the
    full complex transform.
    """
    _check_same_box(f, g)
    if np.iscomplexobj(f.values) or np.iscomplexobj(g.values):
        h = scipy.fft.ifftn(scipy.fft.fftn(f.values) * scipy.fft.fftn(g.values))
        return Field(f.box, h)
    fh = scipy.fft.rfftn(f.values)
    gh = scipy.fft.rfftn(g.values)
    h = scipy.fft.irfftn(fh * gh, s=f.box.shape)
    return Field(f.box, h)


def convolve_direct(f, g):
    """Quadratic-cost convolution by explicit index shifts (reference).

    Used as an independent oracle for `convolve`; refuses boxes with more
    than DIRECT_CAP sites.
    """
    _check_same_box(f, g)
    box = f.box
    if box.n_sites > DIRECT_CAP:
        raise LatticeError(
            f"direct convolution capped at {DIRECT_CAP} sites, box has {box.n_sites}"
        )
    out = np.zeros(box.shape, dtype=np.result_type(f.values, g.values))
    fv = f.values
    axes = tuple(range(box.d))
    for flat in range(box.n_sites):
        w = fv.flat[flat]
        if w == 0.0:
            continue
        shift = np.unravel_index(flat, box.shape)
        out += w * np.roll(g.values, shift, axis=axes)
    return Field(box, out)


def fourier(f):
    """Forward transform fhat(k) = sum_x f(x) e^{+ik.x} on the FFT k-grid.

    With the numpy sign convention this is M^d * ifftn.  The zero mode
    fourier(f)[0,...,0] equals f.total().
    """
    vals = scipy.fft.ifftn(np.asarray(f.values, dtype=complex)) * f.box.n_sites
    return Field(f.box, vals)


def inverse_fourier(F):
    """Inverse of `fourier`; returns a real field when the spectrum is
    Hermitian (imaginary part below 1e-10 relative), complex otherwise."""
    vals = scipy.fft.fftn(np.asarray(F.values, dtype=complex)) / F.box.n_sites
    scale = 1.0 + np.abs(vals.real).max()
    if np.abs(vals.imag).max() <= 1e-10 * scale:
        vals = vals.real.copy()
    return Field(F.box, vals)


def reflect(f):
    """Field x -> f(-x) (torus negation)."""
    v = f.values
    for a in range(f.box.d):
        v = np.roll(np.flip(v, axis=a), 1, axis=a)
    return Field(f.box, v.copy())


def symmetrize(f):
    """Project onto even fields: (f(x) + f(-x)) / 2."""
    return Field(f.box, 0.5 * (f.values + reflect(f).values))


def is_symmetric(f, tol=1e-12):
    """True when f is even under x -> -x up to tol * max|f|."""
    dev = np.abs(f.values - reflect(f).values).max()
    return dev <= tol * (1.0 + np.abs(f.values).max())


# ---------------------------------------------------------------------------
# serialization

_MAGIC = b"LRF1"


def save_field(path, f, symmetric=None):
    """Write a real field: header (d, M, symmetry flag), then row-major doubles."""
    if np.iscomplexobj(f.values):
        raise LatticeError("binary field format stores real fields only")
    if symmetric is None:
        symmetric = is_symmetric(f)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<qqq", f.box.d, f.box.M, int(bool(symmetric))))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def load_field(path):
    """Read a field written by save_field; returns (Field, symmetric_flag)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise LatticeError(f"bad magic {magic!r} in {path}")
        d, M, sym = struct.unpack("<qqq", fh.read(24))
        box = make_box(d, M)
        raw = np.frombuffer(fh.read(8 * box.n_sites), dtype="<f8")
        if raw.size != box.n_sites:
            raise LatticeError(f"truncated field file {path}")
    return Field(box, raw.reshape(box.shape).copy()), bool(sym)


def save_field_csv(path, f, comments=()):
    """Write (x_1, ..., x_d, value) rows; '#' comment lines first."""
    if np.iscomplexobj(f.values):
        raise LatticeError("CSV field format stores real fields only")
    box = f.box
    grids = box.coord_grids()
    cols = [g.ravel() for g in grids] + [f.values.ravel()]
    with open(path, "w") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(f"x{a+1}" for a in range(box.d)) + ",value\n")
        for row in zip(*cols):
            coords = ",".join(str(int(c)) for c in row[:-1])
            fh.write(f"{coords},{row[-1]:.17g}\n")


def load_field_csv(path, box):
    """Read a CSV written by save_field_csv back onto the given box."""
    f = zero_field(box)
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("x1"):
                continue
            parts = line.split(",")
            x = [int(p) for p in parts[: box.d]]
            f.values.flat[box.index_of(x)] = float(parts[box.d])
    return f
