"""Spectral machinery: eigendecomposition, GFT, bandlimited subspaces.

The low-pass filter is always the ideal projector onto the span of the
first r Laplacian eigenvectors.  It is carried in compact form: an r x N
matrix whose i-th column is the i-th coordinate vector of the projector
column, so downstream algorithms work in R^r instead of R^N.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from gnsquant.rng import Xoshiro256StarStar

MAGIC = b"GNSQEIG1"


class EigendecompositionError(RuntimeError):
    """Eigendecomposition failed to meet its residual tolerances."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SpectralBasis:
    """Orthogonal eigendecomposition of a symmetric matrix.

    Eigenvalues ascend; each eigenvector's largest-magnitude entry is
    positive (first such entry on ties), which pins the sign convention.
    """

    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True)
class BandlimitedFilter:
    """Compact form of the projector low-pass filter for bandwidth r.

    ``rows`` is the r x N matrix of first-r eigenvector coordinates per
    vertex (column i is the compact filter column for vertex i).
    ``degenerate_crossing`` flags an ambiguous subspace: the eigenvalues at
    positions r and r+1 agree within tolerance, so the subspace depends on
    the solver's basis choice inside the eigenspace.
    """

    r: int
    rows: np.ndarray = field(repr=False)
    column_sq_norms: np.ndarray = field(repr=False)
    degenerate_crossing: bool = False

    @property
    def n(self) -> int:
        return self.rows.shape[1]

    @classmethod
    def from_rows(cls, r: int, rows: np.ndarray, degenerate_crossing: bool = False):
        rows = np.asarray(rows, dtype=float)
        return cls(
            r=r,
            rows=rows,
            column_sq_norms=np.einsum("ij,ij->j", rows, rows),
            degenerate_crossing=degenerate_crossing,
        )


@dataclass(frozen=True)
class Incoherence:
    """Upper/lower incoherence of a bandlimited subspace.

    mu = (N/r) max_i ||P e_i||^2 lies in [1, N/r]; nu uses the min and
    satisfies nu <= 1 <= mu.
    """

    mu: float
    nu: float
    argmax_vertex: int
    argmin_vertex: int


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Make each column's largest-|entry| positive; first index wins ties."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        pivot = int(np.argmax(np.abs(col)))
        if col[pivot] < 0:
            out[:, j] = -col
    return out


def eigendecompose(m: np.ndarray, tol: float = 1e-9) -> SpectralBasis:
    """Full symmetric eigendecomposition with validated residuals.

    Raises :class:`EigendecompositionError` when the orthogonality residual
    exceeds `tol` or the reconstruction residual exceeds
    ``10 * tol * max(1, ||m||_max)``.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if not np.allclose(m, m.T, atol=tol):
        raise ValueError("matrix must be symmetric")
    if tol < np.finfo(float).eps:
        raise ValueError(f"tol {tol} below machine epsilon scale")
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise EigendecompositionError(f"eigensolver did not converge: {exc}", float("nan"))
    eigenvectors = _fix_signs(eigenvectors)

    ortho = float(np.max(np.abs(eigenvectors.T @ eigenvectors - np.eye(m.shape[0]))))
    if ortho > tol:
        raise EigendecompositionError("eigenvector orthogonality check failed", ortho)
    recon = float(np.max(np.abs(m - (eigenvectors * eigenvalues) @ eigenvectors.T)))
    scale = max(1.0, float(np.max(np.abs(m))))
    if recon > 10.0 * tol * scale:
        raise EigendecompositionError("eigendecomposition reconstruction check failed", recon)
    return SpectralBasis(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def gft(basis: SpectralBasis, f: np.ndarray) -> np.ndarray:
    """Graph Fourier transform X^T f."""
    f = np.asarray(f, dtype=float)
    if f.shape != (basis.n,):
        raise ValueError(f"signal length {f.shape} does not match N={basis.n}")
    return basis.eigenvectors.T @ f


def igft(basis: SpectralBasis, fhat: np.ndarray) -> np.ndarray:
    """Inverse graph Fourier transform X fhat."""
    fhat = np.asarray(fhat, dtype=float)
    if fhat.shape != (basis.n,):
        raise ValueError(f"spectrum length {fhat.shape} does not match N={basis.n}")
    return basis.eigenvectors @ fhat


def bandlimited_filter(basis: SpectralBasis, r: int, tol: float = 1e-9) -> BandlimitedFilter:
    """Compact projector filter onto the first r eigenvectors."""
    if not 1 <= r <= basis.n:
        raise ValueError(f"bandwidth r={r} out of range [1, {basis.n}]")
    degenerate = bool(
        r < basis.n and abs(basis.eigenvalues[r] - basis.eigenvalues[r - 1]) <= tol
    )
    rows = basis.eigenvectors[:, :r].T.copy()
    return BandlimitedFilter.from_rows(r=r, rows=rows, degenerate_crossing=degenerate)


def incoherence(filt: BandlimitedFilter, n: int | None = None) -> Incoherence:
    """Incoherence of the bandlimited subspace from the compact filter."""
    if n is None:
        n = filt.n
    norms = filt.column_sq_norms
    hi = int(np.argmax(norms))
    lo = int(np.argmin(norms))
    scale = n / filt.r
    return Incoherence(
        mu=float(scale * norms[hi]),
        nu=float(scale * norms[lo]),
        argmax_vertex=hi,
        argmin_vertex=lo,
    )


def synthesize_bandlimited(
    filt: BandlimitedFilter,
    alpha: np.ndarray | None = None,
    seed: int | None = None,
) -> np.ndarray:
    """Bandlimited signal X_r alpha normalized to unit infinity norm.

    With ``alpha=None`` the coefficients are drawn i.i.d. standard normal
    from the seeded generator; an explicit all-zero alpha is rejected.
    """
    if alpha is None:
        if seed is None:
            raise ValueError("either alpha or seed must be provided")
        rng = Xoshiro256StarStar(seed)
        alpha = np.array(rng.normals(filt.r))
    else:
        alpha = np.asarray(alpha, dtype=float)
        if alpha.shape != (filt.r,):
            raise ValueError(f"alpha must have length r={filt.r}, got {alpha.shape}")
        if not np.any(alpha):
            raise ValueError("alpha must not be all zero")
    f = filt.rows.T @ alpha
    peak = float(np.max(np.abs(f)))
    if peak == 0.0:
        raise ValueError("synthesized signal is identically zero")
    return f / peak


def apply_lowpass(filt: BandlimitedFilter, v: np.ndarray) -> np.ndarray:
    """Project a signal onto the bandlimited subspace: X_r (X_r^T v)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (filt.n,):
        raise ValueError(f"signal length {v.shape} does not match N={filt.n}")
    return filt.rows.T @ (filt.rows @ v)


def laplacian_hash(m: np.ndarray) -> str:
    """Content hash of a dense symmetric matrix, used as a cache key."""
    m = np.ascontiguousarray(m, dtype=float)
    digest = hashlib.sha256()
    digest.update(struct.pack("<Q", m.shape[0]))
    digest.update(m.tobytes())
    return digest.hexdigest()


def save_basis(basis: SpectralBasis, path) -> None:
    """Write a basis sidecar: magic, N, r, eigenvalues, row-major eigenvectors.

    All integers and floats are little-endian 64-bit.
    """
    n = basis.n
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQ", n, n))
        fh.write(basis.eigenvalues.astype("<f8").tobytes())
        fh.write(np.ascontiguousarray(basis.eigenvectors, dtype="<f8").tobytes())


def load_basis(path) -> SpectralBasis:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        n, r = struct.unpack("<QQ", fh.read(16))
        eigenvalues = np.frombuffer(fh.read(8 * r), dtype="<f8").copy()
        eigenvectors = (
            np.frombuffer(fh.read(8 * n * r), dtype="<f8").reshape(n, r).copy()
        )
    return SpectralBasis(eigenvalues=eigenvalues, eigenvectors=eigenvectors)
