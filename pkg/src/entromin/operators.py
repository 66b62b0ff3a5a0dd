"""Matrix-free linear operators and the three measurement families used by
the benchmarks: row-normalized Gaussian matrices, randomized partial DCTs,
and the concatenated db1..db4 tight frame.

Operators are immutable after construction and carry enough metadata to be
serialized to a JSON manifest and rebuilt bit for bit.
"""

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct, idct

from . import wavelets
from .errors import ConfigError, DimensionError


@dataclass(frozen=True)
class RandomSeed:
    """Master seed plus a stream index; equal pairs reproduce equal draws."""
    master: int
    stream: int = 0

    def rng(self, *extra) -> np.random.Generator:
        return np.random.default_rng((self.master, self.stream) + tuple(extra))

    def to_manifest(self):
        return {"master": int(self.master), "stream": int(self.stream)}


def as_seed(seed) -> RandomSeed:
    if isinstance(seed, RandomSeed):
        return seed
    if isinstance(seed, (int, np.integer)):
        return RandomSeed(int(seed))
    raise ConfigError(f"cannot interpret {seed!r} as a random seed")


class LinearOperator:
    """Forward/adjoint pair with declared dimensions.

    apply maps R^cols -> R^rows and adjoint maps R^rows -> R^cols; both are
    exact transposes of each other (the dot test in the suite quantifies
    this at 1e-10).
    """

    kind = "abstract"

    def __init__(self, rows: int, cols: int):
        if rows <= 0 or cols <= 0:
            raise ConfigError(f"operator dims must be positive, got {rows}x{cols}")
        self.rows = int(rows)
        self.cols = int(cols)

    def apply(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.cols,):
            raise DimensionError(
                f"{self.kind} apply expected length {self.cols}, got {v.shape}")
        return self._matvec(v)

    def adjoint(self, u):
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (self.rows,):
            raise DimensionError(
                f"{self.kind} adjoint expected length {self.rows}, got {u.shape}")
        return self._rmatvec(u)

    def _matvec(self, v):
        raise NotImplementedError

    def _rmatvec(self, u):
        raise NotImplementedError

    def to_manifest(self) -> dict:
        raise NotImplementedError

    def materialize(self) -> np.ndarray:
        """Dense matrix via apply on basis vectors (tests and small ops)."""
        cols = np.eye(self.cols)
        return np.column_stack([self._matvec(cols[:, j]) for j in range(self.cols)])


class Identity(LinearOperator):
    kind = "identity"

    def __init__(self, n: int):
        super().__init__(n, n)

    def _matvec(self, v):
        return v.copy()

    def _rmatvec(self, u):
        return u.copy()

    def to_manifest(self):
        return {"kind": "identity", "n": self.cols}


class DenseOperator(LinearOperator):
    kind = "dense"

    def __init__(self, matrix, manifest=None):
        matrix = np.array(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ConfigError("dense operator needs a 2-D matrix")
        super().__init__(matrix.shape[0], matrix.shape[1])
        matrix.setflags(write=False)
        self.matrix = matrix
        self._manifest = manifest

    def _matvec(self, v):
        return self.matrix @ v

    def _rmatvec(self, u):
        return self.matrix.T @ u

    def to_manifest(self):
        if self._manifest is not None:
            return dict(self._manifest)
        return {"kind": "dense", "rows": self.rows, "cols": self.cols,
                "entries": self.matrix.ravel().tolist()}


class SRMOperator(LinearOperator):
    """Subsampled orthonormal DCT of a permuted, sign-flipped signal.

    Forward: scramble (permute + flip signs), orthonormal DCT-II, then keep
    a without-replacement row subset.  Rows are exactly orthonormal, so the
    Gram UU' is the identity.
    """

    kind = "srm"

    def __init__(self, rows, cols, perm, signs, selected, manifest=None):
        super().__init__(rows, cols)
        self.perm = np.asarray(perm, dtype=np.intp)
        self.signs = np.asarray(signs, dtype=np.float64)
        self.selected = np.asarray(selected, dtype=np.intp)
        for arr in (self.perm, self.signs, self.selected):
            arr.setflags(write=False)
        self._manifest = manifest

    def _matvec(self, v):
        scrambled = self.signs * v[self.perm]
        return dct(scrambled, type=2, norm="ortho")[self.selected]

    def _rmatvec(self, u):
        full = np.zeros(self.cols)
        full[self.selected] = u
        back = idct(full, type=2, norm="ortho")
        out = np.zeros(self.cols)
        out[self.perm] = self.signs * back
        return out

    def to_manifest(self):
        if self._manifest is not None:
            return dict(self._manifest)
        return {"kind": "srm", "rows": self.rows, "cols": self.cols,
                "perm": self.perm.tolist(), "signs": self.signs.tolist(),
                "selected": self.selected.tolist()}


class WaveletFrameOperator(LinearOperator):
    """Equal-weight concatenation of four orthonormal wavelet bases.

    apply synthesizes a side*side image from 4*side^2 coefficients (the
    half-weighted sum of the four per-basis syntheses); adjoint analyzes.
    Since each basis is orthonormal and the squared weights sum to one, the
    frame satisfies V V' = I.
    """

    kind = "wavelet_frame"

    def __init__(self, side: int, levels: int):
        if side < 8 or side & (side - 1):
            raise ConfigError(f"side must be a power of two >= 8, got {side}")
        if not 1 <= levels <= wavelets.max_levels(side):
            raise ConfigError(
                f"levels must be in 1..{wavelets.max_levels(side)} for side {side}")
        super().__init__(side * side, 4 * side * side)
        self.side = side
        self.levels = levels
        banks = []
        for order in (1, 2, 3, 4):
            h = wavelets.daubechies_taps(order)
            banks.append((h, wavelets.qmf(h)))
        self.banks = tuple(banks)

    def _matvec(self, v):
        npix = self.side * self.side
        img = np.zeros((self.side, self.side))
        for k, (h, g) in enumerate(self.banks):
            coef = v[k * npix:(k + 1) * npix].reshape(self.side, self.side)
            img += 0.5 * wavelets.idwt2(coef, h, g, self.levels)
        return img.ravel()

    def _rmatvec(self, u):
        img = u.reshape(self.side, self.side)
        parts = [0.5 * wavelets.dwt2(img, h, g, self.levels).ravel()
                 for h, g in self.banks]
        return np.concatenate(parts)

    def to_manifest(self):
        return {"kind": "wavelet_frame", "side": self.side, "levels": self.levels}


class CompositionOperator(LinearOperator):
    """Left-to-right product: apply(v) runs the last operator first."""

    kind = "composition"

    def __init__(self, ops):
        ops = tuple(ops)
        if not ops:
            raise ConfigError("composition needs at least one operator")
        for left, right in zip(ops, ops[1:]):
            if left.cols != right.rows:
                raise DimensionError(
                    f"composition mismatch: {left.kind}({left.rows}x{left.cols}) "
                    f"cannot follow {right.kind}({right.rows}x{right.cols})")
        super().__init__(ops[0].rows, ops[-1].cols)
        self.ops = ops

    def _matvec(self, v):
        for op in reversed(self.ops):
            v = op.apply(v)
        return v

    def _rmatvec(self, u):
        for op in self.ops:
            u = op.adjoint(u)
        return u

    def to_manifest(self):
        return {"kind": "composition", "ops": [op.to_manifest() for op in self.ops]}


def make_gaussian(rows: int, cols: int, seed) -> DenseOperator:
    """i.i.d. standard normal entries; each row is mean-centered and then
    scaled to unit l2 norm."""
    if rows > cols:
        raise ConfigError(
            f"expected an underdetermined system (rows <= cols), got {rows}x{cols}")
    seed = as_seed(seed)
    A = seed.rng().normal(size=(rows, cols))
    A -= A.mean(axis=1, keepdims=True)
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    manifest = {"kind": "gaussian", "rows": rows, "cols": cols,
                "seed": seed.to_manifest()}
    return DenseOperator(A, manifest=manifest)


def make_srm(rows: int, cols: int, seed) -> SRMOperator:
    if rows > cols:
        raise ConfigError(
            f"expected an underdetermined system (rows <= cols), got {rows}x{cols}")
    seed = as_seed(seed)
    rng = seed.rng()
    perm = rng.permutation(cols)
    signs = rng.integers(0, 2, size=cols) * 2.0 - 1.0
    selected = rng.choice(cols, size=rows, replace=False)
    manifest = {"kind": "srm", "rows": rows, "cols": cols,
                "seed": seed.to_manifest()}
    return SRMOperator(rows, cols, perm, signs, selected, manifest=manifest)


def make_wavelet_frame(side: int, levels: int | None = None) -> WaveletFrameOperator:
    if levels is None:
        levels = 4 if side >= 256 else wavelets.max_levels(side)
    return WaveletFrameOperator(side, levels)


def operator_from_manifest(manifest: dict) -> LinearOperator:
    """Rebuild an operator bit for bit from its JSON manifest."""
    try:
        kind = manifest["kind"]
    except (TypeError, KeyError):
        raise ConfigError("operator manifest needs a 'kind' field") from None
    if kind == "identity":
        return Identity(manifest["n"])
    if kind == "dense":
        entries = np.asarray(manifest["entries"], dtype=np.float64)
        return DenseOperator(entries.reshape(manifest["rows"], manifest["cols"]))
    if kind == "gaussian":
        return make_gaussian(manifest["rows"], manifest["cols"],
                             RandomSeed(**manifest["seed"]))
    if kind == "srm":
        if "seed" in manifest:
            return make_srm(manifest["rows"], manifest["cols"],
                            RandomSeed(**manifest["seed"]))
        return SRMOperator(manifest["rows"], manifest["cols"], manifest["perm"],
                           manifest["signs"], manifest["selected"])
    if kind == "wavelet_frame":
        return WaveletFrameOperator(manifest["side"], manifest["levels"])
    if kind == "composition":
        return CompositionOperator(
            [operator_from_manifest(m) for m in manifest["ops"]])
    raise ConfigError(f"unknown operator kind {kind!r}")


def read_pgm(path) -> np.ndarray:
    """Binary 8-bit grayscale PGM (P5) reader; returns a uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    i = 0
    while len(tokens) < 4:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i:i + 1].isspace():
            i += 1
        tokens.append(data[start:i])
    if tokens[0] != b"P5":
        raise ConfigError(f"{path}: not a binary PGM (P5) file")
    width, height, maxval = (int(t) for t in tokens[1:4])
    if maxval != 255:
        raise ConfigError(f"{path}: only 8-bit PGM supported, maxval={maxval}")
    i += 1  # single whitespace byte after the header
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=i)
    return pixels.reshape(height, width).copy()


def write_pgm(path, img) -> None:
    img = np.asarray(img)
    if img.ndim != 2:
        raise ConfigError("PGM writer expects a 2-D image")
    img = np.clip(np.round(img), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())
