"""Image-set ingestion and the dictionary-vs-PCA reconstruction comparison.

Images arrive in IDX binary files (big-endian: magic 0x00000803, then image
count, height and width as 4-byte fields, then one unsigned byte per pixel).
Loaded pixels are scaled by 1/255 into [0, 1].  Dictionaries are learned by
running the data solver directly on the vectorized image matrix, without
centering or whitening; the PCA baseline uses the standard centered
definition.  That asymmetry is deliberate and documented: the learned
dictionary sees raw image energy, PCA sees variance around the mean.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagicError,
    DimensionOverflowError,
    InvalidParameterError,
    RankDeficientError,
    TruncatedFileError,
    ZeroVarianceError,
)
from .linalg import as_matrix, svd
from .model import DEFAULT_SEED, gen_haar_orthogonal, make_rng
from .solver import SolveConfig, msp_dl

IDX_IMAGE_MAGIC = 0x00000803

# Refuse headers promising more than this many pixels (corrupt or hostile files).
MAX_PIXELS = 1 << 40


@dataclass(frozen=True)
class ImageSet:
    """A stack of equally sized grayscale images.

    ``pixels`` has shape (count, height, width).  The vectorized view packs
    each image into a column of an (height*width)-by-count matrix, the data
    layout the solver consumes.
    """

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.float64)
        if p.ndim != 3 or min(p.shape) < 1:
            raise InvalidParameterError(f"pixels must be (count, height, width), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise InvalidParameterError("pixels contain NaN or Inf")
        object.__setattr__(self, "pixels", p)

    @property
    def count(self) -> int:
        return self.pixels.shape[0]

    @property
    def height(self) -> int:
        return self.pixels.shape[1]

    @property
    def width(self) -> int:
        return self.pixels.shape[2]

    @property
    def n(self) -> int:
        return self.height * self.width

    def matrix(self) -> np.ndarray:
        """Vectorized view: one image per column, shape (n, count)."""
        return self.pixels.reshape(self.count, self.n).T.copy()

    @staticmethod
    def from_matrix(m, height: int, width: int) -> "ImageSet":
        m = as_matrix(m)
        if m.shape[0] != height * width:
            raise InvalidParameterError(
                f"matrix has {m.shape[0]} rows, expected {height}*{width}"
            )
        return ImageSet(pixels=m.T.reshape(m.shape[1], height, width))


def load_idx_images(path) -> ImageSet:
    """Parse an IDX image file; pixel bytes are scaled by 1/255."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise TruncatedFileError(f"{path}: file shorter than the magic number")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != IDX_IMAGE_MAGIC:
        raise BadMagicError(f"{path}: magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}")
    if len(raw) < 16:
        raise TruncatedFileError(f"{path}: header truncated ({len(raw)} bytes)")
    count, height, width = struct.unpack(">III", raw[4:16])
    if min(count, height, width) < 1 or count * height * width > MAX_PIXELS:
        raise DimensionOverflowError(f"{path}: implausible dimensions {count}x{height}x{width}")
    total = count * height * width
    payload = raw[16:]
    if len(payload) < total:
        raise TruncatedFileError(f"{path}: expected {total} pixel bytes, found {len(payload)}")
    pixels = np.frombuffer(payload[:total], dtype=np.uint8).astype(np.float64) / 255.0
    return ImageSet(pixels=pixels.reshape(count, height, width))


def save_idx_images(path, images: ImageSet) -> None:
    """Write an ImageSet back to IDX, re-quantizing pixels to bytes.

    Round-trips byte-exactly with :func:`load_idx_images` for sets that came
    from an IDX file.
    """
    quantized = np.clip(np.rint(images.pixels * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, images.count, images.height, images.width))
        fh.write(quantized.tobytes())


def learn_image_dictionary(
    images: ImageSet, cfg: SolveConfig = SolveConfig(max_iters=60), seed: int = DEFAULT_SEED
) -> np.ndarray:
    """Learn an orthogonal analysis operator from raw vectorized images.

    Runs the data solver on the (n, count) matrix from a seeded Haar start,
    with no centering or whitening.  Returns the final estimate A whose rows
    are the learned analysis directions; the dictionary of basis images is
    its transpose.
    """
    y = images.matrix()
    n, p = y.shape
    if p < n:
        raise RankDeficientError(f"need at least n={n} images, got {p}")
    a0 = gen_haar_orthogonal(n, make_rng(seed))
    trace = msp_dl(a0, y, None, cfg)
    return trace.final


def pca_basis(images: ImageSet, k: int) -> np.ndarray:
    """Top-k left singular vectors of the mean-centered image matrix."""
    y = images.matrix()
    n = y.shape[0]
    if not (1 <= k <= n):
        raise InvalidParameterError(f"k must lie in [1, {n}], got {k}")
    centered = y - y.mean(axis=1, keepdims=True)
    norm = float(np.linalg.norm(centered))
    if norm <= 1e-12 * max(1.0, float(np.linalg.norm(y))):
        raise ZeroVarianceError("all images are identical after centering")
    u, _, _ = svd(centered)
    return u[:, :k]


def reconstruct_topk(
    images: ImageSet, basis, k: int, ranking: str = "energy"
) -> tuple[np.ndarray, np.ndarray]:
    """Project images onto the k most energetic basis vectors and reconstruct.

    ``basis`` has orthonormal columns (a learned dictionary transposed, or a
    PCA basis).  With ``ranking="energy"`` columns are ordered by their mean
    squared coefficient over the dataset before truncation, so different k
    select nested subsets; ``ranking="given"`` keeps the column order as is.
    Reconstruction is the plain linear projection, with no mean restoration
    for either basis type.

    Returns ``(reconstructions, per_image_mse)`` where reconstructions has
    the pixel layout of the input and the MSE is averaged per pixel.
    """
    basis = as_matrix(basis)
    y = images.matrix()
    n = y.shape[0]
    if basis.shape[0] != n:
        raise InvalidParameterError(f"basis rows {basis.shape[0]} do not match image size {n}")
    if not (1 <= k <= basis.shape[1]):
        raise InvalidParameterError(f"k must lie in [1, {basis.shape[1]}], got {k}")
    if ranking not in ("energy", "given"):
        raise InvalidParameterError(f"ranking must be 'energy' or 'given', got {ranking!r}")
    coeffs = basis.T @ y
    if ranking == "energy":
        energy = (coeffs**2).mean(axis=1)
        order = np.argsort(energy, kind="stable")[::-1]
    else:
        order = np.arange(basis.shape[1])
    keep = order[:k]
    recon = basis[:, keep] @ coeffs[keep]
    per_image_mse = ((y - recon) ** 2).mean(axis=0)
    reconstructions = recon.T.reshape(images.count, images.height, images.width)
    return reconstructions, per_image_mse
