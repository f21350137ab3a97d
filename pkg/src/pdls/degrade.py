"""Forward measurement models y = A x + n.

Linear operators (Gaussian blur, motion blur, block-average downsampling,
freeform masking) plus an additive Gaussian noise model. Convolutions use
reflect padding so constant images are preserved exactly; kernels are
normalized to unit sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve as _ndi_convolve


@dataclass(frozen=True)
class ImageGrid:
    """Row-major grayscale image with intensities clamped into [0, 1]."""

    pixels: np.ndarray  # (height, width)

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=float)
        if px.ndim != 2:
            raise ValueError("image must be 2-D")
        object.__setattr__(self, "pixels", np.clip(px, 0.0, 1.0))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def flatten(self) -> np.ndarray:
        return self.pixels.ravel().copy()

    @classmethod
    def from_vector(cls, vec, height: int, width: int) -> "ImageGrid":
        vec = np.asarray(vec, dtype=float)
        if vec.size != height * width:
            raise ValueError("vector length does not match image dimensions")
        return cls(vec.reshape(height, width))


@dataclass(frozen=True)
class NoiseModel:
    sigma_y: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_y < 0:
            raise ValueError("sigma_y must be non-negative")


def gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    """Separable Gaussian kernel sampled at pixel centers, normalized to sum 1."""
    if size % 2 == 0:
        raise ValueError("kernel size must be odd")
    if size == 1:
        return np.array([[1.0]])
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    r = np.arange(size) - (size - 1) / 2
    g = np.exp(-(r**2) / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


def motion_kernel(size: int, intensity: float, angle: float = 45.0) -> np.ndarray:
    """Line-segment kernel: length max(1, round(intensity*size)) pixels through
    the center at the given angle (degrees), bilinearly splatted, unit sum."""
    if size % 2 == 0:
        raise ValueError("kernel size must be odd")
    if not 0.0 < intensity <= 1.0:
        raise ValueError("intensity must lie in (0, 1]")
    length = max(1, int(np.floor(intensity * size + 0.5)))
    k = np.zeros((size, size))
    c = (size - 1) / 2
    theta = np.deg2rad(angle)
    dx, dy = np.cos(theta), np.sin(theta)
    w = 1.0 / length
    for i in range(length):
        s = i - (length - 1) / 2
        px, py = c + s * dx, c + s * dy
        x0, y0 = int(np.floor(px)), int(np.floor(py))
        fx, fy = px - x0, py - y0
        for ox, oy, wt in ((0, 0, (1 - fx) * (1 - fy)), (1, 0, fx * (1 - fy)),
                           (0, 1, (1 - fx) * fy), (1, 1, fx * fy)):
            xi, yi = x0 + ox, y0 + oy
            if 0 <= xi < size and 0 <= yi < size and wt > 0:
                k[yi, xi] += w * wt
    return k / k.sum()


@dataclass(frozen=True)
class GaussianBlur:
    size: int = 7
    sigma: float = 1.5

    def kernel(self) -> np.ndarray:
        return gaussian_kernel(self.size, self.sigma)

    def descriptor(self) -> str:
        return f"gblur:size={self.size},sigma={self.sigma}"


@dataclass(frozen=True)
class MotionBlur:
    size: int = 7
    intensity: float = 0.5
    angle: float = 45.0

    def kernel(self) -> np.ndarray:
        return motion_kernel(self.size, self.intensity, self.angle)

    def descriptor(self) -> str:
        return f"mblur:size={self.size},intensity={self.intensity},angle={self.angle}"


@dataclass(frozen=True)
class Downsample:
    factor: int = 8

    def __post_init__(self):
        if self.factor < 1:
            raise ValueError("factor must be >= 1")

    def descriptor(self) -> str:
        return f"sr:factor={self.factor}"


@dataclass(frozen=True)
class FreeformMask:
    mask: ImageGrid  # 1 = masked (dropped), 0 = observed

    def descriptor(self) -> str:
        frac = float(self.mask.pixels.mean())
        return f"inpaint:coverage={frac:.4f}"


@dataclass(frozen=True)
class Identity:
    def descriptor(self) -> str:
        return "id"


DegradationOperator = GaussianBlur | MotionBlur | Downsample | FreeformMask | Identity


def _convolve_reflect(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return _ndi_convolve(img, kernel, mode="reflect")


def block_average(img: np.ndarray, factor: int) -> np.ndarray:
    h, w = img.shape
    if h % factor or w % factor:
        raise ValueError("factor must divide dimensions")
    return img.reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))


def block_replicate(img: np.ndarray, factor: int) -> np.ndarray:
    """Pseudo-inverse of block averaging: replicate each block pixel."""
    return np.repeat(np.repeat(img, factor, axis=0), factor, axis=1)


def apply(op: DegradationOperator, image: ImageGrid, noise: NoiseModel = NoiseModel()) -> ImageGrid:
    """Apply the linear operator, then i.i.d. Gaussian noise, then clamp to [0, 1]."""
    x = image.pixels
    if isinstance(op, (GaussianBlur, MotionBlur)):
        y = _convolve_reflect(x, op.kernel())
    elif isinstance(op, Downsample):
        y = block_average(x, op.factor)
    elif isinstance(op, FreeformMask):
        if op.mask.pixels.shape != x.shape:
            raise ValueError("mask dimensions must match image")
        y = np.where(op.mask.pixels > 0.5, 0.0, x)
    elif isinstance(op, Identity):
        y = x.copy()
    else:
        raise TypeError(f"unknown degradation operator {op!r}")
    if noise.sigma_y > 0:
        rng = np.random.default_rng(noise.seed)
        y = y + noise.sigma_y * rng.standard_normal(y.shape)
    return ImageGrid(y)


def make_freeform_mask(width: int, height: int, coverage: float, seed: int) -> ImageGrid:
    """Seeded random-walk brush strokes; masked fraction within +-2% of coverage."""
    if not 0.0 < coverage < 1.0:
        raise ValueError("coverage must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    mask = np.zeros((height, width), dtype=bool)
    target = coverage * width * height
    radius = max(1, round(min(width, height) / 16))
    yy, xx = np.mgrid[0:height, 0:width]
    max_stamps = 50 * width * height
    stamps = 0
    while mask.sum() < target:
        # one brush stroke: a short random walk of disk stamps
        cy, cx = rng.uniform(0, height), rng.uniform(0, width)
        heading = rng.uniform(0, 2 * np.pi)
        for _ in range(rng.integers(4, 16)):
            disk = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius**2
            mask |= disk
            stamps += 1
            if mask.sum() >= target:
                break
            heading += rng.normal(0, 0.6)
            cy = np.clip(cy + radius * np.sin(heading), 0, height - 1)
            cx = np.clip(cx + radius * np.cos(heading), 0, width - 1)
        if stamps > max_stamps:
            raise RuntimeError("could not reach requested mask coverage")
    if not mask.any():
        mask[int(rng.integers(height)), int(rng.integers(width))] = True
    return ImageGrid(mask.astype(float))


def parse_descriptor(text: str, image_shape: tuple[int, int] | None = None) -> DegradationOperator:
    """Parse CLI operator descriptors like 'gblur:size=61,sigma=3.0' or 'id'."""
    name, _, rest = text.partition(":")
    kv = {}
    if rest:
        for part in rest.split(","):
            key, _, val = part.partition("=")
            if not val:
                raise ValueError(f"malformed operator descriptor {text!r}")
            kv[key.strip()] = val.strip()
    try:
        if name == "id":
            return Identity()
        if name == "gblur":
            return GaussianBlur(size=int(kv.get("size", 7)), sigma=float(kv.get("sigma", 1.5)))
        if name == "mblur":
            return MotionBlur(size=int(kv.get("size", 7)),
                              intensity=float(kv.get("intensity", 0.5)),
                              angle=float(kv.get("angle", 45.0)))
        if name == "sr":
            return Downsample(factor=int(kv.get("factor", 8)))
        if name == "inpaint":
            if image_shape is None:
                raise ValueError("inpaint descriptor needs a target image shape")
            h, w = image_shape
            return FreeformMask(make_freeform_mask(w, h,
                                                   float(kv.get("coverage", 0.15)),
                                                   int(kv.get("seed", 0))))
    except ValueError:
        raise
    raise ValueError(f"unknown operator {name!r}")
