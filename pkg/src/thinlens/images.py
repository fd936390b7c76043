"""Image and image-set containers shared by the solvers."""
from dataclasses import dataclass, field, replace

import numpy as np

from .lens_models import JacobianInfo, jacobian_parts, lens_map

DEDUPE_RADIUS = 1e-8


@dataclass(frozen=True)
class Image:
    z: complex
    residual: float
    jacobian: JacobianInfo
    location: str = "exterior"
    multiplicity: int = 1

    @property
    def bright(self):
        return self.location != "interior"

    def to_dict(self):
        j = self.jacobian
        return {
            "z": [self.z.real, self.z.imag],
            "residual": self.residual,
            "det": j.det,
            "parity": j.parity,
            "magnification": j.magnification,
            "critical": j.critical,
            "location": self.location,
            "multiplicity": self.multiplicity,
        }


def _sort_key(im):
    return (im.z.real, im.z.imag)


@dataclass(frozen=True)
class ImageSet:
    images: tuple
    model: dict
    source: complex
    certificate: object = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(sorted(self.images, key=_sort_key)))
        object.__setattr__(self, "source", complex(self.source))

    def __len__(self):
        return len(self.images)

    def __iter__(self):
        return iter(self.images)

    @property
    def count(self):
        return len(self.images)

    @property
    def positions(self):
        return np.array([im.z for im in self.images], dtype=complex)

    @property
    def exterior(self):
        return [im for im in self.images if im.location != "interior"]

    @property
    def interior(self):
        return [im for im in self.images if im.location == "interior"]

    @property
    def n_plus(self):
        return sum(1 for im in self.images if im.jacobian.det > 0)

    @property
    def n_minus(self):
        return sum(1 for im in self.images if im.jacobian.det <= 0)

    @property
    def min_abs_det(self):
        if not self.images:
            return np.inf
        return min(abs(im.jacobian.det) for im in self.images)

    def with_certificate(self, cert):
        return replace(self, certificate=cert)

    def to_dict(self):
        out = {
            "model": self.model,
            "source": [self.source.real, self.source.imag],
            "count": self.count,
            "exterior": len(self.exterior),
            "interior": len(self.interior),
            "images": [im.to_dict() for im in self.images],
            "info": self.info,
        }
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_dict()
        return out


def dedupe(z, residual, radius=DEDUPE_RADIUS):
    """Indices of representatives: lowest residual first, greedy within ``radius``."""
    z = np.asarray(z, dtype=complex)
    order = np.argsort(np.asarray(residual, float), kind="stable")
    kept = []
    for i in order:
        if all(abs(z[i] - z[k]) > radius for k in kept):
            kept.append(i)
    return sorted(kept)


def make_image(lens, z, w, location=None, multiplicity=1):
    """Build an :class:`Image` with residual and Jacobian from the public evaluators."""
    z = complex(z)
    residual = float(abs(lens_map(lens, z) - w))
    A, B = jacobian_parts(lens, z)
    info = JacobianInfo.from_det(abs(A) ** 2 - abs(B) ** 2)
    if location is None:
        location = lens.location(z)
    return Image(z=z, residual=residual, jacobian=info, location=location,
                 multiplicity=multiplicity)
