from dataclasses import dataclass, field

import numpy as np

from simonslab.core.errors import ParameterError


@dataclass(frozen=True)
class RigidMotion:
    """x -> R x + b with R orthogonal"""
    rotation: np.ndarray
    translation: np.ndarray = field(default=None)

    def __post_init__(self):
        rotation = np.asarray(self.rotation, dtype=float)
        n = rotation.shape[0]
        if rotation.shape != (n, n) or not np.allclose(rotation.T @ rotation, np.eye(n), atol=1e-12):
            raise ParameterError("rotation must be an orthogonal matrix")
        translation = np.zeros(n) if self.translation is None else np.asarray(self.translation, dtype=float)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def random(cls, n, seed=0):
        """Deterministic random proper rotation and translation"""
        rng = np.random.default_rng(seed)
        q, r = np.linalg.qr(rng.standard_normal((n, n)))
        q = q * np.sign(np.diag(r))
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        return cls(q, rng.uniform(-1.0, 1.0, n))

    @property
    def dimension(self):
        return self.rotation.shape[0]

    def apply(self, x):
        return np.asarray(x, dtype=float) @ self.rotation.T + self.translation

    def inverse(self, y):
        return (np.asarray(y, dtype=float) - self.translation) @ self.rotation

    def rotate(self, v):
        """Action on vectors (..., n)"""
        return np.asarray(v, dtype=float) @ self.rotation.T

    def unrotate(self, v):
        return np.asarray(v, dtype=float) @ self.rotation

    def conjugate(self, m):
        """Action on matrices (..., n, n): R m R^T"""
        return self.rotation @ np.asarray(m, dtype=float) @ self.rotation.T
