"""Ground-truth densities: normal mixtures and skew-normals.

Includes the fifteen Marron-Wand (1992) test mixtures.  Each density exposes
``pdf``, ``d1``, ``d2``, its exact mean/variance (the Kullback-Leibler
optimal Gaussian parameters) and seeded sampling.
"""
import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from semipar.kernel import INV_SQRT_2PI


def rng_for(seed, *keys):
    """Independent generator for stream ``(seed, *keys)``.

    Worker ``i`` of a run seeded with ``seed`` uses ``rng_for(seed, i)``, so
    results do not depend on how streams are scheduled.
    """
    return np.random.default_rng([int(seed), *(int(k) for k in keys)])


def _phi(z):
    return INV_SQRT_2PI * np.exp(-0.5 * z * z)


@dataclass(frozen=True)
class NormalMixture:
    """``f(x) = sum_i w_i phi_{s_i}(x - m_i)``."""

    weights: tuple
    means: tuple
    sds: tuple
    name: str = "mixture"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        s = np.asarray(self.sds, dtype=float)
        if not (len(self.weights) == len(self.means) == len(self.sds)):
            raise ValueError("weights, means and sds must have equal length")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        if np.any(w < 0) or np.any(s <= 0):
            raise ValueError("weights must be >= 0 and sds > 0")

    @property
    def _arrays(self):
        return (np.asarray(self.weights, float), np.asarray(self.means, float),
                np.asarray(self.sds, float))

    def _components(self, x, order):
        w, m, s = self._arrays
        x = np.asarray(x, dtype=float)
        z = (x[..., None] - m) / s
        base = w * _phi(z) / s
        if order == 0:
            return base.sum(axis=-1)
        if order == 1:
            return (-base * z / s).sum(axis=-1)
        return (base * (z * z - 1.0) / s ** 2).sum(axis=-1)

    def pdf(self, x):
        return self._components(x, 0)

    def d1(self, x):
        return self._components(x, 1)

    def d2(self, x):
        """``sum_i w_i f_i(x) He_2((x - m_i)/s_i) / s_i^2``."""
        return self._components(x, 2)

    def kl_gaussian(self):
        """Mean and variance, i.e. the least-false normal parameters (mu0, sigma0^2)."""
        w, m, s = self._arrays
        mu0 = float(np.sum(w * m))
        var0 = float(np.sum(w * (s ** 2 + (m - mu0) ** 2)))
        return mu0, var0

    def breaks(self, width=14.0):
        """Quadrature panel edges resolving every component."""
        w, m, s = self._arrays
        mu0, var0 = self.kl_gaussian()
        centers = np.append(m, mu0)
        scales = np.append(s, np.sqrt(var0))
        pts = [c + sc * np.arange(-width, width + 0.5, 1.0) for c, sc in zip(centers, scales)]
        return np.unique(np.concatenate(pts))

    def support(self, k=6.0):
        w, m, s = self._arrays
        return float(np.min(m - k * s)), float(np.max(m + k * s))

    def sample(self, n, seed=None, rng=None):
        rng = np.random.default_rng(seed) if rng is None else rng
        w, m, s = self._arrays
        comp = rng.choice(w.size, size=int(n), p=w)
        return m[comp] + s[comp] * rng.standard_normal(int(n))


@dataclass(frozen=True)
class SkewNormal:
    """Azzalini skew-normal ``2 phi(x) Phi(lam x)``."""

    lam: float
    name: str = field(default="")

    def s1(self, x):
        x = np.asarray(x, dtype=float)
        lam = self.lam
        return lam * _phi(lam * x) - x * ndtr(lam * x)

    def s2(self, x):
        x = np.asarray(x, dtype=float)
        lam = self.lam
        return (x * x - 1.0) * ndtr(lam * x) - (lam ** 3 + 2.0 * lam) * x * _phi(lam * x)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return 2.0 * _phi(x) * ndtr(self.lam * x)

    def d1(self, x):
        return 2.0 * _phi(np.asarray(x, dtype=float)) * self.s1(x)

    def d2(self, x):
        return 2.0 * _phi(np.asarray(x, dtype=float)) * self.s2(x)

    def kl_gaussian(self):
        lam = self.lam
        mu0 = np.sqrt(2.0 / np.pi) * lam / np.sqrt(1.0 + lam * lam)
        var0 = 1.0 - 2.0 * lam * lam / (np.pi * (1.0 + lam * lam))
        return float(mu0), float(var0)

    def breaks(self, width=14.0):
        return np.arange(-width, width + 0.25, 0.5)

    def support(self, k=6.0):
        mu0, _ = self.kl_gaussian()
        return -8.0, 8.0 + mu0

    def sample(self, n, seed=None, rng=None):
        rng = np.random.default_rng(seed) if rng is None else rng
        delta = self.lam / np.sqrt(1.0 + self.lam ** 2)
        z1 = rng.standard_normal(int(n))
        z2 = rng.standard_normal(int(n))
        return delta * np.abs(z1) + np.sqrt(1.0 - delta ** 2) * z2


def _mw_components(i):
    if i == 1:
        return [(1.0, 0.0, 1.0)]
    if i == 2:
        return [(1 / 5, 0.0, 1.0), (1 / 5, 1 / 2, 2 / 3), (3 / 5, 13 / 12, 5 / 9)]
    if i == 3:
        return [(1 / 8, 3 * ((2 / 3) ** l - 1), (2 / 3) ** l) for l in range(8)]
    if i == 4:
        return [(2 / 3, 0.0, 1.0), (1 / 3, 0.0, 1 / 10)]
    if i == 5:
        return [(1 / 10, 0.0, 1.0), (9 / 10, 0.0, 1 / 10)]
    if i == 6:
        return [(1 / 2, -1.0, 2 / 3), (1 / 2, 1.0, 2 / 3)]
    if i == 7:
        return [(1 / 2, -3 / 2, 1 / 2), (1 / 2, 3 / 2, 1 / 2)]
    if i == 8:
        return [(3 / 4, 0.0, 1.0), (1 / 4, 3 / 2, 1 / 3)]
    if i == 9:
        return [(9 / 20, -6 / 5, 3 / 5), (9 / 20, 6 / 5, 3 / 5), (1 / 10, 0.0, 1 / 4)]
    if i == 10:
        return [(1 / 2, 0.0, 1.0)] + [(1 / 10, l / 2 - 1, 1 / 10) for l in range(5)]
    if i == 11:
        return ([(49 / 100, -1.0, 2 / 3), (49 / 100, 1.0, 2 / 3)]
                + [(1 / 350, (l - 3) / 2, 1 / 100) for l in range(7)])
    if i == 12:
        return [(1 / 2, 0.0, 1.0)] + [(2 ** (1 - l) / 31, l + 1 / 2, 2 ** (-l) / 10)
                                     for l in range(-2, 3)]
    if i == 13:
        return ([(46 / 100, 2 * l - 1, 2 / 3) for l in range(2)]
                + [(1 / 300, -l / 2, 1 / 100) for l in range(1, 4)]
                + [(7 / 300, l / 2, 7 / 100) for l in range(1, 4)])
    if i == 14:
        return [(2 ** (5 - l) / 63, (65 - 96 * (1 / 2) ** l) / 21, (32 / 63) / 2 ** l)
                for l in range(6)]
    if i == 15:
        return ([(2 / 7, (12 * l - 15) / 7, 2 / 7) for l in range(3)]
                + [(1 / 21, 2 * l / 7, 1 / 21) for l in range(8, 11)])
    raise ValueError(f"unknown Marron-Wand density id {i!r}; expected 1..15")


MW_NAMES = {
    1: "Gaussian", 2: "Skewed unimodal", 3: "Strongly skewed", 4: "Kurtotic unimodal",
    5: "Outlier", 6: "Bimodal", 7: "Separated bimodal", 8: "Skewed bimodal",
    9: "Trimodal", 10: "Claw", 11: "Double claw", 12: "Asymmetric claw",
    13: "Asymmetric double claw", 14: "Smooth comb", 15: "Discrete comb",
}


def marron_wand(i):
    """Marron-Wand test density ``#i`` as a :class:`NormalMixture`."""
    if isinstance(i, bool) or not isinstance(i, (int, np.integer)):
        raise ValueError(f"unknown Marron-Wand density id {i!r}; expected 1..15")
    comps = np.array(_mw_components(int(i)), dtype=float)
    w = comps[:, 0] / comps[:, 0].sum()
    return NormalMixture(tuple(w), tuple(comps[:, 1]), tuple(comps[:, 2]),
                         name=f"MW{int(i)}")


def get_density(key):
    """Resolve ``"mw6"``, ``"6"``, ``6`` or ``"sn3"``/``"sn:3.0"`` to a density."""
    if isinstance(key, (NormalMixture, SkewNormal)):
        return key
    if isinstance(key, (int, np.integer)):
        return marron_wand(int(key))
    s = str(key).strip().lower()
    if s.startswith("sn"):
        lam = float(s[2:].lstrip(":"))
        return SkewNormal(lam, name=f"SN{s[2:].lstrip(':')}")
    if s.startswith("mw"):
        s = s[2:].lstrip(":#")
    s = s.lstrip("#")
    try:
        return marron_wand(int(s))
    except ValueError:
        raise ValueError(f"unknown density {key!r}") from None


def catalogue_csv():
    """The Marron-Wand catalogue as CSV text (id, component, weight, mean, sd)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "component", "weight", "mean", "sd"])
    for i in range(1, 16):
        d = marron_wand(i)
        for k, (w, m, s) in enumerate(zip(d.weights, d.means, d.sds)):
            writer.writerow([i, k, repr(float(w)), repr(float(m)), repr(float(s))])
    return buf.getvalue()
