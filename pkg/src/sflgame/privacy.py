"""Empirical privacy-leakage table and the minimum-cut-layer guideline.

Deeper cut layers push more nonlinearities into the client-side model,
which degrades input reconstruction from the exchanged activations;
client-added Gaussian noise (the differential-privacy mechanism) degrades
it further.  The shipped table records reconstruction quality (SSIM,
lower = less leakage) and task accuracy measured on a CIFAR-10 classifier
at two cut depths and three noise levels.  The recommender is a pure
lookup: it refuses to interpolate between tabulated points, so any finer
guidance requires supplying a larger table in the same CSV schema
(``l_c,sigma,accuracy,ssim``).

Context on the noise mechanism: a randomized mechanism is (eps, delta)
differentially private when, for any two input datasets differing in one
element, the probability of any output set under one dataset is at most
``exp(eps)`` times its probability under the other, plus ``delta``.
Smaller values mean stronger privacy.  Calibrating the noise scale to a
target (eps, delta) is out of scope here; the table simply records the
empirical effect of three noise levels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

from .errors import NoQualifyingCut, NotTabulated

_DEFAULT_TABLE_RESOURCE = "privacy_table.csv"


@dataclass(frozen=True)
class PrivacyRecord:
    """Measured accuracy and reconstruction similarity at one table point."""

    l_c: int
    sigma: float
    accuracy: float
    ssim: float

    def __post_init__(self):
        if not (0.0 <= self.ssim <= 1.0):
            raise ValueError("ssim must lie in [0, 1]")
        if not (0.0 <= self.accuracy <= 100.0):
            raise ValueError("accuracy must lie in [0, 100]")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


class PrivacyTable:
    """Immutable collection of tabulated (cut layer, noise level) records."""

    def __init__(self, records):
        self.records = tuple(sorted(records, key=lambda rec: (rec.l_c, rec.sigma)))
        self._by_key = {(rec.l_c, rec.sigma): rec for rec in self.records}
        if len(self._by_key) != len(self.records):
            raise ValueError("duplicate (l_c, sigma) entries in privacy table")

    @classmethod
    def from_csv(cls, path) -> "PrivacyTable":
        with open(path, newline="") as fh:
            return cls._parse(fh)

    @classmethod
    def _parse(cls, fh) -> "PrivacyTable":
        reader = csv.DictReader(fh)
        expected = {"l_c", "sigma", "accuracy", "ssim"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise ValueError(
                f"privacy table must have header l_c,sigma,accuracy,ssim, got {reader.fieldnames}")
        records = [
            PrivacyRecord(
                l_c=int(row["l_c"]),
                sigma=float(row["sigma"]),
                accuracy=float(row["accuracy"]),
                ssim=float(row["ssim"]),
            )
            for row in reader
        ]
        return cls(records)

    @classmethod
    def default(cls) -> "PrivacyTable":
        """The bundled reference measurements."""
        text = resources.files("sflgame").joinpath("data", _DEFAULT_TABLE_RESOURCE).read_text()
        import io

        return cls._parse(io.StringIO(text))

    def sigmas(self) -> tuple[float, ...]:
        return tuple(sorted({rec.sigma for rec in self.records}))

    def cut_layers(self) -> tuple[int, ...]:
        return tuple(sorted({rec.l_c for rec in self.records}))

    def lookup(self, l_c: int, sigma: float) -> PrivacyRecord:
        """Exact tabulated record; no interpolation."""
        try:
            return self._by_key[(int(l_c), float(sigma))]
        except KeyError:
            raise NotTabulated(
                f"(l_c={l_c}, sigma={sigma}) is not tabulated; "
                f"available: {sorted(self._by_key)}") from None

    def recommend_min_cut(self, ssim_threshold: float, sigma: float) -> int:
        """Smallest tabulated cut layer whose leakage meets the threshold.

        Lower SSIM means less leakage, so a record qualifies when its SSIM
        is at or below the threshold.
        """
        if not (0.0 <= ssim_threshold <= 1.0):
            raise ValueError("ssim_threshold must lie in [0, 1]")
        at_sigma = [rec for rec in self.records if rec.sigma == float(sigma)]
        if not at_sigma:
            raise NotTabulated(
                f"sigma={sigma} is not tabulated; available: {self.sigmas()}")
        for rec in sorted(at_sigma, key=lambda rec: rec.l_c):
            if rec.ssim <= ssim_threshold:
                return rec.l_c
        raise NoQualifyingCut(
            f"no tabulated cut layer reaches ssim <= {ssim_threshold} at sigma={sigma}")


def lookup(l_c: int, sigma: float, table: PrivacyTable | None = None) -> PrivacyRecord:
    """Lookup against the bundled table (or a supplied one)."""
    return (table or PrivacyTable.default()).lookup(l_c, sigma)


def recommend_min_cut(ssim_threshold: float, sigma: float,
                      table: PrivacyTable | None = None) -> int:
    """Guideline for the smallest acceptable cut layer at a noise level."""
    return (table or PrivacyTable.default()).recommend_min_cut(ssim_threshold, sigma)
