"""Hamiltonians, Gauss-law and winding operators for the plaquette models.

Geometries and link labels:

* ``square-1``: one square plaquette, links 1..4 around the loop, sites
  A,B,C,D at the corners.  Site supports: A={1,4}, B={1,2}, C={2,3},
  D={3,4}.
* ``triangle-1``: one triangular plaquette, links 1..3, sites A={1,2},
  B={2,3}, C={3,1}.
* ``two-square-pbc``: two square plaquettes wrapped periodically, links
  1..6 with plaquettes (1,2,3,4) and (5,4,6,2); site supports A={1,4,5},
  B={5,2,1}, C={6,2,3}, D={3,4,6}.

Bitstring labels list links from the *highest* link leftmost, i.e. the
rightmost character is link 1 (= qubit 0), so ``int(label, 2)`` is the
computational-basis index.  In the x basis character 0 means |+> (sigma-x
eigenvalue +1) and 1 means |-> (eigenvalue -1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .paulis import PauliSum, PauliTerm

GEOMETRY_LINKS = {"square-1": 4, "triangle-1": 3, "two-square-pbc": 6}

# Plaquettes as ordered link tuples; the order matches the raising/lowering
# pattern of the U(1) terms (first half raised, second half lowered).
_PLAQUETTES = {
    "square-1": [(1, 2, 3, 4)],
    "triangle-1": [(1, 2, 3)],
    "two-square-pbc": [(1, 2, 3, 4), (5, 4, 6, 2)],
}

_SITES = {
    "square-1": {"A": (1, 4), "B": (1, 2), "C": (2, 3), "D": (3, 4)},
    "triangle-1": {"A": (1, 2), "B": (2, 3), "C": (3, 1)},
    "two-square-pbc": {
        "A": (1, 4, 5),
        "B": (5, 2, 1),
        "C": (6, 2, 3),
        "D": (3, 4, 6),
    },
}

# Signed link incidence for the U(1) Gauss law G_x = sum(E_out) - sum(E_in),
# with E = sigma^z / 2.  Orientations follow the arrow convention of the
# basis-state figures (vertical links up, horizontal links right; triangle
# cyclic 1 -> 2 -> 3).
_U1_GAUSS = {
    "square-1": {
        "A": {1: +1, 4: +1},
        "B": {2: +1, 1: -1},
        "C": {2: -1, 3: -1},
        "D": {3: +1, 4: -1},
    },
    "triangle-1": {
        "A": {1: +1, 3: -1},
        "B": {2: +1, 1: -1},
        "C": {3: +1, 2: -1},
    },
    "two-square-pbc": {
        "A": {1: +1, 4: +1, 5: -1},
        "B": {5: +1, 2: +1, 1: -1},
        "C": {6: +1, 2: -1, 3: -1},
        "D": {3: +1, 4: -1, 6: -1},
    },
}

# Pauli expansion of U_plaq + U_plaq^dagger for one plaquette, as
# (sign, letters-per-ordered-link).  Four-link plaquettes carry magnitude
# g/2, three-link ones g/sqrt(2).
_U1_SQUARE_PATTERN = [
    (+1, "XXXX"),
    (+1, "YYYY"),
    (-1, "XXYY"),
    (-1, "YYXX"),
    (+1, "YXYX"),
    (+1, "YXXY"),
    (+1, "XYYX"),
    (+1, "XYXY"),
]
_U1_TRIANGLE_PATTERN = [
    (+1, "XXX"),
    (-1, "YYX"),
    (-1, "YXY"),
    (-1, "XYY"),
]


@dataclass(frozen=True)
class Geometry:
    kind: str

    def __post_init__(self):
        if self.kind not in GEOMETRY_LINKS:
            raise ValueError(f"unknown geometry {self.kind!r}")

    @property
    def n_links(self) -> int:
        return GEOMETRY_LINKS[self.kind]

    @property
    def sites(self) -> dict[str, tuple[int, ...]]:
        return _SITES[self.kind]

    @property
    def plaquettes(self) -> list[tuple[int, ...]]:
        return _PLAQUETTES[self.kind]


@dataclass(frozen=True)
class GaugeModel:
    """Gauge group plus couplings.

    ``convention="pauli"`` reads the couplings against Hamiltonians written
    in full Pauli matrices (the normalization the 8x8 two-plaquette matrix
    fixes); ``"spin-half"`` rescales the Z2 couplings for the S = sigma/2
    reading.  The U(1) Pauli strings are identical under both readings.
    """

    group: str
    g: float = 1.0
    gamma: float = 0.0
    convention: str = "pauli"

    def __post_init__(self):
        if self.group not in ("Z2", "U1"):
            raise ValueError(f"unknown gauge group {self.group!r}")
        if self.convention not in ("pauli", "spin-half"):
            raise ValueError(f"unknown convention {self.convention!r}")
        if self.group == "U1" and self.gamma != 0.0:
            raise ValueError("gamma is a Z2-only coupling")


@dataclass(frozen=True)
class SectorSpec:
    """Per-site Gauss eigenvalues, plus optional winding labels.

    Z2 sites take +-1; U(1) sites take integer (or half-integer) charges.
    ``winding`` is an optional (W_x, W_y) pair for two-square-pbc.
    """

    charges: tuple[tuple[str, float], ...]
    winding: tuple[int, int] | None = None

    @staticmethod
    def uniform(geom: Geometry, value: float, winding=None) -> "SectorSpec":
        return SectorSpec(
            tuple((s, value) for s in sorted(geom.sites)), winding
        )


def _string_on_links(n_links: int, letters_by_link: dict[int, str]) -> str:
    out = ["I"] * n_links
    for link, letter in letters_by_link.items():
        out[link - 1] = letter
    return "".join(out)


def build_hamiltonian(model: GaugeModel, geom: Geometry) -> PauliSum:
    """Pauli-string Hamiltonian for the (group, geometry) pair."""
    n = geom.n_links
    terms: list[PauliTerm] = []
    if model.group == "Z2":
        for plaq in geom.plaquettes:
            coeff = -model.g
            if model.convention == "spin-half":
                coeff /= 2 ** len(plaq)
            terms.append(
                PauliTerm(coeff, _string_on_links(n, {l: "Z" for l in plaq}))
            )
        if model.gamma != 0.0:
            gcoeff = -model.gamma
            if model.convention == "spin-half":
                gcoeff /= 2
            for link in range(1, n + 1):
                terms.append(
                    PauliTerm(gcoeff, _string_on_links(n, {link: "X"}))
                )
    else:
        for plaq in geom.plaquettes:
            if len(plaq) == 4:
                pattern, mag = _U1_SQUARE_PATTERN, model.g / 2
            else:
                pattern, mag = _U1_TRIANGLE_PATTERN, model.g / math.sqrt(2)
            for sign, letters in pattern:
                by_link = dict(zip(plaq, letters))
                terms.append(
                    PauliTerm(-sign * mag, _string_on_links(n, by_link))
                )
    return PauliSum.from_terms(terms, n)


def gauss_operators(model: GaugeModel, geom: Geometry) -> dict[str, PauliSum]:
    """Gauss-law operator per site.

    Z2: product of sigma-x over the site's links.  U(1): signed sum of
    E = sigma^z/2 over the site's links.
    """
    n = geom.n_links
    out: dict[str, PauliSum] = {}
    if model.group == "Z2":
        for site, links in geom.sites.items():
            s = _string_on_links(n, {l: "X" for l in links})
            out[site] = PauliSum.from_terms([PauliTerm(1.0, s)], n)
    else:
        for site, signed in _U1_GAUSS[geom.kind].items():
            terms = [
                PauliTerm(0.5 * sign, _string_on_links(n, {link: "Z"}))
                for link, sign in signed.items()
            ]
            out[site] = PauliSum.from_terms(terms, n)
    return out


def winding_operators(geom: Geometry) -> dict[str, PauliSum]:
    """Winding-number operators W_x, W_y(13), W_y(56) for two-square-pbc."""
    if geom.kind != "two-square-pbc":
        raise ValueError("winding operators exist only for two-square-pbc")
    n = geom.n_links

    def xprod(links):
        return PauliSum.from_terms(
            [PauliTerm(1.0, _string_on_links(n, {l: "X" for l in links}))], n
        )

    return {"x": xprod((4, 2)), "y13": xprod((1, 3)), "y56": xprod((5, 6))}


def _x_eigenvalue(index: int, links: tuple[int, ...]) -> int:
    """Eigenvalue of a sigma-x product on the x-basis string ``index``."""
    sign = 1
    for link in links:
        if (index >> (link - 1)) & 1:
            sign = -sign
    return sign


def _u1_charge(index: int, signed: dict[int, int]) -> float:
    """G_x value on a z-basis string (bit 0 -> E=+1/2, bit 1 -> E=-1/2)."""
    total = 0.0
    for link, sign in signed.items():
        e = 0.5 if not (index >> (link - 1)) & 1 else -0.5
        total += sign * e
    return total


def enumerate_sector(
    model: GaugeModel, geom: Geometry, sector: SectorSpec
) -> list[str]:
    """All basis labels obeying the requested Gauss (and winding) values.

    Z2 sectors live in the x basis, U(1) sectors in the z basis; in both
    cases the scan runs over all 2^n_links product labels in ascending
    order.
    """
    n = geom.n_links
    wanted = dict(sector.charges)
    unknown = set(wanted) - set(geom.sites)
    if unknown:
        raise ValueError(f"unknown sites {sorted(unknown)}")
    out = []
    for index in range(2**n):
        ok = True
        if model.group == "Z2":
            for site, links in geom.sites.items():
                if site in wanted and _x_eigenvalue(index, links) != wanted[site]:
                    ok = False
                    break
        else:
            for site, signed in _U1_GAUSS[geom.kind].items():
                if site in wanted and not math.isclose(
                    _u1_charge(index, signed), wanted[site], abs_tol=1e-12
                ):
                    ok = False
                    break
        if ok and sector.winding is not None:
            wx, wy = sector.winding
            if _x_eigenvalue(index, (4, 2)) != wx:
                ok = False
            elif _x_eigenvalue(index, (1, 3)) != wy:
                ok = False
        if ok:
            out.append(format(index, f"0{n}b"))
    return out


def initial_state(geom: Geometry, label: str, basis: str) -> np.ndarray:
    """Product state for a bitstring label in the x or z basis."""
    n = geom.n_links
    if len(label) != n or set(label) - {"0", "1"}:
        raise ValueError(f"label must be {n} characters of 0/1")
    if basis not in ("x", "z"):
        raise ValueError("basis must be 'x' or 'z'")
    index = int(label, 2)
    psi = np.zeros(2**n, dtype=complex)
    psi[index] = 1.0
    if basis == "x":
        # Hadamard transform of the z string: 0 -> |+>, 1 -> |->.
        h = np.full(2**n, 2 ** (-n / 2))
        for i in range(2**n):
            h[i] *= (-1) ** bin(i & index).count("1")
        psi = h.astype(complex)
    return psi
