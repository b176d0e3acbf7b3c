"""Scenario files and the built-in catalog.

A scenario pins everything a check run needs: chart dimension and signature,
model kind, vielbein expressions, optional gauge scramble and Weyl factor,
ghost coefficient functions, sample points, jet order and tolerance.  The
JSON form is hand-editable and diffable; expression values are strings in
the field-expression grammar.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ScenarioError
from .exprs import parse_expr
from .jets import Chart


@dataclass
class Scenario:
    name: str
    dimension: int
    signature: tuple
    model: str = "mobius"
    vielbein: list = None
    gauge: dict = None          # {"z": str, "so": [str], "r": [str]}
    weyl: str = None            # phi expression; the factor is exp(phi)
    ghosts: dict = None         # {"eps": str, "iota": [str], "lorentz": [str]}
    points: list = field(default_factory=list)
    jet_order: int = 4
    tolerance: float = 1e-9
    seed: int = 0
    normal: bool = True         # whether the input connection is normal
    point_offset: int = 0       # internal: absolute index of points[0]

    def __post_init__(self):
        m = self.dimension
        if self.signature is None:
            self.signature = (1,) + (-1,) * (m - 1)
        self.signature = tuple(int(s) for s in self.signature)
        if self.vielbein is None:
            self.vielbein = [["1" if i == j else "0" for j in range(m)]
                             for i in range(m)]
        if not self.points:
            raise ScenarioError("scenario needs at least one sample point")
        if self.jet_order < 3:
            raise ScenarioError("jet order must be at least 3 for Cotton checks")
        names = tuple(f"x{i}" for i in range(m))
        for row in self.vielbein:
            for cell in row:
                parse_expr(cell, variables=names)
        for p in self.points:
            if len(p) != m:
                raise ScenarioError(f"point {p} has wrong dimension")

    @property
    def chart(self):
        return Chart(self.dimension, signature=self.signature)

    def to_dict(self):
        return {
            "name": self.name,
            "dimension": self.dimension,
            "signature": list(self.signature),
            "model": self.model,
            "vielbein": self.vielbein,
            "gauge": self.gauge,
            "weyl": self.weyl,
            "ghosts": self.ghosts,
            "points": [list(p) for p in self.points],
            "jet_order": self.jet_order,
            "tolerance": self.tolerance,
            "seed": self.seed,
            "normal": self.normal,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        known = {"name", "dimension", "signature", "model", "vielbein",
                 "gauge", "weyl", "ghosts", "points", "jet_order",
                 "tolerance", "seed", "normal", "point_offset"}
        extra = set(d) - known
        if extra:
            raise ScenarioError(f"unknown scenario keys: {sorted(extra)}")
        if "dimension" not in d:
            raise ScenarioError("scenario needs a 'dimension'")
        kwargs = dict(d)
        kwargs.setdefault("name", "unnamed")
        kwargs.setdefault("signature", None)
        kwargs["points"] = [tuple(p) for p in d.get("points", [])]
        return cls(**kwargs)

    @classmethod
    def load(cls, path):
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as ex:
            raise ScenarioError(f"cannot read scenario {path}: {ex}") from ex
        return cls.from_dict(data)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")


def _default_ghosts(m):
    pairs = m * (m - 1) // 2
    iota = [f"1/2 + x{(a + 1) % m}/3" for a in range(m)]
    lor = [f"1/3 + x{k % m}/4" for k in range(pairs)]
    return {"eps": "1/2 + x0/3 - x1*x1/5", "iota": iota, "lorentz": lor}


def _points(m, k=2):
    base = [0.23, -0.31, 0.17, 0.11, -0.27, 0.19, 0.13, -0.15]
    pts = []
    for i in range(k):
        pts.append(tuple(base[(i + j) % len(base)] for j in range(m)))
    return pts


def catalog(name, m=3, jet_order=4):
    """Built-in scenarios; names: flat, conformally-flat, diag-poly,
    constant-curvature, ricci-flat-m4, generic, torsionful, poincare."""
    sig = (1,) + (-1,) * (m - 1)
    if name == "flat":
        return Scenario(name=name, dimension=m, signature=sig,
                        points=_points(m), jet_order=jet_order,
                        ghosts=_default_ghosts(m))
    if name == "conformally-flat":
        phi = "x0/4 - x1*x1/6 + x0*x1/8"
        vb = [[f"exp({phi})" if i == j else "0" for j in range(m)]
              for i in range(m)]
        return Scenario(name=name, dimension=m, signature=sig, vielbein=vb,
                        points=_points(m), jet_order=jet_order,
                        weyl="x0/5 - x1/7", ghosts=_default_ghosts(m))
    if name == "diag-poly":
        diag = ["1 + x1^2/2", "1 + x0*x%d/4" % (m - 1), "1 + x0^2/3 + x%d/5" % (m - 1)]
        while len(diag) < m:
            diag.append(f"1 + x{len(diag) % m}^2/{3 + len(diag)}")
        vb = [[diag[i] if i == j else "0" for j in range(m)] for i in range(m)]
        return Scenario(name=name, dimension=m, signature=sig, vielbein=vb,
                        points=_points(m), jet_order=jet_order,
                        weyl="x0/4 - x1*x2/6" if m > 2 else "x0/4",
                        ghosts=_default_ghosts(m))
    if name == "constant-curvature":
        # g = eta / (1 + (k/4) x.eta.x)^2 has Ricci = (m-1) k g; k = 1
        q = " + ".join(f"({s})*x{i}*x{i}" for i, s in enumerate(sig))
        f = f"1/(1 + ({q})/4)"
        vb = [[f if i == j else "0" for j in range(m)] for i in range(m)]
        return Scenario(name=name, dimension=m, signature=sig, vielbein=vb,
                        points=_points(m), jet_order=jet_order,
                        weyl="x0/6", ghosts=_default_ghosts(m))
    if name == "ricci-flat-m4":
        # Schwarzschild chart, mass 1: x1 = r in (3, 6), x2 = polar angle
        vb = [["sqrt(1 - 2/x1)", "0", "0", "0"],
              ["0", "1/sqrt(1 - 2/x1)", "0", "0"],
              ["0", "0", "x1", "0"],
              ["0", "0", "0", "x1*sin(x2)"]]
        return Scenario(name=name, dimension=4, signature=(1, -1, -1, -1),
                        vielbein=vb, points=[(0.2, 3.7, 1.1, 0.4),
                                             (-0.1, 4.6, 1.4, 0.9)],
                        jet_order=jet_order, weyl="x1/20 - x0/30",
                        ghosts={"eps": "1/2 + x1/9", "iota": ["1/2", "x1/8", "1/3", "x2/5"],
                                "lorentz": ["1/3", "x1/7", "1/4", "x2/6", "1/5", "x3/9"]})
    if name == "generic":
        base = catalog("diag-poly", m, jet_order)
        base.name = name
        base.gauge = {"seeded": True}
        return base
    if name == "torsionful":
        base = catalog("diag-poly", m, jet_order)
        base.name = name
        base.normal = False
        return base
    if name == "poincare":
        base = catalog("diag-poly", m, jet_order)
        base.name = name
        base.model = "poincare"
        return base
    raise ScenarioError(f"unknown catalog scenario {name!r}")


CATALOG_NAMES = ("flat", "conformally-flat", "diag-poly", "constant-curvature",
                 "ricci-flat-m4", "generic", "torsionful", "poincare")
