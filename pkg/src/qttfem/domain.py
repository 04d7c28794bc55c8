"""Domain decompositions: quadrangles, interfaces and Dirichlet sides.

A configuration file is YAML with the keys::

    quads:      [[[x, y], [x, y], [x, y], [x, y]], ...]   # counterclockwise
    interfaces: [{m, p, kind: side, side_m, side_p, reversed?},
                 {m, p, kind: vertex, corner_m, corner_p}, ...]
    dirichlet:  {m: [sides], ...}

Subdomains are numbered from 0.  ``reversed`` may be omitted; it is then
inferred from the vertex coordinates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .coupling import SIDES, InterfaceSpec
from .errors import ConfigError, DegenerateElementError, ShapeError
from .geometry import Quadrangle

GEOM_TOL = 1e-9

# vertex indices (start, end) of each side in its counterclockwise traversal
_SIDE_ENDS = {"bottom": (0, 1), "right": (1, 2), "top": (2, 3), "left": (3, 0)}
_CORNER_VERTEX = {"LB": 0, "RB": 1, "RT": 2, "LT": 3}


def side_endpoints(q: Quadrangle, side: str) -> tuple[np.ndarray, np.ndarray]:
    a, b = _SIDE_ENDS[side]
    return q.vertices[a], q.vertices[b]


def corner_point(q: Quadrangle, corner: str) -> np.ndarray:
    return q.vertices[_CORNER_VERTEX[corner]]


def _close(a, b) -> bool:
    return bool(np.linalg.norm(np.asarray(a) - np.asarray(b)) <= GEOM_TOL)


def side_orientation(qm: Quadrangle, side_m: str, qp: Quadrangle, side_p: str) -> bool | None:
    """``True`` if the sides coincide with opposite traversal, ``False`` if with
    the same traversal, ``None`` if they are not the same segment."""
    a0, a1 = side_endpoints(qm, side_m)
    b0, b1 = side_endpoints(qp, side_p)
    if _close(a0, b1) and _close(a1, b0):
        return True
    if _close(a0, b0) and _close(a1, b1):
        return False
    return None


@dataclass
class DomainConfig:
    quads: list[Quadrangle]
    interfaces: list[InterfaceSpec]
    dirichlet: dict[int, frozenset[str]] = field(default_factory=dict)
    name: str = ""

    @property
    def q(self) -> int:
        return len(self.quads)

    def validate(self) -> "DomainConfig":
        """Check interface geometry and that every side is covered exactly once."""
        q = self.q
        if q == 0:
            raise ConfigError("configuration has no quadrangles")
        for m in self.dirichlet:
            if not 0 <= m < q:
                raise ConfigError(f"dirichlet entry for missing subdomain {m}")
        used: dict[tuple[int, str], str] = {}
        for k, spec in enumerate(self.interfaces):
            for idx in (spec.m, spec.p):
                if not 0 <= idx < q:
                    raise ConfigError(f"interface {k} references missing subdomain {idx}")
            qm, qp = self.quads[spec.m], self.quads[spec.p]
            if spec.kind == "side":
                orient = side_orientation(qm, spec.side_m, qp, spec.side_p)
                if orient is None:
                    raise ConfigError(
                        f"interface {k}: side {spec.side_m} of {spec.m} and side "
                        f"{spec.side_p} of {spec.p} are not the same segment"
                    )
                if orient != spec.reversed:
                    raise ConfigError(
                        f"interface {k}: reversed={spec.reversed} contradicts the geometry"
                    )
                for key in ((spec.m, spec.side_m), (spec.p, spec.side_p)):
                    if key in used:
                        raise ConfigError(f"side {key[1]} of subdomain {key[0]} is in two interfaces")
                    used[key] = "interface"
            else:
                if not _close(corner_point(qm, spec.corner_m), corner_point(qp, spec.corner_p)):
                    raise ConfigError(
                        f"interface {k}: corner {spec.corner_m} of {spec.m} and corner "
                        f"{spec.corner_p} of {spec.p} do not coincide"
                    )
        for m in range(q):
            for side in SIDES:
                flagged = side in self.dirichlet.get(m, ())
                linked = (m, side) in used
                if flagged and linked:
                    raise ConfigError(f"side {side} of subdomain {m} is both Dirichlet and an interface")
                if not flagged and not linked:
                    raise ConfigError(f"side {side} of subdomain {m} is neither Dirichlet nor an interface")
        self._check_shared_points()
        return self

    def _check_shared_points(self):
        # every vertex shared by two subdomains must be joined by some interface
        for m, p in itertools.combinations(range(self.q), 2):
            qm, qp = self.quads[m], self.quads[p]
            links = [s.oriented(m) for s in self.interfaces if s.involves(m) and s.involves(p)]
            for vm, vp in itertools.product(qm.vertices, qp.vertices):
                if not _close(vm, vp):
                    continue
                covered = False
                for s in links:
                    if s.kind == "side":
                        ends = side_endpoints(qm, s.side_m)
                        covered = covered or any(_close(vm, e) for e in ends)
                    else:
                        covered = covered or _close(vm, corner_point(qm, s.corner_m))
                if not covered:
                    raise ConfigError(
                        f"subdomains {m} and {p} share the point {vm.tolist()} but no interface joins them there"
                    )


def _parse_interface(raw, k) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"interface {k} must be a mapping")
    try:
        m, p = int(raw["m"]), int(raw["p"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"interface {k} needs integer m and p") from exc
    kind = raw.get("kind", "side" if "side_m" in raw else "vertex")
    out = dict(m=m, p=p, kind=kind)
    if kind == "side":
        out.update(side_m=raw.get("side_m"), side_p=raw.get("side_p"), reversed=raw.get("reversed"))
    else:
        out.update(corner_m=raw.get("corner_m"), corner_p=raw.get("corner_p"))
    return out


def config_from_dict(data: dict, name: str = "") -> DomainConfig:
    if not isinstance(data, dict) or "quads" not in data:
        raise ConfigError("configuration needs a 'quads' list")
    quads = []
    for k, verts in enumerate(data["quads"]):
        try:
            quads.append(Quadrangle(np.asarray(verts, dtype=float)))
        except (ShapeError, DegenerateElementError, ValueError, TypeError) as exc:
            raise ConfigError(f"quadrangle {k}: {exc}") from exc
    interfaces = []
    for k, raw in enumerate(data.get("interfaces") or []):
        fields_ = _parse_interface(raw, k)
        if fields_["kind"] == "side" and fields_["reversed"] is None:
            m, p = fields_["m"], fields_["p"]
            if not (0 <= m < len(quads) and 0 <= p < len(quads)):
                raise ConfigError(f"interface {k} references a missing subdomain")
            if fields_["side_m"] not in _SIDE_ENDS or fields_["side_p"] not in _SIDE_ENDS:
                raise ConfigError(f"interface {k} has an unknown side name")
            orient = side_orientation(quads[m], fields_["side_m"], quads[p], fields_["side_p"])
            if orient is None:
                raise ConfigError(f"interface {k}: the two sides are not the same segment")
            fields_["reversed"] = orient
        elif fields_["kind"] == "side":
            fields_["reversed"] = bool(fields_["reversed"])
        interfaces.append(InterfaceSpec(**fields_))
    dirichlet = {}
    for m, sides in (data.get("dirichlet") or {}).items():
        sides = [sides] if isinstance(sides, str) else list(sides or [])
        for s in sides:
            if s not in _SIDE_ENDS:
                raise ConfigError(f"unknown Dirichlet side {s!r} for subdomain {m}")
        dirichlet[int(m)] = frozenset(sides)
    return DomainConfig(quads, interfaces, dirichlet, name=name).validate()


def load_config(path) -> DomainConfig:
    """Load a configuration file, or a bundled one by name (``"triangle"``)."""
    p = Path(path)
    if not p.exists():
        bundled = resources.files("qttfem") / "configs" / f"{path}.cfg"
        if not bundled.is_file():
            raise ConfigError(f"configuration {path!r} not found")
        text = bundled.read_text()
        name = str(path)
    else:
        text = p.read_text()
        name = p.stem
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(data, name=name)
