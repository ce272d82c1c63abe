"""The positioned dodecahedron and the binary dodecahedral group.

The dodecahedral tiling of the equatorial two-sphere is placed with a vertex
at ``(i + j + k) / sqrt(3)`` and a face centre in the ``ij``-plane.  Lifting
the vertex rotation and a face rotation to unit quaternions gives two
generators; closing under multiplication gives the 120 elements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import quat as Q

PI5 = math.pi / 5


class GroupClosureFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class TrigConstants:
    cos_pi5: float
    sin_pi5: float
    cot_pi5: float
    cos_2pi5: float
    sin_2pi5: float
    cot_2pi5: float

    @classmethod
    def closed_form(cls) -> "TrigConstants":
        r5 = math.sqrt(5.0)
        return cls(
            cos_pi5=(1 + r5) / 4,
            sin_pi5=math.sqrt(10 - 2 * r5) / 4,
            cot_pi5=math.sqrt(1 + 2 / r5),
            cos_2pi5=(r5 - 1) / 4,
            sin_2pi5=math.sqrt(10 + 2 * r5) / 4,
            cot_2pi5=math.sqrt(1 - 2 / r5),
        )

    @classmethod
    def numeric(cls) -> "TrigConstants":
        return cls(
            cos_pi5=math.cos(PI5),
            sin_pi5=math.sin(PI5),
            cot_pi5=1 / math.tan(PI5),
            cos_2pi5=math.cos(2 * PI5),
            sin_2pi5=math.sin(2 * PI5),
            cot_2pi5=1 / math.tan(2 * PI5),
        )


TRIG = TrigConstants.closed_form()


@dataclass(frozen=True)
class BaseFrame:
    """Vertex direction ``v`` and the three face centres nearest to it."""

    v: np.ndarray
    f: np.ndarray
    f_prime: np.ndarray
    f_dprime: np.ndarray
    x: float
    y: float


def base_frame() -> BaseFrame:
    # x + y = cot(pi/5) and x^2 + y^2 = 1, larger root first
    x = 0.5 * (TRIG.cot_pi5 + TRIG.cot_2pi5)
    y = 0.5 * (TRIG.cot_pi5 - TRIG.cot_2pi5)
    v = np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0)
    return BaseFrame(
        v=v,
        f=np.array([x, y, 0.0]),
        f_prime=np.array([0.0, x, y]),
        f_dprime=np.array([y, 0.0, x]),
        x=x,
        y=y,
    )


@dataclass(frozen=True)
class Generators:
    p: np.ndarray
    q: np.ndarray
    q_prime: np.ndarray
    q_dprime: np.ndarray


def generators(frame: BaseFrame | None = None) -> Generators:
    """Lifts of the vertex rotation about ``v`` and of face rotations."""
    frame = frame or base_frame()
    return Generators(
        p=Q.exp_imag(frame.v, math.pi / 3),
        q=Q.exp_imag(frame.f, PI5),
        q_prime=Q.exp_imag(frame.f_prime, PI5),
        q_dprime=Q.exp_imag(frame.f_dprime, PI5),
    )


@dataclass(frozen=True)
class BinaryDodecGroup:
    """The 120 unit quaternions with stable integer ids.

    ``mul_table[a, b]`` is the id of ``elements[a] * elements[b]``; id 0 is
    the identity.  ``named`` maps ``"p", "q", "q_prime", "q_dprime", "-1"``
    to ids.
    """

    elements: np.ndarray
    mul_table: np.ndarray
    inv_table: np.ndarray
    conj_table: np.ndarray
    named: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.elements)

    def index(self, g, eps: float = Q.EPS_MATCH) -> int:
        """Id of the element nearest to ``g``; raises KeyError if none is close."""
        dots = self.elements @ np.asarray(g, dtype=float)
        k = int(np.argmax(dots))
        if Q.dist_s3(self.elements[k], g) > eps:
            raise KeyError("quaternion is not an element of the group")
        return k

    def lookup(self, qs, eps: float = Q.EPS_MATCH) -> np.ndarray:
        qs = np.asarray(qs, dtype=float)
        flat = qs.reshape(-1, 4)
        dots = flat @ self.elements.T
        ids = np.argmax(dots, axis=1)
        best = np.arccos(np.clip(dots[np.arange(len(flat)), ids], -1.0, 1.0))
        if np.any(best > eps):
            raise KeyError("quaternion is not an element of the group")
        return ids.reshape(qs.shape[:-1])

    def real_parts(self) -> np.ndarray:
        return self.elements[:, 0]

    def power_ids(self, g: int, n: int) -> list[int]:
        out = [0]
        for _ in range(n - 1):
            out.append(int(self.mul_table[out[-1], g]))
        return out


def _sort_key(qv: np.ndarray) -> tuple:
    # +0.0 avoids -0.0 sorting apart from 0.0
    return tuple(round(float(c), 6) + 0.0 for c in qv)


def generate_group(
    gens=None, eps_match: float = Q.EPS_MATCH, max_rounds: int = 64
) -> BinaryDodecGroup:
    """Close ``{p, q}`` under multiplication, breadth first.

    New elements of each round are ordered lexicographically by their
    coordinates rounded to six decimals, which keeps ids reproducible.
    """
    if gens is None:
        gens = generators()
    base = [np.asarray(gens.p, dtype=float), np.asarray(gens.q, dtype=float)]
    elements = [Q.ONE.copy()]
    frontier = [Q.ONE.copy()]

    def known(g, pool):
        return any(Q.dist_s3(g, h) < eps_match for h in pool)

    for _ in range(max_rounds):
        fresh: list[np.ndarray] = []
        for h in frontier:
            for s in base:
                g = Q.mul(h, s)
                if not known(g, elements) and not known(g, fresh):
                    fresh.append(g)
        if not fresh:
            break
        fresh.sort(key=_sort_key)
        elements.extend(fresh)
        frontier = fresh
        if len(elements) > 120:
            raise GroupClosureFailure(
                f"closure produced {len(elements)} > 120 elements; eps_match too small?"
            )
    else:
        raise GroupClosureFailure("closure did not stabilise")
    if len(elements) != 120:
        raise GroupClosureFailure(f"closure produced {len(elements)} elements, not 120")

    E = np.array(elements)
    prods = Q.mul(E[:, None, :], E[None, :, :]).reshape(-1, 4)
    dots = prods @ E.T
    mul_table = np.argmax(dots, axis=1).reshape(120, 120)
    if np.any(1.0 - dots.max(axis=1) > eps_match):
        raise GroupClosureFailure("products fall outside the element set")
    inv_table = np.argmax(Q.conj(E) @ E.T, axis=1)
    conj_table = inv_table.copy()  # unit quaternions: inverse == conjugate

    grp = BinaryDodecGroup(E, mul_table, inv_table, conj_table)
    named = {
        "p": grp.index(gens.p),
        "q": grp.index(gens.q),
        "-1": grp.index(-Q.ONE),
    }
    for key in ("q_prime", "q_dprime"):
        g = getattr(gens, key, None)
        if g is not None:
            named[key] = grp.index(g)
    grp.named.update(named)
    return grp


NOMINAL_ANGLES = tuple(k * math.pi for k in (0, 1 / 5, 1 / 3, 2 / 5, 1 / 2, 3 / 5, 2 / 3, 4 / 5, 1))


def real_part_census(group: BinaryDodecGroup, eps: float = Q.EPS_ALG) -> list[int]:
    """Number of elements whose angle from 1 equals each nominal angle."""
    re = group.real_parts()
    counts = []
    for ang in NOMINAL_ANGLES:
        counts.append(int(np.sum(np.abs(re - math.cos(ang)) < eps)))
    if sum(counts) != len(re):
        raise ValueError("some real parts match no nominal angle")
    return counts


def rotation_census(group: BinaryDodecGroup) -> dict[str, int]:
    """Classify the 60 rotations ``psi(+-g)`` by rotation angle ``2 alpha``.

    Rotation angles above pi are folded back (a turn by 8pi/5 is a turn by
    2pi/5 about the opposite axis).
    """
    seen = set()
    counts = {"identity": 0, "face_2pi5": 0, "vertex_2pi3": 0, "face_4pi5": 0, "edge_pi": 0}
    for gid, g in enumerate(group.elements):
        pair = frozenset((gid, int(group.mul_table[gid, group.named["-1"]])))
        if pair in seen:
            continue
        seen.add(pair)
        turn = 2 * Q.log_unit(g).alpha
        turn = min(turn, 2 * math.pi - turn)
        for key, ang in (
            ("identity", 0.0),
            ("face_2pi5", 2 * PI5),
            ("vertex_2pi3", 2 * math.pi / 3),
            ("face_4pi5", 4 * PI5),
            ("edge_pi", math.pi),
        ):
            if abs(turn - ang) < 1e-6:
                counts[key] += 1
                break
        else:
            raise ValueError(f"unexpected rotation angle {turn}")
    return counts


def _dual_cosine_side(A: float, B: float, C: float) -> float:
    """Cosine of the side opposite ``A`` from the dual law of cosines."""
    return (math.cos(A) + math.cos(B) * math.cos(C)) / (math.sin(B) * math.sin(C))


def verify_dodeca_trig(frame: BaseFrame | None = None) -> dict:
    """Check the pentagon trigonometry against the positioned frame.

    Returns a dict of named checks, each with measured and expected values
    and a ``passed`` flag (tolerance 1e-12).
    """
    frame = frame or base_frame()
    tol = 1e-12
    t = TRIG
    checks = {}

    def add(name, measured, expected):
        checks[name] = {
            "measured": float(measured),
            "expected": float(expected),
            "passed": bool(abs(measured - expected) <= tol),
        }

    add("cot_squares_sum", t.cot_pi5**2 + t.cot_2pi5**2, 2.0)
    add("cos_pi5_quadratic", 4 * t.cos_pi5**2 - 2 * t.cos_pi5 - 1, 0.0)
    add("cos_pi5_closed_form", math.cos(PI5), t.cos_pi5)
    add("frame_unit_f", frame.x**2 + frame.y**2, 1.0)
    add("frame_sum_xy", frame.x + frame.y, t.cot_pi5)

    # flag triangle with angles pi/2 (edge), pi/3 (vertex), pi/5 (centre);
    # the centre-to-vertex side is opposite the right angle
    cos_a = _dual_cosine_side(math.pi / 2, math.pi / 3, PI5)
    add("center_vertex_cosine", cos_a, t.cot_pi5 / math.sqrt(3))
    add(
        "center_vertex_distance",
        float(Q.dist_s3(Q.imag(frame.v), Q.imag(frame.f))),
        math.acos(t.cot_pi5 / math.sqrt(3)),
    )
    add(
        "center_vertex_chord_sq",
        float(np.sum((frame.v - frame.f) ** 2)),
        2 - 2 / math.sqrt(3) * t.cot_pi5,
    )
    add("flag_area", math.pi * (1 / 2 + 1 / 3 + 1 / 5) - math.pi, math.pi / 30)
    add("flag_area_tiles_sphere", 4 * math.pi / (math.pi / 30), 120.0)

    return {"checks": checks, "passed": all(c["passed"] for c in checks.values())}
