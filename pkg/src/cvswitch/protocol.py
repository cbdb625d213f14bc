"""The two-receiver teleportation switch.

Two EPR sources (correlation parameters ``r_a`` and ``r_b``) are mixed on two
balanced beamsplitters. Alice's port (mode 3) is jointly measured with the
input, and the classical outcomes displace both Bob1's mode 5 and Bob2's
mode 6. Flipping the sign of ``r_b`` moves the entanglement with mode 3 from
mode 6 to mode 5, which selects the receiver that reproduces the input.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Dict, NamedTuple, Optional, Tuple

from .algebra import (
    MINUS_FIRST,
    PLUS_FIRST,
    Basis,
    ModeExpr,
    NoiseModel,
    QuadExpr,
    add_scaled,
    beamsplit,
    commutator,
    two_mode_squeeze,
    variance,
)

_SQRT2 = math.sqrt(2.0)

#: Sum-criterion bound: two vacuum-level variances in unit-vacuum units.
WITNESS_BOUND = 4.0

#: Float noise floor used when deciding ties and the classical threshold.
ROUTE_TOL = 1e-12

CLASSICAL_FIDELITY = 0.5


class Bob(str, enum.Enum):
    BOB1 = "Bob1"
    BOB2 = "Bob2"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SwitchParams:
    r_a: float
    r_b: float
    g1: float = 1.0
    g2: float = 1.0
    alpha_in: complex = 0j
    v_in_x: float = 1.0
    v_in_y: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alpha_in", complex(self.alpha_in))
        values = (self.r_a, self.r_b, self.g1, self.g2, self.alpha_in.real,
                  self.alpha_in.imag, self.v_in_x, self.v_in_y)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"switch parameters must be finite: {self}")
        if self.v_in_x <= 0 or self.v_in_y <= 0:
            raise ValueError("input variances must be positive")

    @property
    def is_coherent(self) -> bool:
        return self.v_in_x == 1.0 and self.v_in_y == 1.0

    def gain(self, which: Bob) -> float:
        return self.g1 if Bob(which) is Bob.BOB1 else self.g2


@dataclass(frozen=True)
class SwitchNetwork:
    """All intermediate expressions of one switch instance.

    ``modes`` is keyed ``in, a1, a2, b1, b2, m3, m4, m5, m6``; the same names
    are used by the bundled circuit file.
    """

    basis: Basis
    noise: NoiseModel
    modes: Dict[str, ModeExpr]
    x_c: QuadExpr
    y_c: QuadExpr
    out5: ModeExpr
    out6: ModeExpr

    def output(self, which: Bob) -> ModeExpr:
        return self.out5 if Bob(which) is Bob.BOB1 else self.out6


def build_switch(p: SwitchParams) -> SwitchNetwork:
    basis = Basis()
    m_in = basis.fresh_mode("in_0", p.alpha_in)
    a1, a2 = two_mode_squeeze(basis.fresh_mode("a1_0"), basis.fresh_mode("a2_0"), p.r_a)
    b1, b2 = two_mode_squeeze(basis.fresh_mode("b1_0"), basis.fresh_mode("b2_0"), p.r_b)
    m3, m4 = beamsplit(a1, b1, MINUS_FIRST)
    m5, m6 = beamsplit(a2, b2, PLUS_FIRST)

    # Alice: X on the (in - 3) port of BS3, Y on the (in + 3) port.
    x_c = (m_in.x - m3.x) / _SQRT2
    y_c = (m_in.y + m3.y) / _SQRT2

    # RF splitters copy both classical outcomes to each receiver.
    out5 = add_scaled(m5, x_c, y_c, p.g1)
    out6 = add_scaled(m6, x_c, y_c, p.g2)

    noise = NoiseModel({basis["in_0"]: (p.v_in_x, p.v_in_y)})
    modes = {"in": m_in, "a1": a1, "a2": a2, "b1": b1, "b2": b2,
             "m3": m3, "m4": m4, "m5": m5, "m6": m6}
    return SwitchNetwork(basis, noise, modes, x_c, y_c, out5, out6)


def measurement_commutator(net: SwitchNetwork) -> float:
    """Cross commutator of Alice's two outcomes; zero, so both are measurable at once."""
    return commutator(net.x_c, net.y_c)


def output_variances(p: SwitchParams, which: Bob, net: Optional[SwitchNetwork] = None) -> Tuple[float, float]:
    net = net or build_switch(p)
    out = net.output(which)
    return variance(out.x, net.noise), variance(out.y, net.noise)


def closed_form_variances(p: SwitchParams, which: Bob) -> Tuple[float, float]:
    """Output variances written out directly from the EPR parameters.

    Upper signs of the exponent apply to Bob1, lower to Bob2; the gain is the
    selected receiver's own gain.
    """
    s = 1.0 if Bob(which) is Bob.BOB1 else -1.0
    g = p.gain(which)
    plus = ((1 + g) / 2) ** 2 * (math.exp(-2 * p.r_a) + math.exp(s * 2 * p.r_b))
    minus = ((1 - g) / 2) ** 2 * (math.exp(2 * p.r_a) + math.exp(-s * 2 * p.r_b))
    return g * g * p.v_in_x + plus + minus, g * g * p.v_in_y + plus + minus


def fidelity_from_variances(v_x: float, v_y: float, gain: float, alpha_in: complex) -> float:
    """Coherent-state teleportation fidelity for a Gaussian output."""
    s = math.sqrt((v_x + 1.0) * (v_y + 1.0))
    return 2.0 / s * math.exp(-2.0 * (1.0 - gain) ** 2 * abs(alpha_in) ** 2 / s)


def fidelity(p: SwitchParams, which: Bob, net: Optional[SwitchNetwork] = None) -> float:
    if not p.is_coherent:
        raise ValueError("fidelity is defined for a coherent input (unit input variances)")
    v_x, v_y = output_variances(p, which, net)
    return fidelity_from_variances(v_x, v_y, p.gain(which), p.alpha_in)


class Witness(NamedTuple):
    w_x: float
    w_y: float
    total: float

    @property
    def entangled(self) -> bool:
        return self.total < WITNESS_BOUND


PAIRS = ((3, 5), (3, 6))


def _pair_mode(net: SwitchNetwork, pair) -> ModeExpr:
    pair = tuple(pair)
    if pair not in PAIRS:
        raise ValueError(f"witness pair must be one of {PAIRS}, got {pair}")
    return net.modes["m5"] if pair[1] == 5 else net.modes["m6"]


def epr_witness(p: SwitchParams, pair=(3, 5), net: Optional[SwitchNetwork] = None) -> Witness:
    """Sum criterion ``Var(X3 - Xk) + Var(Y3 + Yk)`` for ``k`` in {5, 6}."""
    net = net or build_switch(p)
    m3, mk = net.modes["m3"], _pair_mode(net, pair)
    w_x = variance(m3.x - mk.x, net.noise)
    w_y = variance(m3.y + mk.y, net.noise)
    return Witness(w_x, w_y, w_x + w_y)


def conjugate_witness(p: SwitchParams, pair=(3, 5), net: Optional[SwitchNetwork] = None) -> Witness:
    """Sum criterion with the opposite correlation signs, ``Var(X3 + Xk) + Var(Y3 - Yk)``.

    Certifies the ``r_a < 0`` regimes that :func:`epr_witness` cannot see.
    """
    net = net or build_switch(p)
    m3, mk = net.modes["m3"], _pair_mode(net, pair)
    w_x = variance(m3.x + mk.x, net.noise)
    w_y = variance(m3.y - mk.y, net.noise)
    return Witness(w_x, w_y, w_x + w_y)


def entangled(p: SwitchParams, pair=(3, 5), net: Optional[SwitchNetwork] = None) -> bool:
    """True when either sign orientation of the sum criterion drops below the bound."""
    net = net or build_switch(p)
    return epr_witness(p, pair, net).entangled or conjugate_witness(p, pair, net).entangled


def route(p: SwitchParams, net: Optional[SwitchNetwork] = None) -> Optional[Bob]:
    """Receiver that beats the classical limit with the strictly higher fidelity.

    Differences below ``ROUTE_TOL`` count as ties, so rounding noise at the
    classical point cannot pick a winner.
    """
    net = net or build_switch(p)
    f1 = fidelity(p, Bob.BOB1, net)
    f2 = fidelity(p, Bob.BOB2, net)
    if abs(f1 - f2) <= ROUTE_TOL:
        return None
    best, f = (Bob.BOB1, f1) if f1 > f2 else (Bob.BOB2, f2)
    if f <= CLASSICAL_FIDELITY + ROUTE_TOL:
        return None
    return best


REPORT_FIELDS = (
    "r_a", "r_b", "g1", "g2", "alpha_re", "alpha_im",
    "bob1_var_x", "bob1_var_y", "bob1_fidelity",
    "bob2_var_x", "bob2_var_y", "bob2_fidelity",
    "w35_x", "w35_y", "w35_total",
    "w36_x", "w36_y", "w36_total",
    "route",
)


@dataclass(frozen=True)
class SwitchReport:
    params: SwitchParams
    bob1_var: Tuple[float, float]
    bob2_var: Tuple[float, float]
    bob1_fidelity: float
    bob2_fidelity: float
    w35: Witness
    w36: Witness
    route: Optional[Bob]

    def as_row(self) -> Dict[str, object]:
        """Flat scalar record with keys ``REPORT_FIELDS``; ``route`` is ``"None"`` when unrouted."""
        p = self.params
        return {
            "r_a": p.r_a, "r_b": p.r_b, "g1": p.g1, "g2": p.g2,
            "alpha_re": p.alpha_in.real, "alpha_im": p.alpha_in.imag,
            "bob1_var_x": self.bob1_var[0], "bob1_var_y": self.bob1_var[1],
            "bob1_fidelity": self.bob1_fidelity,
            "bob2_var_x": self.bob2_var[0], "bob2_var_y": self.bob2_var[1],
            "bob2_fidelity": self.bob2_fidelity,
            "w35_x": self.w35.w_x, "w35_y": self.w35.w_y, "w35_total": self.w35.total,
            "w36_x": self.w36.w_x, "w36_y": self.w36.w_y, "w36_total": self.w36.total,
            "route": str(self.route),
        }


def report(p: SwitchParams) -> SwitchReport:
    net = build_switch(p)
    return SwitchReport(
        params=p,
        bob1_var=output_variances(p, Bob.BOB1, net),
        bob2_var=output_variances(p, Bob.BOB2, net),
        bob1_fidelity=fidelity(p, Bob.BOB1, net),
        bob2_fidelity=fidelity(p, Bob.BOB2, net),
        w35=epr_witness(p, (3, 5), net),
        w36=epr_witness(p, (3, 6), net),
        route=route(p, net),
    )


def params_dict(p: SwitchParams) -> Dict[str, object]:
    d = asdict(p)
    d["alpha_in"] = [p.alpha_in.real, p.alpha_in.imag]
    return d
