"""Drive a geodesic ray through the cylinder horoball family.

The ray runs from the base point i toward a boundary direction theta in
(0, 1).  Candidate tangencies are generated by walking the Stern-Brocot
tree toward theta: every mediant visited is a semiconvergent of theta,
and the walk also tests the mediant neighbours up to depth two on either
side of the path (a brute-force sweep test checks that this family covers
every horoball actually met).  The re-marked origami whose horizontal
cylinders are the cylinders in the mediant direction is maintained
incrementally: one generator action per step.

Exactness: theta is an exact rational num/den (samples are dyadic).  For
a direction (p, q) put

    A = q theta - p        (integer A_int / den)
    B = q + p theta        (integer B_int / den)

Both evolve additively along mediants, so the walk is exact integer
arithmetic.  With h_w = c^2 / (n eps) the ray misses the horoball at p/q
unless x = (2 A B h_w / (1 + theta^2))^2 <= 1, an exact integer
comparison.  Only actual hits pay for arbitrary-precision evaluation of
times, angles, excursion and twist, and those start from exact integers,
so there is no precision loss anywhere in the pipeline.

Times are Teichmueller times: half the hyperbolic arclength (the diagonal
flow moves i to e^{2t} i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from random import Random
from typing import List, Optional, Sequence, Tuple

import mpmath

from . import scalar
from .hyperbolic import UnboundedExcursionError
from .origami import Origami, act_L, act_S_inv, act_T, epsilon0, horizontal_cylinders
from .scalar import INFINITY

RECORD_PREC = 320  # bits; record quantities start from exact integers
PRECISION_GUARD_BITS = 64


def xi_prime(xi: float) -> float:
    """The depth threshold constant: 0.5 sqrt(1 - 1/xi^2), in (0, 1/2)."""
    if not xi > 1:
        raise ValueError(f"xi must be > 1, got {xi}")
    return 0.5 * math.sqrt(1 - 1 / (xi * xi))


def twist_count(area, eps, phi, phi_max):
    """Twists across one excursion:

        (2 A / eps) (sin phi_max / sin phi) sqrt(1 - sin^2 phi / sin^2 phi_max)
    """
    if phi == 0:
        raise UnboundedExcursionError("phi = 0: ray aimed at the tangency")
    if phi < 0 or phi > phi_max:
        raise ValueError(f"need 0 < phi <= phi_max, got phi={phi}, phi_max={phi_max}")
    s1 = scalar.sin(phi)
    s2 = scalar.sin(phi_max)
    ratio_sq = (s1 * s1) / (s2 * s2)
    radicand = 1 - ratio_sq
    if radicand < 0:
        radicand = 0 * radicand
    return (2 * area / eps) * (s2 / s1) * scalar.sqrt(radicand)


@dataclass
class ExcursionRecord:
    label: str
    p: int
    q: int
    cyl_index: int
    weight: float
    t_entry: float
    t_exit: float  # math.inf when the ray runs into the tangency
    phi: float  # may underflow to 0.0 for very late excursions
    phi_max: float
    E: float  # full-crossing value; 0.0 for tangency-bound records
    E_area: float
    tw: float
    complete: bool
    kept: bool = False


@dataclass(frozen=True)
class TrajectoryConfig:
    surface: Origami
    T: float
    seed: Optional[int] = None
    theta: Optional[Fraction] = None  # sampled from seed when None
    eps: Optional[float] = None  # defaults to epsilon0 / 2
    xi: float = 2.0
    s_xi: float = 2.0
    bits: Optional[int] = None  # theta sampling resolution
    kappa: float = 4.0  # denominator horizon safety factor

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not self.xi > 1:
            raise ValueError(f"xi must be > 1, got {self.xi}")
        if self.s_xi < 0:
            raise ValueError(f"s_xi must be >= 0, got {self.s_xi}")
        if self.theta is None and self.seed is None:
            raise ValueError("either theta or a seed is required")

    def resolved_eps(self) -> float:
        e0 = epsilon0(self.surface)
        if self.eps is None:
            return e0 / 2
        if not 0 < self.eps <= e0:
            raise ValueError(f"eps={self.eps} exceeds the structural bound epsilon0={e0}")
        return self.eps

    def resolved_bits(self) -> int:
        if self.bits is not None:
            return self.bits
        # need ~2.89 T bits to separate theta from denominators up to
        # kappa e^T; round up generously
        return int(math.ceil(2.9 * self.T)) + 1024


@dataclass
class DroppedSummary:
    final_partial: int = 0
    shallow: int = 0
    early: int = 0
    shallow_E_area: float = 0.0
    early_E_area: float = 0.0


@dataclass
class TrajectoryResult:
    records: List[ExcursionRecord]
    surface: Origami
    T: float
    eps: float
    epsilon0: float
    xi: float
    s_xi: float
    theta_num: int
    theta_den: int
    coefficients: Tuple[int, ...]
    exhausted: bool
    rational_terminal: bool
    overlap_pairs: int
    base_inside_clamps: int


def sample_theta(bits: int, rng: Random) -> Fraction:
    """Uniform dyadic direction in (0, 1) at the given resolution."""
    num = rng.getrandbits(bits) | 1  # odd: never terminates early in lowest terms
    if num >= (1 << bits):
        num = (1 << bits) - 1
    return Fraction(num, 1 << bits)


def _coefficients_from_runs(runs: List[int]) -> Tuple[int, ...]:
    return tuple(r for r in runs if r > 0)


K_RUN = 16  # nodes tested at each end of a same-direction run


@dataclass
class _Interval:
    """Stern-Brocot bracket around theta with the re-marked origami state.

    ``Q = B^-1 . o`` for the bracket matrix B = [R | L] (columns), and
    ``A = q num - p den``, ``Bv = q den + p num`` for both endpoints (exact
    integers, evolving additively).  The mediant's cylinder structure in
    its own direction is the horizontal structure of ``L_mat^-1 . Q``.
    """

    pL: int
    qL: int
    AL: int
    BL: int
    pR: int
    qR: int
    AR: int
    BR: int
    Q: Origami

    def candidates(self):
        """Mediant of the bracket plus its mediant neighbours to depth two.

        Yields (p, q, A, B, origami).
        """
        pm, qm = self.pL + self.pR, self.qL + self.qR
        Am, Bm = self.AL + self.AR, self.BL + self.BR
        QL = act_L(self.Q, -1)  # bracket [L, m]
        QR = act_T(self.Q, -1)  # bracket [m, R]
        yield (pm, qm, Am, Bm, act_L(self.Q, -1))
        yield (pm + self.pL, qm + self.qL, Am + self.AL, Bm + self.BL, act_L(QL, -1))
        yield (pm + self.pR, qm + self.qR, Am + self.AR, Bm + self.BR, act_L(QR, -1))
        yield (pm + 2 * self.pL, qm + 2 * self.qL, Am + 2 * self.AL, Bm + 2 * self.BL,
               act_L(self.Q, -3))
        yield (2 * pm + self.pL, 2 * qm + self.qL, 2 * Am + self.AL, 2 * Bm + self.BL,
               act_L(act_T(QL, -1), -1))
        yield (2 * pm + self.pR, 2 * qm + self.qR, 2 * Am + self.AR, 2 * Bm + self.BR,
               act_L(act_L(QR, -1), -1))
        yield (pm + 2 * self.pR, qm + 2 * self.qR, Am + 2 * self.AR, Bm + 2 * self.BR,
               act_L(act_T(self.Q, -2), -1))

    def at_left_run_step(self, j: int) -> "_Interval":
        """Bracket after j same-direction steps moving the LEFT endpoint."""
        return _Interval(
            self.pL + j * self.pR, self.qL + j * self.qR,
            self.AL + j * self.AR, self.BL + j * self.BR,
            self.pR, self.qR, self.AR, self.BR,
            act_T(self.Q, -j) if j else self.Q,
        )

    def at_right_run_step(self, j: int) -> "_Interval":
        """Bracket after j same-direction steps moving the RIGHT endpoint."""
        return _Interval(
            self.pL, self.qL, self.AL, self.BL,
            self.pR + j * self.pL, self.qR + j * self.qL,
            self.AR + j * self.AL, self.BR + j * self.BL,
            act_L(self.Q, -j) if j else self.Q,
        )


def enumerate_excursions(cfg: TrajectoryConfig) -> TrajectoryResult:
    """All excursions of the ray i -> theta with Teichmueller entry time < T."""
    o = cfg.surface
    o.validate()
    e0 = epsilon0(o)
    eps = cfg.resolved_eps()
    eps_frac = Fraction(eps)
    bits = cfg.resolved_bits()
    if cfg.theta is not None:
        # user-supplied directions are exact rationals: no sampling
        # uncertainty, so no precision budget applies
        theta = Fraction(cfg.theta)
        if not 0 < theta < 1:
            raise ValueError(f"theta must be in (0, 1), got {theta}")
        theta_exact = True
    else:
        theta = sample_theta(bits, Random(cfg.seed))
        theta_exact = False
    num, den = theta.numerator, theta.denominator

    n = o.n
    norm = den * den + num * num  # den^2 (1 + theta^2)
    # horizon: candidates up to q <= kappa e^T; hit tests are exact so the
    # cap only needs to be generous
    q_bit_cap = int(math.ceil((cfg.T + math.log(cfg.kappa)) * 1.4426950408889634)) + 2
    if theta_exact:
        precision_bit_cap = q_bit_cap + 1
    else:
        precision_bit_cap = (den.bit_length() - PRECISION_GUARD_BITS) // 2

    records: List[ExcursionRecord] = []
    tested: dict = {}
    clamps = 0

    def test_candidate(p, q, A, B, node: Origami):
        nonlocal clamps
        if A == 0:
            return  # handled as the rational terminal
        if (p, q) in tested:
            return
        tested[(p, q)] = True
        cyls = horizontal_cylinders(node)
        for idx, (circ, height) in enumerate(sorted(cyls, reverse=True)):
            h_w = Fraction(circ * circ, n) / eps_frac
            # miss unless (2 A B h_w / (den^2 + num^2))^2 <= 1, exactly
            lhs = 2 * abs(A) * abs(B) * h_w.numerator
            rhs = norm * h_w.denominator
            if lhs > rhs:
                continue
            rec = _build_record(p, q, idx, circ, height, A, B, h_w, norm, n, eps, cfg.T)
            if rec is None:
                continue
            if rec.t_entry == 0.0:
                clamps += 1
            records.append(rec)

    # anchors: the cusp at infinity (direction (1, 0), horizontal cylinders
    # of o) and the tangency 0 (direction (0, 1), vertical cylinders)
    test_candidate(1, 0, -den, num, o)
    test_candidate(0, 1, num, den, act_S_inv(o))

    bracket = _Interval(0, 1, num, den, 1, 0, -den, num, o)
    runs: List[int] = []
    exhausted = False
    rational_terminal = False

    def test_interval_nodes(iv: _Interval):
        for p, q, A, B, neigh in iv.candidates():
            if q.bit_length() <= q_bit_cap:
                test_candidate(p, q, A, B, neigh)

    while True:
        qm = bracket.qL + bracket.qR
        if qm.bit_length() > q_bit_cap:
            break
        if qm.bit_length() > precision_bit_cap:
            exhausted = True
            break
        Am = bracket.AL + bracket.AR
        # the walk moves in one direction for a whole run (one continued
        # fraction coefficient); only the run's first and last K_RUN nodes
        # can carry horoballs the ray enters, and the bulk of the run is
        # skipped with a single permutation power
        leftward = Am > 0  # theta above the mediant: left endpoint moves
        if leftward:
            u, v = bracket.AL, -bracket.AR
            at_step = bracket.at_left_run_step
        else:
            u, v = -bracket.AR, bracket.AL
            at_step = bracket.at_right_run_step
        terminal_j = u // v if u % v == 0 else None
        k = (u + v - 1) // v - 1  # same-direction steps before the flip
        test_js = set(range(min(k, K_RUN))) | set(range(max(0, k - K_RUN), k))
        for j in sorted(test_js):
            test_interval_nodes(at_step(j))
        if terminal_j is not None:
            iv = at_step(terminal_j - 1)
            pm, qm = iv.pL + iv.pR, iv.qL + iv.qR
            Bm = iv.BL + iv.BR
            assert iv.AL + iv.AR == 0
            rational_terminal = True
            runs.append(terminal_j)
            _terminal_records(records, pm, qm, Bm, act_L(iv.Q, -1), n, eps_frac, norm, cfg.T)
            break
        runs.append(k)
        bracket = at_step(k)

    records.sort(key=lambda r: (r.t_entry, r.t_exit))
    overlap = _count_overlaps(records)
    return TrajectoryResult(
        records=records,
        surface=o,
        T=cfg.T,
        eps=eps,
        epsilon0=e0,
        xi=cfg.xi,
        s_xi=cfg.s_xi,
        theta_num=num,
        theta_den=den,
        coefficients=_coefficients_from_runs(runs),
        exhausted=exhausted,
        rational_terminal=rational_terminal,
        overlap_pairs=overlap,
        base_inside_clamps=clamps,
    )


def _build_record(p, q, idx, circ, height, A, B, h_w, norm, n, eps, T):
    weight = circ * height / n
    with mpmath.mp.workprec(RECORD_PREC):
        x = mpmath.mpf(4 * A * A * B * B * h_w.numerator**2) / mpmath.mpf(
            norm * norm * h_w.denominator**2
        )
        one = mpmath.mpf(1)
        if x > 1:
            return None
        s = mpmath.sqrt(one - x)
        hw = mpmath.mpf(h_w.numerator) / h_w.denominator
        u_minus = 2 * mpmath.mpf(B * B) / norm * hw / (1 + s)
        u_plus = (1 + s) * mpmath.mpf(norm) / (2 * mpmath.mpf(A * A) * hw)
        if u_plus <= 1:
            return None  # crossing happened before the base
        t_entry = float(mpmath.log(u_minus) / 2) if u_minus > 1 else 0.0
        if t_entry >= T:
            return None
        t_exit = float(mpmath.log(u_plus) / 2)
        if x == 0:
            E = mpmath.inf
        else:
            E = 2 * mpmath.sqrt((one - x) / x)
        phi = 2 * mpmath.atan2(abs(mpmath.mpf(A)), abs(mpmath.mpf(B)))
        inv_h_app = mpmath.mpf(norm) / (hw * mpmath.mpf(A * A + B * B))
        phi_max = 2 * mpmath.asin(min(one, inv_h_app))
        tw = twist_count(mpmath.mpf(weight), mpmath.mpf(eps), phi, phi_max)
        complete = t_exit <= T
        return ExcursionRecord(
            label=f"{p}/{q}#{idx}",
            p=int(p),
            q=int(q),
            cyl_index=idx,
            weight=weight,
            t_entry=t_entry,
            t_exit=t_exit,
            phi=float(phi),
            phi_max=float(phi_max),
            E=float(E),
            E_area=float(weight * E),
            tw=float(tw),
            complete=complete,
        )


def _terminal_records(records, p, q, B, node: Origami, n, eps_frac, norm, T):
    """The ray ends at p/q: it enters every horoball there and never leaves."""
    with mpmath.mp.workprec(RECORD_PREC):
        for idx, (circ, height) in enumerate(sorted(horizontal_cylinders(node), reverse=True)):
            h_w = Fraction(circ * circ, n) / eps_frac
            hw = mpmath.mpf(h_w.numerator) / h_w.denominator
            u_entry = hw * mpmath.mpf(B * B) / norm
            t_entry = float(mpmath.log(u_entry) / 2) if u_entry > 1 else 0.0
            if t_entry >= T:
                continue
            weight = circ * height / n
            inv_h_app = mpmath.mpf(norm) / (hw * mpmath.mpf(B * B))
            phi_max = 2 * mpmath.asin(min(mpmath.mpf(1), inv_h_app))
            records.append(
                ExcursionRecord(
                    label=f"{p}/{q}#{idx}",
                    p=int(p),
                    q=int(q),
                    cyl_index=idx,
                    weight=weight,
                    t_entry=t_entry,
                    t_exit=INFINITY,
                    phi=0.0,
                    phi_max=float(phi_max),
                    E=0.0,
                    E_area=0.0,
                    tw=0.0,
                    complete=False,
                )
            )


def _count_overlaps(records: Sequence[ExcursionRecord]) -> int:
    count = 0
    active_exit = -INFINITY
    for rec in records:
        if rec.t_entry < active_exit:
            count += 1
        if rec.t_exit != INFINITY:
            active_exit = max(active_exit, rec.t_exit)
    return count


def complete_records(records: Sequence[ExcursionRecord], T: float) -> List[ExcursionRecord]:
    """Records fully traversed by time T (the final partial one drops out)."""
    return [r for r in records if r.t_entry < T and r.t_exit <= T]


def filter_excursions(
    records: Sequence[ExcursionRecord],
    xi: float,
    T: float,
    s_xi: float = 2.0,
):
    """Split records into the deep late population and a dropped summary.

    Drops (a) excursions not completed by T (the final partial one), (b)
    shallow excursions with E <= 1/xi', (c) excursions entering before
    s_xi.  The kept population satisfies the twist sandwich; the trimmed
    statistics themselves run on all complete records.
    """
    threshold = 1 / xi_prime(xi)
    kept = []
    dropped = DroppedSummary()
    for rec in records:
        if rec.t_entry >= T:
            continue
        if not (rec.t_exit <= T):
            dropped.final_partial += 1
            rec.kept = False
            continue
        if rec.E <= threshold:
            dropped.shallow += 1
            dropped.shallow_E_area += rec.E_area
            rec.kept = False
            continue
        if rec.t_entry < s_xi:
            dropped.early += 1
            dropped.early_E_area += rec.E_area
            rec.kept = False
            continue
        rec.kept = True
        kept.append(rec)
    return kept, dropped
