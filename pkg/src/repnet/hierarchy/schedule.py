"""Parameter schedules (r_i, s_i, t_i, lambda_i, omega_i) for the hierarchy.

Each level must satisfy these inequalities (primes denote index i - 1):

  r_growth      r_i > lambda_0^5 / (lambda_0 - 1) * (r' + s' + t' + 2 w' + 1)
  s_growth      s_i > 2 lambda_0^5 (r_i + s' + w_i)
  t_growth      t_i > lambda_0^3 (5 t' + r_i + s' + 2 w' + 1)
  t_distortion  t_i > 4 (lambda_i^4 + lambda_i^2 - 1) / lambda_i^2 * r_i + t' + Lambda_i (s' + 2 w' + w_i)
  lambda_decay  lambda_i^2 < lambda_{i-1}
  ratio_k5/k6   2^(2^-i) > r_i (lambda_i^k - 1) lambda_{i-1}^2 / (r' (lambda_{i-1}^k - 1) lambda_i^2),  k = 5, 6

with r_{-1} = s_{-1} = t_{-1} = w_{-1} = 0.  The tail product Lambda_i is
replaced by its bound lambda_i^2, which only strengthens t_distortion.  The
ratio conditions are vacuous at i = 0 (their denominator vanishes).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable


class ScheduleError(ValueError):
    pass


@dataclass
class Schedule:
    lambda0: float
    lambda_minus1: float
    r: list
    s: list
    t: list
    lam: list
    omega: list
    slack: float = 0.05

    @property
    def depth(self) -> int:
        return len(self.r)

    def Lambda(self, i: int, j: int) -> float:
        """prod_{k=i}^{j} lambda_k (1 for an empty range)."""
        out = 1.0
        for k in range(max(i, 0), j + 1):
            out *= self.lam[k]
        return out

    def Lambda_tail_bound(self, i: int) -> float:
        return self.lam[i] ** 2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Schedule":
        return cls(**d)


@dataclass
class ConditionCheck:
    name: str
    index: int
    lhs: float
    rhs: float
    slack: float
    ok: bool
    note: str = ""


def _prev(seq, i):
    return seq[i - 1] if i >= 1 else 0


def _rhs_r(l0, r1, s1, t1, w1):
    return l0 ** 5 / (l0 - 1) * (r1 + s1 + t1 + 2 * w1 + 1)


def _rhs_s(l0, r, s1, w):
    return 2 * l0 ** 5 * (r + s1 + w)


def _rhs_t(l0, r, s1, t1, w1):
    return l0 ** 3 * (5 * t1 + r + s1 + 2 * w1 + 1)


def _rhs_t_distortion(lam, r, s1, t1, w1, w):
    return 4 * (lam ** 4 + lam ** 2 - 1) / lam ** 2 * r + t1 + lam ** 2 * (s1 + 2 * w1 + w)


def _ratio_k(k, r, r1, lam, lam1):
    return r * (lam ** k - 1) * lam1 ** 2 / (r1 * (lam1 ** k - 1) * lam ** 2)


def check_conditions(sch: Schedule, required_slack: float = 0.0) -> list[ConditionCheck]:
    """Evaluate every inequality at every materialized index.

    ``slack`` is lhs/rhs - 1, except for lambda_decay where it is the log ratio
    ln(lambda_{i-1}) / ln(lambda_i^2) - 1.
    """
    out: list[ConditionCheck] = []
    l0 = sch.lambda0

    def add(name, i, lhs, rhs, slack=None, note=""):
        sl = lhs / rhs - 1 if slack is None else slack
        out.append(ConditionCheck(name, i, float(lhs), float(rhs), float(sl),
                                  bool(lhs > rhs and sl >= required_slack - 1e-12), note))

    add("lambda0<sqrt2", -1, math.sqrt(2), l0)
    add("lambda0>1", -1, l0, 1.0, slack=l0 - 1)
    for i in range(sch.depth):
        r, s, t, lam, w = sch.r[i], sch.s[i], sch.t[i], sch.lam[i], sch.omega[i]
        r1, s1, t1, w1 = _prev(sch.r, i), _prev(sch.s, i), _prev(sch.t, i), _prev(sch.omega, i)
        lam1 = sch.lam[i - 1] if i >= 1 else sch.lambda_minus1
        add("r_growth", i, r, _rhs_r(l0, r1, s1, t1, w1))
        add("s_growth", i, s, _rhs_s(l0, r, s1, w))
        add("t_growth", i, t, _rhs_t(l0, r, s1, t1, w1))
        add("t_distortion", i, t, _rhs_t_distortion(lam, r, s1, t1, w1, w), note="Lambda_i replaced by lambda_i^2")
        add("lambda_decay", i, lam1, lam ** 2, slack=math.log(lam1) / math.log(lam ** 2) - 1 if lam > 1 else math.inf)
        if i >= 1:
            bound = 2 ** (2.0 ** -i)
            add("ratio_k5", i, bound, _ratio_k(5, r, r1, lam, lam1))
            add("ratio_k6", i, bound, _ratio_k(6, r, r1, lam, lam1))
        if i >= 1:
            for name, seq in (("r", sch.r), ("s", sch.s), ("t", sch.t)):
                add(f"{name} increasing", i, seq[i], seq[i - 1])
    if sch.depth:
        add("Lambda_0<2", 0, 2.0, sch.Lambda_tail_bound(0), note="via Lambda_0 < lambda_0^2")
    return out


def failed(checks: list[ConditionCheck]) -> list[ConditionCheck]:
    return [c for c in checks if not c.ok]


def _ceil_with_slack(x: float, slack: float) -> int:
    return int(math.ceil(x * (1 + slack) * (1 + 1e-12)))


def make_schedule(lambda0: float, omega_probe: Callable[[int, int], float] | float, depth: int,
                  slack: float = 0.05, lambda_minus1: float | None = None) -> Schedule:
    """Smallest integer radii meeting every inequality with relative ``slack``.

    ``omega_probe(i, r_i)`` returns the measured repetitivity radius of the
    r_i-ball pattern; a number is used for every level.  lambda_0 is the
    given value; each later lambda_i is the largest value satisfying lambda_decay
    and the ratio conditions with the slack, found by bisection.
    """
    if not 1 < lambda0 < math.sqrt(2):
        raise ScheduleError("lambda0 must lie in (1, sqrt 2)")
    if depth < 1:
        raise ScheduleError("depth must be at least 1")
    lm1 = lambda0 ** (2 * (1 + 2 * slack)) if lambda_minus1 is None else lambda_minus1
    probe = omega_probe if callable(omega_probe) else (lambda i, r, _w=float(omega_probe): _w)
    sch = Schedule(lambda0, lm1, [], [], [], [], [], slack)
    l0 = lambda0
    for i in range(depth):
        r1, s1, t1, w1 = _prev(sch.r, i), _prev(sch.s, i), _prev(sch.t, i), _prev(sch.omega, i)
        r = _ceil_with_slack(_rhs_r(l0, r1, s1, t1, w1), slack)
        w = probe(i, r)
        if w is None or not math.isfinite(w):
            raise ScheduleError(f"level {i}: pattern of radius {r} is not repetitive in the window")
        w = float(w)
        s = _ceil_with_slack(_rhs_s(l0, r, s1, w), slack)
        if i == 0:
            lam = l0
        else:
            lam1 = sch.lam[i - 1]
            top = lam1 ** (1 / (2 * (1 + slack)))
            target = 2 ** (2.0 ** -i) / (1 + slack)

            def fits(L):
                return max(_ratio_k(5, r, r1, L, lam1), _ratio_k(6, r, r1, L, lam1)) <= target

            lo, hi = 1.0, top
            if fits(hi):
                lo = hi
            else:
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    if fits(mid):
                        lo = mid
                    else:
                        hi = mid
            lam = lo
            if not lam > 1:
                raise ScheduleError(f"level {i}: no distortion bound > 1 satisfies the lambda conditions")
        t = _ceil_with_slack(max(_rhs_t(l0, r, s1, t1, w1), _rhs_t_distortion(lam, r, s1, t1, w1, w)), slack)
        sch.r.append(r)
        sch.s.append(s)
        sch.t.append(t)
        sch.lam.append(lam)
        sch.omega.append(w)
    bad = failed(check_conditions(sch, slack))
    if bad:
        b = bad[0]
        raise ScheduleError(f"condition {b.name} fails at level {b.index}: lhs={b.lhs}, rhs={b.rhs}")
    return sch
