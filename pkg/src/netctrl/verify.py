"""Top-level verdicts: moving/fixed uncontrollable modes, structural
controllability, design feasibility, and the randomized realization check.

Two independent routes exist for the fixed-mode question: the networked
per-mode matroid intersection and the lumped matroid-union test on the
diagonalized plant. They must agree; the test suite exercises that
agreement, and `check_structural_controllability` uses the networked route.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import exactla as ex
from . import ratfun, structgraph
from .matroid import (GenericPattern, NumericColumns, matroid_intersection_rank,
                      matroid_union_rank)
from .model import (NdsModel, StructuredPattern, SubsystemModel,
                    assemble_lumped, check_well_posedness, diagonalize_parameters)

UNSTABLE_MARGIN = 1e-9


class IllPosedError(RuntimeError):
    """The model failed its well-posedness check."""


@dataclass(frozen=True)
class ModeCheck:
    lam: complex
    target: int        # required common-independent-set size
    achieved: int

    @property
    def shortfall(self) -> int:
        return self.target - self.achieved

    @property
    def is_fum(self) -> bool:
        return self.shortfall > 0


def routing_pattern_q1(pattern: StructuredPattern) -> StructuredPattern:
    """The [P^T  I] pattern whose column matroid gates every mode test."""
    entries: dict[tuple[int, int], str] = {}
    for (r, c), pid in pattern.entries.items():
        entries[(c, r)] = pid
    for j in range(pattern.cols):
        entries[(j, pattern.rows + j)] = f"_id_{j}"
    return StructuredPattern(pattern.cols, pattern.rows + pattern.cols, entries)


def check_fum_networked(nds: NdsModel, modes: Optional[list] = None,
                        rank_tol: float = ratfun.RANK_TOL) -> list[ModeCheck]:
    """Per-mode intersection ranks against their null-space targets.

    A mode is fixed-uncontrollable exactly when the intersection rank falls
    short of the total per-subsystem null-space dimension at that eigenvalue.
    """
    if modes is None:
        spec = ratfun.spectrum(nds)
        modes = [ratfun.mode_data(nds, lam, rank_tol) for lam in spec.values]
    q1 = GenericPattern(routing_pattern_q1(assemble_lumped(nds).P_pattern))
    out = []
    for md in modes:
        if md.M_r == 0:
            out.append(ModeCheck(md.lam, 0, 0))
            continue
        q2 = NumericColumns(np.hstack([md.y_all, md.z_all]), rank_tol)
        best = matroid_intersection_rank(q1, q2)
        out.append(ModeCheck(md.lam, md.M_r, best.certified_rank))
    return out


def fums_of(mode_checks: list[ModeCheck]) -> list[ModeCheck]:
    return [mc for mc in mode_checks if mc.is_fum]


def check_fum_lumped(nds: NdsModel, modes: Optional[list] = None,
                     rank_tol: float = ratfun.RANK_TOL, seed: int = 0) -> list[ModeCheck]:
    """Fixed-mode test on the diagonalized lumped plant via union rank.

    For each pooled eigenvalue the target is full ground rank n + 2k of the
    union of the transposed plant matroid with the two-diagonal parameter
    pattern; a shortfall certifies a fixed uncontrollable mode.
    """
    plant = assemble_lumped(nds)
    u, k, v = diagonalize_parameters(plant.P_pattern)
    n = nds.M_x
    q = nds.M_u
    a_xv_u = ex.mmul(plant.A_xv, u)
    v_a_zx = ex.mmul(v, plant.A_zx)
    v_a_zv_u = ex.mmul(ex.mmul(v, plant.A_zv), u)
    v_b_zu = ex.mmul(v, plant.B_zu)
    lam_list = ([md.lam for md in modes] if modes is not None
                else ratfun.spectrum(nds).values)
    a_xx = ex.to_float(plant.A_xx)
    b_xu = ex.to_float(plant.B_xu).reshape(n, q)
    a_xv_u_f = ex.to_float(a_xv_u).reshape(n, k)
    v_a_zx_f = ex.to_float(v_a_zx).reshape(k, n)
    v_a_zv_u_f = ex.to_float(v_a_zv_u).reshape(k, k)
    v_b_zu_f = ex.to_float(v_b_zu).reshape(k, q)
    pat_entries = {}
    for i in range(k):
        pat_entries[(i, n + i)] = f"_t_{i}"
        pat_entries[(i, n + k + i)] = f"_ts_{i}"
    gen = StructuredPattern(k, n + 2 * k, pat_entries)
    out = []
    for lam in lam_list:
        dtype = complex if abs(complex(lam).imag) > 0 else float
        lam_c = complex(lam) if dtype is complex else complex(lam).real
        top = np.hstack([lam_c * np.eye(n) - a_xx, b_xu, a_xv_u_f]).astype(dtype)
        mid = np.hstack([-v_a_zx_f, v_b_zu_f, v_a_zv_u_f]).astype(dtype)
        bot = np.hstack([np.zeros((k, n + q)), np.eye(k)]).astype(dtype)
        big = np.vstack([top, mid, bot])
        numeric = big.T  # ground elements are the plant rows
        rank = matroid_union_rank(numeric, gen, seed=seed)
        out.append(ModeCheck(lam, n + 2 * k, rank))
    return out


def check_pdum(nds: NdsModel, tfms: Optional[list] = None,
               cross_check: bool = True) -> Optional[list]:
    """Witness cycle for a parameter-dependent uncontrollable mode, if any.

    The networked graph answers the question; optionally the square lumped
    graph is consulted as well, and the two are required to agree.
    """
    tfms = tfms if tfms is not None else ratfun.nds_tfms(nds)
    nacg = structgraph.build_nacg(nds, tfms)
    witness = structgraph.find_input_unreachable_lambda_cycle(nacg)
    if cross_check:
        lumped = structgraph.build_lumped_acg(nds, tfms)
        lumped_witness = structgraph.find_input_unreachable_lambda_cycle(lumped)
        if (witness is None) != (lumped_witness is None):
            raise AssertionError("networked and lumped cycle tests disagree "
                                 "(internal error)")
    return witness


@dataclass(frozen=True)
class Verdict:
    structurally_controllable: bool
    pdum: Optional[list]                 # witness cycle (vertex tuples) or None
    lambda_edge: Optional[tuple]         # unreachable frequency-dependent edge
    fums: list                           # ModeChecks with shortfall > 0
    per_mode: list                       # every ModeCheck
    rank_tol: float
    eig_tol: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "structurally_controllable": self.structurally_controllable,
            "pdum_witness": ([structgraph.vertex_name(v) for v in self.pdum]
                             if self.pdum else None),
            "unreachable_lambda_edge": ([structgraph.vertex_name(self.lambda_edge[0]),
                                         structgraph.vertex_name(self.lambda_edge[1])]
                                        if self.lambda_edge else None),
            "fixed_uncontrollable_modes": [
                {"lambda": _fmt_c(mc.lam), "target": mc.target,
                 "achieved": mc.achieved, "shortfall": mc.shortfall}
                for mc in self.fums],
            "per_mode": [
                {"lambda": _fmt_c(mc.lam), "target": mc.target, "achieved": mc.achieved}
                for mc in self.per_mode],
            "tolerances": {"rank": self.rank_tol, "eig": self.eig_tol},
            "seed": self.seed,
        }


def _fmt_c(lam: complex) -> str:
    lam = complex(lam)
    if lam.imag == 0:
        return repr(lam.real)
    return repr(lam)


def check_structural_controllability(nds: NdsModel, seed: int = 0,
                                     rank_tol: float = ratfun.RANK_TOL,
                                     eig_tol: float = ratfun.EIG_TOL,
                                     wellposed_trials: int = 3,
                                     jobs: int = 1) -> Verdict:
    """Full verdict: unreachable frequency-dependent edge plus per-mode ranks.

    jobs > 1 computes the independent per-mode null-space payloads on a
    thread pool; everything here is pure, so the result is unchanged.
    """
    wp = check_well_posedness(nds, trials=wellposed_trials, seed=seed)
    if not wp.well_posed:
        raise IllPosedError(f"model is ill-posed: {wp.detail}")
    tfms = ratfun.nds_tfms(nds)
    nacg = structgraph.build_nacg(nds, tfms)
    scc = structgraph.scc_decompose(nacg)
    lam_edge = structgraph.find_input_unreachable_lambda_edge(nacg, scc)
    cycle = structgraph.find_input_unreachable_lambda_cycle(nacg, scc)
    spec = ratfun.spectrum(nds, eig_tol)
    if jobs > 1 and len(spec.values) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            modes = list(pool.map(lambda l: ratfun.mode_data(nds, l, rank_tol),
                                  spec.values))
    else:
        modes = [ratfun.mode_data(nds, lam, rank_tol) for lam in spec.values]
    checks = check_fum_networked(nds, modes, rank_tol)
    fums = fums_of(checks)
    ok = lam_edge is None and not fums
    return Verdict(structurally_controllable=ok, pdum=cycle, lambda_edge=lam_edge,
                   fums=fums, per_mode=checks, rank_tol=rank_tol, eig_tol=eig_tol,
                   seed=seed)


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    augmented_controllable: list       # (subsystem index, bool)
    port_budget_ok: bool
    max_target: int
    output_ports: int
    external_route_ok: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "condition_subsystem_controllable": [
                {"subsystem": i + 1, "ok": ok} for i, ok in self.augmented_controllable],
            "condition_port_budget": {"ok": self.port_budget_ok,
                                      "max_target": self.max_target,
                                      "output_ports": self.output_ports},
            "condition_external_route": self.external_route_ok,
            "detail": self.detail,
        }


def check_feasibility(subsystems: list[SubsystemModel], mode_filter: str = "all",
                      rank_tol: float = ratfun.RANK_TOL,
                      eig_tol: float = ratfun.EIG_TOL) -> FeasibilityReport:
    """Existence test for a structurally controllable interconnection.

    (i) each subsystem must be controllable through the widened input matrix
    [B  A_xv]; (ii) the output-port count must cover the largest per-mode
    target; (iii) some subsystem must expose an external-input route to its
    outputs, unless no transfer entry is frequency dependent.
    """
    empty = StructuredPattern(sum(s.m_v0 for s in subsystems),
                              sum(s.m_z0 for s in subsystems), {})
    nds = NdsModel(subsystems, empty)
    cond_i = []
    detail = []
    for idx, aug in enumerate(nds.analysis):
        a = ex.to_float(aug.A_xx)
        wide = np.hstack([ex.to_float(aug.B_xu).reshape(aug.m_x, aug.m_u),
                          ex.to_float(aug.A_xv).reshape(aug.m_x, aug.m_v)])
        ok = True
        if aug.m_x:
            for lam in _filtered(np.linalg.eigvals(a), mode_filter):
                pbh = np.hstack([lam * np.eye(aug.m_x) - a, wide.astype(complex)])
                if ratfun._float_rank(pbh, rank_tol) < aug.m_x:
                    ok = False
                    detail.append(f"subsystem {idx + 1} uncontrollable at {lam:.6g}")
                    break
        cond_i.append((idx, ok))
    spec = ratfun.spectrum(nds, eig_tol)
    lams = [l for l in spec.values
            if mode_filter == "all" or l.real >= -UNSTABLE_MARGIN]
    targets = [ratfun.mode_data(nds, lam, rank_tol).M_r for lam in lams]
    max_target = max(targets, default=0)
    cond_ii = nds.M_z >= max_target
    if not cond_ii:
        detail.append(f"output ports {nds.M_z} < largest per-mode target {max_target}")
    tfms = ratfun.nds_tfms(nds)
    any_gzu = any(not c.is_zero for t in tfms for row in t.gzu_classes for c in row)
    any_lambda = any(c.is_lambda for t in tfms for row in t.gzv_classes for c in row)
    cond_iii = any_gzu or not any_lambda
    if not cond_iii:
        detail.append("no external-input route and a frequency-dependent entry exists")
    feasible = all(ok for _, ok in cond_i) and cond_ii and cond_iii
    return FeasibilityReport(feasible, cond_i, cond_ii, max_target, nds.M_z,
                             cond_iii, "; ".join(detail))


def _filtered(lams, mode_filter: str):
    if mode_filter == "all":
        return lams
    return [l for l in lams if complex(l).real >= -UNSTABLE_MARGIN]


def realize_numeric(nds: NdsModel, values: dict[str, Fraction]) -> tuple[ex.Mat, ex.Mat]:
    """Exact closed-loop state/input matrices for one parameter assignment.

    Raises ZeroDivisionError when the assignment makes the loop singular.
    """
    plant = assemble_lumped(nds)
    if nds.M_z == 0 or nds.M_v == 0:
        corr = ex.zeros(nds.M_x, nds.M_x + nds.M_u)
    else:
        pval = plant.P_pattern.substitute(values)
        loop = ex.msub(ex.eye(nds.M_z), ex.mmul(plant.A_zv, pval))
        rhs = ex.hstack([plant.A_zx, plant.B_zu])
        sol = ex.exact_solve(loop, rhs)
        corr = ex.mmul(ex.mmul(plant.A_xv, pval), sol)
    ab = ex.madd(ex.hstack([plant.A_xx, plant.B_xu]), corr)
    n = nds.M_x
    return (ex.submatrix(ab, None, range(n)),
            ex.submatrix(ab, None, range(n, n + nds.M_u)))


def _equilibrated_rank(m: np.ndarray, tol: float) -> int:
    """Rank after row/column max-norm scaling.

    Realized closed loops can mix entry scales over many orders of magnitude
    (the loop inverse amplifies); scaling rows and columns leaves the rank
    unchanged while keeping the singular-value cutoff meaningful.
    """
    if m.size == 0:
        return 0
    m = np.array(m, dtype=complex)
    for _ in range(2):
        rn = np.max(np.abs(m), axis=1, keepdims=True)
        rn[rn == 0] = 1.0
        m = m / rn
        cn = np.max(np.abs(m), axis=0, keepdims=True)
        cn[cn == 0] = 1.0
        m = m / cn
    return ratfun._float_rank(m, tol)


def uncontrollable_modes(a: np.ndarray, b: np.ndarray, tol: float = 1e-7) -> list:
    """Eigenvalues at which [A - lam I, B] loses row rank."""
    n = a.shape[0]
    out = []
    for lam in np.linalg.eigvals(a) if n else []:
        pbh = np.hstack([a - lam * np.eye(n), b]).astype(complex)
        if _equilibrated_rank(pbh, tol) < n:
            out.append(complex(lam))
    return out


def _stacked_controllable(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    """Full-row-rank test of the constant staircase matrix; no eigensolve."""
    n = a.shape[0]
    q = b.shape[1]
    if n == 0:
        return True
    width = n * (n + q - 1) if n > 1 else q
    c = np.zeros((n * n, width))
    col = 0
    slots = []
    for i in range(n):
        slots.append(("B", col))
        col += q
        if i < n - 1:
            slots.append(("I", col))
            col += n
    bcol = [c for k, c in slots if k == "B"]
    icol = [c for k, c in slots if k == "I"]
    for i in range(n):
        r0 = i * n
        c[r0:r0 + n, bcol[i]:bcol[i] + q] = b
        if i < n - 1:
            c[r0:r0 + n, icol[i]:icol[i] + n] = np.eye(n)
        if i >= 1:
            c[r0:r0 + n, icol[i - 1]:icol[i - 1] + n] = -a
    return _equilibrated_rank(c, tol) == n * n


@dataclass(frozen=True)
class RealizationResult:
    controllable_witness: bool
    trials_used: int
    redraws: int
    seed: int
    value_set_size: int
    witness_values: Optional[dict] = None
    last_uncontrollable_modes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "controllable_witness": self.controllable_witness,
            "trials_used": self.trials_used,
            "redraws": self.redraws,
            "seed": self.seed,
            "value_set_size": self.value_set_size,
            "witness_values": ({k: str(v) for k, v in sorted(self.witness_values.items())}
                               if self.witness_values else None),
            "last_uncontrollable_modes": [_fmt_c(l) for l in self.last_uncontrollable_modes],
        }


def randomized_realization_check(nds: NdsModel, seed: int = 0, trials: int = 5,
                                 method: str = "pbh", tol: float = 1e-7) -> RealizationResult:
    """One-sided randomized controllability certificate.

    Each trial substitutes parameter values drawn from an integer set whose
    size bounds the failure probability by 1/2 per draw, realizes the closed
    loop exactly, and tests controllability numerically. A found witness
    proves structural controllability; absence of one proves nothing and is
    reported as such.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = random.Random(seed)
    plant = assemble_lumped(nds)
    k = plant.P_pattern.num_free
    n = max(1, nds.M_x)
    # Without output feedthrough the controllability certificate is a
    # polynomial of total degree <= min(k*n, n^2) and twice that many values
    # suffice for a 1/2 per-draw success bound. A feedthrough loop clears a
    # determinant of degree <= d_loop out of every matrix entry, inflating the
    # certificate degree by the factor (1 + d_loop) plus the well-posedness
    # factor itself.
    feedthrough = any(x != 0 for row in plant.A_zv for x in row)
    d_loop = min(k, nds.M_z, nds.M_v) if (k and feedthrough) else 0
    if d_loop == 0:
        vsize = min(2 * k * n, 2 * n * n) if k else 1
    else:
        vsize = 2 * (n * n * (1 + d_loop) + d_loop)
    vsize = max(vsize, 2)
    redraws = 0
    last_modes: list = []
    for t in range(1, trials + 1):
        for _ in range(50):
            values = {pid: Fraction(rng.randint(1, vsize))
                      for pid in plant.P_pattern.entries.values()}
            try:
                a_m, b_m = realize_numeric(nds, values)
                break
            except ZeroDivisionError:
                redraws += 1
        else:
            raise RuntimeError("could not draw a well-posed realization")
        a = ex.to_float(a_m)
        b = ex.to_float(b_m).reshape(nds.M_x, nds.M_u)
        if method == "stacked":
            ok = _stacked_controllable(a, b, tol)
            last_modes = [] if ok else uncontrollable_modes(a, b, tol)
        else:
            last_modes = uncontrollable_modes(a, b, tol)
            ok = not last_modes
        if ok:
            return RealizationResult(True, t, redraws, seed, vsize, values, [])
    return RealizationResult(False, trials, redraws, seed, vsize, None, last_modes)
