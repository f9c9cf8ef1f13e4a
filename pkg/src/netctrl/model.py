"""System model: subsystem descriptions, channel augmentation, lumped assembly.

Each subsystem is an LTI block whose matrices may depend on unknown
first-principle parameters through a linear fractional transformation. A
parameter block can be

* absent            -- the six analysis matrices are used as given,
* a free pattern    -- unknown entries; the block is absorbed by adding one
                       auxiliary internal input/output channel pair per row/
                       column of the block (`augment_subsystem`),
* a fixed matrix    -- known values; the feedback loop is closed in exact
                       arithmetic (`close_parameter_block`).

The interconnection pattern routes internal outputs to internal inputs; its
free entries are the design variables of the topology problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import exactla as ex
from .exactla import Mat


class ModelError(ValueError):
    """Raised for inconsistent dimensions or ill-posed fixed parameter blocks."""


@dataclass(frozen=True)
class StructuredPattern:
    """Zero/free pattern of a matrix; entries maps (row, col) -> parameter id."""

    rows: int
    cols: int
    entries: dict[tuple[int, int], str] = field(default_factory=dict)

    def __post_init__(self):
        for (r, c) in self.entries:
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise ModelError(f"pattern position ({r},{c}) out of bounds "
                                 f"for {self.rows}x{self.cols}")
        ids = list(self.entries.values())
        if len(set(ids)) != len(ids):
            raise ModelError("repeated parameter id inside one pattern")

    @property
    def num_free(self) -> int:
        return len(self.entries)

    def positions(self) -> list[tuple[int, int]]:
        return sorted(self.entries)

    def substitute(self, values: dict[str, Fraction]) -> Mat:
        """Numeric realization: free entries replaced by the given values."""
        m = ex.zeros(self.rows, self.cols)
        for (r, c), pid in self.entries.items():
            m[r][c] = ex.frac(values[pid])
        return m

    @staticmethod
    def from_positions(rows: int, cols: int, positions, prefix: str) -> "StructuredPattern":
        entries = {(r, c): f"{prefix}_{r}_{c}" for r, c in positions}
        return StructuredPattern(rows, cols, entries)


def _dims(m: Mat) -> tuple[int, int]:
    return ex.shape(m)


def _shape_ok(m: Mat, want: tuple[int, int]) -> bool:
    # zero-row matrices degrade to (0, 0) in the list representation
    if want[0] == 0:
        return len(m) == 0
    return _dims(m) == want


@dataclass(frozen=True)
class SubsystemModel:
    """One subsystem: parameter-independent matrices plus an optional LFT block.

    The nine base matrices follow the block layout (state, internal output,
    external output) x (state, internal input, external input). E/F/H describe
    how the parameter block enters; they must be present together.
    """

    A_xx0: Mat
    A_xv0: Mat
    B_xu0: Mat
    A_zx0: Mat
    A_zv0: Mat
    B_zu0: Mat
    C_yx0: Mat = field(default_factory=list)
    C_yv0: Mat = field(default_factory=list)
    D_yu0: Mat = field(default_factory=list)
    E1: Mat = field(default_factory=list)
    E2: Mat = field(default_factory=list)
    E3: Mat = field(default_factory=list)
    F1: Mat = field(default_factory=list)
    F2: Mat = field(default_factory=list)
    F3: Mat = field(default_factory=list)
    H: Mat = field(default_factory=list)
    param_block: Optional[StructuredPattern | Mat] = None
    name: str = ""

    def __post_init__(self):
        mx, mv0, mu, mz0 = self.m_x, self.m_v0, self.m_u, self.m_z0
        checks = [
            ("A_xx0", self.A_xx0, (mx, mx)),
            ("A_xv0", self.A_xv0, (mx, mv0)),
            ("B_xu0", self.B_xu0, (mx, mu)),
            ("A_zx0", self.A_zx0, (mz0, mx)),
            ("A_zv0", self.A_zv0, (mz0, mv0)),
            ("B_zu0", self.B_zu0, (mz0, mu)),
        ]
        for label, m, want in checks:
            if not _shape_ok(m, want):
                raise ModelError(f"{self.name or 'subsystem'}: {label} has shape "
                                 f"{_dims(m)}, expected {want}")
        if self.param_block is not None:
            pr, pc = self.param_shape
            lft_checks = [
                ("E1", self.E1, (mx, pr)),
                ("E2", self.E2, (mz0, pr)),
                ("F1", self.F1, (pc, mx)),
                ("F2", self.F2, (pc, mv0)),
                ("F3", self.F3, (pc, mu)),
                ("H", self.H, (pc, pr)),
            ]
            for label, m, want in lft_checks:
                if not _shape_ok(m, want):
                    raise ModelError(f"{self.name or 'subsystem'}: {label} has shape "
                                     f"{_dims(m)}, expected {want}")
            if not self.has_free_params:
                wp = ex.msub(ex.eye(pc), ex.mmul(self.H, self.param_block))
                if ex.exact_det(wp) == 0:
                    raise ModelError(f"{self.name or 'subsystem'}: fixed parameter "
                                     "block makes the local loop ill-posed")

    @property
    def m_x(self) -> int:
        return len(self.A_xx0)

    @property
    def m_u(self) -> int:
        return _dims(self.B_xu0)[1]

    @property
    def m_v0(self) -> int:
        return _dims(self.A_xv0)[1]

    @property
    def m_z0(self) -> int:
        return len(self.A_zx0)

    @property
    def param_shape(self) -> tuple[int, int]:
        if self.param_block is None:
            return (0, 0)
        if isinstance(self.param_block, StructuredPattern):
            return (self.param_block.rows, self.param_block.cols)
        return _dims(self.param_block)

    @property
    def has_free_params(self) -> bool:
        return isinstance(self.param_block, StructuredPattern)


@dataclass(frozen=True)
class AugmentedSubsystem:
    """Parameter-free analysis form of a subsystem (extra channels absorbed)."""

    A_xx: Mat
    A_xv: Mat
    B_xu: Mat
    A_zx: Mat
    A_zv: Mat
    B_zu: Mat
    param_pattern: Optional[StructuredPattern] = None  # block moved into the routing layer
    name: str = ""

    @property
    def m_x(self) -> int:
        return len(self.A_xx)

    @property
    def m_u(self) -> int:
        return _dims(self.B_xu)[1]

    @property
    def m_v(self) -> int:
        return _dims(self.A_xv)[1]

    @property
    def m_z(self) -> int:
        return len(self.A_zx)


def augment_subsystem(sub: SubsystemModel) -> AugmentedSubsystem:
    """Absorb a free parameter block into one extra internal channel pair.

    The block's rows become auxiliary internal inputs and its columns become
    auxiliary internal outputs, so the parameter entries reappear as routing
    entries; the bordered matrices are parameter-free.
    """
    if sub.param_block is not None and not sub.has_free_params:
        raise ModelError("augment_subsystem expects a free (pattern) block; "
                         "use close_parameter_block for fixed values")
    if sub.param_block is None:
        return AugmentedSubsystem(
            A_xx=ex.copy(sub.A_xx0), A_xv=ex.copy(sub.A_xv0), B_xu=ex.copy(sub.B_xu0),
            A_zx=ex.copy(sub.A_zx0), A_zv=ex.copy(sub.A_zv0), B_zu=ex.copy(sub.B_zu0),
            param_pattern=None, name=sub.name)
    return AugmentedSubsystem(
        A_xx=ex.copy(sub.A_xx0),
        A_xv=ex.hstack([sub.A_xv0, sub.E1]),
        B_xu=ex.copy(sub.B_xu0),
        A_zx=ex.vstack([sub.A_zx0, sub.F1]),
        A_zv=ex.vstack([ex.hstack([sub.A_zv0, sub.E2]),
                        ex.hstack([sub.F2, sub.H])]),
        B_zu=ex.vstack([sub.B_zu0, sub.F3]),
        param_pattern=sub.param_block,
        name=sub.name)


def close_parameter_block(sub: SubsystemModel) -> AugmentedSubsystem:
    """Close the local feedback loop for a fixed parameter block, exactly."""
    if sub.has_free_params:
        raise ModelError("close_parameter_block expects fixed parameter values")
    if sub.param_block is None:
        return augment_subsystem(sub)
    p = sub.param_block
    pr, pc = _dims(p)
    w = ex.msub(ex.eye(pc), ex.mmul(sub.H, p))
    # k = P (I - H P)^{-1}, computed as a solve against the transpose
    k = ex.transpose(ex.exact_solve(ex.transpose(w), ex.transpose(p)))
    f_all = ex.hstack([sub.F1, sub.F2, sub.F3])
    e_top = sub.E1
    e_mid = sub.E2
    corr_top = ex.mmul(ex.mmul(e_top, k), f_all)
    corr_mid = ex.mmul(ex.mmul(e_mid, k), f_all)
    mx, mv0, mu = sub.m_x, sub.m_v0, sub.m_u
    top = ex.madd(ex.hstack([sub.A_xx0, sub.A_xv0, sub.B_xu0]), corr_top)
    mid = ex.madd(ex.hstack([sub.A_zx0, sub.A_zv0, sub.B_zu0]), corr_mid)
    return AugmentedSubsystem(
        A_xx=ex.submatrix(top, None, range(mx)),
        A_xv=ex.submatrix(top, None, range(mx, mx + mv0)),
        B_xu=ex.submatrix(top, None, range(mx + mv0, mx + mv0 + mu)),
        A_zx=ex.submatrix(mid, None, range(mx)),
        A_zv=ex.submatrix(mid, None, range(mx, mx + mv0)),
        B_zu=ex.submatrix(mid, None, range(mx + mv0, mx + mv0 + mu)),
        param_pattern=None, name=sub.name)


def analysis_form(sub: SubsystemModel) -> AugmentedSubsystem:
    """Parameter-free analysis matrices for either kind of parameter block."""
    if sub.has_free_params:
        return augment_subsystem(sub)
    return close_parameter_block(sub)


class NdsModel:
    """A networked system: subsystems plus the structured interconnection."""

    def __init__(self, subsystems: list[SubsystemModel], scm: StructuredPattern):
        if not subsystems:
            raise ModelError("at least one subsystem required")
        self.subsystems = list(subsystems)
        self.analysis = [analysis_form(s) for s in self.subsystems]
        self.scm = scm
        mv0 = sum(s.m_v0 for s in self.subsystems)
        mz0 = sum(s.m_z0 for s in self.subsystems)
        if (scm.rows, scm.cols) != (mv0, mz0):
            raise ModelError(f"interconnection pattern is {scm.rows}x{scm.cols}, "
                             f"but subsystem ports give {mv0}x{mz0}")
        ids: list[str] = list(scm.entries.values())
        for s in self.subsystems:
            if s.has_free_params:
                ids.extend(s.param_block.entries.values())
        if len(set(ids)) != len(ids):
            raise ModelError("parameter ids must be globally distinct")

    @property
    def n_sub(self) -> int:
        return len(self.subsystems)

    @property
    def M_x(self) -> int:
        return sum(a.m_x for a in self.analysis)

    @property
    def M_u(self) -> int:
        return sum(a.m_u for a in self.analysis)

    @property
    def M_v(self) -> int:
        return sum(a.m_v for a in self.analysis)

    @property
    def M_z(self) -> int:
        return sum(a.m_z for a in self.analysis)

    def v_offset(self, i: int) -> int:
        return sum(a.m_v for a in self.analysis[:i])

    def z_offset(self, i: int) -> int:
        return sum(a.m_z for a in self.analysis[:i])

    def u_offset(self, i: int) -> int:
        return sum(a.m_u for a in self.analysis[:i])

    def with_scm(self, scm: StructuredPattern) -> "NdsModel":
        return NdsModel(self.subsystems, scm)


@dataclass(frozen=True)
class LumpedPlant:
    """Block-diagonal analysis matrices plus the combined routing pattern."""

    A_xx: Mat
    A_xv: Mat
    B_xu: Mat
    A_zx: Mat
    A_zv: Mat
    B_zu: Mat
    P_pattern: StructuredPattern


def assemble_lumped(nds: NdsModel) -> LumpedPlant:
    """Stack subsystem analysis matrices block-diagonally and lay out the
    routing pattern: interconnection entries in the original port rows/columns,
    per-subsystem parameter patterns on the auxiliary diagonal blocks."""
    augs = nds.analysis
    entries: dict[tuple[int, int], str] = {}
    # interconnection entries, mapped from original port indices to analysis ones
    v_orig_to_aug: list[int] = []
    for i, (sub, aug) in enumerate(zip(nds.subsystems, augs)):
        base = nds.v_offset(i)
        v_orig_to_aug.extend(base + p for p in range(sub.m_v0))
    z_orig_to_aug: list[int] = []
    for i, (sub, aug) in enumerate(zip(nds.subsystems, augs)):
        base = nds.z_offset(i)
        z_orig_to_aug.extend(base + p for p in range(sub.m_z0))
    for (r, c), pid in nds.scm.entries.items():
        entries[(v_orig_to_aug[r], z_orig_to_aug[c])] = pid
    for i, sub in enumerate(nds.subsystems):
        if not sub.has_free_params:
            continue
        pat = sub.param_block
        r0 = nds.v_offset(i) + sub.m_v0
        c0 = nds.z_offset(i) + sub.m_z0
        for (r, c), pid in pat.entries.items():
            entries[(r0 + r, c0 + c)] = pid
    pattern = StructuredPattern(nds.M_v, nds.M_z, entries)
    return LumpedPlant(
        A_xx=ex.block_diag([a.A_xx for a in augs]),
        A_xv=ex.block_diag([a.A_xv for a in augs]),
        B_xu=ex.block_diag([a.B_xu for a in augs]),
        A_zx=ex.block_diag([a.A_zx for a in augs]),
        A_zv=ex.block_diag([a.A_zv for a in augs]),
        B_zu=ex.block_diag([a.B_zu for a in augs]),
        P_pattern=pattern)


def diagonalize_parameters(p: StructuredPattern) -> tuple[Mat, int, Mat]:
    """Factor a pattern with k free entries as U * diag(params) * V.

    Column l of U is the unit vector at the row of the l-th free entry and row
    l of V is the unit vector at its column, entries ordered by position, so
    the product reproduces the pattern exactly and each diagonal slot carries
    one parameter.
    """
    positions = p.positions()
    k = len(positions)
    u = ex.zeros(p.rows, k)
    v = ex.zeros(k, p.cols)
    for l, (r, c) in enumerate(positions):
        u[r][l] = ex.ONE
        v[l][c] = ex.ONE
    return u, k, v


def pattern_parameter_order(p: StructuredPattern) -> list[str]:
    """Parameter ids in the order used by diagonalize_parameters."""
    return [p.entries[pos] for pos in p.positions()]


@dataclass(frozen=True)
class WellPosednessVerdict:
    well_posed: bool
    trials: int
    seed: int
    detail: str = ""


def check_well_posedness(nds: NdsModel, trials: int = 3, seed: int = 0) -> WellPosednessVerdict:
    """Probabilistic well-posedness test.

    Substitutes random rational values into every free parameter and checks
    that the global loop determinant and each local one are nonzero; one
    successful draw certifies the generic property. Values are drawn from an
    integer range exceeding twice a crude total-degree bound so a false
    negative on every trial is overwhelmingly unlikely.
    """
    import random

    if trials < 1:
        raise ValueError("trials must be >= 1")
    plant = assemble_lumped(nds)
    pat = plant.P_pattern
    rng = random.Random(seed)
    bound = 2 * max(1, pat.rows + pat.cols) * max(1, pat.num_free)
    last = ""
    for t in range(trials):
        values = {pid: Fraction(rng.randint(1, bound)) for pid in pat.entries.values()}
        pval = pat.substitute(values)
        glob = ex.exact_det(ex.msub(ex.eye(nds.M_z), ex.mmul(plant.A_zv, pval)))
        if glob == 0:
            last = "global loop determinant vanished"
            continue
        local_ok = True
        for sub in nds.subsystems:
            if not sub.has_free_params:
                continue
            pr, pc = sub.param_shape
            pv = sub.param_block.substitute(values)
            if ex.exact_det(ex.msub(ex.eye(pc), ex.mmul(sub.H, pv))) == 0:
                local_ok = False
                last = f"local loop of {sub.name or 'a subsystem'} vanished"
                break
        if local_ok:
            return WellPosednessVerdict(True, t + 1, seed)
    return WellPosednessVerdict(False, trials, seed, detail=last or "no witness found")
