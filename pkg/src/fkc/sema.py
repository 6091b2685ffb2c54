"""Semantic analysis for kernel programs.

Checks the kernel-procedure restrictions (rules R1..R9 below), resolves
halo constants per statement, infers symbolic region shapes, and produces
a CheckedProgram that downstream stages may trust without re-validation.

Rule codes:
  R1  array parameters must be intent(in) or intent(out), never inout
  R2  array parameters must carry the contiguous attribute
  R3  calls restricted to region_cpy/region_ptr, user elementals, and
      the math intrinsics {sqrt, abs, min, max, exp}
  R4  region_ptr only on intent(out)+target params, result only bound
      to a pointer local
  R5  intent(in) arrays are never assignment targets
  R6  pointer locals write only the interior they were bound to
  R7  whole-array statements are shape-consistent
  R8  region_cpy only on intent(in) arrays and allocatable locals
      (reading output arrays is likewise rejected)
  R9  elemental bodies reference only their own scalar parameters
plus plumbing codes E1..E5 (resolution/arity), H1 (halo read before
assignment) and the warning W1 (kernel writes no outputs).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .frontend import (Assign, BinOp, Call, ElementalFn, HaloAssign, HaloLit,
                       Ident, IntLit, KernelProgram, Neg, Paren, PtrAssign,
                       RealLit)
from .region import Extent, Halo, HaloTooLarge, interior_of

INTRINSICS = {"sqrt": 1, "abs": 1, "exp": 1, "min": 2, "max": 2}


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # error | warning
    code: str
    line: int
    message: str

    def render(self) -> str:
        return f"{self.severity} {self.code} {self.line}: {self.message}"


class SemaError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("\n".join(d.render() for d in diagnostics))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class SymbolicShape:
    """Array shape as the kernel's shared full extent minus deficits."""
    base: str
    deficit_x: int
    deficit_y: int

    def shrink(self, halo: Halo) -> "SymbolicShape":
        return SymbolicShape(self.base, self.deficit_x + halo.deficit_x,
                             self.deficit_y + halo.deficit_y)

    def concrete(self, full: Extent) -> Extent:
        return Extent(full.nx - self.deficit_x, full.ny - self.deficit_y)


@dataclass
class CheckedProgram:
    program: KernelProgram
    halo_table: dict[int, dict[str, Halo]]
    shape_table: dict[tuple[int, tuple[int, ...]], SymbolicShape]
    output_bindings: dict[str, tuple[str, Halo]]
    local_array_shapes: dict[str, SymbolicShape]
    warnings: tuple[Diagnostic, ...] = ()


def infer_region_shape(full_shape: tuple[int, int], halo: Halo) -> tuple[int, int]:
    """Concrete interior extent of a region; raises HaloTooLarge."""
    rect = interior_of(Extent(*full_shape), halo)
    return (rect.nx, rect.ny)


def resolve_halos(program: KernelProgram) -> dict[int, dict[str, Halo]]:
    """Literal halo values live at each statement index (last write wins;
    a reassignment is visible from its own statement onward)."""
    table: dict[int, dict[str, Halo]] = {}
    live: dict[str, Halo] = {}
    for idx, stmt in enumerate(program.body):
        if isinstance(stmt, HaloAssign):
            live = dict(live)
            live[stmt.lhs] = Halo.of(stmt.values)
        table[idx] = live
    return table


class _Analyzer:
    def __init__(self, program: KernelProgram):
        self.program = program
        self.diags: list[Diagnostic] = []
        self.scalars = {p.name for p in program.params if p.kind == "scalar-real"}
        self.arrays = {p.name: p for p in program.params if p.kind == "array-2d-real"}
        self.alloc_locals = {l.name for l in program.locals if l.kind == "alloc-array-2d"}
        self.ptr_locals = {l.name for l in program.locals if l.kind == "pointer-array-2d"}
        self.halo_names = {h.name for h in program.halo_consts}
        self.elementals = {fn.name: fn for fn in program.elementals}
        arrays = [p.name for p in program.params if p.kind == "array-2d-real"]
        self.anchor = arrays[0] if arrays else "<none>"
        self.halo_table = resolve_halos(program)
        self.shape_table: dict[tuple[int, tuple[int, ...]], SymbolicShape] = {}
        self.local_shapes: dict[str, SymbolicShape] = {}
        self.bindings: dict[str, tuple[str, Halo]] = {}

    def error(self, code: str, line: int, message: str):
        self.diags.append(Diagnostic("error", code, line, message))

    # -- declaration rules ------------------------------------------------

    def check_params(self):
        for p in self.program.params:
            if p.kind == "array-2d-real":
                if p.intent not in ("in", "out"):
                    self.error("R1", p.line, f"array parameter {p.name!r} must be "
                               f"intent(in) or intent(out), got {p.intent or 'none'}")
                if "contiguous" not in p.attrs:
                    self.error("R2", p.line,
                               f"array parameter {p.name!r} must be contiguous")
            else:
                if p.intent != "in":
                    self.error("R1", p.line,
                               f"scalar parameter {p.name!r} must be intent(in)")
        if not any(p.intent == "out" for p in self.program.params
                   if p.kind == "array-2d-real"):
            self.diags.append(Diagnostic(
                "warning", "W1", self.program.line,
                f"kernel {self.program.name!r} has no intent(out) arrays"))

    def check_elementals(self):
        for fn in self.program.elementals:
            self._check_elemental_expr(fn, fn.body)

    def _check_elemental_expr(self, fn: ElementalFn, expr):
        if isinstance(expr, Ident):
            if expr.name not in fn.params:
                self.error("R9", fn.line, f"elemental {fn.name!r} references "
                           f"{expr.name!r}, not one of its parameters")
        elif isinstance(expr, Call):
            self.error("R9", fn.line, f"elemental {fn.name!r} may not call "
                       f"{expr.name!r}; bodies use only their own parameters")
        elif isinstance(expr, BinOp):
            self._check_elemental_expr(fn, expr.left)
            self._check_elemental_expr(fn, expr.right)
        elif isinstance(expr, (Neg, Paren)):
            self._check_elemental_expr(fn, expr.operand if isinstance(expr, Neg)
                                       else expr.inner)
        elif isinstance(expr, HaloLit):
            self.error("R9", fn.line,
                       f"elemental {fn.name!r} may not use halo literals")

    # -- expression shapes -------------------------------------------------

    def resolve_halo_arg(self, arg, idx: int, line: int) -> Halo | None:
        if isinstance(arg, HaloLit):
            return Halo.of(arg.values)
        if isinstance(arg, Ident) and arg.name in self.halo_names:
            value = self.halo_table[idx].get(arg.name)
            if value is None:
                self.error("H1", line,
                           f"halo {arg.name!r} read before any assignment")
            return value
        self.error("E3", line, "second region argument must be a halo "
                   "variable or a [l,r,d,u] literal")
        return None

    def readable_array_shape(self, name: str, idx: int, line: int) -> SymbolicShape | None:
        """Shape of an array read as a region_cpy base or bare reference."""
        if name in self.arrays:
            p = self.arrays[name]
            if p.intent == "out":
                self.error("R8", line, f"intent(out) array {p.name!r} cannot be read")
                return None
            return SymbolicShape(self.anchor, 0, 0)
        if name in self.alloc_locals:
            shape = self.local_shapes.get(name)
            if shape is None:
                self.error("E4", line,
                           f"local array {name!r} read before assignment")
            return shape
        if name in self.ptr_locals:
            self.error("R8", line, f"pointer local {name!r} aliases an output "
                       "array and cannot be read")
            return None
        self.error("R8", line, f"{name!r} is not a readable array here")
        return None

    def expr_shape(self, expr, idx: int, line: int, path: tuple[int, ...]):
        """Symbolic shape (None for scalars), recording array entries."""
        shape = self._expr_shape(expr, idx, line, path)
        if shape is not None:
            self.shape_table[(idx, path)] = shape
        return shape

    def _merge(self, shapes, idx, line) -> SymbolicShape | None:
        arrays = [s for s in shapes if s is not None]
        if not arrays:
            return None
        first = arrays[0]
        for other in arrays[1:]:
            if other != first:
                self.error("R7", line, "operands disagree on shape: full extent "
                           f"minus ({first.deficit_x},{first.deficit_y}) vs minus "
                           f"({other.deficit_x},{other.deficit_y})")
                return None
        return first

    def _expr_shape(self, expr, idx, line, path):
        if isinstance(expr, (RealLit, IntLit)):
            return None
        if isinstance(expr, HaloLit):
            self.error("E3", line, "halo literal used outside a region call")
            return None
        if isinstance(expr, Ident):
            name = expr.name
            if name in self.scalars:
                return None
            if name in self.halo_names:
                self.error("E3", line, f"halo {name!r} used as a value")
                return None
            if name in self.arrays or name in self.alloc_locals or name in self.ptr_locals:
                return self.readable_array_shape(name, idx, line)
            self.error("E1", line, f"unknown identifier {name!r}")
            return None
        if isinstance(expr, Paren):
            return self.expr_shape(expr.inner, idx, line, path + (0,))
        if isinstance(expr, Neg):
            return self.expr_shape(expr.operand, idx, line, path + (0,))
        if isinstance(expr, BinOp):
            left = self.expr_shape(expr.left, idx, line, path + (0,))
            right = self.expr_shape(expr.right, idx, line, path + (1,))
            return self._merge([left, right], idx, line)
        if isinstance(expr, Call):
            return self._call_shape(expr, idx, line, path)
        raise TypeError(f"unexpected expression node {expr!r}")

    def _call_shape(self, expr: Call, idx, line, path):
        name = expr.name
        if name == "region_cpy":
            if len(expr.args) != 2 or not isinstance(expr.args[0], Ident):
                self.error("E3", line, "region_cpy takes (array, halo)")
                return None
            halo = self.resolve_halo_arg(expr.args[1], idx, line)
            base = self.readable_array_shape(expr.args[0].name, idx, line)
            if base is None or halo is None:
                return None
            return base.shrink(halo)
        if name == "region_ptr":
            self.error("R4", line, "region_ptr may only appear as the entire "
                       "right-hand side of a pointer assignment")
            return None
        if name in self.elementals:
            fn = self.elementals[name]
            if len(expr.args) != len(fn.params):
                self.error("E3", line, f"{name!r} expects {len(fn.params)} "
                           f"arguments, got {len(expr.args)}")
            shapes = [self.expr_shape(a, idx, line, path + (i,))
                      for i, a in enumerate(expr.args)]
            return self._merge(shapes, idx, line)
        if name in INTRINSICS:
            if len(expr.args) != INTRINSICS[name]:
                self.error("E3", line, f"intrinsic {name!r} expects "
                           f"{INTRINSICS[name]} argument(s)")
            shapes = [self.expr_shape(a, idx, line, path + (i,))
                      for i, a in enumerate(expr.args)]
            return self._merge(shapes, idx, line)
        self.error("R3", line, f"call to {name!r} is not allowed in a kernel "
                   "(region functions, user elementals, and sqrt/abs/min/max/exp only)")
        return None

    # -- statements ---------------------------------------------------------

    def check_body(self):
        for idx, stmt in enumerate(self.program.body):
            if isinstance(stmt, HaloAssign):
                continue  # handled by resolve_halos
            if isinstance(stmt, PtrAssign):
                self._check_ptr_assign(stmt, idx)
            else:
                self._check_assign(stmt, idx)

    def _check_ptr_assign(self, stmt: PtrAssign, idx: int):
        halo = self.resolve_halo_arg(stmt.halo_arg, idx, stmt.line)
        if stmt.lhs not in self.ptr_locals:
            self.error("R4", stmt.line, "the result of region_ptr must be "
                       f"stored in a pointer local, not {stmt.lhs!r}")
            return
        target = self.arrays.get(stmt.array)
        if target is None or target.intent != "out" or "target" not in target.attrs:
            self.error("R4", stmt.line, "region_ptr requires an intent(out) "
                       f"array with the target attribute, got {stmt.array!r}")
            return
        if halo is None:
            return
        if stmt.lhs in self.bindings:
            self.error("R6", stmt.line,
                       f"pointer local {stmt.lhs!r} is already bound")
            return
        self.bindings[stmt.lhs] = (stmt.array, halo)

    def _check_assign(self, stmt: Assign, idx: int):
        rhs_shape = self.expr_shape(stmt.rhs, idx, stmt.line, ())
        lhs = stmt.lhs
        if lhs in self.arrays:
            if self.arrays[lhs].intent == "in":
                self.error("R5", stmt.line,
                           f"intent(in) array {lhs!r} cannot be assigned")
            else:
                self.error("E2", stmt.line, f"output array {lhs!r} must be "
                           "written through a region_ptr pointer local")
            return
        if lhs in self.scalars or lhs in self.halo_names:
            self.error("E2", stmt.line, f"{lhs!r} cannot be assigned an array "
                       "expression")
            return
        if lhs in self.ptr_locals:
            binding = self.bindings.get(lhs)
            if binding is None:
                self.error("R6", stmt.line, f"pointer local {lhs!r} assigned "
                           "before being bound with region_ptr")
                return
            out_array, halo = binding
            bound_shape = SymbolicShape(self.anchor, halo.deficit_x, halo.deficit_y)
            if rhs_shape is not None and rhs_shape != bound_shape:
                self.error("R6", stmt.line, f"store through {lhs!r} must match "
                           f"its bound interior (full minus ({bound_shape.deficit_x},"
                           f"{bound_shape.deficit_y}), got minus ({rhs_shape.deficit_x},"
                           f"{rhs_shape.deficit_y}))")
            return
        if lhs in self.alloc_locals:
            if rhs_shape is None:
                self.error("E5", stmt.line, f"cannot size local array {lhs!r} "
                           "from a scalar right-hand side")
                return
            frozen = self.local_shapes.get(lhs)
            if frozen is None:
                self.local_shapes[lhs] = rhs_shape
            elif frozen != rhs_shape:
                self.error("R7", stmt.line, f"local array {lhs!r} has frozen "
                           f"shape full minus ({frozen.deficit_x},{frozen.deficit_y}); "
                           f"assignment gives minus ({rhs_shape.deficit_x},"
                           f"{rhs_shape.deficit_y})")
            return
        self.error("E1", stmt.line, f"unknown assignment target {lhs!r}")

    def run(self) -> CheckedProgram:
        self.check_params()
        self.check_elementals()
        self.check_body()
        errors = [d for d in self.diags if d.severity == "error"]
        if errors:
            raise SemaError(errors)
        return CheckedProgram(
            program=self.program,
            halo_table=self.halo_table,
            shape_table=self.shape_table,
            output_bindings=self.bindings,
            local_array_shapes=self.local_shapes,
            warnings=tuple(d for d in self.diags if d.severity == "warning"),
        )


def analyze(program: KernelProgram) -> CheckedProgram:
    """Full semantic check; raises SemaError carrying every diagnostic."""
    return _Analyzer(program).run()


def collect_diagnostics(program: KernelProgram) -> list[Diagnostic]:
    """All diagnostics (errors and warnings) without raising."""
    analyzer = _Analyzer(program)
    try:
        analyzer.run()
    except SemaError:
        pass
    return list(analyzer.diags)
