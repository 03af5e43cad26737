"""Compilation of the embedded stage machinery and its micro-step interpreter.

Stages #2..#7 (computation check, back up, backup check, recovery, recovery
check, summary check) are generated as short micro-programs over the five
tapes. The programs are machine independent: the one user-specific datum, the
program state to resume after a checkpoint, travels in the stage control's
`resume` slot, and scan terminators are the symbolic markers "empty"/"plus"
resolved against the machine alphabet only at execution time.

Position-tracking ("synchro") tapes hold the empty symbol everywhere except a
single "+" recording the master head position as of the last checkpoint.
Scans over a master/backup/user pair therefore terminate on the first shared
empty cell, while scans over the synchro pair terminate on the "+" itself so
that backing up and restoring preserve the mark. A copy writes its terminator
before stopping; cells beyond it are stale and invisible to every comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .model import JamError, MARKER, PLUS, Rule, StageControl, Tape, UserControl, ValidatedMachine

MASTER, SYNCHRO, BACKUP, BACKUP_SYNCHRO, USER = (
    "master", "synchro", "backup", "backup_synchro", "user")
TAPE_ORDER = (MASTER, SYNCHRO, BACKUP, BACKUP_SYNCHRO, USER)

# Branch targets inside stage programs: an int names a stage, NEXT falls
# through to the following micro-op.
NEXT = "next"

STOP_EMPTY = "empty"
STOP_PLUS = "plus"


class PlusNotFound(JamError):
    """A position-restoring seek ran out of written tape without finding "+"."""


@dataclass(frozen=True)
class Rewind:
    tapes: tuple[str, ...]

    def render(self) -> str:
        return f"rewind({','.join(self.tapes)})"


@dataclass(frozen=True)
class ScanCompare:
    tape_a: str
    tape_b: str
    stop: str
    on_equal: int | str
    on_diff: int | str

    def render(self) -> str:
        return (f"compare({self.tape_a},{self.tape_b},stop={self.stop},"
                f"eq={self.on_equal},diff={self.on_diff})")


@dataclass(frozen=True)
class ScanCopy:
    src: str
    dst: str
    stop: str

    def render(self) -> str:
        return f"copy({self.src}->{self.dst},stop={self.stop})"


@dataclass(frozen=True)
class SeekPlus:
    on_found: int | str = NEXT

    def render(self) -> str:
        return "seek_plus"


@dataclass(frozen=True)
class MarkPlus:
    def render(self) -> str:
        return "mark_plus"


@dataclass(frozen=True)
class EnterUser:
    # The state to resume is symbolic: it is read from the stage control.
    resume: None = None

    def render(self) -> str:
        return "enter_user"


@dataclass(frozen=True)
class EnterShutdown:
    def render(self) -> str:
        return "enter_shutdown"


MicroOp = Rewind | ScanCompare | ScanCopy | SeekPlus | MarkPlus | EnterUser | EnterShutdown


@dataclass(frozen=True)
class StageProgram:
    """Ordered micro-ops plus the stage entered when the program runs out."""

    ops: tuple[MicroOp, ...]
    done: int | None = None


@dataclass(frozen=True)
class CompiledMachine:
    base: ValidatedMachine
    stage_programs: dict[int, StageProgram]
    checkpoint_targets: dict[Rule, str]


def compile_machine(machine: ValidatedMachine) -> CompiledMachine:
    """Generate the stage programs and the checkpoint resume table.

    Branch wiring: #2 equal->#3 / differ->#5; #3 -> #4; #4 backup differ->#3,
    position differ->#3, both equal -> resume user computation; #5 -> #6;
    #6 backup differ->#3, position equal->user / differ->#5; #7 equal->
    shutdown / differ->#5. Stages #4 and #6 end by seeking the "+" so the
    master head is restored before computation continues. Redundant rewinds
    are kept: every op starts from a known head position.
    """
    programs = {
        2: StageProgram(ops=(
            MarkPlus(),
            Rewind((MASTER, USER)),
            ScanCompare(MASTER, USER, STOP_EMPTY, on_equal=3, on_diff=5),
        )),
        3: StageProgram(ops=(
            Rewind((MASTER, BACKUP)),
            ScanCopy(MASTER, BACKUP, STOP_EMPTY),
            Rewind((SYNCHRO, BACKUP_SYNCHRO)),
            ScanCopy(SYNCHRO, BACKUP_SYNCHRO, STOP_PLUS),
        ), done=4),
        4: StageProgram(ops=(
            Rewind((MASTER, BACKUP)),
            ScanCompare(MASTER, BACKUP, STOP_EMPTY, on_equal=NEXT, on_diff=3),
            Rewind((MASTER, SYNCHRO, BACKUP_SYNCHRO)),
            ScanCompare(SYNCHRO, BACKUP_SYNCHRO, STOP_PLUS, on_equal=NEXT, on_diff=3),
            Rewind((MASTER, SYNCHRO)),
            SeekPlus(),
            EnterUser(),
        )),
        5: StageProgram(ops=(
            Rewind((MASTER, BACKUP)),
            ScanCopy(BACKUP, MASTER, STOP_EMPTY),
            Rewind((SYNCHRO, BACKUP_SYNCHRO)),
            ScanCopy(BACKUP_SYNCHRO, SYNCHRO, STOP_PLUS),
        ), done=6),
        6: StageProgram(ops=(
            Rewind((MASTER, BACKUP)),
            ScanCompare(MASTER, BACKUP, STOP_EMPTY, on_equal=NEXT, on_diff=3),
            Rewind((MASTER, SYNCHRO, BACKUP_SYNCHRO)),
            ScanCompare(SYNCHRO, BACKUP_SYNCHRO, STOP_PLUS, on_equal=NEXT, on_diff=5),
            Rewind((MASTER, SYNCHRO)),
            SeekPlus(),
            EnterUser(),
        )),
        7: StageProgram(ops=(
            Rewind((MASTER, USER)),
            ScanCompare(MASTER, USER, STOP_EMPTY, on_equal=NEXT, on_diff=5),
            EnterShutdown(),
        )),
    }
    targets = {rule: rule.to_state for rule in machine.delta if rule.checkpoint}
    return CompiledMachine(base=machine, stage_programs=programs, checkpoint_targets=targets)


@dataclass(frozen=True)
class StageStep:
    """Outcome of one stage micro-step.

    control: the follow-up program control ("shutdown" encoded by the
    executor via EnterShutdown's event). op: the micro-op that ran. event:
    None or one of "marked", "commit", "verified", "shutdown".
    """

    control: StageControl | UserControl | None
    op: MicroOp
    event: str | None = None


def _goto(target: int | str, control: StageControl, committed_resume: str) -> StageControl:
    if target == NEXT:
        return replace(control, micro_pc=control.micro_pc + 1)
    assert isinstance(target, int)
    resume = committed_resume if target == 5 else control.resume
    return StageControl(stage=target, micro_pc=0, resume=resume)


def _stop_symbol(stop: str, empty: str) -> str:
    return PLUS if stop == STOP_PLUS else empty


def stage_step(compiled: CompiledMachine, control: StageControl, tapes: dict[str, Tape],
               committed_resume: str) -> StageStep:
    """Execute one cell-granular micro-step of the current stage program.

    Each call moves every head it touches by at most one cell, so one call
    corresponds to one machine step. Branches and completions consume the
    step on which they are observed.
    """
    program = compiled.stage_programs[control.stage]
    if control.micro_pc >= len(program.ops):
        assert program.done is not None
        nxt = _goto(program.done, control, committed_resume)
        return StageStep(control=nxt, op=program.ops[-1], event=None)

    op = program.ops[control.micro_pc]
    empty = compiled.base.alphabet.empty

    if isinstance(op, MarkPlus):
        tapes[SYNCHRO].write(PLUS)
        return StageStep(_goto(NEXT, control, committed_resume), op, event="marked")

    if isinstance(op, Rewind):
        for name in op.tapes:
            tape = tapes[name]
            if tape.read() != MARKER:
                tape.move("L")
        if all(tapes[n].read() == MARKER for n in op.tapes):
            return StageStep(_goto(NEXT, control, committed_resume), op)
        return StageStep(control, op)

    if isinstance(op, ScanCompare):
        a, b = tapes[op.tape_a], tapes[op.tape_b]
        stop = _stop_symbol(op.stop, empty)
        sym_a, sym_b = a.read(), b.read()
        if sym_a != sym_b:
            return StageStep(_goto(op.on_diff, control, committed_resume), op)
        if sym_a == stop:
            event = "commit" if (control.stage == 4 and op.stop == STOP_PLUS) else None
            return StageStep(_goto(op.on_equal, control, committed_resume), op, event)
        if a.head >= a.allocated and b.head >= b.allocated:
            # Uniform filler from here on: the scan can never distinguish the
            # tapes again, but no terminator was seen either, so no commit.
            return StageStep(_goto(op.on_equal, control, committed_resume), op)
        a.move("R")
        b.move("R")
        return StageStep(control, op)

    if isinstance(op, ScanCopy):
        src, dst = tapes[op.src], tapes[op.dst]
        stop = _stop_symbol(op.stop, empty)
        sym = src.read()
        dst.write(sym)
        if sym == stop or src.head >= src.allocated:
            return StageStep(_goto(NEXT, control, committed_resume), op)
        src.move("R")
        dst.move("R")
        return StageStep(control, op)

    if isinstance(op, SeekPlus):
        synchro, master = tapes[SYNCHRO], tapes[MASTER]
        if synchro.read() == PLUS:
            return StageStep(_goto(op.on_found, control, committed_resume), op)
        if synchro.head >= synchro.allocated:
            raise PlusNotFound(f"no '+' on the position tape (stage {control.stage})")
        master.move("R")
        synchro.move("R")
        return StageStep(control, op)

    if isinstance(op, EnterUser):
        return StageStep(UserControl(control.resume), op, event="verified")

    assert isinstance(op, EnterShutdown)
    return StageStep(control=None, op=op, event="shutdown")


def erase_resume(programs: dict[int, StageProgram]) -> dict[int, StageProgram]:
    """Normalize programs for machine-independence comparisons.

    The resume slot is already symbolic, so this is the identity on current
    programs; kept explicit so structural comparisons state their intent.
    """
    return {
        stage: StageProgram(
            ops=tuple(replace(op, resume=None) if isinstance(op, EnterUser) else op
                      for op in prog.ops),
            done=prog.done,
        )
        for stage, prog in programs.items()
    }


def _rule_rows(machine: ValidatedMachine) -> list[str]:
    rows = []
    for rule in sorted(machine.delta, key=lambda r: (r.from_state, r.read)):
        kind = "checkpoint" if rule.checkpoint else "normal"
        if rule.checkpoint:
            nxt = f"stage:2/0/{rule.to_state}"
        else:
            nxt = f"user:{rule.to_state}"
        rows.append("\t".join((
            "1", kind, "passive", "normal", "tracking",
            f"user:{rule.from_state}",
            f"m={rule.read}",
            nxt,
            f"m={rule.write},s=<empty>",
            f"m={rule.move},s={rule.move}",
        )))
    for rule in sorted(machine.gamma, key=lambda r: (r.from_state, r.read)):
        rows.append("\t".join((
            "1", "fault", "active", "normal", "tracking",
            f"user:{rule.from_state}",
            f"m={rule.read}",
            f"user:{rule.to_state}",
            f"m={rule.write},s=<empty>",
            f"m={rule.move},s={rule.move}",
        )))
    return rows


def emit_pi(compiled: CompiledMachine) -> str:
    """Render the flattened global rule listing.

    One row per user-computation rule (normal / checkpoint / fault variants)
    followed by one row per stage micro-op. Fields are tab separated; the
    output is byte-stable for a given machine.
    """
    header = "\t".join(("stage", "kind", "daemon", "apparatus", "user",
                        "control", "read", "next", "write", "move"))
    rows = [header]
    rows.extend(_rule_rows(compiled.base))
    for stage in sorted(compiled.stage_programs):
        program = compiled.stage_programs[stage]
        for pc, op in enumerate(program.ops):
            rows.append("\t".join((
                str(stage), "micro", "passive", "normal", "tracking",
                f"stage:{stage}/{pc}", "-", op.render(), "-", "-",
            )))
        if program.done is not None:
            rows.append("\t".join((
                str(stage), "micro", "passive", "normal", "tracking",
                f"stage:{stage}/{len(program.ops)}", "-", f"goto(stage {program.done})",
                "-", "-",
            )))
    return "\n".join(rows) + "\n"
