"""Command-line entry point: ``erasekit <command> [flags]``.

Every command reads an optional JSON ``--config`` whose keys are the long
flag names (dashes or underscores); flags given on the command line win.
Output goes to ``--output`` (default stdout) as JSON or CSV and is
byte-identical for identical inputs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, SCHEMA_VERSION
from .bounds import (
    UnsupportedVariantError,
    StateClassDescriptor,
    bound_row,
    copy_threshold,
    haar_cost,
    haar_count,
    rows_to_csv,
    BoundRow,
)
from .hardness import MIN_TRIALS, ToyFamily, advantage_experiment
from .learners import (
    BooleanPolynomial,
    PhaseStateLearner,
    ShadowSelectionLearner,
    UnderdeterminedError,
)
from .qcore import (
    MAX_PURE_QUBITS,
    CapExceededError,
    ProductState,
    QuantumState,
    apply_circuit,
    fidelity,
)
from .stabsim import IncompleteLearningError, bell_sampling_learn, random_stabilizer_state
from .thermo import (
    K_BOLTZMANN,
    BathSpec,
    ErasureReport,
    ExtractionAbortedError,
    InsufficientCopiesError,
    classical_erase,
    compress_to_erase,
    extract_work,
    learning_to_erase,
)

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
LN2 = math.log(2.0)

DEFAULTS = {
    "erase": {"protocol": "learn", "class": "phase", "n": 3, "k": 1, "copies": 8,
              "mode": "stochastic", "work_mode": "ideal", "bath_size": 10**6, "beta": 1.0},
    "extract": {"protocol": "learn", "class": "phase", "n": 3, "k": 1, "copies": 8,
                "mode": "stochastic", "work_mode": "ideal", "bath_size": 10**6, "beta": 1.0},
    "bound": {"n": 4, "eps": 0.1},
    "learn": {"class": "phase", "n": 3, "k": 2},
    "demo-hardness": {"lambda": 4, "n": 3, "copies": 6, "trials": 100, "family_seed": 0},
    "bath-sweep": {"sizes": "100,10000,1000000", "beta": 1.0},
}


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument handling


def _int_range(text) -> list[int]:
    """``"3"``, ``"0..2"`` or ``"1,2,4"`` as a list of integers."""
    if isinstance(text, int):
        return [text]
    text = str(text)
    if ".." in text:
        lo, hi = text.split("..", 1)
        vals = list(range(int(lo), int(hi) + 1))
    else:
        vals = [int(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise UsageError(f"empty range {text!r}")
    return vals


def _common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON file of default parameters")
    p.add_argument("--output", default=S, help="output path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--temperature", type=float, default=S, help="bath temperature in kelvin")


def _protocol_flags(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--protocol", choices=("learn", "classical", "compress"), default=S)
    p.add_argument("--class", dest="class", choices=("phase", "explicit"), default=S)
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--k", type=int, default=S)
    p.add_argument("--copies", type=int, default=S)
    p.add_argument("--samples", type=int, default=S, help="copies fed to the learner")
    p.add_argument("--string", default=S, help="classical bit string, qubit 0 first")
    p.add_argument("--truth", type=int, default=S, help="class index of the input")
    p.add_argument("--mode", choices=("stochastic",), default=S)
    p.add_argument("--work-mode", dest="work_mode", choices=("ideal", "finite"), default=S)
    p.add_argument("--bath-size", dest="bath_size", type=int, default=S)
    p.add_argument("--beta", type=float, default=S)
    p.add_argument("input", nargs="?", default=S, help="state or class JSON file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="erasekit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"erasekit {__version__} (schema {SCHEMA_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    p = sub.add_parser("erase", help="run an erasure protocol and write its report")
    _common(p)
    _protocol_flags(p)

    p = sub.add_parser("extract", help="erase, then credit the refreshed qubits")
    _common(p)
    _protocol_flags(p)

    p = sub.add_parser("bound", help="tabulate work bounds")
    _common(p)
    p.add_argument("--class", dest="class", default=S)
    p.add_argument("--haar", action="store_true", default=S)
    p.add_argument("--threshold", action="store_true", default=S)
    for flag in ("n", "k", "d", "t", "copies"):
        p.add_argument(f"--{flag}", default=S)
    p.add_argument("--S", dest="S", default=S, help="entanglement entropy bound")
    p.add_argument("--gates", type=int, default=S, help="gate-set size for shallow classes")
    p.add_argument("--m", type=int, default=S)
    p.add_argument("--eps", type=float, default=S)

    p = sub.add_parser("learn", help="learn a random class member and report recovery")
    _common(p)
    p.add_argument("--class", dest="class", choices=("phase", "stabilizer"), default=S)
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--k", type=int, default=S)
    p.add_argument("--budget", type=int, default=S)

    p = sub.add_parser("demo-hardness", help="toy-family versus Haar distinguisher")
    _common(p)
    p.add_argument("--lambda", dest="lambda", type=int, default=S)
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--copies", type=int, default=S)
    p.add_argument("--trials", type=int, default=S)
    p.add_argument("--family-seed", dest="family_seed", type=int, default=S)
    p.add_argument("--threshold-bits", dest="threshold_bits", type=float, default=S)

    p = sub.add_parser("bath-sweep", help="finite-bath erasure work versus bath size")
    _common(p)
    p.add_argument("--sizes", default=S, help="comma list of bath sizes")
    p.add_argument("--beta", type=float, default=S)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags, in increasing priority."""
    given = vars(args).copy()
    cmd = given.pop("command")
    params = dict(DEFAULTS.get(cmd, {}))
    if "config" in given:
        try:
            raw = json.loads(Path(given.pop("config")).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        if not isinstance(raw, dict):
            raise UsageError("config must be a JSON object")
        params.update({k.replace("-", "_"): v for k, v in raw.items()})
    params.update(given)
    params["command"] = cmd
    params.setdefault("format", "json")
    return params


# ---------------------------------------------------------------------------
# output


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, params: dict) -> None:
    out = params.get("output")
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _rows_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _report_text(report: ErasureReport, params: dict) -> str:
    temp = params.get("temperature")
    if params["format"] == "csv":
        return report.to_csv(temp)
    return _dump_json(report.to_dict(temp))


# ---------------------------------------------------------------------------
# erase / extract


def _need_seed(params: dict) -> int:
    if "seed" not in params:
        raise UsageError(f"--seed is required for {params['command']}")
    return int(params["seed"])


def _positive(params: dict, *names: str) -> None:
    for name in names:
        if int(params[name]) < 1:
            raise UsageError(f"--{name} must be positive")


def _bath(params: dict) -> BathSpec | None:
    if params["work_mode"] == "ideal":
        return None
    try:
        return BathSpec(int(params["bath_size"]), float(params["beta"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load_state(params: dict) -> QuantumState:
    if "input" not in params:
        raise UsageError("this protocol needs an input state file")
    try:
        return QuantumState.from_json(Path(params["input"]).read_text())
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read state file: {exc}") from exc


def _learn_setup(params: dict):
    """Learner, unknown state and its index for the ``learn`` protocol."""
    seed = _need_seed(params)
    rng = np.random.default_rng([seed, 0])
    N = int(params["copies"])
    if params["class"] == "phase":
        n, k = int(params["n"]), int(params["k"])
        if not 0 <= k <= n:
            raise UsageError("--k must lie in 0..n")
        if n > MAX_PURE_QUBITS:
            raise CapExceededError(f"n={n} exceeds the {MAX_PURE_QUBITS}-qubit cap")
        s = int(params.get("samples", N))
        learner = PhaseStateLearner(n, k, s=s)
        if "truth" in params:
            idx = int(params["truth"])
            if not 0 <= idx < learner.m:
                raise UsageError("--truth is outside the class")
            poly = BooleanPolynomial.from_index(n, k, idx)
        else:
            poly = BooleanPolynomial.random(n, k, rng)
            poly = BooleanPolynomial.from_index(n, k, poly.index_in(learner.basis))
        return learner, poly.phase_state(), poly.index_in(learner.basis)
    # explicit: {"states": [[[re, im], ...], ...], "truth": i}
    if "input" not in params:
        raise UsageError("explicit classes need an input file")
    try:
        raw = json.loads(Path(params["input"]).read_text())
        states = [QuantumState.from_vector(np.array([complex(*a) for a in amps]))
                  for amps in raw["states"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read class file: {exc}") from exc
    idx = int(params.get("truth", raw.get("truth", rng.integers(len(states)))))
    if not 0 <= idx < len(states):
        raise UsageError("truth index is outside the class")
    s = int(params.get("samples", N))
    return ShadowSelectionLearner(states, s), states[idx], idx


def _classical_input(params: dict) -> QuantumState:
    n, N = int(params["n"]), int(params["copies"])
    bits = str(params.get("string", ""))
    if len(bits) != n or set(bits) - {"0", "1"}:
        raise UsageError("--string must be an n-character bit string")
    if n * N > MAX_PURE_QUBITS:
        raise CapExceededError(f"{N} copies of {n} bits exceed the {MAX_PURE_QUBITS}-qubit cap")
    word = sum(int(b) << j for j, b in enumerate(bits))
    index = sum(word << (c * n) for c in range(N))
    return QuantumState.basis(n * N, index)


def _erase_protocol(params: dict):
    """Returns ``(run, input)`` where ``run(input)`` yields an ErasureReport."""
    proto = params["protocol"]
    _positive(params, "n", "copies")
    if proto == "classical":
        n, N = int(params["n"]), int(params["copies"])
        return (lambda st: classical_erase(st, n, N)), _classical_input(params)
    if proto == "compress":
        bath = _bath(params)
        return (lambda st: compress_to_erase(st, bath=bath, mode=params["work_mode"])), \
            _load_state(params)
    if proto == "learn":
        learner, state, idx = _learn_setup(params)
        N = int(params["copies"])
        if N < learner.s:
            raise UsageError(f"--copies {N} is below the learner's s={learner.s}")
        bath, seed = _bath(params), int(params["seed"])

        def run(prod):
            return learning_to_erase(prod, learner, bath=bath, seed=seed,
                                     work_mode=params["work_mode"], truth=idx)

        return run, ProductState.copies(state, N)
    raise UsageError(f"unknown protocol {proto!r}")


def cmd_erase(params: dict) -> int:
    run, state = _erase_protocol(params)
    report = run(state)
    _emit(_report_text(report, params), params)
    return EXIT_OK if report.success else EXIT_FAILURE


def cmd_extract(params: dict) -> int:
    run, state = _erase_protocol(params)
    total = state.n_qubits
    try:
        result = extract_work(state, run, total)
        ledger, report, code = result.ledger, result.report, EXIT_OK
    except ExtractionAbortedError as exc:
        ledger, report, code = exc.ledger, exc.report, EXIT_FAILURE
    temp = params.get("temperature")
    entries = [{"label": e.label, "bits": e.bits, "direction": e.direction}
               for e in ledger.entries]
    if params["format"] == "csv":
        header = ["label", "direction", "bits"] + (["joules"] if temp is not None else [])
        rows = [[e.label, e.direction, e.bits]
                + ([e.bits * K_BOLTZMANN * temp * LN2] if temp is not None else [])
                for e in ledger.entries]
        text = _rows_csv(header, rows)
    else:
        text = _dump_json({
            "protocol": report.protocol, "total_qubits": total,
            "erasure_bits": ledger.cost_bits, "yield_bits": ledger.yield_bits - ledger.cost_bits,
            "yield_joules": None if temp is None else
            (ledger.yield_bits - ledger.cost_bits) * K_BOLTZMANN * temp * LN2,
            "aborted": code != EXIT_OK, "entries": entries})
    _emit(text, params)
    return code


# ---------------------------------------------------------------------------
# bound


def _bound_rows(params: dict) -> list[BoundRow]:
    cls = params.get("class")
    if cls is None:
        raise UsageError("bound needs --class, --haar or --threshold")
    ns = _int_range(params["n"])
    rows = []
    try:
        if cls == "phase":
            for n in ns:
                for k in _int_range(params.get("k", 1)):
                    rows.append(bound_row(StateClassDescriptor.phase(n, k), f"k={k}"))
        elif cls == "stabilizer":
            rows = [bound_row(StateClassDescriptor.stabilizer(n)) for n in ns]
        elif cls == "shallow":
            g = int(params.get("gates", 16))
            for n in ns:
                for d in _int_range(params.get("d", 1)):
                    rows.append(bound_row(StateClassDescriptor.shallow(n, d, g), f"d={d}"))
        elif cls == "doped":
            for n in ns:
                for t in _int_range(params.get("t", 0)):
                    rows.append(bound_row(StateClassDescriptor.doped(n, t), f"t={t}"))
        elif cls == "mps_bound":
            for n in ns:
                for s in _int_range(params.get("S", 1)):
                    rows.append(bound_row(StateClassDescriptor.mps_bound(n, s, float(params["eps"])),
                                          f"S={s}"))
        else:
            raise UnsupportedVariantError(f"unsupported class variant {cls!r}")
    except UnsupportedVariantError:
        raise
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from exc
    return rows


def cmd_bound(params: dict) -> int:
    fmt = params["format"]
    if params.get("threshold"):
        if "m" not in params:
            raise UsageError("--threshold needs --m and --eps")
        try:
            value = copy_threshold(int(params["m"]), float(params["eps"]))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        rec = {"m": int(params["m"]), "eps": float(params["eps"]), "copy_threshold": value}
        text = _rows_csv(list(rec), [list(rec.values())]) if fmt == "csv" else _dump_json(rec)
    elif params.get("haar"):
        rows = []
        for n in _int_range(params["n"]):
            for N in _int_range(params.get("copies", 1)):
                if n < 1 or N < 1:
                    raise UsageError("--n and --copies must be positive")
                bits = haar_cost(n, N)
                rows.append(BoundRow("haar", n, f"N={N}", bits, bits, True))
        text = rows_to_csv(rows) if fmt == "csv" else \
            _dump_json([dict(r.as_dict(), count=str(haar_count(r.n, int(r.parameter[2:]))))
                        for r in rows])
    else:
        rows = _bound_rows(params)
        text = rows_to_csv(rows) if fmt == "csv" else _dump_json([r.as_dict() for r in rows])
    _emit(text, params)
    return EXIT_OK


# ---------------------------------------------------------------------------
# learn


def cmd_learn(params: dict) -> int:
    seed = _need_seed(params)
    n = int(params["n"])
    if n < 1:
        raise UsageError("--n must be positive")
    if n > MAX_PURE_QUBITS:
        raise CapExceededError(f"n={n} exceeds the {MAX_PURE_QUBITS}-qubit cap")
    rng = np.random.default_rng([seed, 0])
    rec: dict = {"class": params["class"], "n": n, "seed": seed}
    if params["class"] == "phase":
        k = int(params["k"])
        if not 0 <= k <= n:
            raise UsageError("--k must lie in 0..n")
        learner = PhaseStateLearner(n, k, s=params.get("budget"))
        truth = BooleanPolynomial.random(n, k, rng)
        state = truth.phase_state()
        try:
            idx = learner.predict([state] * learner.s, seed)
            guess = BooleanPolynomial.from_index(n, k, idx)
            ok = guess.equal_up_to_constant(truth)
            circuit = guess.preparation_circuit()
            rec.update(k=k, copies_used=learner.s, truth=json.loads(truth.to_json()),
                       learned=json.loads(guess.to_json()))
        except UnderdeterminedError as exc:
            ok, circuit = False, None
            rec.update(k=k, copies_used=learner.s, error=str(exc))
    else:
        state = random_stabilizer_state(n, rng)
        used = [0]

        def supplier():
            used[0] += 1
            return state

        try:
            circuit = bell_sampling_learn(supplier, n, budget=params.get("budget"), seed=seed)
            out = apply_circuit(QuantumState.zero(n), circuit)
            ok = fidelity(out, state) > 1 - 1e-9
        except IncompleteLearningError as exc:
            ok, circuit = False, None
            rec["error"] = str(exc)
        rec["copies_used"] = used[0]
    rec["success"] = bool(ok)
    rec["circuit"] = None if circuit is None else circuit.to_dict()
    if params["format"] == "csv":
        text = _rows_csv(["class", "n", "seed", "copies_used", "success"],
                         [[rec["class"], n, seed, rec["copies_used"], str(ok).lower()]])
    else:
        text = _dump_json(rec)
    _emit(text, params)
    return EXIT_OK if ok else EXIT_FAILURE


# ---------------------------------------------------------------------------
# demo-hardness, bath-sweep


def cmd_demo_hardness(params: dict) -> int:
    seed = _need_seed(params)
    trials, n, N, lam = (int(params[k]) for k in ("trials", "n", "copies", "lambda"))
    if trials < MIN_TRIALS:
        raise UsageError(f"--trials must be at least {MIN_TRIALS}")
    if min(n, N, lam) < 1:
        raise UsageError("--n, --copies and --lambda must be positive")
    if n > MAX_PURE_QUBITS:
        raise CapExceededError(f"n={n} exceeds the {MAX_PURE_QUBITS}-qubit cap")
    try:
        family = ToyFamily(n, lam, int(params["family_seed"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    verdict = advantage_experiment(family, N, trials, seed, params.get("threshold_bits"))
    rec = verdict.to_dict()
    if params["format"] == "csv":
        text = _rows_csv(["arm", "trial", "bit"],
                         [["family", t, b] for t, b in enumerate(verdict.family_bits)]
                         + [["haar", t, b] for t, b in enumerate(verdict.haar_bits)])
    else:
        text = _dump_json(rec)
    _emit(text, params)
    return EXIT_OK


def cmd_bath_sweep(params: dict) -> int:
    try:
        sizes = [int(float(v)) for v in str(params["sizes"]).split(",") if v.strip()]
        beta = float(params["beta"])
        baths = [BathSpec(size, beta) for size in sizes]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    temp = params.get("temperature")
    header = ["size", "beta", "work_bits", "residual", "deviation_bound"]
    if temp is not None:
        header.append("work_joules")
    rows = []
    for bath in baths:
        w = bath.work_bits()
        row = [bath.size, bath.beta, w, bath.residual, 2.0 / math.sqrt(bath.size)]
        if temp is not None:
            row.append(w * K_BOLTZMANN * temp * LN2)
        rows.append(row)
    if params["format"] == "csv":
        text = _rows_csv(header, rows)
    else:
        text = _dump_json([dict(zip(header, r)) for r in rows])
    _emit(text, params)
    return EXIT_OK


COMMANDS = {
    "erase": cmd_erase,
    "extract": cmd_extract,
    "bound": cmd_bound,
    "learn": cmd_learn,
    "demo-hardness": cmd_demo_hardness,
    "bath-sweep": cmd_bath_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        params = resolve(args)
        return COMMANDS[params["command"]](params)
    except (UsageError, UnsupportedVariantError, CapExceededError,
            InsufficientCopiesError) as exc:
        print(f"erasekit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
