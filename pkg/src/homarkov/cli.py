"""Command line interface.

Every command reads model files (see io module for the format) and
prints a line-oriented key/value report; probabilities are printed with
17 significant digits so reports round-trip.  Exit codes: 0 success,
1 analysis error (e.g. a non-unique stationary distribution), 2 usage
or parse error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .chain import (
    ROW_TOL,
    ZERO_TOL,
    HigherOrderChain,
    JointDistribution,
    LumpingFunction,
    decode_context,
    lift,
    validate_chain,
)
from .classify import classify_first_order, classify_higher_order, is_regular
from .invariant import invariant_set, stationary_first_order
from .io import (
    ModelFormatError,
    ModelValidationError,
    load_model,
    serialize_chain,
    serialize_lumping,
)
from .process import (
    InfiniteDivergenceError,
    chain_oracle,
    lumped_oracle,
    markov_approximation,
    relative_entropy_rate,
)
from .verify import (
    builtin_examples,
    fill_choice_instance,
    generate_commutation_instance,
    generate_instance,
    reduce_higher_order_lumping,
    two_class_chain,
    unvisited_state_chain,
    verify_commutation,
    verify_main_theorem,
)


class AnalysisError(Exception):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _load_chain(path: str, row_tol: float) -> HigherOrderChain:
    model = load_model(path, validate=False)
    if model.kind != "chain":
        raise AnalysisError(f"{path}: expected a chain model, got {model.kind}")
    report = validate_chain(model.chain, row_tol=row_tol)
    if not report.ok:
        raise ModelValidationError(report)
    return model.chain


def _load_lumping(path: str) -> LumpingFunction:
    model = load_model(path)
    if model.kind != "lumping":
        raise AnalysisError(f"{path}: expected a lumping model, got {model.kind}")
    return model.lumping


def _parse_fill(source: str, chain_alphabet) -> JointDistribution | None:
    if source == "uniform":
        return None
    with open(source, "r", encoding="utf-8") as fh:
        values = {}
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ModelFormatError(line_no, "fill lines are 'SYMBOL PROB'")
            values[parts[0]] = float(parts[1])
    try:
        mass = np.array([values[s] for s in chain_alphabet.symbols])
    except KeyError as exc:
        raise ModelFormatError(None, f"fill missing symbol {exc.args[0]!r}") from None
    return JointDistribution(chain_alphabet, 1, mass)


def _class_lines(decomposition, labels) -> list[str]:
    lines = []
    for i, cls in enumerate(decomposition.recurrent_classes, start=1):
        lines.append(
            f"recurrent_class {i} : " + " ".join(labels[j] for j in cls)
        )
    lines.append(
        "transient : " + " ".join(labels[j] for j in decomposition.transient)
    )
    return lines


def _stationary_oracle(chain, zero_tol):
    """Oracle of the chain run from its unique invariant distribution."""
    points = invariant_set(chain, zero_tol=zero_tol)
    if len(points) != 1:
        raise AnalysisError(
            f"not unique: {len(points)} invariant extreme points; "
            "an unambiguous start distribution is required"
        )
    return chain_oracle(chain, points[0])


def _process_oracle(args, zero_tol, row_tol):
    """Build the process oracle named by --chain and optional --lumping."""
    chain = _load_chain(args.chain, row_tol)
    if getattr(args, "lumping", None) is None:
        return _stationary_oracle(chain, zero_tol)
    g = _load_lumping(args.lumping)
    if chain.order > 1:
        chain, g = reduce_higher_order_lumping(chain, g)
    pi = stationary_first_order(chain, zero_tol=zero_tol)
    return lumped_oracle(chain, pi, g)


# ---------------------------------------------------------------------------
# commands


def _cmd_validate(args, zero_tol, row_tol) -> int:
    model = load_model(args.chain, validate=False)
    if model.kind != "chain":
        print("kind lumping")
        print("ok true")
        return 0
    report = validate_chain(model.chain, row_tol=row_tol)
    print("kind chain")
    print(f"ok {'true' if report.ok else 'false'}")
    for violation in report.violations:
        print(f"violation : {violation}")
    return 0 if report.ok else 1


def _cmd_lift(args, zero_tol, row_tol) -> int:
    chain = _load_chain(args.chain, row_tol)
    sys.stdout.write(serialize_chain(lift(chain)))
    return 0


def _cmd_classify(args, zero_tol, row_tol) -> int:
    chain = _load_chain(args.chain, row_tol)
    if args.lift:
        lifted = lift(chain)
        decomposition = classify_first_order(lifted, zero_tol=zero_tol)
        labels = lifted.alphabet.symbols
        print("states windows")
    else:
        if chain.order == 1:
            decomposition = classify_first_order(chain, zero_tol=zero_tol)
        else:
            decomposition = classify_higher_order(chain, zero_tol=zero_tol)
        labels = chain.alphabet.symbols
        print("states symbols")
    for line in _class_lines(decomposition, labels):
        print(line)
    return 0


def _cmd_regular(args, zero_tol, row_tol) -> int:
    chain = _load_chain(args.chain, row_tol)
    witness = is_regular(chain, n_max=args.nmax, zero_tol=zero_tol)
    if witness is None:
        bound = args.nmax if args.nmax is not None else 4 * chain.n_contexts**2
        print("regular false")
        print(f"searched_up_to {bound}")
    else:
        print("regular true")
        print(f"witness {witness}")
    return 0


def _cmd_stationary(args, zero_tol, row_tol) -> int:
    chain = _load_chain(args.chain, row_tol)
    if chain.order != 1:
        raise AnalysisError(
            "stationary expects an order-1 chain; use invariant-set for "
            f"order {chain.order}"
        )
    pi = stationary_first_order(chain, zero_tol=zero_tol)
    for symbol, p in zip(chain.alphabet.symbols, pi.mass):
        print(f"symbol {symbol} : {_fmt(p)}")
    return 0


def _cmd_invariant_set(args, zero_tol, row_tol) -> int:
    chain = _load_chain(args.chain, row_tol)
    points = invariant_set(chain, zero_tol=zero_tol)
    print(f"extreme_points {len(points)}")
    for i, point in enumerate(points, start=1):
        for idx, p in enumerate(point.mass):
            window = ",".join(decode_context(chain.alphabet, chain.order, idx))
            print(f"point {i} {window} : {_fmt(p)}")
    return 0


def _cmd_approximate(args, zero_tol, row_tol) -> int:
    oracle = _process_oracle(args, zero_tol, row_tol)
    fill = _parse_fill(args.fill, oracle.alphabet)
    approx = markov_approximation(oracle, args.k, fill, zero_tol=zero_tol)
    sys.stdout.write(serialize_chain(approx))
    return 0


def _cmd_klrate(args, zero_tol, row_tol) -> int:
    oracle = _process_oracle(args, zero_tol, row_tol)
    if args.model is not None:
        model = _load_chain(args.model, row_tol)
    else:
        if args.k is None:
            raise AnalysisError("klrate needs --model FILE or --k ORDER")
        model = markov_approximation(oracle, args.k, zero_tol=zero_tol)
    report = relative_entropy_rate(
        oracle, model, horizon=args.horizon, zero_tol=zero_tol
    )
    print(f"model_order {model.order}")
    print(f"horizon {args.horizon}")
    for n, kl, d, inc in zip(
        report.arities, report.kl, report.cesaro, report.increments
    ):
        print(f"n {n} kl {_fmt(kl)} cesaro {_fmt(d)} increment {_fmt(inc)}")
    return 0


def _cmd_verify_theorem(args, zero_tol, row_tol) -> int:
    failures = 0
    for trial in range(args.trials):
        seed = args.seed + trial
        num_transient = min(trial % 3, args.nx - 2)
        chain, g, k = generate_instance(
            seed, args.nx, args.ny, num_transient=num_transient, k=args.k
        )
        report = verify_main_theorem(chain, g, k)
        ok = report.all_checks_pass
        failures += 0 if ok else 1
        print(
            f"trial {trial} seed {seed} transients {num_transient} "
            f"unique {'true' if report.unique else 'false'} "
            f"classes {report.num_recurrent_classes_of_lift} "
            f"mu_matches {'true' if report.mu_matches_lumped_marginal else 'false'} "
            f"support_matches "
            f"{'true' if report.support_equals_recurrent_class else 'false'}"
        )
    print(f"trials {args.trials}")
    print(f"failures {failures}")
    return 0 if failures == 0 else 1


def _cmd_verify_commutation(args, zero_tol, row_tol) -> int:
    failures = 0
    for trial in range(args.trials):
        seed = args.seed + trial
        x_oracle, g, k = generate_commutation_instance(
            seed, args.nx, args.ny, k=args.k
        )
        agree, gap = verify_commutation(x_oracle, g, k)
        failures += 0 if agree else 1
        print(
            f"trial {trial} seed {seed} agree {'true' if agree else 'false'} "
            f"gap {_fmt(gap)}"
        )
    print(f"trials {args.trials}")
    print(f"failures {failures}")
    return 0 if failures == 0 else 1


def _cmd_examples(args, zero_tol, row_tol) -> int:
    if args.dump is not None:
        os.makedirs(args.dump, exist_ok=True)
        chain3, g3 = fill_choice_instance()
        files = {
            "two_class.chain": serialize_chain(two_class_chain()),
            "unvisited_state.chain": serialize_chain(unvisited_state_chain()),
            "fill_choice.chain": serialize_chain(chain3),
            "fill_choice.lump": serialize_lumping(g3),
        }
        for name, text in files.items():
            path = os.path.join(args.dump, name)
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
            print(f"wrote {path}")
    reports = builtin_examples()
    all_ok = True
    for report in reports:
        print(f"example {report.example}")
        for check in report.checks:
            status = "PASS" if check.passed else "FAIL"
            all_ok &= check.passed
            print(f"check {status} {check.name} : {check.detail}")
    print(f"ok {'true' if all_ok else 'false'}")
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homarkov",
        description="Higher-order Markov chain analysis",
    )
    parser.add_argument(
        "--zero-tol",
        type=float,
        default=ZERO_TOL,
        help="entries at or below this count as structural zeros",
    )
    parser.add_argument(
        "--row-tol",
        type=float,
        default=ROW_TOL,
        help="tolerance for row sums and stochasticity checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, helptext):
        p = sub.add_parser(name, help=helptext)
        p.set_defaults(fn=fn)
        return p

    p = add("validate", _cmd_validate, "check a model file")
    p.add_argument("--chain", required=True, metavar="FILE")

    p = add("lift", _cmd_lift, "print the first-order window lift")
    p.add_argument("--chain", required=True, metavar="FILE")

    p = add("classify", _cmd_classify, "recurrent classes and transient states")
    p.add_argument("--chain", required=True, metavar="FILE")
    p.add_argument(
        "--lift", action="store_true", help="classify windows of the lift"
    )

    p = add("regular", _cmd_regular, "search for an all-positive step count")
    p.add_argument("--chain", required=True, metavar="FILE")
    p.add_argument("--nmax", type=int, default=None, help="search bound")

    p = add("stationary", _cmd_stationary, "unique stationary distribution")
    p.add_argument("--chain", required=True, metavar="FILE")

    p = add("invariant-set", _cmd_invariant_set, "extreme invariant distributions")
    p.add_argument("--chain", required=True, metavar="FILE")

    p = add("approximate", _cmd_approximate, "k-th order approximation")
    p.add_argument("--chain", required=True, metavar="FILE")
    p.add_argument("--lumping", metavar="FILE", help="merge symbols first")
    p.add_argument("--k", type=int, required=True, help="approximation order")
    p.add_argument(
        "--fill",
        default="uniform",
        metavar="uniform|FILE",
        help="row for never-visited contexts",
    )

    p = add("klrate", _cmd_klrate, "relative entropy rate estimates")
    p.add_argument("--chain", required=True, metavar="FILE")
    p.add_argument("--lumping", metavar="FILE", help="merge symbols first")
    p.add_argument("--k", type=int, default=None, help="approximation order")
    p.add_argument("--model", metavar="FILE", help="explicit model chain")
    p.add_argument("--horizon", type=int, required=True)

    p = add("verify-theorem", _cmd_verify_theorem, "uniqueness on random instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nx", type=int, default=5, help="hidden alphabet size")
    p.add_argument("--ny", type=int, default=2, help="merged alphabet size")
    p.add_argument("--k", type=int, default=2, help="approximation order")
    p.add_argument("--trials", type=int, default=1)

    p = add(
        "verify-commutation",
        _cmd_verify_commutation,
        "merging and approximating commute on random instances",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nx", type=int, default=4, help="process alphabet size")
    p.add_argument("--ny", type=int, default=2, help="merged alphabet size")
    p.add_argument("--k", type=int, default=2, help="approximation order")
    p.add_argument("--trials", type=int, default=1)

    p = add("examples", _cmd_examples, "run the builtin demonstration instances")
    p.add_argument("--dump", metavar="DIR", help="also write their model files")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args, args.zero_tol, args.row_tol)
    except ModelFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        AnalysisError,
        ModelValidationError,
        InfiniteDivergenceError,
        ValueError,
        np.linalg.LinAlgError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
