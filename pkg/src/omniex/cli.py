"""Command line front end.

Subcommands: rates | ilp | code | verify | selfcheck.  Input is a JSON
problem document (and a scheme document for ``verify``); output is a
deterministic JSON result document, or an aligned table with
``--format table``.

Exit codes: 0 success, 1 property or verification failure, 2 invalid
input, 3 unit mismatch, 4 field too small, 5 construction failure.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import documents as docs
from . import netcode, rates, setfun, sources
from .errors import (
    ConstructionFailed,
    FieldTooSmall,
    InvalidN,
    NegativeWeight,
    NonIntegerRates,
    OmniexError,
    UnitMismatch,
    ValidationError,
)

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_INVALID = 2
EXIT_UNIT = 3
EXIT_FIELD = 4
EXIT_CONSTRUCTION = 5


def _parse_alpha(text: str, m: int) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != m:
        raise ValidationError(f"--alpha: expected {m} comma-separated weights")
    out = []
    for i, part in enumerate(parts):
        value = docs.parse_value(part, f"--alpha[{i}]")
        if value < 0:
            raise ValidationError(f"--alpha[{i}]: negative weight {part}")
        out.append(value)
    return tuple(out)


def _effective_alpha(doc: docs.ProblemDocument, args) -> tuple:
    if getattr(args, "alpha", None):
        return _parse_alpha(args.alpha, doc.m)
    if doc.weights is not None:
        return doc.weights
    return (1,) * doc.m


def _is_uniform(alpha: Sequence) -> bool:
    return all(a == alpha[0] for a in alpha) and alpha[0] > 0


def _partition_blocks(partition: rates.PartitionResult) -> list[list[int]]:
    return [[u + 1 for u in block] for block in partition.as_sets()]


def _base_result(doc: docs.ProblemDocument, command: str, oracle) -> dict:
    return {
        "command": command,
        "input_sha256": doc.sha256,
        "m": doc.m,
        "unit": oracle.unit,
    }


def _emit(out: dict, args) -> None:
    if getattr(args, "format", "json") == "table":
        print(docs.render_table(out))
    else:
        print(docs.dump_json(out), end="")


def cmd_rates(args) -> int:
    doc = docs.load_problem(args.problem)
    oracle = sources.EntropyOracle(doc.source)
    alpha = _effective_alpha(doc, args)
    rco = rates.rco_sum_rate(oracle)
    if _is_uniform(alpha):
        chosen = rco.rates
        beta_star = rco.value
        cost = rco.value * alpha[0]
        iterations = rco.iterations
        evaluations = rco.evaluations
    else:
        weighted = rates.minimize_weighted(oracle, alpha, tolerance=args.tolerance,
                                           rco=rco)
        chosen = weighted.rates
        beta_star = weighted.beta_star
        cost = weighted.cost
        iterations = rco.iterations + weighted.iterations
        evaluations = weighted.evaluations
    if not rates.verify_feasible(oracle, chosen):
        raise OmniexError("internal error: emitted rates are infeasible")
    out = _base_result(doc, "rates", oracle)
    out.update({
        "weights": [docs.format_value(a) for a in alpha],
        "rates": docs.rates_to_json(chosen),
        "sum_rate": docs.format_value(chosen.total()),
        "beta_star": docs.format_value(beta_star),
        "cost": docs.format_value(cost),
        "min_sum_rate": docs.format_value(rco.value),
        "partition": _partition_blocks(rco.partition),
        "key_capacity": docs.format_value(oracle.total() - rco.value),
        "diagnostics": {
            "iterations": iterations,
            "entropy_queries": oracle.oracle_queries(),
            "sfm_evaluations": evaluations,
        },
    })
    _emit(out, args)
    return EXIT_OK


def cmd_ilp(args) -> int:
    doc = docs.load_problem(args.problem)
    oracle = sources.EntropyOracle(doc.source)
    alpha = _effective_alpha(doc, args)
    n = args.n if args.n is not None else doc.n
    if not isinstance(n, int) or n < 1:
        raise InvalidN(f"block length n must be a positive integer, got {n!r}")
    rco = rates.rco_sum_rate(oracle)
    result = rates.ilp_rates(oracle, alpha, n, rco=rco, tolerance=args.tolerance)
    if not rates.verify_feasible(oracle, result.rates):
        raise OmniexError("internal error: emitted rates are infeasible")
    out = _base_result(doc, "ilp", oracle)
    out.update({
        "weights": [docs.format_value(a) for a in alpha],
        "n": n,
        "rates": docs.rates_to_json(result.rates),
        "sum_rate": docs.format_value(result.rates.total()),
        "beta": docs.format_value(result.beta),
        "cost": docs.format_value(result.cost),
        "gap_bound": docs.format_value(result.gap_bound),
        "min_sum_rate": docs.format_value(rco.value),
        "partition": _partition_blocks(rco.partition),
        "key_capacity": docs.format_value(oracle.total() - rco.value),
        "diagnostics": {
            "iterations": rco.iterations,
            "entropy_queries": oracle.oracle_queries(),
            "sfm_evaluations": rco.evaluations,
        },
    })
    _emit(out, args)
    return EXIT_OK


def cmd_code(args) -> int:
    doc = docs.load_problem(args.problem)
    if not isinstance(doc.source, sources.LinearSource):
        raise ValidationError("code construction needs a linear source document")
    src = doc.source
    oracle = sources.EntropyOracle(src)
    alpha = _effective_alpha(doc, args)
    n = args.n if args.n is not None else doc.n
    seed = args.seed if args.seed is not None else doc.seed
    result = rates.ilp_rates(oracle, alpha, n, tolerance=args.tolerance)
    if not rates.verify_feasible(oracle, result.rates):
        raise OmniexError("internal error: emitted rates are infeasible")
    scheme = netcode.construct_code(src, result.rates, n, seed=seed,
                                    max_tries=args.max_tries)
    ranks = netcode.receiver_ranks(src, scheme)
    scheme_doc = docs.scheme_to_json(scheme, oracle.unit)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(docs.dump_json(scheme_doc))
    out = _base_result(doc, "code", oracle)
    out.update({
        "n": n,
        "seed": seed,
        "rates": docs.rates_to_json(result.rates),
        "sum_rate": docs.format_value(result.rates.total()),
        "broadcast_rows": [c.rows for c in scheme.coefficients],
        "scheme_file": args.out,
        "receivers": [
            {"receiver": j + 1, "achieved_rank": got, "required_rank": need,
             "status": "pass" if got == need else "fail"}
            for j, (got, need) in enumerate(ranks)
        ],
        "diagnostics": {"entropy_queries": oracle.oracle_queries()},
    })
    _emit(out, args)
    return EXIT_OK


def cmd_verify(args) -> int:
    doc = docs.load_problem(args.problem)
    if not isinstance(doc.source, sources.LinearSource):
        raise ValidationError("verification needs a linear source document")
    src = doc.source
    oracle = sources.EntropyOracle(src)
    scheme = docs.load_scheme(args.scheme, expected_unit=oracle.unit)
    if scheme.p != src.p:
        raise UnitMismatch(
            f"scheme symbols are F_{scheme.p}, problem symbols are F_{src.p}")
    ranks = netcode.receiver_ranks(src, scheme)
    ok = all(got == need for got, need in ranks)
    out = _base_result(doc, "verify", oracle)
    out.update({
        "scheme_file": args.scheme,
        "n": scheme.n,
        "broadcast_rows": [c.rows for c in scheme.coefficients],
        "receivers": [
            {"receiver": j + 1, "achieved_rank": got, "required_rank": need,
             "status": "pass" if got == need else "fail"}
            for j, (got, need) in enumerate(ranks)
        ],
        "omniscience": ok,
    })
    _emit(out, args)
    return EXIT_OK if ok else EXIT_PROPERTY


def _selfcheck_entries(doc: docs.ProblemDocument, oracle, sample_rng
                       ) -> list[dict]:
    checks: list[dict] = []
    m = oracle.m
    exhaustive = m <= 8

    def record(name: str, status: str, detail: str = "") -> None:
        entry = {"name": name, "status": status}
        if detail:
            entry["detail"] = detail
        checks.append(entry)

    problems = sources.validate(doc.source)
    record("source-valid", "pass" if not problems else "fail", "; ".join(problems))
    if problems:
        return checks

    record("entropy-empty-zero",
           "pass" if setfun.value_eq(oracle.entropy(0), 0, oracle.exact) else "fail")

    full = oracle.full_mask
    if exhaustive:
        pairs = [(s, s | (1 << i))
                 for s in range(full + 1) for i in range(m) if not s >> i & 1]
    else:
        record("exhaustive-checks", "skipped",
               f"m={m} > 8, running sampled checks instead")
        pairs = []
        for _ in range(512):
            s = sample_rng.randrange(full + 1)
            i = sample_rng.randrange(m)
            pairs.append((s & ~(1 << i), s | (1 << i)))
    mono_ok = all(setfun.value_le(oracle.entropy(a), oracle.entropy(b), oracle.exact)
                  for a, b in pairs)
    record("entropy-monotone" if exhaustive else "entropy-monotone-sampled",
           "pass" if mono_ok else "fail")

    hfun = oracle.entropy_setfunction()
    if exhaustive:
        sub_ok = setfun.is_submodular(hfun)
    else:
        sub_ok = True
        for _ in range(512):
            s = sample_rng.randrange(full + 1)
            t = sample_rng.randrange(full + 1)
            lhs = oracle.entropy(s) + oracle.entropy(t)
            rhs = oracle.entropy(s | t) + oracle.entropy(s & t)
            if not setfun.value_le(rhs, lhs, oracle.exact):
                sub_ok = False
                break
    record("entropy-submodular" if exhaustive else "entropy-submodular-sampled",
           "pass" if sub_ok else "fail")

    cond_ok = all(
        setfun.value_le(0, oracle.cond_entropy(s), oracle.exact)
        and setfun.value_le(oracle.cond_entropy(s), oracle.entropy(s), oracle.exact)
        for s in range(1, full + 1))
    record("conditional-entropy-bounds", "pass" if cond_ok else "fail")

    if not sub_ok or not mono_ok:
        return checks

    if exhaustive:
        record("budget-function-intersecting-submodular",
               "pass" if setfun.is_intersecting_submodular(oracle.f_beta(0))
               else "fail")
        record("budget-function-submodular-at-total",
               "pass" if setfun.is_submodular(oracle.f_beta(oracle.total()))
               else "fail")

    rco = rates.rco_sum_rate(oracle)
    record("sum-rate-iterations",
           "pass" if rco.iterations <= m else "fail",
           f"{rco.iterations} iterations for m={m}")
    record("sum-rate-rates-feasible",
           "pass" if rates.verify_feasible(oracle, rco.rates) else "fail")
    if m <= 8:
        formula = rates.rco_partition_formula(oracle)
        record("sum-rate-partition-formula",
               "pass" if setfun.value_eq(rco.value, formula, oracle.exact) else "fail",
               f"iterative {rco.value} vs enumerated {formula}")
        betas = [rco.value, oracle.total()]
        mid = (rco.value + oracle.total())
        betas.append(Fraction(mid, 2) if oracle.exact else mid / 2)
        dil_ok = True
        for beta in betas:
            sweep = rates.modified_edmond(oracle, beta)
            ref, _part = setfun.dilworth_bruteforce(oracle.f_beta(beta), full)
            if not setfun.value_eq(sweep.g_value, ref, oracle.exact):
                dil_ok = False
        record("dilworth-cross-check", "pass" if dil_ok else "fail")
    seg_ok = True
    for probe in (rco.value, oracle.total()):
        seg = rates.h_eval(oracle, (1,) * m, probe).segment
        if sum(seg.b) != 1:
            seg_ok = False
    record("segment-sum-law", "pass" if seg_ok else "fail")
    return checks


def cmd_selfcheck(args) -> int:
    import random

    doc = docs.load_problem(args.problem)
    oracle = sources.EntropyOracle(doc.source)
    checks = _selfcheck_entries(doc, oracle, random.Random(doc.seed))
    ok = all(c["status"] != "fail" for c in checks)
    out = _base_result(doc, "selfcheck", oracle)
    out.update({"checks": checks, "ok": ok})
    _emit(out, args)
    return EXIT_OK if ok else EXIT_PROPERTY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omniex",
        description="Minimum-cost rate allocation and code construction "
                    "for broadcast data exchange")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_n=False, with_seed=False):
        p.add_argument("problem", help="problem document (JSON)")
        p.add_argument("--alpha", help="comma-separated weights, overrides the document")
        if with_n:
            p.add_argument("--n", type=int, default=None,
                           help="block length (denominator of the rates)")
        if with_seed:
            p.add_argument("--seed", type=int, default=None,
                           help="seed for the randomized completion")
        p.add_argument("--tolerance", type=float, default=1e-9,
                       help="bracket tolerance for pmf sources")
        p.add_argument("--format", choices=("json", "table"), default="json")

    p_rates = sub.add_parser("rates", help="optimal (possibly weighted) rate allocation")
    common(p_rates)
    p_rates.set_defaults(func=cmd_rates)

    p_ilp = sub.add_parser("ilp", help="optimal rates at denominator n")
    common(p_ilp, with_n=True)
    p_ilp.set_defaults(func=cmd_ilp)

    p_code = sub.add_parser("code", help="construct a transmission scheme")
    common(p_code, with_n=True, with_seed=True)
    p_code.add_argument("--out", default="scheme.json",
                        help="path for the scheme document")
    p_code.add_argument("--max-tries", type=int, default=64,
                        help="random completion attempts before giving up")
    p_code.set_defaults(func=cmd_code)

    p_verify = sub.add_parser("verify", help="check a scheme against a problem")
    p_verify.add_argument("problem", help="problem document (JSON)")
    p_verify.add_argument("scheme", help="scheme document (JSON)")
    p_verify.add_argument("--format", choices=("json", "table"), default="json")
    p_verify.set_defaults(func=cmd_verify)

    p_self = sub.add_parser("selfcheck", help="run the invariant suite on a document")
    p_self.add_argument("problem", help="problem document (JSON)")
    p_self.add_argument("--format", choices=("json", "table"), default="json")
    p_self.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, InvalidN, NonIntegerRates, NegativeWeight) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except UnitMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNIT
    except FieldTooSmall as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FIELD
    except ConstructionFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except OmniexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROPERTY


if __name__ == "__main__":
    sys.exit(main())
