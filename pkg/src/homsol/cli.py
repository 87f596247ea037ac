"""Command-line interface.

Subcommands: ricci, fit, battery, stratify, build, extend, catalog,
verify-all.  Exit codes: 0 all checks pass, 1 check failures, 2 input or
usage errors.  Reports are deterministic; --json prints one JSON object.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import catalog as cat
from .constructions import (
    ConstructionData,
    einstein_extension_unimodular,
    einstein_from_nonunimodular,
    restrict_to_unimodular_kernel,
    validate_construction,
    build_semidirect,
)
from .decomposition import frob
from .io import (
    AlgebraDocument,
    CheckRecord,
    DocumentError,
    Report,
    document_from_decomposition,
    document_from_dict,
    load,
    validate,
)
from .soliton import (
    SOLITON_RESIDUAL_TOL,
    algebraic_soliton_equivalences,
    f_operator_check,
    soliton_fit,
    nilsoliton_fit,
    stratum_compatibility_check,
    structure_battery,
)
from .strata import e_beta_pairing, strata_properties
from .tensor import AlgebraTensor, DEFAULT_TOL


def _default_tol() -> float:
    env = os.environ.get("HOMSOL_TOL")
    if env:
        try:
            return float(env)
        except ValueError:
            pass
    return DEFAULT_TOL


def _report(command: str, doc: AlgebraDocument | None, tol: float) -> Report:
    return Report(
        command=command,
        input_name=doc.name if doc else "",
        input_hash=doc.content_hash() if doc else "",
        tolerance=tol,
    )


def _validated(report: Report, doc: AlgebraDocument, tol: float):
    dec, violations = validate(doc, tol)
    for v in violations:
        report.errors.append({"code": v.code, "detail": v.detail, "value": str(v.value)})
    return dec


def run_ricci(doc: AlgebraDocument, tol: float) -> Report:
    report = _report("ricci", doc, tol)
    dec = _validated(report, doc, tol)
    if dec is None:
        return report
    ric = dec.ricci()
    report.results["ricci"] = ric.matrix
    report.results["ricci_user_basis"] = ric.user_matrix
    report.results["eigenvalues"] = np.linalg.eigvalsh(ric.matrix)
    report.add(
        CheckRecord(
            name="ricci-symmetric",
            anchor="Ric = Ric^t",
            passed=ric.symmetry_defect() <= tol,
            value=ric.symmetry_defect(),
            tolerance=tol,
        )
    )
    return report


def run_fit(doc: AlgebraDocument, tol: float) -> Report:
    report = _report("fit", doc, tol)
    dec = _validated(report, doc, tol)
    if dec is None:
        return report
    cert = soliton_fit(dec, tol)
    report.classification = cert.tag
    report.results["c"] = cert.c
    report.results["residual"] = cert.residual
    report.results["derivation"] = cert.d_full
    report.results["flags"] = cert.flags
    if dec.dim_n:
        ncert = nilsoliton_fit(dec.blocks().mu_tensor(), tol=tol)
        report.results["nilpotent_part"] = {
            "c": ncert.c,
            "residual": ncert.residual,
            "tag": ncert.tag,
            "d1": ncert.d1,
        }
    scale = max(1.0, frob(dec.ricci().matrix))
    report.add(
        CheckRecord(
            name="soliton-detected",
            anchor="Ric = c I + S(D_p) for some D in Der(g), D k = 0",
            passed=cert.is_soliton,
            value=cert.residual,
            tolerance=SOLITON_RESIDUAL_TOL * scale,
            info={"tag": cert.tag, "c": cert.c},
        )
    )
    return report


def run_battery(doc: AlgebraDocument, tol: float) -> Report:
    report = _report("battery", doc, tol)
    dec = _validated(report, doc, tol)
    if dec is None:
        return report
    cert = soliton_fit(dec, tol)
    report.classification = cert.tag
    report.results["c"] = cert.c

    bat = structure_battery(dec, cert, tol)
    report.results["forward_direction_applicable"] = bat.applicable
    for cond in bat.conditions:
        report.add(
            CheckRecord(
                name=cond.name,
                anchor=cond.anchor,
                passed=cond.passed,
                value=cond.residual,
                tolerance=tol,
            )
        )

    fop = f_operator_check(dec, cert, tol)
    if fop.skipped:
        report.add(
            CheckRecord(
                name="f-operator-shape",
                anchor="S(ad_p H + D_p) = t E_beta",
                passed=True,
                info={"skipped": fop.reason},
            )
        )
    else:
        report.add(
            CheckRecord(
                name="f-operator-shape",
                anchor="S(ad_p H + D_p) = t E_beta (t I on an abelian part)",
                passed=fop.passed,
                value=fop.shape_residual,
                tolerance=tol,
                info={"branch": fop.branch, "t": fop.t},
            )
        )
        report.add(
            CheckRecord(
                name="f-trace-identity",
                anchor="c tr F + tr F^2 = 0",
                passed=fop.trace_identity <= tol * max(1.0, cert.c**2),
                value=fop.trace_identity,
                tolerance=tol,
            )
        )

    eq = algebraic_soliton_equivalences(dec, cert)
    report.add(
        CheckRecord(
            name="algebraic-equivalences-agree",
            anchor="S(D) in Der(g) <=> ... <=> Ric|_h = c I (seven conditions)",
            passed=eq.all_agree,
            info={"verdict": eq.verdict, "residuals": eq.residuals},
        )
    )

    comp = stratum_compatibility_check(dec, cert, tol)
    if comp.skipped:
        report.add(
            CheckRecord(
                name="stratum-compatibility",
                anchor="m(mu) = beta and friends",
                passed=True,
                info={"skipped": comp.reason},
            )
        )
    else:
        for c_ in comp.checks:
            report.add(
                CheckRecord(
                    name=c_.name, anchor=c_.anchor, passed=c_.passed, value=c_.residual,
                    tolerance=tol,
                )
            )
        report.results["mu_scalar_variant_residual"] = comp.mu_scalar_variant_residual
    return report


def run_stratify(doc: AlgebraDocument, tol: float) -> Report:
    report = _report("stratify", doc, tol)
    dec = _validated(report, doc, tol)
    if dec is None:
        return report
    mu = dec.blocks().mu_tensor()
    if mu.norm == 0.0:
        report.errors.append(
            {"code": "no-stratum", "detail": "nilpotent part is abelian or empty; no label"}
        )
        return report
    rep = strata_properties(mu, tol=tol)
    data = rep.stratum
    report.results["beta"] = data.beta
    report.results["beta_raw"] = data.beta_raw
    report.results["beta_norm_sq"] = data.beta_norm_sq
    report.results["support"] = [list(s) for s in data.support]
    report.results["nice_position"] = data.nice_position
    report.add(
        CheckRecord(
            name="label-trace",
            anchor="tr beta = -1",
            passed=abs(data.trace + 1.0) <= tol,
            value=data.trace,
            tolerance=tol,
        )
    )
    for c_ in rep.checks:
        report.add(
            CheckRecord(
                name=c_.name,
                anchor=c_.anchor,
                passed=c_.passed if c_.asserted else True,
                value=c_.value,
                tolerance=tol,
                info={} if c_.asserted else {"skipped": "needs nice position"},
            )
        )
    if data.nice_position:
        pairing = e_beta_pairing(dec, tol)
        report.results["pairing_terms"] = {
            "lam0": pairing.lam0_term,
            "lam1": pairing.lam1_term,
            "eta": pairing.eta_term,
            "mu": pairing.mu_term,
            "total": pairing.total,
        }
        report.add(
            CheckRecord(
                name="bracket-pairing-nonnegative",
                anchor="<pi(E_beta) [.,.]_p, [.,.]_p> >= 0, summand by summand",
                passed=pairing.summands_nonnegative and pairing.split_defect <= tol,
                value=pairing.total,
                tolerance=tol,
            )
        )
    return report


def _construction_from_dict(raw: dict) -> tuple[str, ConstructionData]:
    for key in ("name", "c", "nil", "reductive", "theta"):
        if key not in raw:
            raise DocumentError("missing-keys", f"construction document needs {key!r}")
    nil = raw["nil"]
    red = raw["reductive"]
    n_bracket = AlgebraTensor(
        nil["dim"], tuple((e["i"], e["j"], e["k"], e["c"]) for e in nil.get("bracket", []))
    )
    u_bracket = AlgebraTensor(
        red["dim"], tuple((e["i"], e["j"], e["k"], e["c"]) for e in red.get("bracket", []))
    )
    data = ConstructionData(
        n_bracket=n_bracket,
        c=float(raw["c"]),
        d1=np.asarray(nil["d1"], dtype=float),
        u_bracket=u_bracket,
        dim_k=int(red.get("dim_k", 0)),
        theta=np.asarray(raw["theta"], dtype=float),
        ip_n=np.asarray(nil["ip"], dtype=float) if "ip" in nil else None,
        ip_h=np.asarray(red["ip"], dtype=float) if "ip" in red else None,
    )
    return str(raw["name"]), data


def run_build(path: str, tol: float) -> Report:
    report = Report(command="build", input_name=path, input_hash="", tolerance=tol)
    try:
        raw = json.loads(Path(path).read_text())
        name, data = _construction_from_dict(raw)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, DocumentError) as err:
        report.errors.append({"code": "bad-construction", "detail": str(err)})
        return report
    report.input_name = name
    violations = validate_construction(data, tol)
    for v in violations:
        report.add(
            CheckRecord(
                name=v.code,
                anchor="construction conditions (c1)-(c3) and data (d1)-(d3)",
                passed=False,
                value=float(v.value) if isinstance(v.value, (int, float)) else None,
                info={"detail": v.detail},
            )
        )
    if violations:
        return report
    res = build_semidirect(data, tol)
    out_doc = document_from_decomposition(
        res.decomposition, f"{name}-built", meta={"built-from": name}
    )
    report.classification = res.certificate.tag
    report.results["document"] = out_doc.to_json_dict()
    report.results["c"] = res.certificate.c
    report.results["predicted_ricci"] = res.predicted_ricci
    report.add(
        CheckRecord(
            name="predicted-ricci-matches",
            anchor="Ric = c I + diag(-S(ad_u H|_h), -S(theta(H)) + D1)",
            passed=res.prediction_residual <= tol * max(1.0, abs(res.certificate.c)),
            value=res.prediction_residual,
            tolerance=tol,
        )
    )
    return report


def run_extend(doc: AlgebraDocument, variant: str, tol: float) -> Report:
    report = _report("extend", doc, tol)
    dec = _validated(report, doc, tol)
    if dec is None:
        return report
    cert = soliton_fit(dec, tol)
    ops = {
        "nonunimodular": einstein_from_nonunimodular,
        "restrict": restrict_to_unimodular_kernel,
        "unimodular": einstein_extension_unimodular,
    }
    try:
        out, out_cert = ops[variant](dec, cert, tol)
    except (ValueError, KeyError) as err:
        report.errors.append({"code": "extend-failed", "detail": str(err)})
        return report
    out_doc = document_from_decomposition(
        out, f"{doc.name}-{variant}", meta={"derived-from": doc.name, "variant": variant}
    )
    report.classification = out_cert.tag
    report.results["document"] = out_doc.to_json_dict()
    report.results["c"] = out_cert.c
    report.results["residual"] = out_cert.residual
    expect_einstein = variant in ("nonunimodular", "unimodular")
    if expect_einstein:
        ric = out.ricci().matrix
        gap = frob(ric - cert.c * np.eye(out.dim_p))
        report.add(
            CheckRecord(
                name="einstein-with-same-constant",
                anchor="Ric_out = c I with the input certificate's c",
                passed=gap <= tol * max(1.0, frob(ric)),
                value=gap,
                tolerance=tol,
            )
        )
    else:
        report.add(
            CheckRecord(
                name="restricted-certificate",
                anchor="Ric_0 = c I + D'|_p0 with D' = (D + S(ad H))|_g0",
                passed=out_cert.residual <= tol * max(1.0, abs(cert.c)),
                value=out_cert.residual,
                tolerance=tol,
            )
        )
    return report


def run_catalog(dump_dir: str | None) -> Report:
    report = Report(command="catalog", input_name="", input_hash="", tolerance=0.0)
    listing = {}
    for name in cat.names():
        entry = cat.get(name)
        listing[name] = {
            "dim": entry.dim,
            "dim_k": entry.dim_k,
            "dim_h": entry.dim_h,
            "dim_n": entry.dim_n,
            "description": entry.meta.get("description", ""),
        }
    report.results["catalog"] = listing
    if dump_dir:
        from .io import document_from_catalog

        out = Path(dump_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name in cat.names():
            (out / f"{name}.json").write_text(document_from_catalog(cat.get(name)).dumps() + "\n")
        report.results["dumped_to"] = str(out)
    return report


def _verify_one(name: str, tol: float) -> list[CheckRecord]:
    from .io import document_from_catalog

    entry = cat.get(name)
    doc = document_from_catalog(entry)
    checks: list[CheckRecord] = []

    def rec(check: str, anchor: str, passed: bool, **info):
        checks.append(
            CheckRecord(name=f"{name}:{check}", anchor=anchor, passed=passed, info=info)
        )

    dec, violations = validate(doc, tol)
    rec("valid", "decomposition invariants", dec is not None)
    if dec is None:
        return checks

    expected = entry.meta.get("expected", {})
    cert = soliton_fit(dec, tol)
    if "tag" in expected:
        rec(
            "tag",
            "classification matches the catalog expectation",
            cert.tag == expected["tag"],
            got=cert.tag,
            want=expected["tag"],
        )
    if "c" in expected:
        rec(
            "constant",
            "fitted c matches the catalog expectation",
            abs(cert.c - expected["c"]) <= 1e-9 * max(1.0, abs(expected["c"])),
            got=cert.c,
        )
    if expected.get("nilsoliton_negative"):
        ncert = nilsoliton_fit(doc.tensor(), tol=tol)
        rec(
            "nilsoliton-negative",
            "min over {c I + S(D)} of |Ric - c I - S(D)| > 1e-3",
            ncert.residual > 1e-3,
            residual=ncert.residual,
        )

    if cert.is_soliton and cert.expanding:
        bat = structure_battery(dec, cert, tol)
        rec(
            "battery",
            "structural conditions (i)-(v)",
            bat.all_pass,
            **{c.name: c.residual for c in bat.conditions if not c.passed},
        )
        fop = f_operator_check(dec, cert, tol)
        rec(
            "f-operator",
            "S(ad_p H + D_p) = t E_beta",
            fop.skipped or fop.passed,
            residual=fop.shape_residual,
        )
        eq = algebraic_soliton_equivalences(dec, cert)
        rec("equivalences-agree", "seven algebraic-soliton conditions agree", eq.all_agree)
        comp = stratum_compatibility_check(dec, cert, tol)
        rec(
            "stratum-compatibility",
            "m(mu) = beta and friends",
            comp.skipped or comp.all_pass,
            **{c.name: c.residual for c in comp.checks if not c.passed},
        )

    mu = dec.blocks().mu_tensor()
    if mu.norm > 0 and dec.dim_n:
        srep = strata_properties(mu, tol=tol)
        rec("stratum-properties", "label inequalities", srep.passed)
        if srep.stratum.nice_position:
            pairing = e_beta_pairing(dec, tol)
            rec(
                "bracket-pairing",
                "<pi(E_beta) [.,.]_p, [.,.]_p> >= 0 summand by summand",
                pairing.summands_nonnegative and pairing.split_defect <= tol,
            )
    return checks


def run_verify_all(tol: float) -> Report:
    report = Report(command="verify-all", input_name="catalog", input_hash="", tolerance=tol)
    for name in sorted(cat.names()):
        report.checks.extend(_verify_one(name, tol))
    return report


def _emit(report: Report, args) -> int:
    if args.json:
        print(report.dumps())
        return report.exit_code
    if not args.quiet:
        for err in report.errors:
            print(f"error [{err['code']}] {err['detail']}")
        for check in report.checks:
            status = "pass" if check.passed else "FAIL"
            extra = ""
            if check.value is not None:
                extra = f" value={check.value:.3e}"
            skipped = check.info.get("skipped")
            if skipped:
                status, extra = "skip", f" ({skipped})"
            print(f"[{status}] {check.name}{extra}")
        if report.classification:
            print(f"classification: {report.classification}")
        for key in ("c", "residual", "beta"):
            if key in report.results:
                print(f"{key}: {_fmt(report.results[key])}")
        if "document" in report.results:
            print(json.dumps(report.results["document"], sort_keys=True, indent=2))
        if "catalog" in report.results:
            for name, row in report.results["catalog"].items():
                dims = f"({row['dim_k']},{row['dim_h']},{row['dim_n']})"
                print(f"{name:12s} dim {row['dim']:2d} {dims:10s} {row['description']}")
    elif not report.passed:
        for err in report.errors:
            print(f"error [{err['code']}] {err['detail']}", file=sys.stderr)
        for check in report.checks:
            if not check.passed:
                print(f"FAIL {check.name}", file=sys.stderr)
    return report.exit_code


def _fmt(v):
    if isinstance(v, np.ndarray):
        return np.array2string(v, precision=9, suppress_small=True)
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--tol", type=float, default=None, help="residual tolerance (env HOMSOL_TOL)"
    )
    common.add_argument("--json", action="store_true", help="emit the report as one JSON object")
    common.add_argument("--quiet", action="store_true", help="print failures only")

    ap = argparse.ArgumentParser(
        prog="homsol",
        description="Curvature and soliton structure of metric Lie algebras",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    for name, help_ in (
        ("ricci", "Ricci operator of a decomposition"),
        ("fit", "soliton certificate by least squares"),
        ("battery", "full structural condition battery"),
        ("stratify", "stratum label and its property checks"),
    ):
        p = sub.add_parser(name, help=help_, parents=[common])
        p.add_argument("document", help="JSON file or catalog name")

    p = sub.add_parser("build", help="semidirect construction from parts", parents=[common])
    p.add_argument("document", help="construction JSON file")

    p = sub.add_parser(
        "extend", help="Einstein/soliton metric transformations", parents=[common]
    )
    p.add_argument("document", help="JSON file or catalog name")
    p.add_argument(
        "--variant",
        required=True,
        choices=["nonunimodular", "restrict", "unimodular"],
    )
    p.add_argument("--out", default=None, help="write the produced document here")

    p = sub.add_parser("catalog", help="list bundled algebras", parents=[common])
    p.add_argument("--dump", default=None, help="write all catalog documents to a directory")

    sub.add_parser("verify-all", help="run every check over the bundled catalog", parents=[common])
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    tol = args.tol if args.tol is not None else _default_tol()
    try:
        if args.command == "catalog":
            report = run_catalog(args.dump)
        elif args.command == "verify-all":
            report = run_verify_all(tol)
        elif args.command == "build":
            report = run_build(args.document, tol)
        else:
            doc = load(args.document)
            if args.command == "ricci":
                report = run_ricci(doc, tol)
            elif args.command == "fit":
                report = run_fit(doc, tol)
            elif args.command == "battery":
                report = run_battery(doc, tol)
            elif args.command == "stratify":
                report = run_stratify(doc, tol)
            elif args.command == "extend":
                report = run_extend(doc, args.variant, tol)
                if args.out and "document" in report.results:
                    Path(args.out).write_text(
                        json.dumps(report.results["document"], sort_keys=True, indent=2) + "\n"
                    )
            else:  # pragma: no cover
                raise SystemExit(2)
    except DocumentError as err:
        print(f"error [{err.code}] {err.detail}", file=sys.stderr)
        return 2
    return _emit(report, args)


if __name__ == "__main__":
    sys.exit(main())
