"""Command-line interface: validation, single computations and the acceptance checks."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import DomainError, NotInteger, ParseError, PhasekitError

SCHEMA = "report.v1"
BASES = {1: [0.0], 2: [0.0, -1.0], 3: [0.0, -1.0, 0.0]}


# ------------------------------------------------------------------ helpers

def _threads() -> int:
    try:
        return max(1, int(os.environ.get("PHASEKIT_THREADS", "1")))
    except ValueError:
        raise ParseError("PHASEKIT_THREADS must be an integer") from None


def _map(fn, items):
    n = _threads()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _model(args):
    from .models import builtin_model
    if not args.builtin:
        raise DomainError("this command needs --builtin A1|A2|A3")
    return builtin_model(args.builtin)


def _report(args, records, residual, tol, extra=None):
    rep = {"schema": SCHEMA, "command": args.command, "builtin": getattr(args, "builtin", None),
           "seed": getattr(args, "seed", None), "tolerance": tol, "max_residual": float(residual),
           "ok": bool(residual < tol), "records": records}
    if extra:
        rep.update(extra)
    return rep


def _small_vectors(mu, bound=2):
    import itertools
    return [np.array(v) for v in itertools.product(range(-bound, bound + 1), repeat=mu) if any(v)]


# ------------------------------------------------------------------ commands

def cmd_validate(args):
    """Lattice invariants, spectral consistency, Frobenius data and the higher residue identities."""
    from .continuation import frobenius_a_mu
    from .lattice import check_invariants, classical_monodromy, load
    from .opcalc import normalized_log
    lat = load(args.lattice or args.builtin or "")
    inv = check_invariants(lat)
    sig = classical_monodromy(lat)
    ev = np.sort_complex(np.linalg.eigvals(sig.mat))
    s = [float(v) for v in lat.spectrum]
    target = np.sort_complex(np.exp(-2j * np.pi * np.array(s)))
    spec_res = max(min(abs(e - t) for t in target) for e in ev) if s else 0.0
    N = normalized_log(sig.mat)
    nu = np.array(N.eigvals, dtype=complex)
    in_range = bool(np.all((nu.real > -1 - 1e-12) & (nu.real <= 1e-12) & (np.abs(nu.imag) < 1e-12)))
    rec = {"invariants": inv, "spectral_residual": spec_res, "log_eigenvalues": nu, "log_in_range": in_range}
    residual = spec_res if in_range and all(inv.values()) else np.inf
    if args.builtin:
        from .models import builtin_model
        from .periods import k1_residual, k4_residual
        model = builtin_model(args.builtin)
        fd = frobenius_a_mu(model.mu)
        rng = np.random.default_rng(args.seed)
        fres = 0.0
        for _ in range(5):
            t = rng.normal(size=model.mu) + 1j * rng.normal(size=model.mu)
            Cs = fd.products(t)
            for i in range(model.mu):
                for j in range(model.mu):
                    fres = max(fres, np.abs(Cs[i] @ Cs[j] - Cs[j] @ Cs[i]).max())
                    # associativity: (phi_i phi_j) phi_k = phi_i (phi_j phi_k)
                    fres = max(fres, np.abs(sum(Cs[i][m, j] * Cs[m] for m in range(model.mu)) - Cs[i] @ Cs[j]).max())
            fres = max(fres, np.abs(fd.residue_pairing(t) - fd.eta).max())
        rec.update({"frobenius_residual": fres, "k4_residual": k4_residual(model),
                    "k1_residual": k1_residual(model),
                    "residue_gram_residual": float(np.abs(model.residue_gram - model.eta).max())})
        residual = max(residual, rec["k4_residual"], rec["k1_residual"], fres * 1e-0)
    return _report(args, [rec], residual, args.tol or 1e-10)


def cmd_omega(args):
    from .phase import omega_closed_form, omega_oracle
    model = _model(args)
    n = model.mu
    E = np.eye(n)
    recs, worst = [], 0.0
    t0 = time.time()
    for r in np.linspace(2, 8, 5):
        for ph in np.linspace(0.1, 2 * np.pi - 0.1, 5):
            mu = 0.7 * np.exp(0.4j)
            lam = r * abs(mu) * np.exp(1j * ph)
            for a in range(n):
                for b in range(n):
                    o, tail = omega_oracle(E[a], E[b], lam, mu, model, n_max=args.n_max)
                    c = omega_closed_form(E[a], E[b], lam, mu, model).omega
                    worst = max(worst, abs(o - c))
                    recs.append({"lambda": lam, "mu": mu, "alpha": a, "beta": b, "oracle": o,
                                 "closed_form": c, "residual": abs(o - c), "tail_bound": tail})
    return _report(args, recs, worst, args.tol or 1e-8, {"elapsed_s": time.time() - t0})


def cmd_locality(args):
    from .phase import locality_check
    model = _model(args)
    rng = np.random.default_rng(args.seed)
    recs, worst = [], 0.0
    for _ in range(args.samples):
        a = rng.integers(-2, 3, model.mu)
        b = rng.integers(-2, 3, model.mu)
        lam = rng.uniform(1.5, 3) * np.exp(2j * np.pi * rng.random())
        mu = lam * rng.uniform(0.3, 0.8) * np.exp(1j * rng.uniform(-0.8, 0.8))
        side = int(rng.choice([1, -1]))
        try:
            pv = locality_check(a, b, lam, mu, model, side=side, tol=args.tol or 1e-6)
            res = pv.branch_data["residual"]
            recs.append({"alpha": a, "beta": b, "lambda": lam, "mu": mu, "side": side, "k": pv.k_integer,
                         "ratio": pv.branch_data["ratio"], "residual": res})
        except NotInteger as e:
            res = np.inf
            recs.append({"alpha": a, "beta": b, "lambda": lam, "mu": mu, "side": side, "error": str(e)})
        worst = max(worst, res)
    return _report(args, recs, worst, args.tol or 1e-6)


def _random_base(model, rng):
    t = np.array(BASES[model.mu], dtype=complex)
    t = t + 0.15 * (rng.normal(size=model.mu) + 1j * rng.normal(size=model.mu))
    lam = 2.5j * np.exp(1j * rng.uniform(-0.3, 0.3))
    mu = lam - 0.05 * lam / abs(lam)
    return t, lam, mu


def cmd_integrality(args):
    from .continuation import canonical_coordinates, loop_integral, omega_matrix_t, random_loop, integrality_value
    from .errors import PathInvalid
    model = _model(args)
    rng = np.random.default_rng(args.seed)
    small = _small_vectors(model.mu, 2)
    jobs = []
    while len(jobs) < args.loops:
        t, lam, mu = _random_base(model, rng)
        u, _, _ = canonical_coordinates(t, model.frobenius)
        try:
            loop, word = random_loop(u, mu, rng, max_len=3, shifts=(0, lam - mu))
        except PathInvalid:
            continue
        a = rng.integers(-2, 3, model.mu)
        b = rng.integers(-2, 3, model.mu)
        jobs.append((t, lam, mu, loop, word, a, b))

    def run(job):
        t, lam, mu, loop, word, a, b = job
        t0 = time.time()
        res = loop_integral(model, t, lam, mu, loop, base=omega_matrix_t(model, t, lam, mu))
        out = integrality_value(res, a, b, tol=np.inf)
        inv = [v for v in small if np.array_equal(res.monodromy @ v, v)]
        cor = []
        for v in inv[:3]:
            for w in inv[:3]:
                q = (v @ res.integral @ w) / (2j * np.pi)
                cor.append({"alpha": v, "beta": w, "integer": int(np.rint(q.real)),
                            "residual": float(abs(q - np.rint(q.real)))})
        return {"t": t, "lambda": lam, "mu": mu, "word": word, "alpha": a, "beta": b,
                "monodromy": res.monodromy, "value": out["value"], "integer": out["integer"],
                "residual": out["residual"], "invariant_pairs": cor, "elapsed_s": time.time() - t0}

    recs = _map(run, jobs)
    worst = max([r["residual"] for r in recs] + [c["residual"] for r in recs for c in r["invariant_pairs"]])
    return _report(args, recs, worst, args.tol or 1e-5)


def cmd_vv(args):
    from .continuation import vanishing_loop
    model = _model(args)
    t = np.array(BASES[model.mu], dtype=complex)
    lam, mu = 2.5j, 2.45j
    recs, worst = [], 0.0
    for i in range(model.mu):
        t0 = time.time()
        r = vanishing_loop(model, t, lam, mu, i)
        el = time.time() - t0
        res = abs(r["ratio"] - 1)
        if el > 30:
            res = np.inf
        worst = max(worst, res)
        recs.append({"critical_value": r["critical_value"], "vanishing_cycle": r["vanishing_cycle"],
                     "value": r["value"], "ratio": r["ratio"], "residual": res, "elapsed_s": el})
    return _report(args, recs, worst, args.tol or 1e-6)


def cmd_fock(args):
    from .fock import FockSpace, compose_and_extract_phase, generator, ope_m_stability
    from .phase import omega_oracle
    model = _model(args)
    rng = np.random.default_rng(args.seed)
    recs, worst = [], 0.0
    E = np.eye(model.mu)
    for T in (4, 6, 8):
        for _ in range(3):
            a = rng.integers(-1, 2, model.mu)
            b = rng.integers(-1, 2, model.mu)
            lam = rng.uniform(1.5, 2.5) * np.exp(2j * np.pi * rng.random())
            mu = lam * rng.uniform(0.2, 0.6) * np.exp(1j * rng.uniform(-1, 1))
            s = compose_and_extract_phase(a, b, lam, mu, model, T)
            ref = np.exp(omega_oracle(a, b, lam, mu, model, n_max=T)[0])
            res = abs(s - ref) / max(1.0, abs(ref))
            worst = max(worst, res)
            recs.append({"kind": "composition", "truncation": T, "alpha": a, "beta": b, "lambda": lam,
                         "mu": mu, "scalar": s, "expected": ref, "residual": res})
    V = FockSpace(model, 3)
    vac = V.vacuum()
    lam = 1.3 + 0.4j
    pairs = [(generator("exp", E[0]), generator("exp", E[-1]), 0, 2),
             (generator("phi", E[0]), generator("exp", E[-1]), 0, 1),
             (generator("phi", E[0]), generator("phi", E[-1]), 1, 2)]
    ope_res = 0.0
    for a, b, k, M in pairs:
        r = ope_m_stability(a, b, k, M, lam, model, vac)
        ope_res = max(ope_res, r)
        recs.append({"kind": "ope", "a": a[0], "b": b[0], "k": k, "M": M, "residual": r})
    ok = worst < (args.tol or 1e-8) and ope_res < 1e-9
    rep = _report(args, recs, max(worst, ope_res), args.tol or 1e-8)
    rep["ok"] = bool(ok)
    return rep


def cmd_polylog(args):
    from .polylog import ComplexPath, jonquiere_invert
    rng = np.random.default_rng(args.seed)
    recs, worst = [], 0.0
    for p in range(1, 7):
        for im_sign in (1, -1):
            for via in ("zero", "pi"):
                # through angle 0 the path crosses (1, inf); 1 is then on its right iff it moves clockwise
                side = "right" if (via == "zero") == (im_sign > 0) else "left"
                for _ in range(args.samples):
                    r = rng.uniform(0.2, 0.85)
                    th = im_sign * rng.uniform(0.1, np.pi - 0.1)
                    x = r * np.exp(1j * th)
                    # out along the ray to radius 1/r, then round to 1/x = e^{-i th}/r:
                    # through angle 0 crosses the cut beyond 1, through pi passes 1 on the other side
                    end = -th if via == "zero" else (-th + 2 * np.pi * np.sign(th))
                    arc = [np.exp(1j * a) / r for a in np.linspace(th, end, 40)]
                    path = ComplexPath((x, *arc[:-1], 1 / x))
                    res = jonquiere_invert(p, x, path)
                    worst = max(worst, res)
                    recs.append({"p": p, "x": x, "im_sign": im_sign, "side": side, "via": via, "residual": res})
    return _report(args, recs, worst, args.tol or 1e-10)


def _clear(pts, u, clearance):
    from .continuation import _seg_dist
    return all(_seg_dist(a, b, v) >= clearance for a, b in zip(pts, pts[1:]) for v in u)


def cmd_roots(args):
    from .continuation import (ParamPath, canonical_coordinates, cycle_weights, generator_loop, loop_monodromy,
                               periods_at, pf_continue_lambda, pf_continue_t, root_monodromy,
                               root_oracle_from_roots, roots_at, vanishing_cycle)
    from .lattice import intersection_form, reflection
    model = _model(args)
    fd, ov = model.frobenius, model.frobenius.model
    rng = np.random.default_rng(args.seed)
    mu_ = model.mu
    E = np.eye(mu_)
    recs, worst = [], 0.0

    def oracle_matrix(t, lam, route):
        r = roots_at(ov, t, lam, route=route)
        return np.column_stack([np.linalg.solve(fd.eta, root_oracle_from_roots(ov, r, cycle_weights(mu_, e), 0, t))
                                for e in E])

    n_done = 0
    while n_done < args.samples:
        t = 0.4 * (rng.normal(size=mu_) + 1j * rng.normal(size=mu_))
        u = fd.model.critical_values(t)
        kind = "lambda" if n_done % 2 == 0 else "t"
        lam0 = rng.uniform(1.5, 3) * np.exp(2j * np.pi * rng.random())
        if np.min(np.abs(lam0 - u)) < 0.1:
            continue
        if kind == "lambda":
            pts = [lam0] + list(rng.uniform(-2.5, 2.5, 3) + 1j * rng.uniform(-2.5, 2.5, 3))
            if not _clear(pts, u, 0.05):
                continue
            P0 = periods_at(model, t, lam0)
            P1 = pf_continue_lambda(P0, 0, t, ParamPath(tuple(pts)), fd)
            route = [(np.zeros(mu_), lam0), (t, lam0)] + [(t, l) for l in pts[1:]]
            R = oracle_matrix(t, pts[-1], route)
        else:
            ts = [t] + [t + 0.5 * (rng.normal(size=mu_) + 1j * rng.normal(size=mu_)) for _ in range(2)]
            dense = [ts[i] + s * (ts[i + 1] - ts[i]) for i in range(len(ts) - 1) for s in np.linspace(0, 1, 50)]
            if min(np.min(np.abs(lam0 - fd.model.critical_values(x))) for x in dense) < 0.05:
                continue
            P0 = periods_at(model, t, lam0)
            P1 = pf_continue_t(P0, 0, ParamPath(tuple(ts), "t"), lam0, fd)
            route = [(np.zeros(mu_), lam0)] + [(x, lam0) for x in ts]
            R = oracle_matrix(ts[-1], lam0, route)
        res = float(np.abs(P1 - R).max() / max(1.0, np.abs(R).max()))
        worst = max(worst, res)
        recs.append({"kind": kind, "residual": res})
        n_done += 1
    # Picard-Lefschetz: generator loops at a fixed base
    G = intersection_form(model.lattice)
    t = np.array(BASES[mu_], dtype=complex) + 0.05
    u, _, _ = canonical_coordinates(t, fd)
    base = 2.5j
    P0 = periods_at(model, t, base)
    exact = True
    for i in range(len(u)):
        loop = generator_loop(u, base, i)
        W = loop_monodromy(P0, pf_continue_lambda(P0, 0, t, loop, fd), tol=1e-6)
        phi = vanishing_cycle(W, G)
        Wr = root_monodromy(ov, t, list(loop.points))
        match = bool(np.array_equal(W, reflection(model.lattice, phi)) and np.array_equal(W, Wr))
        exact &= match
        recs.append({"kind": "loop", "critical_value": u[i], "monodromy": W, "vanishing_cycle": phi,
                     "matches_reflection_and_roots": match})
    rep = _report(args, recs, worst if exact else np.inf, args.tol or 1e-7)
    return rep


def cmd_dlambda(args):
    from .lattice import pairing
    from .phase import dlambda_identity_check, pole_order, regular_part_jump
    model = _model(args)
    rng = np.random.default_rng(args.seed)
    recs, worst = [], 0.0
    for _ in range(args.samples):
        a = rng.integers(-2, 3, model.mu)
        b = rng.integers(-2, 3, model.mu)
        lam = rng.uniform(1.5, 3) * np.exp(2j * np.pi * rng.random())
        mu = lam * rng.uniform(0.2, 0.6) * np.exp(1j * rng.uniform(-1, 1))
        res = dlambda_identity_check(a, b, lam, mu, model)
        worst = max(worst, res)
        recs.append({"kind": "derivative", "alpha": a, "beta": b, "lambda": lam, "mu": mu, "residual": res})
    poles_ok = True
    vecs = _small_vectors(model.mu, 1)
    for target in (2, -1, 0):
        pair = next(((v, w) for v in vecs for w in vecs if pairing(model.lattice, v, w) == target), None)
        if pair is None:
            recs.append({"kind": "pole", "pairing": target, "skipped": "no such pair in this lattice"})
            continue
        v, w = pair
        mu = 0.7 + 0.2j
        order = pole_order(v, w, mu, model)
        jump = regular_part_jump(v, w, mu, model)
        ok = order == -target and jump < 1e-3
        poles_ok &= ok
        recs.append({"kind": "pole", "alpha": v, "beta": w, "pairing": target, "pole_order": order,
                     "regular_part_jump": jump, "ok": ok})
    return _report(args, recs, worst if poles_ok else np.inf, args.tol or 1e-6)


COMMANDS = {
    "validate": (cmd_validate, "lattice, spectral, Frobenius and higher-residue checks"),
    "omega": (cmd_omega, "closed form against the series oracle on a grid"),
    "locality": (cmd_locality, "exchange symmetry of the phase factors"),
    "integrality": (cmd_integrality, "integrality of loop integrals of the phase form"),
    "vv": (cmd_vv, "loop integral around one critical value"),
    "fock": (cmd_fock, "Fock-space composition scalar and OPE stability"),
    "polylog": (cmd_polylog, "inversion formula sweep for Li_p"),
    "roots": (cmd_roots, "ODE continuation against the root oracle"),
    "dlambda": (cmd_dlambda, "lambda-derivative identity and pole orders"),
}


def build_parser():
    p = argparse.ArgumentParser(prog="phasekit", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        s = sub.add_parser(name, help=help_)
        s.add_argument("--builtin", choices=["A1", "A2", "A3"])
        s.add_argument("--lattice", help="lattice.v1 JSON file")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--tol", type=float, default=None)
        s.add_argument("--samples", type=int, default={"locality": 10, "polylog": 20, "roots": 50,
                                                        "dlambda": 20}.get(name, 10))
        s.add_argument("--loops", type=int, default=20)
        s.add_argument("--n-max", dest="n_max", type=int, default=60)
        s.add_argument("--output", "-o", help="write the report here instead of stdout")
        s.add_argument("--format", choices=["json", "csv"], default="json")
    return p


def _to_csv(rep) -> str:
    buf = io.StringIO()
    rows = [{k: json.dumps(_jsonable(v)) if isinstance(v, (list, dict, tuple, np.ndarray)) else _jsonable(v)
             for k, v in r.items()} for r in rep["records"]]
    keys = sorted({k for r in rows for k in r})
    w = csv.DictWriter(buf, fieldnames=keys)
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def run(argv=None, stream=None):
    """Run a command; returns (exit code, report)."""
    stream = sys.stdout if stream is None else stream
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0), None
    if args.tol is not None and args.tol <= 0:
        print("tolerance must be positive", file=sys.stderr)
        return 2, None
    try:
        rep = COMMANDS[args.command][0](args)
        code = 0 if rep["ok"] else 4
    except PhasekitError as e:
        rep = {"schema": SCHEMA, "command": args.command, "ok": False, "error": type(e).__name__,
               "message": str(e)}
        code = e.exit_code
    text = _to_csv(rep) if args.format == "csv" and "records" in rep else json.dumps(_jsonable(rep), indent=1)
    if args.output:
        with open(args.output, "w") as f:
            f.write(text)
    else:
        stream.write(text + "\n")
    return code, rep


def main(argv=None):
    code, _ = run(argv)
    sys.exit(code)


if __name__ == "__main__":
    main()
