"""Command line front end: run residual suites and emit JSON reports."""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
from dataclasses import dataclass, field as dc_field

import numpy as np

from .env import default_window, sample_environment
from .forms import Residual
from .laurent import WindowCollapse

SUITES = ("hierarchy", "dressing", "killing", "spectral", "affine", "tau")
EXTRA_SUITES = ("truncationcontr", "sign-audit", "k-stability")

# identity label -> where it comes from
PAPER_MAP = {
    "eq:b2c2": "determinant constraint det Y = -4 gamma lambda^2",
    "eq:Ybphi": "structure equation of the hierarchy: d phi + phi^phi = 0, dY + [phi, Y] = 0",
    "eq:phi2": "explicit phi_lambda along xi, xib, rho",
    "eq:YUm": "reconstruction of Y from U_m and U_(m+1)",
    "eq:abcstrt": "coefficient recursion for a, b, c",
    "eq:cbphi": "cphi has no negative powers",
    "eq:Yidentity": "phi - cphi = Y alpha (unextended)",
    "eq:cbphi''": "d cphi + cphi^cphi = 0",
    "eq:cbphiY": "dY + [cphi, Y] = 0",
    "eq:dV+2''": "dV + [cphi, V] = 0",
    "eq:dcS+''": "d Sc + [cphi, Sc] = cphi'",
    "eq:bthetapm": "d theta+- = 0",
    "lem:sigmap": "theta+ = -d log(bc)/2",
    "eq:Omega": "Omega from the (u, v) system",
    "eq:gformula": "dg = g Omega and det g",
    "eq:bbp": "leading coefficient of dp",
    "eq:detZ": "det Z = -4 gamma lambda^2",
    "eq:Znormal": "Z^2 = 4 gamma lambda^2",
    "thm:dressing": "d e^zeta = e^zeta Z alpha",
    "defn:wave": "e^zeta as an exponential series",
    "eq:YVV": "brackets of (Y, V+, V-)",
    "eq:YVYV'": "products of (Y, V+, V-)",
    "eq:VVdet": "determinants and traces of (Y, V+, V-)",
    "eq:YPP": "brackets of (Y, P+, P-)",
    "eq:YPYP'": "products of (Y, P+, P-)",
    "eq:PPdet": "determinants and traces of (Y, P+, P-)",
    "eq:bsigma+normal": "normalization 4 e^{2 sigma+} b c = 1 and its perturbation",
    "eq:RVformula": "spectral field from P+- agrees with the V+- construction",
    "eq:mus": "[P+, S] = P+', [P-, S] = P-' - P-, [Y, S] = Y' - Y",
    "eq:ScYVcommute": "the same relations for (V+-, Sc)",
    "eq:keyformula": "[S, Y/lambda] + (Y/lambda)' = 0",
    "eq:Rcformula": "Sc has only positive powers",
    "prop:spectral": "adjoint resolution of identity",
    "eq:tbS": "lambda^0 blocks of S_(k+1)",
    "eq:tdt''": "ttt' + ttt",
    "eq:ddetS": "d det S = -tr(S phi')",
    "jacobi": "Jacobi identity of the extended loop algebra",
    "eq:ssbracket": "Virasoro structure constants (2j - 2k)",
    "eq:Virstrt": "d sigma + sigma ^ sigma' = 0",
    "eq:sigmastrt": "coefficients of d sigma_i",
    "eq:hbphi+": "d phi-hat + phi-hat^phi-hat = phi-hat' ^ sigma",
    "sec:drho": "degree-0 part defining d rho is diag(c, -c)",
    "d2:Y": "d(dY) = 0 for the flow rules of Y",
    "d2:p": "d(dp) = 0 for the flow rules of p",
    "d2:u": "d(du) = 0 for the flow rule of u",
    "eq:hcidentity+": "phi-hat - S sigma = cphi + Y alpha",
    "eq:dS+''": "dS + [phi-hat - S sigma, S] = (phi-hat - S sigma)'",
    "sec:detY": "preservation of det Y",
    "eq:dP+2''": "dP + [phi-hat - S sigma, P] = 0",
    "eq:dP+2": "dP + [phi-hat, P] + P' sigma = 0 (lambda-shifted for P-)",
    "eq:dY+2": "dY + [phi-hat, Y] + (Y' - Y) sigma = 0",
    "eq:dS+2": "dS + [phi-hat, S] + S sigma' + S' sigma = phi-hat'",
    "eq:u2": "du = sigma' - u' sigma",
    "eq:Yeq": "lift of Y",
    "eq:Seq": "lift of S with the conformal factor",
    "eq:hPpm": "lifts of P+-",
    "eq:lifteq": "d Phi + [Phi, Phi]/2 = 0",
    "eq:h2xi": "extended equations for xi and h_2",
    "eq:delsh2": "Virasoro derivatives of h_2",
    "eq:SkUm": "bracket identity for S_k and U_m",
    "eq:delSk": "time derivatives of S_k",
    "eq:delUm": "Virasoro derivatives of U_m",
    "eq:delbUm": "conjugate Virasoro derivatives of U_m",
    "eq:Smixed": "mixed Virasoro derivatives of S_k",
    "commutator": "time and Virasoro flows commute on Y",
    "eq:truncationcontr": "(lambda^{2l} U_m)_{<=-1} vanishes iff the truncation holds",
    "hbphi+": "eq:hbphi+ component on a dt ^ sigma-bar pair",
    "eq:phiY0": "central component of the lift of Y vanishes",
    "eq:dphiY": "d phi_Y = 0",
    "eq:dphiS": "d phi_S = 0",
    "eq:tau": "d Res(e^u det S) = phi_S",
    "eq:euS2": "d(e^u S^2)",
    "eq:unextau": "unextended tau function",
    "sign": "sign audit: a flipped sign is detected",
    "K->K+1": "residuals stable when K grows by one",
    "error": "evaluation error (window collapse or degenerate sample)",
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "config", "versions", "pass", "counts", "records"],
    "properties": {
        "command": {"type": "string"},
        "config": {"type": "object"},
        "versions": {"type": "object"},
        "pass": {"type": "boolean"},
        "counts": {"type": "object"},
        "log_tau": {},
        "records": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["suite", "identity_label", "direction", "degree", "magnitude", "pass"],
                "properties": {
                    "suite": {"type": "string"},
                    "identity_label": {"type": "string"},
                    "direction": {"type": "string"},
                    "degree": {"type": ["integer", "null"]},
                    "magnitude": {"type": "number"},
                    "pass": {"type": "boolean"},
                    "window": {"type": ["array", "null"]},
                    "note": {"type": "string"},
                    "extra": {"type": "object"},
                },
            },
        },
    },
}


def report_schema():
    return SCHEMA


def versions():
    import flint
    from . import __version__
    return {"artifact": __version__, "python-flint": flint.__version__, "numpy": np.__version__,
            "python": platform.python_version()}


@dataclass
class RunConfig:
    N: int = 1
    K: int | None = None
    window: tuple | None = None
    seed: int = 0
    backend: str = "exact"
    mode: str = "minus"
    suites: list = dc_field(default_factory=lambda: list(SUITES))
    labels: list = dc_field(default_factory=list)
    tolerance: float = 0.0
    ell: int | None = None
    experimental: bool = False

    def validate(self):
        if self.N < 0:
            raise ValueError("N must be nonnegative")
        if self.K is None:
            self.K = self.N + 2
        if self.K < self.N + 1:
            raise ValueError("need K >= N + 1")
        if self.window is None:
            self.window = default_window(self.N)
        lo, hi = self.window
        if lo > hi:
            raise ValueError("empty window")
        if self.backend not in ("exact", "float"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "exact" and self.tolerance != 0:
            raise ValueError("tolerance must be 0 for the exact backend")
        if self.backend == "float" and self.tolerance == 0:
            self.tolerance = 1e-6
        if self.mode == "mixed" and not self.experimental:
            raise ValueError("mixed mode is experimental: pass --experimental")
        if self.mode not in ("minus", "plus", "mixed"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.ell is None:
            self.ell = self.N
        for s in self.suites:
            if s not in SUITES + EXTRA_SUITES:
                raise ValueError(f"unknown suite {s!r}")
        return self

    def to_json(self):
        return {"N": self.N, "K": self.K, "window": list(self.window), "seed": self.seed,
                "backend": self.backend, "mode": self.mode, "suites": list(self.suites),
                "labels": list(self.labels), "tolerance": self.tolerance, "ell": self.ell,
                "experimental": self.experimental}


def _rng(seed, stream):
    return np.random.default_rng([int(seed), stream])


def _error(suite, exc):
    return Residual(suite, "error", type(exc).__name__, None, float("inf"), False, None, str(exc))


class Runner:
    """Builds environments lazily and runs suites in a fixed order."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._envs = {}
        self.log_tau = None

    def env(self, mode, **kw):
        key = (mode, tuple(sorted(kw.items())))
        if key not in self._envs:
            c = self.cfg
            self._envs[key] = sample_environment(c.N, K=max(c.K, kw.get("lowest") or 0), mode=mode, seed=c.seed,
                                                 backend=c.backend, window=tuple(c.window), **kw)
        return self._envs[key]

    @property
    def need(self):
        return tuple(self.cfg.window)

    def run_suite(self, name):
        try:
            return getattr(self, "suite_" + name.replace("-", "_"))()
        except (WindowCollapse, ArithmeticError, ValueError) as exc:
            return [_error(name, exc)]

    def suite_hierarchy(self):
        from .hierarchy import base_structure_suite
        return base_structure_suite(self.env("base"), need=self.need)

    def suite_dressing(self):
        from .dressing import dressing_suite, wave_suite
        env = self.env(self.cfg.mode)
        out = []
        for w in (env.w0, env.w1):
            out += dressing_suite(env, w, self.need)
        out += wave_suite(env, env.w0, self.need)
        return out

    def suite_killing(self):
        from .killing import killing_suite
        env = self.env(self.cfg.mode)
        return killing_suite(env, env.w0, self.need)

    def suite_spectral(self):
        from .spectral import spectral_suite
        from .tau import base_tau_suite
        out = spectral_suite(self.env(self.cfg.mode), _rng(self.cfg.seed, 1), need=self.need)
        out += [r for r in base_tau_suite(self.env("base"), self.need, "spectral") if r.identity == "eq:ddetS"]
        return out

    def suite_affine(self):
        from .affine import algebra_suite, extended_suite, mixed_suite
        env = self.env(self.cfg.mode)
        out = algebra_suite(env.field, _rng(self.cfg.seed, 3))
        for w in (env.w0, env.w1):
            out += extended_suite(env, w, self.need)
        out += mixed_suite(env, env.w0, self.need)
        return out

    def suite_tau(self):
        from .tau import tau_potential, tau_suite
        env = self.env(self.cfg.mode)
        out = tau_suite(env, self.need)
        out += tau_suite(self.env("base"), self.need)
        from .forms import val
        self.log_tau = env.field.to_json(val(tau_potential(env, env.w0)).coeff(0))
        return out

    def suite_truncationcontr(self):
        from .affine import truncation_suite
        env = self.env("plus", lowest=self.cfg.ell)
        return truncation_suite(env, self.cfg.ell, self.need)

    def suite_sign_audit(self):
        from .affine import sign_audit
        c = self.cfg
        return sign_audit(c.N, c.seed, self.need, K=c.K, backend=c.backend, window=tuple(c.window))

    def suite_k_stability(self):
        from .affine import k_stability
        c = self.cfg
        mode = c.mode
        return k_stability(c.N, c.seed, c.K, mode, self.need, backend=c.backend, window=tuple(c.window))


def _suite_job(cfg, name):
    runner = Runner(cfg)
    return runner.run_suite(name), runner.log_tau


def _run_suites(cfg, jobs):
    """Records in suite order; with jobs > 1 each suite runs in its own process."""
    if jobs <= 1 or len(cfg.suites) <= 1:
        runner = Runner(cfg)
        records = []
        for name in cfg.suites:
            records += runner.run_suite(name)
        return records, runner.log_tau
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        results = list(ex.map(_suite_job, [cfg] * len(cfg.suites), cfg.suites))
    records, log_tau = [], None
    for rs, lt in results:
        records += rs
        log_tau = lt if lt is not None else log_tau
    return records, log_tau


def run(cfg: RunConfig, command="verify", jobs=1):
    """Run the configured suites and return the report as a dict.

    ``jobs`` does not enter the report: output is identical for any value.
    """
    cfg.validate()
    records, log_tau = _run_suites(cfg, jobs)
    if cfg.labels:
        want = set(cfg.labels) | {"eq:" + x for x in cfg.labels}
        records = [r for r in records if r.identity in want]
    if cfg.backend == "float":
        for r in records:
            if r.extra.get("expect") != "nonzero" and "window" not in r.note and r.identity not in ("sign", "K->K+1"):
                r.passed = r.magnitude <= cfg.tolerance
    recs = [r.to_json() for r in records]
    ok = bool(recs) and all(r["pass"] for r in recs)
    counts = {"total": len(recs), "failed": sum(not r["pass"] for r in recs)}
    report = {"command": command, "config": cfg.to_json(), "versions": versions(), "pass": ok,
              "counts": counts, "log_tau": log_tau, "records": recs}
    if cfg.mode == "mixed":
        report["experimental"] = "mixed mode: no acceptance claims"
    return report


def dumps(report) -> str:
    return json.dumps(report, indent=1, allow_nan=True) + "\n"


def coeffs_report(N, seed=0, order=None, backend="exact"):
    """a, b, c stream table of a sampled environment."""
    from .hierarchy import sample_stream
    from .env import default_depth
    from .hierarchy import GAMMAS
    from .laurent import make_field
    rng = np.random.default_rng(seed)
    gamma = GAMMAS[int(rng.integers(len(GAMMAS)))]
    f = make_field(backend, gamma)
    depth = order if order is not None else default_depth(N, N + 2, "base")
    if depth % 2 == 0:
        depth += 1
    st = sample_stream(f, rng, depth)
    return {"command": "coeffs", "config": {"N": N, "seed": seed, "depth": depth, "backend": backend},
            "versions": versions(), "gamma": str(gamma), "eta": f.to_json(st.eta), "h2": f.to_json(st.h2),
            "rows": st.table()}


def _parser():
    p = argparse.ArgumentParser(prog="cmch", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run residual suites")
    v.add_argument("--all", action="store_true", help="run every standard suite")
    v.add_argument("--suite", action="append", default=[],
                   help="suite name or equation label (repeatable)")
    v.add_argument("-N", type=int, default=1)
    v.add_argument("-K", type=int, default=None)
    v.add_argument("--window", type=int, nargs=2, default=None, metavar=("LO", "HI"))
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--backend", choices=("exact", "float"), default="exact")
    v.add_argument("--mode", choices=("minus", "plus", "mixed"), default="minus")
    v.add_argument("--experimental", action="store_true", help="allow the mixed mode")
    v.add_argument("--ell", type=int, default=None, help="lowest Virasoro index for truncationcontr")
    v.add_argument("--tolerance", type=float, default=0.0)
    v.add_argument("--no-k-stability", action="store_true")
    v.add_argument("--jobs", type=int, default=1, help="run suites in parallel processes")
    v.add_argument("--out", default=None)
    c = sub.add_parser("coeffs", help="print the a, b, c coefficient table")
    c.add_argument("-N", type=int, default=1)
    c.add_argument("--order", type=int, default=None)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--backend", choices=("exact", "float"), default="exact")
    c.add_argument("--out", default=None)
    sub.add_parser("schema", help="print the report JSON schema")
    return p


def _seed(args):
    env = os.environ.get("CMCH_SEED")
    return int(env) if env not in (None, "") else args.seed


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "schema":
        _emit(json.dumps(SCHEMA, indent=1) + "\n", None)
        return 0
    if args.command == "coeffs":
        _emit(dumps(coeffs_report(args.N, _seed(args), args.order, args.backend)), args.out)
        return 0
    suites, labels = [], []
    for s in args.suite:
        (suites if s in SUITES + EXTRA_SUITES else labels).append(s)
    if args.all or labels:
        suites = [s for s in SUITES if s not in suites] + suites
    if not suites:
        sys.stderr.write("nothing to run: pass --all or --suite\n")
        return 2
    if args.all and not args.no_k_stability and "k-stability" not in suites:
        suites.append("k-stability")
    cfg = RunConfig(N=args.N, K=args.K, window=tuple(args.window) if args.window else None, seed=_seed(args),
                    backend=args.backend, mode=args.mode, suites=suites, labels=labels,
                    tolerance=args.tolerance, ell=args.ell, experimental=args.experimental)
    try:
        report = run(cfg, jobs=args.jobs)
    except ValueError as exc:
        sys.stderr.write(f"invalid configuration: {exc}\n")
        return 2
    if labels and not report["records"]:
        sys.stderr.write(f"no records match {labels}\n")
        return 2
    _emit(dumps(report), args.out)
    return 0 if report["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
