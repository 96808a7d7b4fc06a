"""Time the numba and numpy kernel backends on the same inputs.

The backend is chosen at import time from PROBE_REDUCE_JIT, so each one runs
in its own subprocess. Results (best of ``--repeat``) and the max deviation
between the two backends are printed as a small table.

    python benchmarks/bench_backends.py [--steps 2000] [--repeat 3]

Two coupling shapes are timed: a reduction-style run (24 probe modes fully
coupled to 64 field modes, where the dense BLAS product of the numpy path is
competitive) and a harvesting-style run (2 detectors and 200 field modes,
where the sparse loop wins).
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


SCENARIOS = {"reduction": (24, 64), "harvesting": (2, 200)}


def _inputs(n_probe, n_field, n_steps, n_t, seed=0):
    rng = np.random.default_rng(seed)
    n_modes = n_probe + n_field
    om = np.concatenate([np.sqrt(2.0 * np.arange(1, n_probe + 1)), np.sqrt(1 + np.linspace(0.1, 3, n_modes - n_probe) ** 2)])
    g = rng.normal(scale=0.1, size=(n_probe, n_modes - n_probe))
    C = np.zeros((n_modes, n_modes))
    C[:n_probe, n_probe:] = g
    C = C + C.T
    rows, cols = np.nonzero(C)
    cov = np.zeros((2 * n_modes, 2 * n_modes))
    cov[0::2, 0::2] = np.diag(0.5 / om)
    cov[1::2, 1::2] = np.diag(0.5 * om)
    t = np.linspace(0, 20, 2 * n_steps + 1)
    lam_chi = 5e-3 * np.exp(-0.5 * (t - 10) ** 2)
    a = rng.normal(size=n_t) + 1j * rng.normal(size=n_t)
    b = rng.normal(size=n_t) + 1j * rng.normal(size=n_t)
    tt = np.linspace(0, 10, n_t)
    return dict(
        rk4=(cov, np.zeros_like(cov), np.zeros(2 * n_modes), om**2, rows.astype(np.int64), cols.astype(np.int64),
             C[rows, cols].copy(), lam_chi, 20.0 / n_steps),
        absexp=(a, b, tt, 1.7),
    )


def child(args):
    from probe_reduce import _backend

    inp = _inputs(*SCENARIOS[args.scenario], args.steps, args.n_t)
    out = {"backend": _backend.BACKEND}
    # first call compiles under numba; time it separately
    def rk4_args(lam_chi=None):
        # the kernel updates delta and mean in place, so every call gets fresh copies
        a = list(inp["rk4"])
        a[1], a[2] = a[1].copy(), a[2].copy()
        if lam_chi is not None:
            a[7] = lam_chi
        return a

    t0 = time.perf_counter()
    _backend.rk4_gaussian(*rk4_args(inp["rk4"][7][:5]))
    _backend.abs_exp_double_sum(*inp["absexp"])
    out["warmup_s"] = time.perf_counter() - t0
    for name, fn in (("rk4_gaussian", _backend.rk4_gaussian), ("abs_exp_double_sum", _backend.abs_exp_double_sum)):
        best = np.inf
        for _ in range(args.repeat):
            args_ = rk4_args() if name == "rk4_gaussian" else inp["absexp"]
            t0 = time.perf_counter()
            res = fn(*args_)
            best = min(best, time.perf_counter() - t0)
        out[name] = best
        if name == "rk4_gaussian":
            out[name + "_result"] = np.asarray(res[0]).ravel().tolist()
        else:
            out[name + "_result"] = [complex(res).real, complex(res).imag]
    print(json.dumps(out))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", choices=SCENARIOS, default=None, help=argparse.SUPPRESS)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--n-t", dest="n_t", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        return child(args)

    print(f"steps={args.steps} n_t={args.n_t} (best of {args.repeat})")
    print(f"{'case':<34}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'max |diff|':>12}")
    for scenario, (n_probe, n_field) in SCENARIOS.items():
        results = {}
        for flag in ("1", "0"):
            env = dict(os.environ, PROBE_REDUCE_JIT=flag)
            cmd = [sys.executable, __file__, "--child", "--scenario", scenario, "--steps", str(args.steps),
                   "--n-t", str(args.n_t), "--repeat", str(args.repeat)]
            proc = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
            r = json.loads(proc.stdout.strip().splitlines()[-1])
            results[r["backend"]] = r
        names = ["rk4_gaussian"] + (["abs_exp_double_sum"] if scenario == "reduction" else [])
        for name in names:
            tn, tj = results["numpy"][name], results["numba"][name]
            diff = np.max(np.abs(np.subtract(results["numpy"][name + "_result"], results["numba"][name + "_result"])))
            label = f"{name} ({n_probe}+{n_field})" if name == "rk4_gaussian" else name
            print(f"{label:<34}{tn:>12.4f}{tj:>12.4f}{tn / tj:>10.2f}{diff:>12.3g}")
    print(f"numba warm-up (compile or cache load): {results['numba']['warmup_s']:.2f} s")


if __name__ == "__main__":
    main()
