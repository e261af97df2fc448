"""Wall-clock scaling measurements and the compiled-vs-Python backend comparison."""
from __future__ import annotations

import time

import numpy as np

from sigdr import _backend
from sigdr.measures import ses_feature_matrix
from sigdr.sigkernel import mmd_matrix, pde_solve
from sigdr.streams import EmpiricalMeasure, TimeSeries


def _timeit(fn, repeat: int = 3) -> float:
    """Best-of-``repeat`` wall clock in seconds."""
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def fit_exponent(xs, ts) -> float:
    """Slope of log(time) against log(size)."""
    return float(np.polyfit(np.log(xs), np.log(ts), 1)[0])


def _groups(rng, M, N, length, d):
    t = np.linspace(0.0, 1.0, length)
    return [EmpiricalMeasure([TimeSeries(t, np.cumsum(rng.standard_normal((length, d)), axis=0)
                                         / np.sqrt(length)) for _ in range(N)])
            for _ in range(M)]


def scaling(seed: int = 0, quick: bool = False, threads: int | None = None) -> dict:
    rng = np.random.default_rng(seed)
    out = {}
    Ns = [8, 16, 32, 64] if quick else [10, 20, 40, 80]
    M, length, d = 4, 30, 2
    ses_t = []
    for N in Ns:
        g = _groups(rng, M, N, length, d)
        ses_t.append(_timeit(lambda: ses_feature_matrix(g, 3, 2, threads)))
    out["ses_vs_N"] = {"sizes": Ns, "seconds": ses_t, "exponent": fit_exponent(Ns, ses_t)}
    kes_t = []
    for N in Ns:
        g = _groups(rng, M, N, length, d)
        kes_t.append(_timeit(lambda: mmd_matrix(g, 0, threads), repeat=1 if N > 40 else 2))
    out["kes_vs_N"] = {"sizes": Ns, "seconds": kes_t, "exponent": fit_exponent(Ns, kes_t)}
    Ls = [100, 200, 400, 800] if quick else [200, 400, 800, 1600]
    pde_t = []
    for L in Ls:
        x = np.cumsum(rng.standard_normal((L, 3)), axis=0) / np.sqrt(L)
        y = np.cumsum(rng.standard_normal((L, 3)), axis=0) / np.sqrt(L)
        pde_t.append(_timeit(lambda: pde_solve(x, y, 0), repeat=5))
    out["pde_vs_length"] = {"sizes": Ls, "seconds": pde_t, "exponent": fit_exponent(Ls, pde_t)}
    return out


def backend_comparison(seed: int = 0, quick: bool = False) -> dict:
    """Time the same kernel calls on every importable backend."""
    rng = np.random.default_rng(seed)
    L = 100 if quick else 200
    inc = np.ascontiguousarray(rng.standard_normal((L, 3)) / np.sqrt(L))
    x = np.ascontiguousarray(np.cumsum(rng.standard_normal((L, 3)), axis=0) / np.sqrt(L))
    y = np.ascontiguousarray(np.cumsum(rng.standard_normal((L, 3)), axis=0) / np.sqrt(L))
    X = np.asfortranarray(rng.standard_normal((40, 300)))
    target = X[:, :5] @ np.ones(5) + 0.1 * rng.standard_normal(40)
    results = {}
    for name in _backend.available():
        k = _backend.get(name)

        def lasso():
            r = np.ascontiguousarray(target - target.mean())
            k.lasso_cd(X, r, 0.01, np.zeros(300), 1e-8, 200, False)

        results[name] = {
            "sig_stream": _timeit(lambda: k.sig_stream(inc, 4, True)),
            "pde_kernel": _timeit(lambda: k.pde_kernel(x, y, 1)),
            "lasso_cd": _timeit(lasso),
        }
    if "cython" in results and "python" in results:
        results["speedup"] = {op: results["python"][op] / results["cython"][op]
                              for op in results["cython"]}
    return results


def run_bench(seed: int = 0, quick: bool = False, threads: int | None = None) -> dict:
    return {"backend": _backend.BACKEND, "scaling": scaling(seed, quick, threads),
            "backends": backend_comparison(seed, quick)}


def format_bench(res: dict) -> str:
    lines = [f"active backend: {res['backend']}"]
    for key, row in res["scaling"].items():
        pts = ", ".join(f"{n}:{t:.4f}s" for n, t in zip(row["sizes"], row["seconds"]))
        lines.append(f"{key:<14} exponent {row['exponent']:.2f}  ({pts})")
    for name, row in res["backends"].items():
        cells = "  ".join(f"{op}={v:.4g}" + ("x" if name == "speedup" else "s")
                          for op, v in row.items())
        lines.append(f"{name:<8} {cells}")
    return "\n".join(lines)
