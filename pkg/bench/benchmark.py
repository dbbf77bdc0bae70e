"""Compare the numba kernels with the numpy/scipy fallback.

Each backend runs in its own interpreter because the choice is made at
import time from ``ZNQED_DISABLE_JIT``.

    python3 bench/benchmark.py [--N 14] [--repeat 50] [--t-max 0.5]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from znqed import _accel
from znqed.evolve import IntegratorSpec, evolve
from znqed.model import ModelParams, build_basis, build_hamiltonian, dirac_vacuum
from znqed.observe import particle_density

N, repeat, t_max = int(sys.argv[1]), int(sys.argv[2]), float(sys.argv[3])
p = ModelParams(n=3, N=N, m=0.5, g=(3 / np.pi) ** 0.5)
basis = build_basis(p)
H = build_hamiltonian(p, basis)
x = np.random.default_rng(0).normal(size=H.dim).astype(np.complex128)
out = np.empty_like(x)
H.matvec(x, out)  # compile / warm up
psi = dirac_vacuum(basis)
evolve(H, psi, 0.02, IntegratorSpec(), 1, {"rho": lambda s: particle_density(s, basis)})

t0 = time.perf_counter()
for _ in range(repeat):
    H.matvec(x, out)
spmv = (time.perf_counter() - t0) / repeat

res = {}
for method in ("krylov", "rk4"):
    t0 = time.perf_counter()
    tr = evolve(H, psi, t_max, IntegratorSpec(method=method), 5,
                {"rho": lambda s: particle_density(s, basis)})
    res[method] = (time.perf_counter() - t0, float(tr.series("rho")[-1]))

print(json.dumps({"backend": _accel.backend(), "dim": H.dim, "nnz": int(H.matrix.nnz),
                  "spmv_ms": 1e3 * spmv, "evolve": res}))
"""


def run_backend(disable_jit: bool, args) -> dict:
    env = dict(os.environ, ZNQED_DISABLE_JIT="1" if disable_jit else "0")
    proc = subprocess.run(
        [sys.executable, "-c", WORKER, str(args.N), str(args.repeat), str(args.t_max)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(proc.stdout)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=14)
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--t-max", type=float, default=0.5)
    args = ap.parse_args(argv)

    rows = [run_backend(False, args), run_backend(True, args)]
    print(f"N={args.N}  dim={rows[0]['dim']}  nnz={rows[0]['nnz']}")
    print(f"{'backend':<8} {'spmv ms':>9} {'krylov s':>9} {'rk4 s':>9}")
    for r in rows:
        ev = r["evolve"]
        print(f"{r['backend']:<8} {r['spmv_ms']:9.3f} {ev['krylov'][0]:9.3f} {ev['rk4'][0]:9.3f}")
    jit, ref = rows
    if jit["backend"] == "numba":
        print(f"speedup  {ref['spmv_ms'] / jit['spmv_ms']:9.2f}x "
              f"{ref['evolve']['krylov'][0] / jit['evolve']['krylov'][0]:8.2f}x "
              f"{ref['evolve']['rk4'][0] / jit['evolve']['rk4'][0]:8.2f}x")
    drift = max(abs(jit["evolve"][k][1] - ref["evolve"][k][1]) for k in ("krylov", "rk4"))
    print(f"max |rho(t_max)| difference between backends: {drift:.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
