# Copyright 2026 The spillsim Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Solve spillsim-emitted LP files with scipy's MILP (HiGHS) backend.

Usage:
    python3 solve_lp.py FILE.lp [FILE2.lp ...]
    python3 solve_lp.py --manifest DIR/manifest.json [--tol 1e-6]

With --manifest (as written by `spillsim gap-study --emit-lp-dir DIR`), every
instance is solved and the objective is compared against the recorded
exact-search makespan. Exit codes: 0 all match, 1 mismatch or solver failure,
77 scipy unavailable.
"""

import argparse
import json
import re
import sys


def parse_lp(text):
    """Parse the LP dialect spillsim emits: Minimize / Subject To / Bounds /
    Binaries / End, with `name: terms (=|>=|<=) rhs` constraint rows."""
    lines = [
        ln.strip()
        for ln in text.splitlines()
        if ln.strip() and not ln.strip().startswith("\\")
    ]
    section = None
    objective = None
    constraints = []  # (coeffs dict, sense, rhs)
    binaries = set()
    token = re.compile(r"([+-])|(\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)")

    def parse_terms(expr):
        coeffs = {}
        sign, coef = 1.0, None
        for m in token.finditer(expr):
            if m.group(1):
                sign = 1.0 if m.group(1) == "+" else -1.0
            elif m.group(2):
                coef = float(m.group(2))
            else:
                coeffs[m.group(3)] = coeffs.get(m.group(3), 0.0) + sign * (
                    1.0 if coef is None else coef
                )
                sign, coef = 1.0, None
        return coeffs

    for ln in lines:
        low = ln.lower()
        if low in ("minimize", "subject to", "bounds", "binaries", "end"):
            section = low
            continue
        if section == "minimize":
            objective = parse_terms(ln.split(":", 1)[1])
        elif section == "subject to":
            body = ln.split(":", 1)[1]
            m = re.search(r"(<=|>=|=)", body)
            lhs, sense, rhs = body[: m.start()], m.group(1), body[m.end():]
            constraints.append((parse_terms(lhs), sense, float(rhs)))
        elif section == "binaries":
            binaries.add(ln)
        # Bounds rows only restate the >= 0 default for our variables.
    return objective, constraints, binaries


def solve(path):
    from scipy.optimize import LinearConstraint, milp
    from scipy.sparse import lil_matrix
    import numpy as np

    with open(path) as fh:
        objective, constraints, binaries = parse_lp(fh.read())

    variables = sorted(
        set(objective) | {v for c, _, _ in constraints for v in c} | binaries
    )
    index = {v: i for i, v in enumerate(variables)}
    n = len(variables)

    c = np.zeros(n)
    for v, coef in objective.items():
        c[index[v]] = coef

    a = lil_matrix((len(constraints), n))
    lb = np.full(len(constraints), -np.inf)
    ub = np.full(len(constraints), np.inf)
    for row, (coeffs, sense, rhs) in enumerate(constraints):
        for v, coef in coeffs.items():
            a[row, index[v]] = coef
        if sense in ("=", ">="):
            lb[row] = rhs
        if sense in ("=", "<="):
            ub[row] = rhs

    integrality = np.array([1 if v in binaries else 0 for v in variables])
    upper = np.array([1.0 if v in binaries else np.inf for v in variables])
    res = milp(
        c=c,
        constraints=LinearConstraint(a.tocsr(), lb, ub),
        integrality=integrality,
        bounds=__import__("scipy.optimize", fromlist=["Bounds"]).Bounds(
            np.zeros(n), upper
        ),
    )
    if not res.success:
        raise RuntimeError(f"{path}: solver failed: {res.message}")
    return res.fun


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("files", nargs="*")
    ap.add_argument("--manifest")
    ap.add_argument("--tol", type=float, default=1e-6)
    args = ap.parse_args()

    try:
        import scipy.optimize  # noqa: F401

        if not hasattr(scipy.optimize, "milp"):
            raise ImportError("scipy.optimize.milp missing")
    except ImportError as e:
        print(f"skipping: {e}", file=sys.stderr)
        return 77

    if args.manifest:
        with open(args.manifest) as fh:
            manifest = json.load(fh)
        bad = 0
        for entry in manifest["instances"]:
            objective = solve(entry["file"])
            expect = entry["exact_optimal_s"]
            ok = abs(objective - expect) <= args.tol
            print(
                f"{entry['file']}: solver {objective:.6f} "
                f"exact {expect:.6f} {'OK' if ok else 'MISMATCH'}"
            )
            if not ok:
                bad += 1
        print(f"{len(manifest['instances'])} instances, {bad} mismatches")
        return 1 if bad else 0

    for path in args.files:
        print(f"{path}: objective {solve(path):.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
