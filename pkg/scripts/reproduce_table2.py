"""Solve the potential system for (3, 4, 2) and (3, 4, 3); print sizes and D against the reference rows.

Also prints the integrability residual of each D: the largest coefficient of
d(fD)_s/dy_t - d(fD)_t/dy_s (and the same for g), which must vanish for F, G to exist.
"""
import sys
from fractions import Fraction

from saturate.de_engine import EnsembleParams
from saturate.polynomial import MultiPoly, differentiate, extract_de_polynomials
from saturate.potential import build_linear_system, solve_system
from saturate.verify import golden


def integrability_residual(polys, D) -> Fraction:
    m = len(D)
    rows = []
    for s in range(m):
        acc = MultiPoly(m)
        for j in range(m):
            acc = acc + polys[j] * D[j][s]
        rows.append(acc)
    worst = Fraction(0)
    for s in range(m):
        for t in range(s + 1, m):
            diff = differentiate(rows[s], t + 1) - differentiate(rows[t], s + 1)
            for c in diff.terms.values():
                worst = max([worst] + [abs(v) for v in c.coeffs])
    return worst


def show(D):
    return "[" + ", ".join("[" + ", ".join(str(v) for v in row) + "]" for row in D) + "]"


def main():
    ok = True
    for row in golden("table2.json")["rows"]:
        p = EnsembleParams(row["dv"], row["dc"], row["m"])
        f, g = extract_de_polynomials(p)
        system = build_linear_system(f, g)
        meta = system.metadata()
        sol = solve_system(system)
        pub = tuple(tuple(Fraction(v) for v in r) for r in row["D"])
        size = meta["size_SF"] + meta["size_SG"]
        neq = meta["N_phi"] + meta["N_mu"]
        print(f"({p.dv},{p.dc},{p.m})  |S| = {size} (reference {row['size_S']})  "
              f"N = {neq} (reference {row['N_eq']})  rank = {sol.rank}")
        print(f"  solved     D = {show(sol.D)}  residual f: {integrability_residual(f, sol.D)}"
              f"  g: {integrability_residual(g, sol.D)}")
        print(f"  reference  D = {show(pub)}  residual f: {integrability_residual(f, pub)}"
              f"  g: {integrability_residual(g, pub)}")
        ok &= sol.D == pub and (size, neq) == (row["size_S"], row["N_eq"])
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
