"""Convergence of the mixed plate schemes on the manufactured solution.

The clamped plate lives on the square [0,3]^2 with the hole [1,2]^2 cut out.
The exact deflection is w = b^2 with b a product of quartics vanishing on
every boundary line, so w and grad w vanish on the outer and the inner
boundary alike.

For each scheme we refine four times and print the H1 errors of the rotation
phi and the deflection omega together with the observed rates.  Both should
approach 1, the optimal order for the lowest-order elements used here,
whether t is 1 or 1e-4 and for the Kirchhoff limit as well.

Run with ``python demos/convergence_study.py``.
"""
from platemix.harness import make_kirchhoff_case, make_rm_case, run_convergence

RUNS = [
    ("rm-mixed", make_rm_case(1.0)),
    ("rm-mixed", make_rm_case(1e-4)),
    ("rm-reduced", make_rm_case(1e-4)),
    ("k-mixed", make_kirchhoff_case()),
]


def main():
    for kind, case in RUNS:
        table = run_convergence(kind, case, 4)
        label = kind if kind.startswith("k-") else f"{kind}, t={case.t:g}"
        print(f"\n{label}")
        print(f"{'level':>5} {'h':>8} {'ndofs':>7} {'|phi|_1':>10} {'rate':>6} {'|w|_1':>10} {'rate':>6}")
        for r in table.rows:
            print(f"{r['level']:5d} {r['h']:8.4f} {r['ndofs']:7d} {r['err_phi_h1']:10.3e} "
                  f"{r['rate_phi']:6.2f} {r['err_w_h1']:10.3e} {r['rate_w']:6.2f}")


if __name__ == "__main__":
    main()
