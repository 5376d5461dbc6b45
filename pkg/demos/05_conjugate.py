"""The harmonic conjugate of the solution is constant along a traction-free crack.

With u = x2 imposed on the whole boundary and an interior slit, the
Neumann condition on the slit says the conjugate ``v`` does not vary along
it.  The discrete ``v`` fluctuates on the crack, and the fluctuation roughly
halves each time the mesh is refined.
"""

from quasifrac.scenarios import interior_slit_conjugate

for r in interior_slit_conjugate((1 / 16, 1 / 32, 1 / 64)):
    print(f"h = 1/{round(1 / r['h'])}  std of v on crack {r['std_on_crack']:.2e}"
          f"  relative misfit {r['relative_misfit']:.2e}")
