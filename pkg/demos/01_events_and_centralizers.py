"""Where do events come from?

A state omega on an algebra M singles out the operators it cannot tell apart
under commutation: the centralizer C_omega(M) = {Y : omega([Y, X]) = 0 for all
X}.  The center of that centralizer is abelian, and its minimal projections
are the alternatives that can become facts.  This script walks through the
three basic situations on a single qubit:

  * a biased mixed state    -> two branches with Born weights (an event),
  * the maximally mixed one -> trivial center, nothing can happen,
  * a pure state            -> a branch of weight one, nothing changes.
"""

import numpy as np

from ethsim import (
    State,
    born_weights,
    centralizer_of_state,
    center_of_centralizer,
    collapse,
    detect_event,
    full_matrix_algebra,
)

M = full_matrix_algebra(2)

print("=== biased mixed state diag(0.3, 0.7) ===")
omega = State(np.diag([0.3, 0.7]).astype(complex))
c = centralizer_of_state(omega, M)
z = center_of_centralizer(omega, M)
print(f"centralizer dimension: {c.dim}   (diagonal algebra)")
print(f"center dimension:      {z.dim}")
det = detect_event(omega, M, t=1)
print(f"actual event: {det.actual}")
for label, w, pi in zip(det.event.labels, det.weights, det.event.projections):
    print(f"  branch {label}: weight {w:.3f}, projection diag {np.diag(pi).real}")
print(f"incoherent-superposition residual: {det.incoherence_residual:.2e}")

post = collapse(omega, det.event.projections[0])
print(f"state after the heavier branch: diag {np.diag(post.density).real}")

print()
print("=== maximally mixed state ===")
omega_mm = State(np.eye(2, dtype=complex) / 2)
det_mm = detect_event(omega_mm, M, t=1)
z_mm = center_of_centralizer(omega_mm, M)
print(f"center dimension: {z_mm.dim}  ->  actual event: {det_mm.actual}")
print("the tracial state commutes with everything; no fact can single out")
print("a branch, so such states are passive.")

print()
print("=== pure state |0><0| ===")
omega_pure = State(np.diag([1.0, 0.0]).astype(complex))
det_pure = detect_event(omega_pure, M, t=1)
print(f"branch weights: {np.round(det_pure.weights, 6).tolist()}")
print(f"actual event: {det_pure.actual}  (a single positive branch is no event)")

print()
print("=== Born weights are just expectations of the branch projections ===")
w = born_weights(omega, det.event)
print(f"weights {np.round(w, 6).tolist()} sum to {sum(w):.12f}")
