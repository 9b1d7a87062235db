"""Why the future algebra must shrink.

On a fixed full matrix algebra the center of any centralizer is determined by
the state alone and stays trivial for pure or tracial states, so nothing ever
happens.  Events need a filtration E(0) > E(1) > ... that loses degrees of
freedom: here a chain of probes, one emitted per step.  Once a probe is gone
it cannot be recorded anymore; the state restricted to what remains is mixed,
and its spectral sectors are the events.

The dimension of E(t) is s^2 p^(2(T-t)); the drop is strict at every step,
and the relative commutant of E(t+1) inside E(t) is the image of the emitted
probe's algebra (dimension p^2).
"""

import numpy as np

from ethsim import build_model, resolve_scenario

model = build_model(resolve_scenario("cnot_t3"))

print("future algebra dimensions along the chain:")
for t in range(model.horizon + 1):
    snap = model.algebra_at(t)
    print(f"  t={t}:  dim E(t) = {snap.dim:4d}   (= 4 * 4^{model.horizon - t})")

report = model.nesting_report()
print()
print("nesting checks (inclusion, strictness, relative commutant):")
for step in report.steps:
    print(
        f"  E({step.t + 1}) inside E({step.t}): {step.inclusion_ok},"
        f" strict drop {step.dim_before} -> {step.dim_after},"
        f" relative commutant dim {step.relative_commutant_dim}"
    )
print(f"all checks passed: {report.all_ok}")

print()
print("with probe_dim = 1 there is nothing to emit and the filtration is flat:")
from ethsim.chain import ChainModel, chain_initial_state

flat = ChainModel(
    2, 1, 2,
    [np.eye(2, dtype=complex)] * 2,
    chain_initial_state(np.diag([0.6, 0.4]).astype(complex), 2, 1, 2),
)
flat_report = flat.nesting_report()
print(f"  dims: {flat_report.dims}  strict: {[s.strict for s in flat_report.steps]}")
print("  no shrinkage, no events: exactly the textbook closed system.")

print()
print("restricted states become mixed even though the global state is pure:")
rho_red = model.reduced_future_density(model.initial_state, 1)
vals = np.linalg.eigvalsh(rho_red)
print(f"  eigenvalues of the t=1 restriction: {np.round(vals[::-1][:3], 6).tolist()} ...")
print("  the two nonzero levels are exactly the Born weights of the first event.")
