"""Multilevel Monte Carlo on the two-mode telegraph process.

The telegraph process has a closed-form terminal mean, so the demo can compare
the empirical RMSE of plain Monte Carlo and of two multilevel couplings with
the target accuracy, along with their cost in Euler updates.

    python3 demos/telegraph_mlmc.py
"""
from pdmp import estimators as est
from pdmp.core import MarkState
from pdmp.models import telegraph as tg
from pdmp.rng import StreamKey
from pdmp.samplers import JitSampler

params = tg.TelegraphParams(a0=1.0, a1=2.0, c0=4.0, c1=-4.0, kappa=2.0)
x0 = MarkState(0, 4.0)
T, rate_bound, h_star = 1.0, 3.0, 0.5
truth = tg.mean_terminal(params, x0.theta, x0.nu, T)
print(f"exact E[nu_T] = {truth:.6f}")

sampler = JitSampler(tg.jit_model(params), x0, T, rate_bound)

# structural constants, estimated once and reused for every epsilon
c1 = est.estimate_c1(sampler, h=0.1, M=4, N=20_000, seed=1)
V1 = est.estimate_V1(sampler, h=0.1, M=4, N=10_000, beta=1.0, scheme="plain", seed=2)
V1_c3 = est.estimate_V1(sampler, h=0.1, M=4, N=10_000, beta=2.0, scheme="case3", seed=3)
var_x = est.estimate_var(sampler, 0.01, 50_000, seed=4)
plain = est.StructuralParams(1, 1, c1, V1, var_x)
case3 = est.StructuralParams(1, 2, c1, V1_c3, var_x)
print(f"c1 = {c1:.4f}  V1 = {V1:.4f}  V1(case3) = {V1_c3:.4f}  Var X = {var_x:.4f}\n")

R = 10
print(f"RMSE over {R} replications against the exact mean\n")
print(f"{'eps':>8} {'estimator':>11} {'rmse':>8} {'rmse/eps':>8} {'cost':>10}")


def show(eps, name, plan, reports):
    s = est.empirical_rmse(reports, truth)
    extra = f"  (L={plan.levels}, M={plan.M})" if isinstance(plan, est.MlmcPlan) else ""
    print(f"{eps:8.4g} {name:>11} {s.rmse:8.4f} {s.rmse / eps:8.2f} {s.mean_cost:10.0f}{extra}")


for k, eps in enumerate((2.0**-3, 2.0**-4, 2.0**-5)):
    plan = est.mc_params(eps, plain)
    show(eps, "mc", plan, [est.run_mc(plan, sampler, StreamKey(10, (k,)), r) for r in range(R)])
    for name, sp in (("plain", plain), ("case3", case3)):
        plan = est.mlmc_params(eps, sp, h_star, est.select_M(eps, sp, h_star))
        reps = [est.run_mlmc(plan, sampler, name, StreamKey(11, (k,)), r) for r in range(R)]
        show(eps, "mlmc-" + name, plan, reps)
