"""Calibrate the existential constants of the estimates on the oracle suite.

Each scenario is simulated on two grids.  The smallest constants making the
monitored inequalities hold are reported per level, together with their
drift under refinement.
"""
from forchflow.config import ORACLE_SUITE, build_model, build_spec, parse_config
from forchflow.exponents import profile_for
from forchflow.solver import simulate
from forchflow.verification import estimate_report, refinement_verdicts

for name in ORACLE_SUITE:
    cfg = parse_config({"preset": name})
    est = cfg["estimate"]
    reports = []
    for level in range(2):
        spec = build_spec(cfg, level)
        prof = profile_for(spec.law, build_model(cfg), spec.data, spec.grid.n,
                           p=est["p"], require_moser=True)
        traj = simulate(spec)
        reports.append(estimate_report(spec, traj, prof, est["alphas"], est["alpha0"],
                                       est["sigma"], est["levels"]))
    print(f"\n== {name} (min u = {reports[-1].min_u:.3g})")
    for v in refinement_verdicts(reports):
        print(f"  {v.id.split(':')[1]:<14} {v.detail:<24} drift {v.constant:.2%}")
    print("  all inequalities hold:", all(r.passed for r in reports))
