"""Replaying a captured authorization packet, and probing without one.

The replay reaches the controller and is refused because its nonce was
already used. The unauthenticated connection probe gets no answer at all
from the perimeter, while the static port hands it straight to the service.
"""

from importlib import resources

from sdp_mtd.config import load_scenario
from sdp_mtd.report import run

scenarios = resources.files("sdp_mtd") / "scenarios"
for name in ("fig1_sdp_replay", "fig1_baseline_replay", "fig1_sdp_probe", "fig1_baseline_probe"):
    report = run(load_scenario(scenarios / f"{name}.cfg"))
    m = report.metrics
    print(f"{name:22s} grants={m.grants} denials={m.denial_reasons or '-'} "
          f"replay_accepted={m.replay_accepted} probe={m.probe_result or '-'}")

report = run(load_scenario(scenarios / "fig1_sdp_replay.cfg"))
print("\ncontroller decisions:")
for line in report.result.logs["controller"]:
    print("  " + line)
