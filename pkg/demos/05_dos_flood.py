"""A 10 000-packet flood against the client's access port.

Under the perimeter the flood never gets past gateway 1, so the legitimate
flow's latency does not move. With a static open port the flood shares the
service queue with the client and adds the waiting time predicted by a
deterministic single-server model.
"""

from importlib import resources

import numpy as np

from sdp_mtd.config import load_scenario
from sdp_mtd.report import residual_wait_ms, run

scenarios = resources.files("sdp_mtd") / "scenarios"
for name in ("fig1_sdp_dos", "fig1_baseline_dos"):
    cfg = load_scenario(scenarios / f"{name}.cfg")
    report = run(cfg)
    lat = report.metrics.all_latencies()
    print(f"\n{name}")
    print(f"  flood packets           {report.metrics.flood_sent}")
    print(f"  dropped at gateway      {report.metrics.dropped_at_gateway}")
    print(f"  flood packets at service {report.metrics.attacker_at_service}")
    print(f"  legit RTT mean / p99    {lat.mean():.4f} / {np.percentile(lat, 99):.4f} ms")
    print(f"  increase vs quiet run   {report.derived['latency_increase_ms']:.6f} ms")
    if cfg.mode == "baseline":
        svc = cfg.service_map()[cfg.baseline.service]
        print(f"  analytic increase       {residual_wait_ms(cfg.attack.rate_pps, svc.capacity_pps):.6f} ms")
