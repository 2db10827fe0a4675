from dataclasses import replace

import pytest

from helpers import actions, scenario
from sdp_mtd.netsim import Simulator, figure1, run_scenario
from sdp_mtd.netsim.metrics import DuplicateDisposition, Metrics
from sdp_mtd.netsim.scenario import InvalidScenario, build_network
from sdp_mtd.netsim.topology import InvalidTopology, Link, Topology


class Recorder:
    def __init__(self, sim, name):
        self.sim, self.name, self.seen = sim, name, []

    def on_timer(self, tag, data):
        self.seen.append((self.sim.now, tag))


def test_events_fire_in_time_then_sequence_order():
    sim = Simulator()
    rec = Recorder(sim, "n")
    sim.register("n", rec)
    for at, tag in [(5, "c"), (1, "a"), (5, "d"), (1, "b"), (3, "x")]:
        sim.timer(at, "n", tag)
    sim.run(10)
    assert rec.seen == [(1, "a"), (1, "b"), (3, "x"), (5, "c"), (5, "d")]
    with pytest.raises(ValueError):
        sim.timer(2, "n", "late")


def test_run_stops_at_horizon_and_drains():
    sim = Simulator()
    sim.register("n", Recorder(sim, "n"))
    sim.timer(1, "n", "in")
    sim.timer(20, "n", "out")
    sim.run(10)
    assert sim.now == 10 and sim.pending() == 1
    assert [e.tag for e in sim.drain()] == ["out"] and sim.pending() == 0


def test_figure1_contents():
    topo = figure1()
    names = set(topo.by_name)
    assert {"ue_gnb", "gateway1", "controller", "gateway2", "gateway3", "amf_smf", "upf"} <= names
    assert {"N1", "N2", "N3", "N4", "N6"} <= topo.interfaces()
    topo.validate()
    assert topo.is_external("ue_gnb") and topo.is_external("attacker")
    assert not topo.is_external("amf_smf")


def test_controller_directly_linked_to_client_rejected():
    topo = figure1()
    bad = Topology(topo.nodes, topo.links + [Link("ue_gnb", "controller")], topo.protected_set,
                   topo.perimeter, topo.controller)
    with pytest.raises(InvalidTopology):
        bad.validate()


def test_metrics_forbid_double_disposition():
    m = Metrics()
    pid = m.register()
    m.dispose(pid, "dropped_at_gateway")
    with pytest.raises(DuplicateDisposition):
        m.dispose(pid, "delivered_to_service")


def test_happy_path_delivers_everything():
    r = run_scenario(scenario(scenario__duration_ms=300))
    m = r.metrics
    assert m.grants == 1
    assert m.legit_sent == 10 and m.legit_replies == 10
    assert m.delivered_to_service == 10
    assert not r.unaccounted and m.accounted() == m.injected
    assert m.controller_untrusted == 0


def test_without_spa_nothing_reaches_services():
    r = run_scenario(scenario(client__spa="none", scenario__duration_ms=300))
    assert r.metrics.delivered_to_service == 0
    assert r.metrics.dropped_at_gateway == 10


def test_same_seed_same_trace_and_metrics():
    cfg = scenario(attack__kind="replay", attack__start_ms=60, scenario__duration_ms=200)
    a, b = run_scenario(cfg), run_scenario(cfg)
    assert a.trace == b.trace and a.metrics.rows() == b.metrics.rows()
    other = run_scenario(cfg, seed=8)
    assert other.trace != a.trace


def test_trace_lines_have_five_fields():
    r = run_scenario(scenario(scenario__duration_ms=100))
    for i, line in enumerate(r.trace):
        seq, ts, node, action, detail = line.split(",", 4)
        assert int(seq) == i and "," not in detail
        float(ts)


def test_scan_with_live_session_from_another_source_sees_nothing():
    r = run_scenario(scenario(attack__kind="scan", attack__ports="0-999",
                              client__packets=50, scenario__duration_ms=1100))
    assert r.metrics.grants == 1
    assert r.scan is not None and len(r.scan) == 1000
    assert r.metrics.ports_open == 0
    assert set(r.scan.values()) == {"closed"}
    assert r.metrics.legit_replies == r.metrics.legit_sent


def test_baseline_scan_finds_only_the_static_port():
    r = run_scenario(scenario("baseline", attack__kind="scan", attack__ports="0-999",
                              scenario__duration_ms=1100))
    assert r.metrics.ports_reported_open == [22]


def test_zero_rate_flood_matches_quiet_run():
    quiet = run_scenario(scenario(scenario__duration_ms=300))
    flood = run_scenario(scenario(attack__kind="dos", attack__rate_pps=0, attack__duration_ms=100,
                                  scenario__duration_ms=300))
    assert flood.metrics.rows() == quiet.metrics.rows()


def test_small_flood_is_dropped_at_gateway_in_sdp_and_queued_in_baseline():
    kw = dict(attack__kind="dos", attack__rate_pps=500, attack__duration_ms=100,
              scenario__duration_ms=400)
    sdp = run_scenario(scenario(**kw)).metrics
    assert sdp.dropped_at_gateway == sdp.flood_sent == 50
    assert sdp.attacker_at_service == 0
    base = run_scenario(scenario("baseline", **kw)).metrics
    assert base.attacker_at_service == 50


def test_replay_after_grant_is_denied():
    r = run_scenario(scenario(attack__kind="replay", attack__start_ms=100, scenario__duration_ms=300))
    assert r.metrics.grants == 1
    assert r.metrics.denial_reasons == ["replay"]


def test_tampered_replay_never_reaches_controller():
    r = run_scenario(scenario(attack__kind="replay", attack__tamper="true", attack__start_ms=100,
                              scenario__duration_ms=300))
    assert r.metrics.grants == 1 and r.metrics.denials == 0
    assert "gw_drop" in actions(r, "gateway1")


def test_raced_replay_wins_once_and_original_fails():
    r = run_scenario(scenario(attack__kind="replay", attack__start_ms=0.2,
                              link__latency="attacker gateway1 0.1", scenario__duration_ms=300))
    assert r.metrics.grants == 1 and r.metrics.denial_reasons == ["replay"]
    grant = next(l for l in r.trace if ",ctrl_grant," in l)
    assert "10.0.9.66" in grant
    assert r.metrics.legit_replies == 0


@pytest.mark.parametrize("mode,want", [("sdp", "refused"), ("baseline", "accepted")])
def test_probe(mode, want):
    r = run_scenario(scenario(mode, attack__kind="probe", attack__start_ms=50,
                              scenario__duration_ms=300))
    assert r.metrics.probe_result == want
    if mode == "sdp":
        assert r.metrics.grants == 1  # the probed port has a live rule for the client


def test_baseline_and_sdp_configs_differ_only_in_mode():
    cfg = scenario(attack__kind="scan")
    assert cfg.with_mode("baseline").with_mode("sdp") == cfg


def test_controller_never_hears_from_untrusted_sources():
    for kind in ("scan", "replay", "probe"):
        r = run_scenario(scenario(attack__kind=kind, attack__start_ms=50, scenario__duration_ms=1100))
        assert r.metrics.controller_untrusted == 0
        assert r.metrics.accounted() == r.metrics.injected


def test_mutations_happen_every_lifespan():
    r = run_scenario(scenario(scenario__duration_ms=35_000, mtd__lifespan_ms=10_000))
    assert [t for t, _, _ in r.network.mutations] == [0, 10_000, 20_000, 30_000]


def test_mtd_disabled_uses_real_addresses():
    r = run_scenario(scenario(mtd__enabled="false", scenario__duration_ms=300))
    assert r.metrics.legit_replies == 10 and r.network.mtd is None


def test_invalid_scenario():
    cfg = scenario()
    with pytest.raises(InvalidScenario):
        build_network(replace(cfg, mode="vpn"))
