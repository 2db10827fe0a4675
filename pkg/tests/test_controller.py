import pytest

from oracles import handle_spa_oracle, truth_table
from sdp_mtd.addressing import HostIdentity, NetAddress, Role
from sdp_mtd.controller import (
    AuthorizationDirective,
    Controller,
    Deny,
    DuplicateHost,
    Grant,
    UnknownHost,
)
from sdp_mtd.gateway import ForwardTo
from sdp_mtd.packets import PacketKind, SimPacket
from sdp_mtd.spa import build_spa


def test_registry_matches_figure():
    ctl = Controller()
    for name, role in (("ue_gnb", Role.INITIATING_HOST), ("amf_smf", Role.SERVICE),
                       ("upf", Role.SERVICE)):
        ctl.register_host(HostIdentity.named(name, role, "10.0.0.9:0"))
    assert len(ctl.registry) == 3
    with pytest.raises(DuplicateHost):
        ctl.register_host(HostIdentity.named("upf", Role.SERVICE, "10.0.0.9:0"))


def test_grant_carries_both_services(deployment):
    d = deployment
    decision = d.controller.handle_forwarded_spa(d.spa(1000), d.gw.host_id, 1000)
    assert isinstance(decision, Grant)
    ports = sorted((g.gateway_listen_port, g.service_forward_address.port)
                   for g in decision.directive.allowed_services)
    assert ports == [(44, 7777), (45, 8888)]
    assert decision.directive.ttl_ms == 30_000
    assert len(decision.credential_update.session_token) == 32
    channel_peers = {decision.credential_update.channel.peer_b, decision.gateway_channel.peer_b}
    assert channel_peers == {d.ue.host_id, d.gw.host_id}


def test_replay_and_empty_policy(deployment):
    d = deployment
    raw = d.spa(0)
    assert d.controller.handle_forwarded_spa(raw, d.gw.host_id, 0).granted
    again = d.controller.handle_forwarded_spa(raw, d.gw.host_id, 10)
    assert again == Deny("replay")
    d.controller.set_policy(d.ue.host_id, set())
    assert d.controller.handle_forwarded_spa(d.spa(20), d.gw.host_id, 20) == Deny("not_authorized")


def test_policy_on_unknown_host(deployment):
    with pytest.raises(UnknownHost):
        deployment.controller.set_policy(b"x" * 16, {deployment.amf.host_id})
    with pytest.raises(UnknownHost):
        deployment.controller.set_policy(deployment.ue.host_id, {b"y" * 16})


def test_gateway_id_must_be_accepting_host(deployment):
    d = deployment
    with pytest.raises(UnknownHost):
        d.controller.handle_forwarded_spa(d.spa(0), d.amf.host_id, 0)


@pytest.mark.parametrize("case", truth_table(), ids=lambda c: "".join("10"[not x] for x in c))
def test_decision_truth_table(deployment, case):
    mac_ok, fresh, unseen, policy = case
    d = deployment
    now = 100_000
    sent_at = now if fresh else now - 6000
    pkt = build_spa(d.key, d.amf.host_id, sent_at, d.rng)
    if not unseen:
        d.controller.replay_window.record((pkt.client_id, pkt.nonce), pkt.timestamp_ms, now - 1)
    raw = bytearray(pkt.serialize())
    if not mac_ok:
        raw[-1] ^= 0x01
    if not policy:
        d.controller.set_policy(d.ue.host_id, set())
    decision = d.controller.handle_forwarded_spa(bytes(raw), d.gw.host_id, now)
    got = "grant" if decision.granted else f"deny:{decision.reason}"
    assert got == handle_spa_oracle(True, mac_ok, fresh, unseen, policy)


def test_unknown_client_deny(deployment):
    d = deployment
    d.controller.revoke_host(d.ue.host_id)
    assert d.controller.handle_forwarded_spa(d.spa(0), d.gw.host_id, 0) == Deny("unknown_client")
    with pytest.raises(UnknownHost):
        d.controller.revoke_host(b"z" * 16)


def test_revoke_leaves_installed_rules_until_ttl(deployment, ue_addr):
    d = deployment
    grant = d.controller.handle_forwarded_spa(d.spa(0), d.gw.host_id, 0, source=ue_addr)
    d.gateway.install_rule(grant.directive, 0)
    d.controller.revoke_host(d.ue.host_id)
    dst = NetAddress.parse("10.0.0.1:44")
    timeline = {}
    for now in (1, 15_000, 29_999, 30_000):
        action = d.gateway.process_packet(SimPacket(ue_addr, dst, PacketKind.DATA), now)
        timeline[now] = isinstance(action, ForwardTo)
    assert timeline == {1: True, 15_000: True, 29_999: True, 30_000: False}


def test_decision_log_format(deployment):
    d = deployment
    d.controller.handle_forwarded_spa(d.spa(5), d.gw.host_id, 5)
    d.controller.handle_forwarded_spa(b"short", d.gw.host_id, 6)
    grant_line, deny_line = d.controller.log
    head, services = grant_line.rsplit(",", 1)
    assert head == f"5,grant,{d.ue.host_id.hex()},"
    assert sorted(services.split(";")) == ["amf_smf", "upf"]
    assert deny_line.startswith("6,deny,") and deny_line.endswith(",malformed,")


def test_directive_rejects_nonpositive_ttl(deployment):
    with pytest.raises(ValueError):
        AuthorizationDirective(deployment.ue.host_id, NetAddress.parse("1.2.3.4:1"), (), 0, 0)


def test_no_grant_without_accept(deployment):
    d = deployment
    raw = bytearray(d.spa(0))
    for i in range(0, 89, 7):
        tampered = bytearray(raw)
        tampered[i] ^= 0x40
        assert not d.controller.handle_forwarded_spa(bytes(tampered), d.gw.host_id, 0).granted
    assert d.controller.channels == []
