import random
from ipaddress import IPv4Address

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdp_mtd.addressing import NetAddress
from sdp_mtd.mtd import (
    MtController,
    MtdDeny,
    MtGateway,
    PoolExhausted,
    Rewritten,
    UntrackedFlow,
    parse_pool_range,
)
from sdp_mtd.netsim.topology import Topology, figure1
from sdp_mtd.packets import PacketKind, SimPacket

POOL = parse_pool_range("10.0.100.10-10.0.100.59")
GW1, AMF, UPF = (IPv4Address(a) for a in ("10.0.0.1", "10.0.2.10", "10.0.2.20"))
CLIENT = NetAddress.parse("10.0.1.10:5000")


def make(pool=POOL, seed="mtd", lifespan=10_000) -> MtController:
    ctl = MtController(pool, random.Random(seed), lifespan, gateway_real=GW1)
    ctl.scan_hosts(figure1())
    return ctl


def to(vip: IPv4Address, port=44, src=CLIENT, kind=PacketKind.DATA) -> SimPacket:
    return SimPacket(src, NetAddress(vip, port), kind)


def test_scan_hosts_finds_protected_reals():
    assert make().protected == sorted([GW1, AMF, UPF])
    ctl = MtController(POOL, random.Random(0))
    assert ctl.scan_hosts(Topology(nodes=[], links=[])) == []
    only_clients = figure1()
    only_clients = Topology([n for n in only_clients.nodes if n.name in ("ue_gnb", "attacker")], [])
    assert MtController(POOL, random.Random(0)).scan_hosts(only_clients) == []


def test_mutate_counts_and_exhaustion():
    ctl = make(pool=POOL[:10])
    assert len(ctl.mutate(0)) == 3 and ctl.epoch == 1
    assert len(ctl.pool) == 7
    small = make(pool=POOL[:2])
    with pytest.raises(PoolExhausted):
        small.mutate(0)


def test_pool_overlapping_real_address_rejected():
    with pytest.raises(ValueError):
        make(pool=[IPv4Address("10.0.2.10")])


def test_thousand_mutations_stay_injective_and_in_pool():
    ctl = make()
    drawn = []
    for k in range(1000):
        ctl.mutate(k * 10_000)
        drawn.append(dict(ctl.history[ctl.epoch]))
    pool = set(POOL)
    reals = {n.real_address.ip for n in figure1().nodes}
    for epoch in drawn:
        vips = list(epoch.values())
        assert len(set(vips)) == len(vips) == 3
        assert set(vips) <= pool
        assert not set(vips) & reals
    # consecutive epochs never reuse an address for the same host
    for a, b in zip(drawn, drawn[1:]):
        assert not set(a.values()) & set(b.values())


def test_seeds_diverge_early():
    a, b = make(seed="one"), make(seed="two")
    seq_a = [tuple(m.virtual for m in a.mutate(t)) for t in (0, 1, 2)]
    seq_b = [tuple(m.virtual for m in b.mutate(t)) for t in (0, 1, 2)]
    assert seq_a != seq_b


def test_current_vip_rewrites_to_real_and_nat_source():
    ctl = make()
    ctl.mutate(0)
    gw = MtGateway(ctl)
    act = gw.translate_inbound(to(ctl.current_vip(GW1)), 5)
    assert isinstance(act, Rewritten)
    assert act.packet.dst == NetAddress(GW1, 44)
    assert act.packet.src.ip == ctl.current_vip(GW1)


def test_real_address_denied():
    ctl = make()
    ctl.mutate(0)
    gw = MtGateway(ctl)
    assert gw.translate_inbound(to(GW1), 1) == MtdDeny("real_ip")
    assert gw.log[-1] == f"1,deny,{CLIENT},{GW1}:44,real_ip"


def test_tracked_flow_survives_mutation_untracked_does_not():
    ctl = make()
    ctl.mutate(0)
    gw = MtGateway(ctl)
    old = ctl.current_vip(GW1)
    assert isinstance(gw.translate_inbound(to(old), 1), Rewritten)
    ctl.mutate(10_000)
    assert ctl.current_vip(GW1) != old
    survived = gw.translate_inbound(to(old), 10_001)
    assert isinstance(survived, Rewritten) and survived.packet.dst.ip == GW1
    stranger = NetAddress.parse("10.0.9.66:7000")
    assert gw.translate_inbound(to(old, src=stranger), 10_002) == MtdDeny("expired_vip")
    assert gw.translate_inbound(to(IPv4Address("10.0.100.200")), 10_003) == MtdDeny("untracked")


def test_outbound_restores_client_view():
    ctl = make()
    ctl.mutate(0)
    gw = MtGateway(ctl)
    vip = ctl.current_vip(AMF)
    inbound = gw.translate_inbound(to(vip, 7777), 1).packet
    reply = SimPacket(inbound.dst, inbound.src, PacketKind.REPLY)
    out = gw.translate_outbound(reply, 2)
    assert (out.src, out.dst) == (NetAddress(vip, 7777), CLIENT)
    with pytest.raises(UntrackedFlow):
        gw.translate_outbound(SimPacket(inbound.dst, NetAddress(GW1, 12), PacketKind.REPLY), 3)


@settings(max_examples=100, deadline=None)
@given(flows=st.lists(st.tuples(st.integers(0, 2**24), st.integers(1, 65535), st.integers(0, 2),
                                st.integers(1, 65535)), min_size=1, max_size=20, unique=True),
       mutations=st.integers(0, 4))
def test_roundtrip_over_random_flows(flows, mutations):
    ctl = make()
    ctl.mutate(0)
    gw = MtGateway(ctl)
    opened = []
    for src_low, sport, host, dport in flows:
        client = NetAddress(IPv4Address(0x0B000000 + src_low), sport)
        vip = ctl.current_vip([GW1, AMF, UPF][host])
        pkt = to(vip, dport, src=client)
        act = gw.translate_inbound(pkt, 1)
        opened.append((pkt, act.packet))
    for k in range(mutations):
        ctl.mutate(10_000 * (k + 1))
    for original, inside in opened:
        again = gw.translate_inbound(original, 50_000)
        assert again.packet == inside
        reply = SimPacket(inside.dst, inside.src, PacketKind.REPLY)
        back = gw.translate_outbound(reply, 50_001)
        assert (back.src, back.dst) == (original.dst, original.src)


def test_gc_boundary_and_pool_accounting():
    ctl = make()
    ctl.mutate(0)
    free_before = len(ctl.pool)
    gw = MtGateway(ctl)
    gw.translate_inbound(to(ctl.current_vip(AMF)), 0)
    ctl.mutate(10_000)
    # two addresses held by the flow: the old AMF vIP and the old gateway vIP used for NAT
    assert len(ctl.held) == 2
    assert len(ctl.pool) == free_before - 2
    assert ctl.gc_connections(59_999, 60_000) == 0
    assert ctl.gc_connections(60_001, 60_000) == 1
    assert not ctl.held and len(ctl.pool) == free_before
    ctl.check_invariants()


def test_active_flow_retained_by_gc():
    ctl = make()
    ctl.mutate(0)
    gw = MtGateway(ctl)
    pkt = to(ctl.current_vip(UPF))
    for now in range(0, 200_000, 30_000):
        assert isinstance(gw.translate_inbound(pkt, now), Rewritten)
        assert ctl.gc_connections(now) == 0


def test_mutation_log_lines():
    ctl = make()
    ctl.mutate(0)
    ctl.mutate(10_000)
    first, second = ctl.log[0].split(","), ctl.log[3].split(",")
    assert first[:2] == ["0", "1"] and first[3] == "-"
    assert second[:2] == ["10000", "2"] and second[3] == first[4]


def test_deferred_commit_opens_only_when_asked():
    ctl = make()
    ctl.mutate(0)
    gw = MtGateway(ctl)
    pkt = to(ctl.current_vip(GW1))
    probe = gw.translate_inbound(pkt, 1, open_flow=False)
    assert probe.entry is None and not ctl.connections
    committed = gw.commit(pkt, probe, 1)
    assert committed.entry is not None and len(ctl.connections) == 1
