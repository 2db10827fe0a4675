"""Random host mutation with connection tracking.

Every lifespan the protected hosts get fresh virtual addresses. A flow that
was opened earlier keeps working on the address it started with, while new
traffic to an old address, or to any real address, is refused.
"""

import random
from ipaddress import IPv4Address

from sdp_mtd.addressing import NetAddress
from sdp_mtd.mtd import MtController, MtGateway, parse_pool_range
from sdp_mtd.netsim import figure1
from sdp_mtd.packets import PacketKind, SimPacket

mtc = MtController(parse_pool_range("10.0.100.10-10.0.100.59"), random.Random("demo/mtd"),
                   lifespan_ms=10_000, gateway_real=IPv4Address("10.0.0.1"))
print("protected hosts:", [str(ip) for ip in mtc.scan_hosts(figure1())])
gw = MtGateway(mtc)
amf = IPv4Address("10.0.2.10")

mtc.mutate(0)
client = NetAddress.parse("10.0.1.10:50001")
first_vip = NetAddress(mtc.current_vip(amf), 7777)
print(f"\nepoch 1: amf_smf is reachable at {first_vip}")
opened = gw.translate_inbound(SimPacket(client, first_vip, PacketKind.DATA), 5)
print("client opens a flow, inside it becomes:", opened.packet.describe())

for epoch_start in (10_000, 20_000, 30_000):
    mtc.mutate(epoch_start)
    now = epoch_start + 1
    kept = gw.translate_inbound(SimPacket(client, first_vip, PacketKind.DATA), now)
    stranger = gw.translate_inbound(
        SimPacket(NetAddress.parse("10.0.9.66:4444"), first_vip, PacketKind.SYN), now)
    print(f"epoch {mtc.epoch}: amf_smf now {mtc.current_vip(amf)}; old flow -> "
          f"{type(kept).__name__}; stranger on old vIP -> {stranger}")

print("real address ->", gw.translate_inbound(
    SimPacket(NetAddress.parse("10.0.9.66:4444"), NetAddress(amf, 7777), PacketKind.SYN), 30_002))

print("\nmutation log:")
for line in mtc.log:
    print("  " + line)
