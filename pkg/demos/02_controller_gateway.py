"""Controller and gateway working together.

The gateway drops everything by default. A valid authorization packet is
escalated to the controller, which checks it against its policy and hands
back a time-limited directive. The gateway turns that into port-forwarding
rules that vanish once the duration runs out.
"""

import random

from sdp_mtd.addressing import HostIdentity, NetAddress, Role
from sdp_mtd.controller import Controller
from sdp_mtd.gateway import Gateway
from sdp_mtd.packets import PacketKind, SimPacket, spa_packet
from sdp_mtd.spa import Credential, build_spa

T_MS = 30_000
ue = HostIdentity.named("ue_gnb", Role.INITIATING_HOST, "10.0.1.10:0")
amf = HostIdentity.named("amf_smf", Role.SERVICE, "10.0.2.10:0")
upf = HostIdentity.named("upf", Role.SERVICE, "10.0.2.20:0")
gw = HostIdentity.named("gateway1", Role.ACCEPTING_HOST, "10.0.0.1:0")

rng = random.Random("demo/ctl")
controller = Controller(ttl_ms=T_MS, rng=rng)
key = Credential(ue.host_id, rng.randbytes(32))
controller.register_host(ue, key)
for host in (amf, upf, gw):
    controller.register_host(host)
controller.expose_service(amf.host_id, gw.host_id, listen_port=44, forward_port=7777)
controller.expose_service(upf.host_id, gw.host_id, listen_port=45, forward_port=8888)
controller.set_policy(ue.host_id, {amf.host_id, upf.host_id})

gateway = Gateway(gw.host_id, gw.real_address.ip, controller.lookup_credential)
client = NetAddress.parse("10.0.1.10:50000")
public = NetAddress.parse("10.0.0.1:0")


def data(port, now):
    return gateway.process_packet(SimPacket(client, public.with_port(port), PacketKind.DATA), now)


print("before authorization, port 44 ->", data(44, 0))

raw = build_spa(key, amf.host_id, 10, rng).serialize()
action = gateway.process_packet(spa_packet(client, public.with_port(62201), raw, 10), 10)
print("authorization packet ->", action)
decision = controller.handle_forwarded_spa(raw, gw.host_id, 11, source=client)
print("controller ->", type(decision).__name__, [g.gateway_listen_port for g in decision.directive.allowed_services])
gateway.install_rule(decision.directive, 12)

for now in (100, 12 + T_MS - 1, 12 + T_MS):
    print(f"t={now:>6} ms, port 44 ->", data(44, now))

print("\nreplaying the same packet ->", controller.handle_forwarded_spa(raw, gw.host_id, 200))
print("\ngateway audit log:")
for line in gateway.log:
    print("  " + line)
