"""Single packet authorization, byte by byte.

A host gets a 32-byte key, builds one 89-byte authorization packet and the
verifier accepts it exactly once. Tampering, staleness and replays are all
rejected without any reply being sent.
"""

import random

from sdp_mtd.addressing import host_id_for
from sdp_mtd.spa import CredentialStore, ReplayWindow, build_spa, verify_spa

rng = random.Random("demo/spa")
store = CredentialStore()
ue = store.generate_credential(host_id_for("ue_gnb"), rng)
service = host_id_for("amf_smf")

packet = build_spa(ue, service, now_ms=1_000, rng=rng)
raw = packet.serialize()
print(f"packet is {len(raw)} bytes")
print(f"  version+client  {raw[:17].hex()}")
print(f"  timestamp       {raw[17:25].hex()}")
print(f"  nonce           {raw[25:41].hex()}")
print(f"  service         {raw[41:57].hex()}")
print(f"  hmac-sha256     {raw[57:].hex()}")

window = ReplayWindow(horizon_ms=5_000)
print("\nfirst delivery :", verify_spa(raw, store.lookup, window, 1_002))
print("same bytes again:", verify_spa(raw, store.lookup, window, 1_500))

tampered = bytearray(raw)
tampered[30] ^= 0x04
print("one nonce bit flipped:", verify_spa(bytes(tampered), store.lookup, ReplayWindow(), 1_002))

late = build_spa(ue, service, now_ms=1_000, rng=rng)
print("arrives 6 s later:", verify_spa(late, store.lookup, ReplayWindow(), 7_000))
