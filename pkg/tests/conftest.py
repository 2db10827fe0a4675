import random
from dataclasses import dataclass

import pytest

from sdp_mtd.addressing import HostIdentity, NetAddress, Role
from sdp_mtd.controller import Controller
from sdp_mtd.gateway import Gateway
from sdp_mtd.spa import Credential, build_spa


@dataclass
class Deployment:
    controller: Controller
    gateway: Gateway
    ue: HostIdentity
    amf: HostIdentity
    upf: HostIdentity
    gw: HostIdentity
    key: Credential
    rng: random.Random

    def spa(self, now_ms: int, service=None) -> bytes:
        return build_spa(self.key, (service or self.amf).host_id, now_ms, self.rng).serialize()


@pytest.fixture
def deployment() -> Deployment:
    ue = HostIdentity.named("ue_gnb", Role.INITIATING_HOST, "10.0.1.10:0")
    amf = HostIdentity.named("amf_smf", Role.SERVICE, "10.0.2.10:0")
    upf = HostIdentity.named("upf", Role.SERVICE, "10.0.2.20:0")
    gw = HostIdentity.named("gateway1", Role.ACCEPTING_HOST, "10.0.0.1:0")
    ctl = HostIdentity.named("controller", Role.CONTROLLER, "10.0.0.2:0")
    rng = random.Random("fixture")
    controller = Controller(ttl_ms=30_000, rng=random.Random("ctl"), identity=ctl)
    key = Credential(ue.host_id, rng.randbytes(32))
    controller.register_host(ue, key)
    for host in (amf, upf, gw):
        controller.register_host(host)
    controller.expose_service(amf.host_id, gw.host_id, 44, 7777)
    controller.expose_service(upf.host_id, gw.host_id, 45, 8888)
    controller.set_policy(ue.host_id, {amf.host_id, upf.host_id})
    gateway = Gateway(gw.host_id, gw.real_address.ip, controller.lookup_credential, name="gateway1")
    return Deployment(controller, gateway, ue, amf, upf, gw, key, rng)


@pytest.fixture
def ue_addr() -> NetAddress:
    return NetAddress.parse("10.0.1.10:5000")


CRITERIA = {
    1: "port-scan blackening",
    2: "DoS isolation",
    3: "decision-branch conformance",
    4: "replay rejection",
    5: "MTD continuity and denial",
    6: "determinism",
    7: "SPA format",
}
_outcomes: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion this test decides")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes.setdefault(marker.args[0], []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        results = _outcomes.get(n)
        if results is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        count = len(results or [])
        terminalreporter.write_line(f"criterion {n} ({title}): {status} [{count} tests]")
