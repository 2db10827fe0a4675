from sdp_mtd.config import ScenarioConfig, parse_scenario


def scenario(mode: str = "sdp", seed: int = 7, **entries) -> ScenarioConfig:
    """Build a config from ``section__key=value`` keyword entries."""
    lines = [f"scenario.name = test_{mode}", f"scenario.mode = {mode}", f"scenario.seed = {seed}"]
    for key, value in entries.items():
        lines.append(f"{key.replace('__', '.')} = {value}")
    return parse_scenario("\n".join(lines))


def actions(result, *nodes: str) -> list[str]:
    out = []
    for line in result.trace:
        _, _, node, action, _ = line.split(",", 4)
        if not nodes or node in nodes:
            out.append(action)
    return out
