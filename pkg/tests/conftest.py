
import pytest

from stcrf.data import load_track_file, make_windows
from stcrf.synthetic import toy_rows, write_tracks


@pytest.fixture(scope="session")
def toy_windows(tmp_path_factory):
    path = tmp_path_factory.mktemp("toy") / "toy.txt"
    write_tracks(toy_rows(), path)
    return make_windows(load_track_file(path), 8, 12)


ORDER = pytest.StashKey[dict]()


def pytest_collection_modifyitems(config, items):
    config.stash[ORDER] = {item.nodeid: i for i, item in enumerate(items)}


def pytest_runtest_setup(item):
    marker = item.get_closest_marker("acceptance")
    if marker is not None and marker.args:
        item.user_properties.append(("criterion", marker.args[0]))


def pytest_terminal_summary(terminalreporter, config):
    order = config.stash.get(ORDER, {})
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(report, "user_properties", []))
            if "criterion" not in props:
                continue
            if report.when != "call" and report.passed:
                continue
            status = "PASS" if report.passed else "FAIL"
            detail = props.get("detail", "")
            lines.append((order.get(report.nodeid, len(order)), f"{status}  {props['criterion']}"
                          + (f"  ({detail})" if detail else "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
