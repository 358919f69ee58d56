from collections import OrderedDict

_OUTCOMES: "OrderedDict[str, list]" = OrderedDict()


def _key(cid: str):
    head = cid.rstrip("*")
    return (int(head) if head.isdigit() else 99, cid)


def pytest_runtest_logreport(report):
    marker = dict(report.user_properties).get("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(report.user_properties).get("detail", "")
        _OUTCOMES.setdefault(marker, []).append((report.nodeid.split("::")[-1], report.passed, detail))


def pytest_runtest_setup(item):
    m = item.get_closest_marker("criterion")
    if m is not None:
        item.user_properties.append(("criterion", str(m.args[0])))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(_OUTCOMES, key=_key):
        parts = _OUTCOMES[cid]
        ok = all(p for _, p, _ in parts)
        label = f"criterion {cid.rstrip('*')} (supplementary)" if cid.endswith("*") else f"criterion {cid}"
        details = "; ".join(f"[{'ok' if p else 'FAIL'}] {name}: {d}" for name, p, d in parts)
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  {label:28s} {details}")
