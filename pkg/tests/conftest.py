def pytest_terminal_summary(terminalreporter):
    """Print one line per acceptance criterion recorded via ``record_property``."""
    lines = []
    for key in ("passed", "failed"):
        for report in terminalreporter.stats.get(key, []):
            if getattr(report, "when", None) != "call":
                continue
            for name, value in getattr(report, "user_properties", []):
                if name == "acceptance":
                    number, title, ok, detail = value
                    lines.append((number, f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} | {detail}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
