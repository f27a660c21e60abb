def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for r in RESULTS:
        terminalreporter.write_line(r.line())
        for name, ok, exp, act, tol in r.subchecks:
            terminalreporter.write_line(f"    {'PASS' if ok else 'FAIL'} {name}: expected {exp}; actual {act}; tolerance {tol}")
