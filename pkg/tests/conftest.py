def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get('test_acceptance')
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section('acceptance criteria')
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
