"""The self-checks behind ``miabsim --validate SUITE``.

Each check prints a line with its measured value and the limit it is held
to. The mobility suite simulates about 10,000 intersection events and is
the slowest.
"""
from miabsim import validation

for name in validation.SUITES:
    for check in validation.run_suite(name):
        print(check.line())
