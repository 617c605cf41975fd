import doctest
from pathlib import Path


def load_tests(loader, tests, pattern):
    '''Doctests of every module of the package; test_*.py are found by discovery.'''
    here = Path(__file__)
    for p in sorted(here.parent.glob("*.py")):
        if p == here or p.stem.startswith("test_") or p.stem == "__main__":
            continue
        tests.addTests(doctest.DocTestSuite(f"hemirigid.{p.stem}"))
    return tests
