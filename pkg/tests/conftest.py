import itertools

from hypothesis import settings

from fairdiv.core import DomainFlags
from fairdiv.corpus import generate_random

settings.register_profile("fairdiv", max_examples=60, deadline=None)
settings.load_profile("fairdiv")

# Acceptance criteria record their outcome here; the summary hook prints one line each.
ACCEPTANCE_RESULTS: dict = {}

DOMAINS = (
    DomainFlags(),
    DomainFlags(identical=True),
    DomainFlags(additive=True),
    DomainFlags(nonzero_marginals=True),
    DomainFlags(zero_one_marginals=True),
    DomainFlags(identical=True, nonzero_marginals=True),
    DomainFlags(positive_additive=True),
)


def seeded_problems(count, max_items=4, domains=DOMAINS, first_seed=0):
    """Deterministic mix of small random problems across domains and sizes."""
    shapes = itertools.cycle([(n, m) for n in (2, 3) for m in range(1, max_items + 1)])
    out = []
    for seed in range(first_seed, first_seed + count):
        n, m = next(shapes)
        domain = domains[seed % len(domains)]
        out.append(generate_random(domain, n, m, seed))
    return out


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, ok = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}")
