import sys
from importlib import resources
from pathlib import Path

import pytest
from hypothesis import settings, strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from isochor.parser import parse_choreography, parse_properties  # noqa: E402
from isochor.syntax import (  # noqa: E402
    ONE, TAU, TRUE, Act, Add, Assign, ChannelName, Choice, Eq, Lit, Par, Recv, Send, Seq,
    Test, Var,
)

settings.register_profile("default", deadline=None)
settings.load_profile("default")

CORPUS = resources.files("isochor") / "corpus"
VARIANTS = ["v1", "v2", "v3", "v4", "v5"]
PROGRAMS = ["gab", *VARIANTS, "deadlock"]


def corpus_text(name: str) -> str:
    return (CORPUS / name).read_text(encoding="utf-8")


def corpus_path(name: str) -> str:
    return str(CORPUS / name)


def load(name: str):
    return parse_choreography(corpus_text(f"{name}.chor"))


def properties(processes=None):
    text = corpus_text("iso.prop") + "\n" + corpus_text("nodeadlock.prop")
    return dict(parse_properties(text, processes))


@pytest.fixture(scope="session")
def props():
    return properties()


# -- hypothesis strategies -----------------------------------------------------

PROCS = ["p", "q", "r"]


def _channels():
    return st.sampled_from([ChannelName(a, b) for a in PROCS for b in PROCS if a != b])


def _exprs():
    small = st.integers(0, 2).map(Lit)
    return st.one_of(small, st.sampled_from(["x", "y"]).map(Var),
                     st.builds(Add, st.just(Var("x")), small))


actions = st.one_of(
    st.just(TAU),
    st.builds(Test, st.sampled_from(PROCS),
              st.one_of(st.just(Lit(TRUE)), st.builds(Eq, st.just(Var("x")), st.integers(0, 2).map(Lit)))),
    st.builds(Assign, st.sampled_from(PROCS), st.sampled_from(["x", "y"]), _exprs()),
    st.builds(Send, _channels(), _exprs()),
    st.builds(Recv, _channels(), st.sampled_from(["x", "y", "_"])),
)


def programs(max_leaves: int = 12):
    leaves = st.one_of(actions.map(Act), st.just(ONE))
    return st.recursive(
        leaves,
        lambda sub: st.one_of(st.builds(Choice, sub, sub), st.builds(Par, sub, sub),
                              st.builds(Seq, sub, sub)),
        max_leaves=max_leaves,
    ).filter(lambda p: p.size <= max_leaves)


def system_for(program, capacity=None, mode="global"):
    """Initial system over processes p, q, r, each holding x = 0 and y = 0."""
    from isochor.parser import ChoreographyFile
    from isochor.semantics import build_system

    chor = ChoreographyFile(("p", "q", "r"), {p: [("x", 0), ("y", 0)] for p in PROCS},
                            capacity, {}, [], program)
    return build_system(chor, mode)


# -- acceptance report -------------------------------------------------------------

ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance check under ``(number, part)``."""
    results = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(number, title, part=""):
        key = (number, part)
        results[key] = [title, "FAIL", ""]

        class _Record:
            def __enter__(self):
                return self

            def __exit__(self, kind, exc, tb):
                results[key][1] = "FAIL" if kind else "PASS"
                if exc is not None:
                    results[key][2] = str(exc).splitlines()[0][:120] if str(exc) else kind.__name__
                return False

            def note(self, text):
                results[key][2] = text

        return _Record()

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(ACCEPTANCE, None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    by_number: dict[int, list] = {}
    for (number, part), entry in sorted(results.items()):
        by_number.setdefault(number, []).append((part, *entry))
    for number, entries in by_number.items():
        status = "PASS" if all(e[2] == "PASS" for e in entries) else "FAIL"
        title = entries[0][1] if len(entries) == 1 else entries[0][1].split(":")[0]
        parts = "; ".join(
            f"{part + ' ' if part else ''}{e_status}{' (' + note + ')' if note else ''}"
            for part, _, e_status, note in entries
        )
        terminalreporter.write_line(f"criterion {number} {status}: {title} [{parts}]")
