from pathlib import Path

import numpy as np
import pytest

from edvkit.conllu_io import Sentence, parse_string

DATA = Path(__file__).parent / "data"

# seven-token example: "The big dog chased the cat ."
EXAMPLE = """# sent_id = example_tree
1\tThe\tthe\tDET\t_\tDefinite=Def\t3\tdet\t_\t_
2\tbig\tbig\tADJ\t_\tDegree=Pos\t3\tamod\t_\t_
3\tdog\tdog\tNOUN\t_\tNumber=Sing\t4\tnsubj\t_\t_
4\tchased\tchase\tVERB\t_\tTense=Past\t0\troot\t_\t_
5\tthe\tthe\tDET\t_\tDefinite=Def\t6\tdet\t_\t_
6\tcat\tcat\tNOUN\t_\tNumber=Sing\t4\tobj\t_\t_
7\t.\t.\tPUNCT\t_\t_\t4\tpunct\t_\t_

"""


@pytest.fixture
def example_tree() -> Sentence:
    return parse_string(EXAMPLE)[0]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ud_fixture() -> Path:
    return DATA / "ud"


# One pass/fail line per acceptance criterion at the end of the run.

_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.skipped):
        if report.skipped:
            reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else str(report.longrepr)
            _ACCEPTANCE.append(("SKIP", props["criterion"], reason.removeprefix("Skipped: ")))
        else:
            _ACCEPTANCE.append(("PASS" if report.passed else "FAIL", props["criterion"], ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, reason in _ACCEPTANCE:
        terminalreporter.write_line(f"[{status}] {name}" + (f" -- {reason}" if reason else ""))
