import math

import numpy as np

from frostkit.report import Certificate, failed, fmt, format_block, format_table


def test_fmt():
    assert fmt(None) == "none"
    assert fmt(True) == "true" and fmt(np.bool_(False)) == "false"
    assert fmt(0.1) == "0.1"
    assert fmt(np.float64(1 / 3)) == repr(1 / 3)
    assert fmt(math.inf) == "inf" and fmt(math.nan) == "nan"
    assert fmt(np.array([1.5, 2.0])) == "1.5 2.0"
    assert fmt(np.int64(7)) == "7"


def test_block_and_table():
    assert format_block("x", [("a", 1), ("b", None)]) == "[x]\na=1\nb=none\n"
    assert format_table(["k", "v"], [(0, 0.5)]) == "k,v\n0,0.5\n"


def test_certificate_verdicts():
    c = Certificate("c", 1.0, threshold=1.0)
    assert c.passed and c.bound == 1.0
    assert Certificate("c", 1.0 + 1e-10, threshold=1.0).passed
    assert not Certificate("c", 1.0 + 1e-6, threshold=1.0).passed
    open_ = Certificate("c", 2.0)
    assert open_.passed is None and not failed(open_)
    assert failed(Certificate("c", math.inf))
    block = Certificate("cond1", 0.5, 1.0, center=np.zeros(2), radius=0.25).to_block()
    assert block.startswith("[cond1]\n") and "pass=true" in block
