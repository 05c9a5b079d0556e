import pytest

from jetsym import corpus_path
from jetsym.fileformats import parse_ansatz, parse_generators_text, parse_system, parse_system_text
from jetsym.grammar import ParseError, parse_expr
from jetsym.jet_core import jet_var

KDV = "jetsym-format 1\nsystem kdv\nindependent t x\ndependent u\ntime t\nevolution u: -u*u_x - u_xxx\n"


def test_parse_kdv():
    sys = parse_system_text(KDV)
    assert sys.name == "kdv" and sys.is_evolutionary and sys.dependents == ("u",)
    assert sys.G[0] == parse_expr("u_t + u*u_x + u_xxx", sys.namespace)


def test_corpus_systems():
    for name in ("kdv", "vorticity", "maxwell", "toy"):
        sys = parse_system(corpus_path(f"{name}.sys"))
        assert sys.name == name
    v = parse_system(corpus_path("vorticity.sys"))
    assert not v.is_evolutionary and v.equations[0].leading == jet_var("phi", "txx")
    m = parse_system(corpus_path("maxwell.sys"))
    assert len(m.constraints) == 2 and m.equation_names[-2:] == ("divE", "divB")


def test_continuation_and_comments():
    text = KDV.replace("evolution u: -u*u_x - u_xxx", "evolution u: -u*u_x \\\n   - u_xxx   # flux")
    assert parse_system_text(text).G == parse_system_text(KDV).G


@pytest.mark.parametrize("text,line,col", [
    ("system kdv\n", 1, 1),
    (KDV + "evolution u: u_xx +\n", 7, 14),
    (KDV + "bogus line\n", 7, 1),
    (KDV.replace("-u*u_x - u_xxx", "u_tx"), 6, 13),
    (KDV.replace("dependent u", "dependent u t"), 1, 1),
    (KDV + "evolution w: u\n", 7, 1),
])
def test_malformed_system(text, line, col):
    with pytest.raises(ParseError) as info:
        parse_system_text(text)
    assert info.value.line == line
    assert info.value.col >= col if col > 1 else info.value.col == col


def test_generators():
    sys = parse_system_text(KDV)
    gf = parse_generators_text(
        "jetsym-format 1\nparam c\nlet r = t*u\ncandidate a adjoint\n  u: r - x\n"
        "candidate s solution\n  u: c/(t + 1)\n", sys)
    assert gf.get("a").vector(sys) == (parse_expr("t*u - x", sys.namespace),)
    n, d = gf.get("s").components["u"]
    assert d == parse_expr("t + 1", sys.namespace)
    with pytest.raises(KeyError):
        gf.get("missing")
    with pytest.raises(ParseError) as info:
        parse_generators_text("jetsym-format 1\ncandidate a adjoint\n  w: 1\n", sys).get("a").vector(sys)
    assert info.value.line == 2
    with pytest.raises(ParseError):
        parse_generators_text("jetsym-format 1\ncandidate a weird\n", sys)
    with pytest.raises(ParseError):
        parse_generators_text("jetsym-format 1\n  u: 1\n", sys)


def test_ansatz_file():
    sys = parse_system(corpus_path("kdv.sys"))
    af = parse_ansatz(corpus_path("kdv.ans"), sys)
    assert af.kind == "adjoint" and af.bounds == {"order": 1, "degree": 2, "indep": 1}
