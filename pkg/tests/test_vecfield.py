"""Vector calculus layer.

Symbolic assertions demand exact structural zeros (the operators
expand-normalize, so curl-of-gradient and divergence-of-curl cancel in
the tree); numeric spot checks use 1e-12, finite differences 1e-9 at
unit scale.
"""

import pytest

from biham3 import expr as ex
from biham3.expr import parse
from biham3.sampling import SeededSampler, random_polynomial
from biham3.vecfield import (
    FrameError,
    ScalarField,
    VectorField3,
    cross,
    curl,
    divergence,
    dot,
    fd_gradient,
    gradient,
    triple,
    vadd,
)

UVW = ("u", "v", "w")
XYZ = ("x", "y", "z")


def sf(text, frame=UVW):
    return ScalarField(parse(text), frame)


def vf(*texts, frame=UVW):
    return VectorField3.from_exprs([parse(s) for s in texts], frame)


def random_field(sampler, degree=3):
    return VectorField3(
        tuple(ScalarField(random_polynomial(sampler, UVW, degree), UVW) for _ in range(3))
    )


def test_gradient_examples():
    assert gradient(sf("(v^2+w^2)/2")).exprs() == (ex.ZERO, parse("v"), parse("w"))
    assert gradient(sf("u^2-2*alpha*w")).exprs() == (
        parse("2*u"),
        ex.ZERO,
        parse("-2*alpha"),
    )
    assert gradient(sf("alpha")).exprs() == (ex.ZERO, ex.ZERO, ex.ZERO)


def test_gradient_has_no_time_component():
    g = gradient(sf("exp(-2*t)*u"))
    assert g.exprs() == (parse("exp(-2*t)"), ex.ZERO, ex.ZERO)


def test_curl_examples():
    assert curl(vf("v", "w", "u")).exprs() == (ex.con(-1), ex.con(-1), ex.con(-1))
    assert curl(vf("0", "-u^2", "0")).exprs() == (ex.ZERO, ex.ZERO, parse("-2*u"))
    for h in ("(v^2+w^2)/2", "u^2-2*alpha*w", "exp(-3*t)*u^4 - v^2*w"):
        assert curl(gradient(sf(h))).exprs() == (ex.ZERO, ex.ZERO, ex.ZERO)


def test_divergence_examples():
    assert divergence(vf("alpha*v", "-u*w", "u*v")).expr == ex.ZERO
    lu = vf("alpha*(y-x)", "gamma*y-x*z", "x*y-beta*z", frame=XYZ)
    assert divergence(lu).expr == parse("gamma - alpha - beta")
    assert divergence(vf("u", "v", "w")).expr == ex.con(3)


def test_cross_examples():
    a = vf("0", "v", "w")
    b = vf("u", "0", "-alpha")
    assert cross(a, b).exprs() == (parse("-alpha*v"), parse("u*w"), parse("-u*v"))
    assert cross(a, a).exprs() == (ex.ZERO, ex.ZERO, ex.ZERO)


def test_triple_degenerate():
    a, b = vf("u", "v^2", "w"), vf("v", "w", "u")
    assert triple(a, a, b).expr == ex.ZERO
    assert triple(a, b, b).expr == ex.ZERO


def test_frame_mismatch_rejected():
    with pytest.raises(FrameError):
        cross(vf("u", "v", "w"), vf("x", "y", "z", frame=XYZ))
    with pytest.raises(FrameError):
        ScalarField(parse("x+u"), UVW)
    with pytest.raises(FrameError):
        VectorField3((sf("u"), sf("v"), ScalarField(parse("z"), XYZ)))


def test_div_curl_and_curl_grad_vanish_on_random_corpus():
    sampler = SeededSampler(42)
    for _ in range(200):
        V = random_field(sampler)
        assert divergence(curl(V)).expr == ex.ZERO
        f = ScalarField(random_polynomial(sampler, UVW, 3), UVW)
        assert curl(gradient(f)).exprs() == (ex.ZERO, ex.ZERO, ex.ZERO)


def test_triple_antisymmetry_numeric():
    sampler = SeededSampler(5)
    A, B, C = (random_field(sampler, 2) for _ in range(3))
    base = triple(A, B, C).expr
    for swapped in (triple(B, A, C), triple(A, C, B), triple(C, B, A)):
        s = ex.add(base, swapped.expr)  # must vanish
        for _ in range(25):
            pt = sampler.point({"u": (-2, 2), "v": (-2, 2), "w": (-2, 2)})
            assert abs(ex.evaluate(s, pt)) <= 1e-12 * (
                1 + abs(ex.evaluate(base, pt))
            )


def test_cross_bilinearity():
    sampler = SeededSampler(6)
    A, B, C = (random_field(sampler, 2) for _ in range(3))
    lhs = cross(vadd(A, B), C)
    r1, r2 = cross(A, C), cross(B, C)
    for le, a, b in zip(lhs.exprs(), r1.exprs(), r2.exprs()):
        assert ex.sub(le, ex.add(a, b)) == ex.ZERO


def test_fd_gradient_examples():
    g = fd_gradient(sf("u^2"), {"u": 1.0, "v": 0.0, "w": 0.0, "t": 0.0})
    assert abs(g[0] - 2.0) < 1e-9 and g[1] == 0.0 and g[2] == 0.0

    qi_h1 = sf("gamma*u^2-v^2-(gamma+1)*w^2")
    g = fd_gradient(qi_h1, {"u": 1, "v": 1, "w": 1, "gamma": 2, "t": 0})
    assert g == pytest.approx((4.0, -2.0, -6.0), abs=1e-8)

    assert fd_gradient(sf("7"), {"u": 0.3, "v": 0.1, "w": -0.2, "t": 0}) == (0, 0, 0)

    with pytest.raises(ValueError):
        fd_gradient(sf("u"), {"u": 0, "v": 0, "w": 0, "t": 0}, h=0.0)


def test_fd_gradient_matches_symbolic_on_catalog_hamiltonian():
    from biham3 import catalog as cat

    d = cat.instantiate("t-system", gamma=3)
    h2 = d.bound_scalar(d.h2)
    g = gradient(h2)
    pt = {"u": 1.1, "v": -0.4, "w": 0.8, "t": 0.9}
    fd = fd_gradient(h2, pt)
    for i in range(3):
        sym = ex.evaluate(g.exprs()[i], pt)
        assert abs(fd[i] - sym) <= 1e-6 * (1 + abs(sym))


def test_dot_products():
    assert dot(vf("u", "v", "w"), vf("1", "1", "1")).expr == parse("u+v+w")
