"""Catalog: the seven built-in systems, constraints, transforms,
published-formula bookkeeping, and the system-file loader.

The chain-rule transform oracle must confirm every stored field to
1e-12 relative; orthogonality/conservation invariants are sampled at
1e-12.
"""

import pytest

from biham3 import catalog as cat
from biham3 import expr as ex
from biham3.expr import parse
from biham3.vecfield import VectorField3, gradient
from biham3.poisson import jacobi_residual

BOX = {"u": (-2.0, 2.0), "v": (-2.0, 2.0), "w": (-2.0, 2.0), "t": (0.0, 2.0)}
STRUCTURED = ("lu-transformed", "modified-lu", "t-system", "chen", "chen-variant", "qi")


def test_seven_builtins():
    systems = cat.list_systems()
    assert len(systems) == 7
    assert [s["name"] for s in systems] == list(cat.BUILTIN_NAMES)


def test_constraint_summaries():
    by_name = {s["name"]: s for s in cat.list_systems()}
    assert "beta = 2*alpha" in by_name["lu-transformed"]["constraints"]
    assert "gamma = -2*alpha" in by_name["lu-transformed"]["constraints"]
    assert "alpha = 1" in by_name["qi"]["constraints"]
    assert "beta = 1" in by_name["qi"]["constraints"]
    assert not by_name["lu-original"]["hamiltonians"]


def test_instantiate_lu_transformed():
    d = cat.instantiate("lu-transformed", alpha=1)
    assert d.bound_field().exprs() == (parse("v"), parse("-u*w"), parse("u*v"))
    assert d.h1.expr == parse("1/2*(v^2+w^2)")
    assert d.bound_scalar(d.h2).expr == parse("1/2*u^2 - w")
    assert d.multiplier.expr == ex.ONE
    assert d.orientation == -1
    assert d.param_values == {"alpha": 1, "beta": 2, "gamma": -2}


def test_instantiate_qi():
    q = cat.instantiate("qi", gamma=2)
    assert q.bound_scalar(q.h1).expr == parse("2*u^2 - v^2 - 3*w^2")
    with pytest.raises(cat.ConstraintError):
        cat.instantiate("qi", alpha=2)
    with pytest.raises(cat.ConstraintError):
        cat.instantiate("qi", gamma=-1)  # H2 divides by gamma+1


def test_instantiate_errors():
    with pytest.raises(cat.ConstraintError):
        cat.instantiate("t-system", alpha=0)
    with pytest.raises(cat.ConstraintError):
        cat.instantiate("lu-transformed", delta=1)
    with pytest.raises(cat.ConstraintError):
        cat.get_system("lorenz")


def test_instantiate_fills_dependent_parameters():
    d = cat.instantiate("modified-lu", alpha=2)
    assert d.param_values == {"alpha": 2, "beta": 4, "gamma": -2}
    # consistent explicit values are accepted
    d = cat.instantiate("modified-lu", alpha=2, beta=4)
    assert d.param_values["beta"] == 4


@pytest.mark.parametrize("name", STRUCTURED)
def test_transform_check_confirms_catalog_fields(name):
    r = cat.transform_check(cat.instantiate(name), n=200)
    assert r["pass"], r
    assert r["max_rel_dev"] < 1e-12


def test_transform_check_flags_published_lu_third_component():
    d = cat.instantiate("lu-transformed")
    printed = VectorField3.from_exprs(list(d.printed["field"]), d.frame)
    r = cat.transform_check(d, n=200, field=printed)
    assert not r["pass"]
    assert r["components"][0]["pass"] and r["components"][1]["pass"]
    assert r["components"][2]["max_rel_dev"] > 0.1


def test_transform_check_flags_published_chen_uw_coefficient():
    # the published coefficient alpha on the u*w term coincides with the
    # derived coefficient 1 at alpha=1, so probe at alpha=2
    d = cat.instantiate("chen", alpha=2)
    printed = VectorField3.from_exprs(list(d.printed["field"]), d.frame)
    r = cat.transform_check(d, n=200, field=printed)
    assert not r["pass"]
    assert r["components"][0]["pass"] and r["components"][2]["pass"]
    assert r["components"][1]["max_rel_dev"] > 0.01


def test_transform_check_requires_metadata():
    with pytest.raises(cat.ConstraintError):
        cat.transform_check(cat.instantiate("lu-original"))


@pytest.mark.parametrize("name", STRUCTURED)
def test_forward_inverse_composition_is_identity(name):
    d = cat.instantiate(name)
    cov = d.transform
    inverse_map = dict(zip(cov.source_frame, cov.inverse))
    for i, fwd in enumerate(cov.forward):
        composed = ex.substitute(fwd, inverse_map)
        target = ex.var(d.frame[i])
        assert (
            composed == target
            or ex.equal_numeric(composed, target, BOX, n=50, tol=1e-10).equal
        ), (name, i, composed)


@pytest.mark.parametrize("name", STRUCTURED)
def test_orthogonality_invariants(name):
    d = cat.instantiate(name)
    X = d.bound_field()
    for h in (d.h1, d.h2):
        g = gradient(d.bound_scalar(h))
        dotv = ex.add(*(ex.mul(a, b) for a, b in zip(g.exprs(), X.exprs())))
        assert (
            dotv == ex.ZERO
            or ex.equal_numeric(dotv, ex.ZERO, BOX, n=200, tol=1e-12).equal
        )


@pytest.mark.parametrize("name", STRUCTURED)
def test_h1_is_time_independent(name):
    d = cat.instantiate(name)
    assert d.h1.is_time_independent()


@pytest.mark.parametrize("name", STRUCTURED)
def test_gradient_poisson_vectors_satisfy_jacobi_identically(name):
    d = cat.get_system(name)  # symbolic parameters
    for h in (d.h1, d.h2):
        assert jacobi_residual(gradient(h)).expr == ex.ZERO


def test_chen_variant_first_integral_conserved_symbolically():
    from biham3.vecfield import dot

    d = cat.get_system("chen-variant")  # keep alpha, lambda symbolic
    assert dot(gradient(d.h1), d.field).expr == ex.ZERO


# --- system files ------------------------------------------------------


def test_save_load_round_trip():
    for name in cat.BUILTIN_NAMES:
        d0 = cat.get_system(name)
        d1 = cat.load_system(cat.save_system(d0))
        assert d1.name == d0.name
        assert d1.frame == d0.frame
        assert d1.field.exprs() == d0.field.exprs()
        assert d1.multiplier.expr == d0.multiplier.expr
        assert (d1.h1 is None) == (d0.h1 is None)
        if d0.h1 is not None:
            assert d1.h1.expr == d0.h1.expr
            assert d1.h2.expr == d0.h2.expr
        assert d1.orientation == d0.orientation
        assert [(p.name, p.constraint) for p in d1.params] == [
            (p.name, p.constraint) for p in d0.params
        ]


def test_load_rejects_two_variable_frame():
    doc = "name = flat\nframe = u v\nfield = v ; -u ; 0\n"
    with pytest.raises(cat.SystemFormatError):
        cat.load_system(doc)


def test_load_defaults():
    doc = "name = osc\nframe = u v w\nfield = v ; -u ; 0\nh1 = u^2+v^2\n"
    d = cat.load_system(doc)
    assert d.multiplier.expr == ex.ONE
    assert d.orientation is None
    assert d.h2 is None


def test_load_rejects_zero_multiplier():
    doc = "name = bad\nframe = u v w\nfield = v ; -u ; 0\nmultiplier = 0\n"
    with pytest.raises(cat.SystemFormatError):
        cat.load_system(doc)


def test_load_rejects_out_of_frame_variables():
    doc = "name = bad\nframe = u v w\nfield = x ; -u ; 0\n"
    with pytest.raises(cat.SystemFormatError):
        cat.load_system(doc)


def test_load_params_and_instantiate():
    doc = (
        "name = custom\nframe = u v w\nparams\n    alpha\n    beta = 2*alpha\n"
        "field = alpha*v ; -u*w ; u*v\nh1 = 1/2*(v^2+w^2)\nh2 = 1/2*u^2 - alpha*w\n"
        "orientation = -1\n"
    )
    d = cat.load_system(doc)
    inst = cat.instantiate(d, {"alpha": 3})
    assert inst.param_values == {"alpha": 3, "beta": 6}
    assert inst.bound_field().exprs()[0] == parse("3*v")
