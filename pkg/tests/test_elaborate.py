"""Elaboration: derived facts, membership closure, certificate expansion."""

import pytest

from conebound.elaborate import ElaborationError, elaborate, run_expansion_passes
from conebound.parser import parse_scene
from conebound.scene import FACT_SCHEMAS


def facts_of_kind(elab, kind):
    return [fact for _, fact in elab.facts_of(kind)]


def test_single_map_gets_exactly_two_auto_compose_facts():
    elab = elaborate(parse_scene("collection C { }\nspace X, Y\nmap f : X -> Y\n"))
    composes = facts_of_kind(elab, "compose")
    assert len(composes) == 2
    rendered = {f.render() for f in composes}
    assert rendered == {
        "compose(init(Y), f, init(X))",
        "compose(term(X), term(Y), f)",
    }


def test_point_is_contractible_and_member():
    elab = elaborate(parse_scene("collection C { }\n"))
    assert "init(*)" in elab.equivs
    assert "term(*)" in elab.equivs
    assert "*" in elab.members


def test_contractible_space_yields_equiv_canonical_maps():
    elab = elaborate(parse_scene("collection C { }\nspace X\nfact contractible(X)\n"))
    assert "init(X)" in elab.equivs
    assert "term(X)" in elab.equivs


def test_susp_space_expands_to_pushout_with_apex_base():
    elab = elaborate(parse_scene(
        "collection C { }\nspace B, S\nfact susp_space(S, B)\n"))
    pushouts = facts_of_kind(elab, "pushout")
    assert len(pushouts) == 1
    assert pushouts[0].args == ("B", "term(B)", "term(B)", "init(S)", "init(S)", "S.diag")
    assert elab.sig("S.diag") == ("B", "S")


def test_wedge_space_expands_to_pushout_over_point():
    elab = elaborate(parse_scene(
        "collection C { }\nspace X, Y, W\nfact wedge_space(W, X, Y)\n"))
    pushouts = facts_of_kind(elab, "pushout")
    assert len(pushouts) == 1
    assert pushouts[0].args == ("*", "init(X)", "init(Y)", "W.inl", "W.inr", "init(W)")


def test_membership_closure_suspensions():
    elab = elaborate(parse_scene(
        "collection C { suspensions }\n"
        "space A, SA, SSA\n"
        "fact member(A)\n"
        "fact susp_space(SA, A)\n"
        "fact susp_space(SSA, SA)\n"
    ))
    assert {"A", "SA", "SSA"} <= elab.members


def test_membership_closure_wedges_needs_both_operands():
    elab = elaborate(parse_scene(
        "collection C { wedges }\n"
        "space A, B, W, V\n"
        "fact member(A)\n"
        "fact wedge_space(W, A, A)\n"
        "fact wedge_space(V, A, B)\n"
    ))
    assert "W" in elab.members
    assert "V" not in elab.members


def test_membership_closure_smash_ideal_takes_either_operand():
    elab = elaborate(parse_scene(
        "collection C { smash_ideal }\n"
        "space A, B, S\n"
        "fact member(A)\n"
        "fact smash_space(S, B, A)\n"
    ))
    assert "S" in elab.members


def test_membership_closure_respects_flags():
    elab = elaborate(parse_scene(
        "collection C { }\n"
        "space A, SA\n"
        "fact member(A)\n"
        "fact susp_space(SA, A)\n"
    ))
    assert "SA" not in elab.members


def test_all_spaces_marks_everything():
    elab = elaborate(parse_scene("collection C { all }\nspace X, Y\n"))
    assert {"X", "Y", "*"} <= elab.members


def test_cert_expansion_structure():
    elab = elaborate(parse_scene(
        "collection Sigma { suspensions }\n"
        "space X, A, SA, S2X\n"
        "fact member(A)\n"
        "fact susp_space(SA, A)\n"
        "fact member(S2X)\n"
        "decomposition kl(X) via [A, SA, S2X]\n"
    ))
    cofibers = facts_of_kind(elab, "cofiber")
    assert [f.args for f in cofibers] == [
        ("kl(X).att0", "kl(X).step0", "kl(X).stage1"),
        ("kl(X).att1", "kl(X).step1", "kl(X).stage2"),
        ("kl(X).att2", "kl(X).step2", "*"),
    ]
    composes = {f.render() for f in facts_of_kind(elab, "compose")}
    assert "compose(kl(X).comp2, kl(X).step1, kl(X).step0)" in composes
    assert "compose(kl(X).comp3, kl(X).step2, kl(X).comp2)" in composes
    assert "compose(term(X), kl(X).final, kl(X).comp3)" in composes
    assert "kl(X).final" in elab.equivs


def test_category_cert_puts_section_and_domination():
    elab = elaborate(parse_scene(
        "collection C { }\n"
        "space X, A\n"
        "fact member(A)\n"
        "decomposition kit(X) via [A]\n"
    ))
    sections = facts_of_kind(elab, "section")
    assert [f.args for f in sections] == [("kit(X).sec", "kit(X).final")]
    dominations = facts_of_kind(elab, "dominates")
    assert [f.args for f in dominations] == [("kit(X).step0", "term(X)")]
    assert "kit(X).final" not in elab.equivs


def test_cert_unprovable_cone_membership_is_an_error():
    with pytest.raises(ElaborationError) as excinfo:
        elaborate(parse_scene(
            "collection C { }\n"
            "space X, A\n"
            "decomposition kl(X) via [A]\n"
        ))
    assert "not derivably in the collection" in str(excinfo.value)


def test_cert_intermediate_arity_is_checked():
    import dataclasses

    from conebound.scene import DecompositionCert

    scene = parse_scene(
        "collection C { }\n"
        "space X, A, B, M\n"
        "fact member(A)\nfact member(B)\n"
    )
    from conebound.model import Kind, InvariantKey

    cert = DecompositionCert(
        target=InvariantKey("term(X)", Kind.CONE_LENGTH),
        cone_spaces=("A", "B"),
        intermediates=("M", "M"),  # a length-2 chain needs exactly 1
    )
    with pytest.raises(ElaborationError) as excinfo:
        elaborate(dataclasses.replace(scene, certs=(cert,)))
    assert "intermediate spaces" in str(excinfo.value)


def test_cert_with_supplied_intermediates():
    import dataclasses

    from conebound.model import InvariantKey, Kind
    from conebound.scene import DecompositionCert

    scene = parse_scene(
        "collection C { }\n"
        "space X, A, B, M\n"
        "fact member(A)\nfact member(B)\n"
    )
    cert = DecompositionCert(
        target=InvariantKey("term(X)", Kind.CONE_LENGTH),
        cone_spaces=("A", "B"),
        intermediates=("M",),
    )
    elab = elaborate(dataclasses.replace(scene, certs=(cert,)))
    cofibers = facts_of_kind(elab, "cofiber")
    assert [f.args[2] for f in cofibers] == ["M", "*"]


def test_smash_decomp_expands_to_cofiber():
    elab = elaborate(parse_scene(
        "collection C { }\n"
        "space X, Y, W, P, S\n"
        "map u : W -> P\n"
        "map v : P -> S\n"
        "fact wedge_space(W, X, Y)\n"
        "fact product_space(P, X, Y)\n"
        "fact smash_space(S, X, Y)\n"
        "fact smash_decomp(X, Y, W, P, S)\n"
    ))
    cofibers = facts_of_kind(elab, "cofiber")
    assert [f.args for f in cofibers] == [("u", "v", "S")]


def test_smash_decomp_missing_prerequisites_is_an_error():
    with pytest.raises(ElaborationError) as excinfo:
        elaborate(parse_scene(
            "collection C { }\n"
            "space X, Y, W, P, S\n"
            "fact smash_decomp(X, Y, W, P, S)\n"
        ))
    assert "requires" in str(excinfo.value)


def test_projection_needs_matching_product():
    with pytest.raises(ElaborationError) as excinfo:
        elaborate(parse_scene(
            "collection C { }\n"
            "space P, B\n"
            "map p : P -> B\n"
            "fact projection(p)\n"
        ))
    assert "declared product" in str(excinfo.value)


def test_product_map_needs_linkage():
    with pytest.raises(ElaborationError):
        elaborate(parse_scene(
            "collection C { }\n"
            "space A, B, X, Y, P, Q\n"
            "map f : A -> X\n"
            "map g : B -> Y\n"
            "map h : P -> Q\n"
            "fact product_map(h, f, g)\n"
        ))


def test_pushout_map_alignment_checked():
    text = (
        "collection C { }\n"
        "space A, B, C2, D, A2, B2, C3, D2\n"
        "map f : A -> B\nmap g : A -> C2\nmap ib : B -> D\nmap ic : C2 -> D\nmap dg : A -> D\n"
        "map f2 : A2 -> B2\nmap g2 : A2 -> C3\nmap ib2 : B2 -> D2\nmap ic2 : C3 -> D2\nmap dg2 : A2 -> D2\n"
        "map va : A -> A2\nmap vb : B -> B2\nmap vc : C2 -> C3\nmap vd : D -> D2\n"
        "fact pushout(A, f, g, ib, ic, dg)\n"
        "fact pushout(A2, f2, g2, ib2, ic2, dg2)\n"
        "fact pushout_map(A, A2, va, vb, vc, vd)\n"
    )
    elab = elaborate(parse_scene(text))
    assert facts_of_kind(elab, "pushout_map")

    broken = text.replace("fact pushout(A2, f2, g2, ib2, ic2, dg2)\n", "")
    with pytest.raises(ElaborationError) as excinfo:
        elaborate(parse_scene(broken))
    assert "pushout_map" in str(excinfo.value)


def test_elaboration_is_idempotent():
    for text in (
        "collection C { all }\nspace X, Y\nmap f : X -> Y\n",
        "collection Sigma { suspensions }\nspace X, A, SA, S2X\n"
        "fact member(A)\nfact susp_space(SA, A)\nfact member(S2X)\n"
        "decomposition kl(X) via [A, SA, S2X]\n",
    ):
        elab = elaborate(parse_scene(text))
        before = len(elab.facts)
        assert run_expansion_passes(elab) is False
        assert len(elab.facts) == before


def test_elaboration_never_creates_unshaped_facts():
    elab = elaborate(parse_scene(
        "collection C { }\nspace B, S\nfact susp_space(S, B)\n"))
    for fact in elab.facts:
        for role, arg in zip(FACT_SCHEMAS[fact.kind], fact.args):
            if role == "space":
                assert arg in elab.spaces
            else:
                assert arg in elab.maps
