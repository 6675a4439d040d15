import json

import pytest

import transportlab as tl

VARIANT_DO = {"dag": [], "do(Z=z)": ["Z=z"], "do(S=1,Z=z)": ["S=1", "Z=z"]}


def test_registries():
    assert tl.scenarios() == ["fig1", "fig2", "fig3", "combined"]
    assert tl.structures() == ["fig1", "fig2", "fig3", "combined", "trial-conditional"]
    assert tl.structure_of("combined") == "combined"


def test_graph_surgery_and_separation():
    text = tl.graph_text("fig2", ["S=1", "Z=z"])
    assert "Y^{s=1,z}" in text
    assert tl.d_separated(text, "Y^{s=1,z} _||_ S | X")
    fig3 = tl.graph_text("fig3", ["S=1", "Z=z"])
    assert not tl.d_separated(fig3, "Y^{s=1,z} _||_ S | X")
    paths = tl.open_paths(fig3, "Y^{s=1,z}", "S", ["X"])
    assert paths and all("->" in p or "<-" in p for p in paths)

    dot = tl.graph_dot("fig1")
    assert dot.startswith("digraph")


def test_claim_table_matches_graphs():
    for structure in tl.structures():
        claims = tl.independence_claims(structure)
        assert claims
        for c in claims:
            assert c["claim_id"].startswith(structure + ".dsep.")
            text = tl.graph_text(structure, VARIANT_DO[c["variant"]])
            assert tl.d_separated(text, c["query"]) == c["expected_separated"]


def test_spec_round_trip_and_overrides():
    spec = tl.default_spec("fig1")
    assert spec["trial_assign_prob"] == 0.5
    edited = tl.override_spec(spec, ["beta_A_on_Y=0.9"])
    assert edited["coefficients"]["beta_A_on_Y"] == 0.9

    broken = dict(spec)
    broken["trial_assign_prob"] = 1.0
    with pytest.raises(tl.CoreError):
        tl.validate_spec_json(json.dumps(broken))


def test_exact_oracles():
    fig1 = tl.default_spec_json("fig1")
    assert tl.oracle_value(fig1, "mean_joint", "target", 1) == pytest.approx(
        0.670306622714194, abs=1e-9
    )
    assert tl.functional_value(fig1, "mean_joint", "target", 1) == pytest.approx(
        tl.oracle_value(fig1, "mean_joint", "target", 1), abs=1e-12
    )
    fig3 = tl.default_spec_json("fig3")
    assert not tl.identified(fig3, "mean_joint", "target", 1)
    assert tl.identified(fig3, "mean_assign", "trial", 1)
    severed = tl.override_spec_json(fig3, ["gamma_U1_on_S=0"])
    assert tl.identified(severed, "mean_joint", "target", 1)


def test_sampling_regimes_and_masking():
    spec = tl.default_spec_json("fig2")
    cols = tl.sample_columns(spec, 500, 3, mask=True)
    assert len(cols["x"]) == 500
    assert all((z == -1) == (s == 0) for z, s in zip(cols["z"], cols["s"]))
    forced = tl.sample_columns(spec, 200, 3, regime="do_s1_z1")
    assert set(forced["s"]) == {1} and set(forced["z"]) == {1}
    assert tl.dataset_csv(spec, 10, 1).startswith("x,s,z,a,y")

    report = tl.consistency(spec, 2000, 11)
    assert report["pass"] and report["violations"] == 0


def test_estimation_end_to_end():
    rep = tl.estimate("fig1", 20000, 5, "mean_joint", "target", 1)
    assert rep["estimator"] == "gformula"
    assert rep["mc_se"] > 0
    assert rep["abs_bias"] < 0.02
    assert rep["n"] == 20000

    csv_text = tl.dataset_csv(tl.default_spec_json("fig1"), 5000, 9, mask=True)
    bare = json.loads(tl.estimate_csv_json(csv_text, "mean_joint", "trial", 0, estimator="ipw"))
    assert "point" in bare and "oracle" not in bare


def test_verification_sweep():
    rep = tl.verify(["fig1"], n=5000, seeds=[101, 102], consistency_n=500, replicates=8)
    assert rep["all_pass"]
    assert len(rep["rows"]) == 26


def test_error_translation():
    with pytest.raises(tl.CoreError):
        tl.default_spec_json("fig9")
    with pytest.raises(tl.CoreError):
        tl.d_separated(tl.graph_text("fig1"), "not a query")
    with pytest.raises(tl.CoreError):
        tl.oracle_value(tl.default_spec_json("fig1"), "mean_joint", "target", 2)
