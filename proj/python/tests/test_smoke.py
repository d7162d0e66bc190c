import pathlib

import pytest

import qlog

CORPUS = pathlib.Path(__file__).resolve().parents[2] / "corpus"


def test_geo_file_checks():
    rep = qlog.check_file(CORPUS / "geo.qlog")
    assert rep["ok"]


def test_mutant_rejected():
    rep = qlog.check_file(CORPUS / "mutants" / "tensor_dup.qlog")
    assert not rep["ok"]
    assert rep["rule"] == rep["expect"]


def test_prove_transitivity():
    rep = qlog.prove(CORPUS / "transitivity.deriv.json")
    assert rep["status"] == "ok"
    assert rep["envs"] >= 20


def test_typecheck_contractivity():
    assert qlog.typecheck("fix x. delta(zero) (+ 1/2) map(succ, x)", "D(Nat)")["ok"]
    bad = qlog.typecheck("fix x. x", "Nat")
    assert not bad["ok"]


def test_kantorovich_two_points():
    d = qlog.kantorovich([0.5, 0.5], [0.25, 0.75], [[0, 1], [1, 0]])
    assert d == pytest.approx(0.25)


def test_coin_closed_form():
    rep = qlog.coin("1/2", "1/4")
    assert rep["ok"]


def test_hypercube():
    rep = qlog.hypercube(3)
    assert rep["max_ratio"] <= 0.5 + 1e-9


def test_criterion_twelve():
    assert qlog.run_criterion(12, CORPUS)["ok"]
