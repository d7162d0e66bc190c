"""Python access to the qlog checker. Every report is returned as a dict."""

import json as _json

from . import _core

criteria = _core.criteria


def check_file(path):
    return _json.loads(_core.check_file(str(path)))


def prove(path, semantic=True, seed=1):
    return _json.loads(_core.prove(str(path), semantic, seed))


def typecheck(term, type=""):
    return _json.loads(_core.typecheck(term, type))


def eval(term, type="", fuel=30):
    return _json.loads(_core.eval(term, type, fuel))


def kantorovich(mu, nu, cost):
    return _core.kantorovich(list(mu), list(nu), [list(r) for r in cost])


def markov():
    return _json.loads(_core.markov())


def coin(c="1/2", eps="1/4"):
    return _json.loads(_core.coin(str(c), str(eps)))


def hypercube(n):
    return _json.loads(_core.hypercube(n))


def prp(L=3, N=4, max_q=3):
    return _json.loads(_core.prp(L, N, max_q))


def run_criterion(id, corpus):
    return _json.loads(_core.run_criterion(id, str(corpus)))
