import numpy as np
import pytest

from spnkit import SpnModel, parse_signature

from helpers import fig1_bindings

FIG1_TEXT = "((0.7(((0.4(f1,{1})+0.6(f2,{1})))x(f3,{2}))+0.3((f4,{1})x(f5,{2}))),{1,2})"


@pytest.fixture(scope="session")
def fig1_node():
    return parse_signature(FIG1_TEXT, 2)


@pytest.fixture(scope="session")
def fig1_text():
    return FIG1_TEXT


@pytest.fixture()
def fig1_model(fig1_node):
    return SpnModel(fig1_node, fig1_bindings("printed"))


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(20260808))
