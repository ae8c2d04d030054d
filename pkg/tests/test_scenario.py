"""Scenario parsing, validation, and derived state constructions."""

import copy
import json

import numpy as np
import pytest

import qhier.linalg as la
from qhier import ScenarioError, ValidationError, load_scenario, \
    parse_scenario
from qhier.scenario import SUITE_NAMES

EYE2 = [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]

BASE = {
    "spec": {
        "d": 2,
        "K": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]],
        "Phi": [
            [[0, 0], [0, 0], [0, 0], [0, 0]],
            [[0, 0], [0, 0], [0, 0], [0, 0]],
            [[0, 0], [0, 0], [0, 0], [0, 0]],
            [[0, 0], [0, 0], [0, 0], [1, 0]],
        ],
        "epsilon": 0.5,
        "N_max": 2,
        "n_max": 2,
    },
    "initial_state": {
        "kind": "factorized",
        "F1": [[[0.75, 0], [0, 0]], [[0, 0], [0.25, 0]]],
    },
    "t_grid": [0.0, 0.2],
    "suites": ["duality"],
    "eps_list": [0.5, 0.25],
    "output_dir": "out",
    "tolerances": {},
}


def variant(**overrides) -> dict:
    data = copy.deepcopy(BASE)
    for key, value in overrides.items():
        data[key] = value
    return data


class TestParsing:

    def test_base_parses(self):
        sc = parse_scenario(variant(), name="base")
        assert sc.name == "base"
        assert sc.spec.d == 2
        assert sc.suites == ("duality",)

    def test_missing_section(self):
        data = variant()
        del data["spec"]
        with pytest.raises(ScenarioError):
            parse_scenario(data)

    def test_missing_key_names_dotted_path(self):
        data = variant()
        del data["spec"]["epsilon"]
        with pytest.raises(ScenarioError) as err:
            parse_scenario(data)
        assert "spec" in str(err.value) and "epsilon" in str(err.value)

    def test_bad_matrix_cell(self):
        data = variant()
        data["spec"]["K"] = [[0, 1], [1, 0]]
        with pytest.raises((ScenarioError, ValidationError)):
            parse_scenario(data)

    def test_non_hermitian_k(self):
        data = variant()
        data["spec"]["K"] = [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]
        with pytest.raises(ValidationError) as err:
            parse_scenario(data)
        assert err.value.field == "spec.K"

    def test_f1_trace_must_be_one(self):
        data = variant()
        data["initial_state"]["F1"] = EYE2
        with pytest.raises(ValidationError) as err:
            parse_scenario(data)
        assert err.value.field == "initial_state.F1"

    def test_unknown_state_kind(self):
        data = variant()
        data["initial_state"]["kind"] = "thermal"
        with pytest.raises(ScenarioError):
            parse_scenario(data)

    def test_t_grid_strictly_increasing(self):
        with pytest.raises(ValidationError) as err:
            parse_scenario(variant(t_grid=[0.0, 0.2, 0.2]))
        assert err.value.field == "t_grid"

    def test_unknown_suite(self):
        with pytest.raises(ScenarioError):
            parse_scenario(variant(suites=["duality", "turbulence"]))

    def test_duplicate_suite(self):
        with pytest.raises(ScenarioError):
            parse_scenario(variant(suites=["duality", "duality"]))

    def test_eps_list_strictly_decreasing(self):
        with pytest.raises(ValidationError) as err:
            parse_scenario(variant(eps_list=[0.25, 0.5]))
        assert err.value.field == "eps_list"

    def test_eps_list_positive(self):
        with pytest.raises(ValidationError):
            parse_scenario(variant(eps_list=[0.5, 0.0]))

    def test_tolerances_must_be_numeric(self):
        with pytest.raises(ScenarioError):
            parse_scenario(variant(tolerances={"duality.max_gap": "tight"}))

    def test_empty_suites_allowed(self):
        sc = parse_scenario(variant(suites=[]))
        assert sc.suites == ()


class TestLoading:

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError):
            load_scenario(tmp_path / "nope.json")

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ScenarioError):
            load_scenario(path)

    def test_roundtrip_through_file(self, tmp_path):
        path = tmp_path / "ok.json"
        path.write_text(json.dumps(variant()))
        sc = load_scenario(path)
        assert sc.name == "ok"
        assert sc.spec.epsilon == 0.5


class TestBuiltin:

    def test_builtin_runs_all_suites(self, cm1):
        assert cm1.suites == SUITE_NAMES
        assert cm1.spec.N_max == 3
        assert cm1.state_kind == "correlated"

    def test_kernel_pair_factor(self, cm1):
        g2 = cm1.kernel.entry(2).mat
        f = np.diag([0.75, 0.25]).astype(complex)
        prod = g2 @ np.kron(f, f)
        # unit trace, so the pair sector is a genuine density perturbation
        assert np.trace(prod).real == pytest.approx(1.0)
        swap = np.eye(4)[[0, 2, 1, 3]]
        assert la.max_abs(swap @ g2 @ swap - g2) < 1e-12


class TestDerivedState:

    def test_correlated_density_sectors(self, cm1):
        D = cm1.density_sequence()
        f = np.diag([0.75, 0.25]).astype(complex)
        g2 = cm1.kernel.entry(2).mat
        assert la.max_abs(D.entry(1).mat - f) < 1e-14
        assert la.max_abs(D.entry(2).mat - g2 @ np.kron(f, f)) < 1e-14
        assert complex(D.entry(0).mat[0, 0]) == 1.0

    def test_factorized_density_sectors(self):
        sc = parse_scenario(variant())
        D = sc.density_sequence()
        f = np.diag([0.75, 0.25]).astype(complex)
        assert la.max_abs(D.entry(2).mat - np.kron(f, f)) < 1e-14

    def test_explicit_state_must_be_symmetric(self):
        bad = np.zeros((4, 4))
        bad[1, 1] = 1.0
        state = {
            "kind": "explicit",
            "D": {
                "1": EYE2,
                "2": la.mat_to_json(bad),
            },
        }
        data = variant(initial_state=state)
        with pytest.raises(ValidationError) as err:
            parse_scenario(data).density_sequence()
        assert err.value.field == "initial_state.2"

    def test_one_particle_data(self, cm1):
        f = cm1.one_particle_data()
        assert la.max_abs(f.mat - np.diag([0.75, 0.25])) < 1e-14

    def test_kinetic_state_carries_kernel(self, cm1):
        state = cm1.kinetic_state(2)
        assert state.n_max == 2
        assert state.correlation_kernel is cm1.kernel

    def test_tolerance_override(self):
        data = variant(tolerances={"duality.max_gap": 1e-4})
        sc = parse_scenario(data)
        assert sc.tolerance("duality.max_gap", 1e-10) == 1e-4
        assert sc.tolerance("duality.other", 1e-10) == 1e-10
