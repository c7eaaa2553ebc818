import numpy as np
import pytest

from daslab.exceptions import NoConvergence
from daslab.linalg import (
    ground_state,
    matrix_exp_hermitian,
    operator_norm,
    unitarity_defect,
)
from daslab.model import (
    AdiabaticPath,
    HermitianOperator,
    linear_schedule,
    path_at,
    tfim_path,
)
from daslab.evolve import (
    EvolutionSpec,
    Layer,
    UnitaryOperator,
    discrete_evolution,
    effective_hamiltonian,
    exact_evolution,
    exact_state_evolution,
    full_hamiltonian_layer,
    grid_points,
    interpolation_layers,
    ordered_product,
    trotter_evolution,
    trotter_step_unitary,
)


def diagonal_path(values_i, values_f):
    return AdiabaticPath(
        HermitianOperator(np.diag(np.asarray(values_i, dtype=float))),
        HermitianOperator(np.diag(np.asarray(values_f, dtype=float))),
        linear_schedule(),
    )


@pytest.fixture(scope="module")
def exact_tfim2_t5():
    path = tfim_path(2)
    spec = EvolutionSpec(path=path, total_time=5.0, steps=10)
    return exact_evolution(spec, tol=1e-10)


class TestGrids:
    def test_endpoints_include_boundaries(self):
        s = grid_points(5, "endpoints")
        assert s[0] == 0.0 and s[-1] == 1.0 and len(s) == 5

    def test_endpoints_single_step(self):
        assert np.allclose(grid_points(1, "endpoints"), [0.0])

    def test_left_grid(self):
        assert np.allclose(grid_points(4, "left"), [0.0, 0.25, 0.5, 0.75])

    def test_midpoint_grid(self):
        assert np.allclose(grid_points(4, "midpoint"), [0.125, 0.375, 0.625, 0.875])

    def test_rejects_unknown(self):
        with pytest.raises(ValueError):
            grid_points(4, "right")


class TestOrderedProduct:
    def test_order_first_applied_first(self):
        rng = np.random.default_rng(0)
        mats = rng.normal(size=(5, 3, 3))
        expected = mats[4] @ mats[3] @ mats[2] @ mats[1] @ mats[0]
        assert np.allclose(ordered_product(mats), expected)

    def test_single(self):
        m = np.eye(2)
        assert np.allclose(ordered_product(np.array([m])), m)


class TestExactEvolution:
    def test_time_independent(self):
        path = diagonal_path([0.0, 1.0, -2.0], [0.0, 1.0, -2.0])
        spec = EvolutionSpec(path=path, total_time=3.0, steps=4)
        result = exact_evolution(spec, tol=1e-10)
        expected = matrix_exp_hermitian(path.h_initial.matrix, 3.0)
        assert operator_norm(result.matrix - expected) <= 1e-9
        assert result.method == "exact"

    def test_commuting_endpoints_average(self):
        path = diagonal_path([0.0, 2.0], [4.0, -1.0])
        spec = EvolutionSpec(path=path, total_time=2.5, steps=4)
        result = exact_evolution(spec, tol=1e-10)
        mean = (path.h_initial.matrix + path.h_final.matrix) / 2
        assert operator_norm(result.matrix - matrix_exp_hermitian(mean, 2.5)) <= 1e-9

    def test_self_convergence_tfim2(self, exact_tfim2_t5):
        assert exact_tfim2_t5.meta["delta"] < 1e-10
        assert unitarity_defect(exact_tfim2_t5.matrix) <= 1e-10

    def test_substep_cap_raises(self, tfim2):
        spec = EvolutionSpec(path=tfim2, total_time=5.0, steps=4)
        with pytest.raises(NoConvergence):
            exact_evolution(spec, tol=1e-12, start_substeps=64, max_substeps=128)

    def test_tol_floor(self, tfim2):
        spec = EvolutionSpec(path=tfim2, total_time=1.0, steps=2)
        with pytest.raises(ValueError):
            exact_evolution(spec, tol=1e-13)

    def test_ode_route_agrees(self, tfim2, exact_tfim2_t5):
        psi = ground_state(tfim2.h_initial.matrix)
        via_ode = exact_state_evolution(tfim2, 5.0, psi)
        via_product = exact_tfim2_t5.matrix @ psi
        overlap = abs(np.vdot(via_ode, via_product))
        assert 1.0 - overlap <= 1e-9


class TestDiscreteEvolution:
    def test_single_step(self, tfim2):
        spec = EvolutionSpec(path=tfim2, total_time=2.0, steps=1)
        result = discrete_evolution(spec)
        expected = matrix_exp_hermitian(path_at(tfim2, 0.0).matrix, 2.0)
        assert operator_norm(result.matrix - expected) <= 1e-12

    def test_commuting_path_phases(self):
        values_i = np.array([0.0, 1.0, 3.0])
        values_f = np.array([2.0, -1.0, 0.5])
        path = diagonal_path(values_i, values_f)
        spec = EvolutionSpec(path=path, total_time=4.0, steps=7)
        result = discrete_evolution(spec)
        s = spec.grid_points()
        total = np.zeros(3)
        for sj in s:
            total += (1 - sj) * values_i + sj * values_f
        expected = np.diag(np.exp(-1j * spec.dt * total))
        assert operator_norm(result.matrix - expected) <= 1e-12

    def test_refinement_improves(self, tfim2, exact_tfim2_t5):
        errors = []
        for steps in (20, 40, 80):
            spec = EvolutionSpec(path=tfim2, total_time=5.0, steps=steps)
            errors.append(operator_norm(discrete_evolution(spec).matrix - exact_tfim2_t5.matrix))
        assert errors[1] < errors[0] and errors[2] < errors[1]

    def test_first_order_rate_tfim4(self, tfim4):
        exact = exact_evolution(
            EvolutionSpec(path=tfim4, total_time=10.0, steps=4), tol=1e-8
        )
        steps = np.array([100, 200, 400, 800])
        errs = np.array(
            [
                operator_norm(
                    discrete_evolution(
                        EvolutionSpec(path=tfim4, total_time=10.0, steps=int(L))
                    ).matrix
                    - exact.matrix
                )
                for L in steps
            ]
        )
        rate = -np.polyfit(np.log(steps), np.log(errs), 1)[0]
        assert 0.75 <= rate <= 1.25
        assert np.all(errs * steps <= 2.0 * errs[0] * steps[0])


class TestTrotterEvolution:
    def test_single_layer_equals_discrete(self, tfim2):
        layers = full_hamiltonian_layer(tfim2)
        spec = EvolutionSpec(path=tfim2, total_time=3.0, steps=12, layers=layers)
        a_d = discrete_evolution(spec)
        a_t = trotter_evolution(spec)
        assert operator_norm(a_d.matrix - a_t.matrix) <= 1e-12

    def test_commuting_layers_equal_discrete(self):
        path = diagonal_path([0.0, 1.0, -1.0, 0.5], [2.0, 0.0, 1.0, -0.5])
        spec = EvolutionSpec(path=path, total_time=6.0, steps=9)
        assert (
            operator_norm(discrete_evolution(spec).matrix - trotter_evolution(spec).matrix)
            <= 1e-12
        )

    def test_norm_distance_grows_with_dt(self, tfim4):
        dists = []
        for total_time in (10.0, 100.0):
            spec = EvolutionSpec(path=tfim4, total_time=total_time, steps=100)
            dists.append(
                operator_norm(
                    discrete_evolution(spec).matrix - trotter_evolution(spec).matrix
                )
            )
        assert dists[1] > 5 * dists[0]

    def test_trotter_error_bound_fitted_constant(self, tfim2):
        # spectral-distance-to-exact over a (T, L) grid against max ||H_k||^2 T^2 / L
        h_norm = max(
            operator_norm(tfim2.h_initial.matrix), operator_norm(tfim2.h_final.matrix)
        )
        ratios = []
        for total_time in (2.0, 4.0):
            exact = exact_evolution(
                EvolutionSpec(path=tfim2, total_time=total_time, steps=4), tol=1e-9
            )
            for steps in (16, 32, 64, 128):
                spec = EvolutionSpec(path=tfim2, total_time=total_time, steps=steps)
                err = operator_norm(trotter_evolution(spec).matrix - exact.matrix)
                ratios.append(err * steps / (h_norm**2 * total_time**2))
        assert max(ratios) <= 2.0

    def test_layer_order_first_is_rightmost(self, tfim2):
        spec = EvolutionSpec(path=tfim2, total_time=1.0, steps=4)
        s = 0.5
        first = matrix_exp_hermitian(0.5 * tfim2.h_initial.matrix, spec.dt)
        second = matrix_exp_hermitian(0.5 * tfim2.h_final.matrix, spec.dt)
        assert operator_norm(trotter_step_unitary(spec, s) - second @ first) <= 1e-12

    def test_step_at_boundary_single_active_layer(self, tfim4):
        spec = EvolutionSpec(path=tfim4, total_time=4.0, steps=40)
        step = trotter_step_unitary(spec, 0.0)
        expected = matrix_exp_hermitian(tfim4.h_initial.matrix, spec.dt)
        assert operator_norm(step - expected) <= 1e-12

    def test_zero_dt_step_identity(self, tfim2):
        spec = EvolutionSpec(path=tfim2, total_time=1e-300, steps=1)
        assert operator_norm(trotter_step_unitary(spec, 0.3) - np.eye(4)) <= 1e-12

    def test_step_unitary_midpath(self, tfim4):
        spec = EvolutionSpec(path=tfim4, total_time=8.0, steps=10)
        assert unitarity_defect(trotter_step_unitary(spec, 0.5)) <= 1e-12

    def test_all_propagators_unitary(self, tfim4):
        spec = EvolutionSpec(path=tfim4, total_time=30.0, steps=25)
        for op in (discrete_evolution(spec), trotter_evolution(spec)):
            assert unitarity_defect(op.matrix) <= 1e-9

    def test_unitarity_enforced(self):
        with pytest.raises(ValueError):
            UnitaryOperator(np.diag([1.0, 2.0]), "exact")

    def test_layer_requires_parts(self):
        with pytest.raises(ValueError):
            Layer(matrix=np.eye(2))


class TestEffectiveHamiltonian:
    def test_small_dt_limit(self, tfim2):
        steps = 50
        spec = EvolutionSpec(path=tfim2, total_time=1e-3 * steps, steps=steps)
        for s in (0.2, 0.7):
            eff = effective_hamiltonian(spec, s)
            assert operator_norm(eff.matrix - path_at(tfim2, s).matrix) < 1e-2

    def test_single_layer_exact(self, tfim2):
        # one layer covering all of H(s): the step generator is H(s) itself
        layers = full_hamiltonian_layer(tfim2)
        spec = EvolutionSpec(path=tfim2, total_time=4.0, steps=8, layers=layers)
        for s in (0.0, 0.5, 1.0):
            eff = effective_hamiltonian(spec, s)  # ||H(s)|| dt = 1.5 < pi
            assert operator_norm(eff.matrix - path_at(tfim2, s).matrix) <= 1e-8

    def test_boundary_recovers_initial(self, tfim4):
        spec = EvolutionSpec(path=tfim4, total_time=4.0, steps=40)  # dt = 0.1
        eff = effective_hamiltonian(spec, 0.0)
        assert operator_norm(eff.matrix - tfim4.h_initial.matrix) <= 1e-8

    def test_definitional_round_trip(self, tfim4):
        spec = EvolutionSpec(path=tfim4, total_time=30.0, steps=60)
        for s in (0.1, 0.5, 0.9):
            eff = effective_hamiltonian(spec, s)
            rebuilt = matrix_exp_hermitian(eff.matrix, spec.dt)
            assert operator_norm(rebuilt - trotter_step_unitary(spec, s)) <= 1e-8


class TestSpecValidation:
    def test_interpolation_layers_weights(self, tfim2):
        layer_i, layer_f = interpolation_layers(tfim2)
        assert layer_i.weight(0.0) == 1.0 and layer_i.weight(1.0) == 0.0
        assert layer_f.weight(0.0) == 0.0 and layer_f.weight(1.0) == 1.0

    def test_rejects_bad_parameters(self, tfim2):
        with pytest.raises(ValueError):
            EvolutionSpec(path=tfim2, total_time=0.0, steps=5)
        with pytest.raises(ValueError):
            EvolutionSpec(path=tfim2, total_time=1.0, steps=0)
        with pytest.raises(ValueError):
            EvolutionSpec(path=tfim2, total_time=1.0, steps=5, grid="diagonal")

    def test_dt(self, tfim2):
        spec = EvolutionSpec(path=tfim2, total_time=5.0, steps=50)
        assert spec.dt == pytest.approx(0.1)

    def test_grid_choice_sensitivity(self, tfim2, exact_tfim2_t5):
        # all three sample grids converge to the same propagator; the
        # spread between them is itself O(1/L)
        errors = {}
        for grid in ("endpoints", "left", "midpoint"):
            spec = EvolutionSpec(path=tfim2, total_time=5.0, steps=200, grid=grid)
            errors[grid] = operator_norm(
                discrete_evolution(spec).matrix - exact_tfim2_t5.matrix
            )
        assert max(errors.values()) <= 0.2
        assert max(errors.values()) - min(errors.values()) <= max(errors.values())
