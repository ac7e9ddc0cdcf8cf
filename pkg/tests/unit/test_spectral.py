import math
import tempfile
import unittest
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from embedding import Embedding, validate
from errors import InvalidArgumentError, ResourceLimitError
from ising_core import Graph, all_assignments, energies, make_model, maxcut_to_ising
from spectral import (
    GapProfile,
    Schedule,
    brute_force_ground,
    build_hamiltonian,
    encode_logical_qubit,
    gap_profile,
    gap_vs_chain_strength,
    inverse_rescaling_correspondence,
    load_schedule,
    min_gap,
    min_maintaining_strength,
    profile_rows,
    refine_min_gap,
    rescale_model,
    rescaling_check,
    rescaling_correspondence,
)
from topology import Topology


def random_model(n, seed):
    rng = np.random.default_rng(seed)
    J = {(u, v): float(rng.uniform(-1, 1)) for u in range(n) for v in range(u + 1, n)
         if rng.random() < 0.6}
    h = {v: float(rng.uniform(-1, 1)) for v in range(n)}
    return make_model(n, h, J)


def unit_coupler_model(seed):
    """Six vertices, vertex 0 joined to every other one, all couplers of magnitude 1."""
    rng = np.random.default_rng(seed)
    edges = [(0, v) for v in range(1, 6)]
    edges += [(u, v) for u in range(1, 6) for v in range(u + 1, 6) if rng.random() < 0.3]
    J = {e: float(rng.choice([-1.0, 1.0])) for e in edges}
    h = {v: float(rng.uniform(-0.5, 0.5)) for v in range(6)}
    return make_model(6, h, J)


class TestHamiltonian(unittest.TestCase):
    def test_problem_only(self):
        h = build_hamiltonian(make_model(1, {0: 1.0}), 1.0)
        np.testing.assert_array_equal(h, np.diag([1.0, -1.0]))

    def test_mixer_only(self):
        h = build_hamiltonian(make_model(1, {0: 1.0}), 0.0)
        np.testing.assert_array_equal(h, np.array([[0.0, -1.0], [-1.0, 0.0]]))

    def test_coupled_pair(self):
        h = build_hamiltonian(make_model(2, J={(0, 1): 1.0}), 1.0)
        np.testing.assert_array_equal(h, np.diag([1.0, -1.0, -1.0, 1.0]))

    def test_symmetric(self):
        h = build_hamiltonian(random_model(5, seed=1), 0.37)
        self.assertTrue(np.array_equal(h, h.T))

    def test_out_of_range_fraction(self):
        with self.assertRaises(InvalidArgumentError):
            build_hamiltonian(make_model(1, {0: 1.0}), 1.5)

    def test_qubit_cap(self):
        with self.assertRaises(ResourceLimitError):
            build_hamiltonian(make_model(13), 0.5, cap=12)
        with self.assertRaises(ResourceLimitError):
            gap_profile(make_model(13), grid_points=3, cap=12)


class TestGapProfile(unittest.TestCase):
    def test_single_qubit_analytic(self):
        profile = gap_profile(make_model(1, {0: 1.0}), grid_points=101, k=2)
        expected = np.sqrt((1 - profile.s) ** 2 + profile.s**2)
        self.assertLessEqual(np.max(np.abs(profile.levels[:, 0] + expected)), 1e-9)
        self.assertLessEqual(np.max(np.abs(profile.levels[:, 1] - expected)), 1e-9)

    def test_levels_capped_by_dimension(self):
        self.assertEqual(gap_profile(make_model(1, {0: 1.0}), grid_points=3, k=4).k, 2)

    def test_final_levels_are_classical_energies(self):
        model = random_model(6, seed=4)
        profile = gap_profile(model, grid_points=5, k=64)
        classical = np.sort(energies(model, all_assignments(6)))
        np.testing.assert_allclose(profile.levels[-1], classical, atol=1e-9)

    def test_zero_model(self):
        profile = gap_profile(make_model(3), grid_points=5, k=8)
        np.testing.assert_allclose(profile.levels[-1], np.zeros(8), atol=1e-12)

    def test_sorted_and_continuous(self):
        model = random_model(5, seed=8)
        profile = gap_profile(model, grid_points=51, k=4)
        self.assertTrue(np.all(np.diff(profile.levels, axis=1) >= -1e-12))
        for i in range(50):
            step = build_hamiltonian(model, profile.s[i + 1]) - build_hamiltonian(model, profile.s[i])
            bound = np.linalg.norm(step, 2) + 1e-9
            self.assertLessEqual(np.max(np.abs(profile.levels[i + 1] - profile.levels[i])), bound)

    def test_threads_match_sequential(self):
        model = random_model(6, seed=2)
        one = gap_profile(model, grid_points=21, k=3, threads=1)
        four = gap_profile(model, grid_points=21, k=3, threads=4)
        np.testing.assert_allclose(one.levels, four.levels, rtol=0, atol=1e-12)

    def test_too_few_points(self):
        with self.assertRaises(InvalidArgumentError):
            gap_profile(make_model(1, {0: 1.0}), grid_points=1)

    def test_profile_rows(self):
        rows = profile_rows(gap_profile(make_model(2, J={(0, 1): 1.0}), grid_points=3, k=2))
        self.assertEqual(len(rows), 3)
        self.assertEqual(rows[0][0], 0.0)
        self.assertEqual(len(rows[0]), 3)


class TestMinGap(unittest.TestCase):
    def test_single_qubit(self):
        result = min_gap(gap_profile(make_model(1, {0: 1.0}), grid_points=101, k=2))
        self.assertAlmostEqual(result.delta_min, math.sqrt(2), delta=1e-6)
        self.assertAlmostEqual(result.s_star, 0.5, places=12)
        self.assertFalse(result.degenerate)

    def test_degenerate_problem(self):
        result = min_gap(gap_profile(make_model(1), grid_points=11, k=2))
        self.assertTrue(result.degenerate)
        self.assertIsNone(result.excited_gap)

    def test_degenerate_excited_gap(self):
        model = maxcut_to_ising(Graph(n=2, edges=frozenset({(0, 1)})))
        result = min_gap(gap_profile(model, grid_points=11, k=4))
        self.assertTrue(result.degenerate)
        self.assertIsNotNone(result.excited_gap)
        self.assertGreater(result.excited_gap, 0.0)

    def test_scaled_profile(self):
        profile = gap_profile(random_model(4, seed=3), grid_points=41, k=2)
        base, doubled = min_gap(profile), min_gap(profile.scaled(2.0))
        self.assertAlmostEqual(doubled.delta_min, 2 * base.delta_min, places=12)
        self.assertEqual(doubled.s_star, base.s_star)

    def test_needs_two_levels(self):
        with self.assertRaises(InvalidArgumentError):
            min_gap(gap_profile(make_model(1, {0: 1.0}), grid_points=3, k=1))

    def test_refinement_never_worse(self):
        model = random_model(4, seed=6)
        profile = gap_profile(model, grid_points=11, k=2)
        coarse = min_gap(profile)
        refined = refine_min_gap(model, profile, coarse)
        self.assertLessEqual(refined.delta_min, coarse.delta_min)
        self.assertLessEqual(abs(refined.s_star - coarse.s_star), 0.1 + 1e-12)


class TestSchedule(unittest.TestCase):
    def test_linear(self):
        self.assertEqual(Schedule.linear().at(0.25), (0.75, 0.25))

    def test_interpolation(self):
        schedule = Schedule(s=(0.0, 0.5, 1.0), a=(2.0, 1.0, 0.0), b=(0.0, 0.0, 4.0))
        self.assertEqual(schedule.at(0.75), (0.5, 2.0))

    def test_invalid_grid(self):
        with self.assertRaises(ValidationError):
            Schedule(s=(0.1, 1.0), a=(1.0, 0.0), b=(0.0, 1.0))
        with self.assertRaises(ValidationError):
            Schedule(s=(0.0, 0.6, 0.6, 1.0), a=(1, 1, 1, 0), b=(0, 0, 0, 1))
        with self.assertRaises(ValidationError):
            Schedule(s=(0.0, 1.0), a=(1.0,), b=(0.0, 1.0))

    def test_load(self):
        with tempfile.TemporaryDirectory() as d:
            path = Path(d) / "schedule.csv"
            path.write_text("s,a,b\n0,1,0\n0.5,0.4,0.6\n1,0,1\n")
            self.assertEqual(load_schedule(path).a, (1.0, 0.4, 0.0))
            path.write_text("s,a\n0,1\n1,0\n")
            with self.assertRaises(InvalidArgumentError):
                load_schedule(path)


class TestRescaling(unittest.TestCase):
    def test_rescale_model(self):
        model = make_model(2, J={(0, 1): 1.0})
        self.assertIs(rescale_model(model, 1), model)
        self.assertEqual(rescale_model(model, 2).J, {(0, 1): 0.5})
        with self.assertRaises(InvalidArgumentError):
            rescale_model(model, 0)

    def test_final_energies_divide(self):
        model = random_model(4, seed=9)
        states = all_assignments(4)
        np.testing.assert_allclose(
            energies(rescale_model(model, 5), states), energies(model, states) / 5, atol=1e-12
        )

    def test_correspondence(self):
        self.assertEqual(rescaling_correspondence(0.0, 3.0), (0.0, 1.0))
        s1, factor = rescaling_correspondence(1.0, 4.0)
        self.assertEqual((s1, factor), (1.0, 0.25))
        s1, factor = rescaling_correspondence(0.5, 2.0)
        self.assertAlmostEqual(s1, 1 / 3, places=12)
        self.assertAlmostEqual(factor, 0.75, places=12)

    def test_inverse_correspondence(self):
        for s2 in (0.1, 0.5, 0.9):
            s1, _ = rescaling_correspondence(s2, 2.5)
            self.assertAlmostEqual(inverse_rescaling_correspondence(s1, 2.5), s2, places=12)

    def test_identity_holds(self):
        for seed in range(10):
            model = random_model(6, seed)
            for alpha in (1.5, 2.0, 5.0):
                check = rescaling_check(model, alpha, grid_points=41, k=4)
                self.assertLessEqual(check.max_deviation, 1e-8, msg=f"seed {seed}")
                self.assertLessEqual(check.rescaled.delta_min, check.original.delta_min)


class TestBruteForceGround(unittest.TestCase):
    def test_single_edge(self):
        e, minimizers = brute_force_ground(make_model(2, J={(0, 1): 1.0}))
        self.assertEqual(e, -1.0)
        self.assertEqual(sorted(m.tolist() for m in minimizers), [[-1, 1], [1, -1]])

    def test_triangle(self):
        model = maxcut_to_ising(Graph(n=3, edges=frozenset({(0, 1), (0, 2), (1, 2)})))
        e, minimizers = brute_force_ground(model)
        self.assertEqual(e, -1.0)
        self.assertEqual(len(minimizers), 6)

    def test_field(self):
        e, minimizers = brute_force_ground(make_model(1, {0: -2.0}))
        self.assertEqual(e, -2.0)
        self.assertEqual([m.tolist() for m in minimizers], [[1]])

    def test_cap(self):
        with self.assertRaises(ResourceLimitError):
            brute_force_ground(make_model(25))


class TestEncodings(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(17)
        J = {(0, v): float(rng.choice([-1, 1]) * rng.uniform(0.3, 1.0)) for v in range(1, 5)}
        J.update({(1, 2): 0.6, (3, 4): -0.8, (2, 5): 0.5, (4, 5): -0.4})
        h = {v: float(rng.uniform(-0.5, 0.5)) for v in range(6)}
        self.model = make_model(6, h, J)

    def test_encodings_are_valid(self):
        for kind in ("chain", "cycle", "clique"):
            target, e = encode_logical_qubit(self.model, 0, kind, size=4)
            self.assertEqual(len(target.qubits), 9)
            self.assertEqual(len(e.phi[0]), 4)
            self.assertTrue(validate(e, self.model.graph, target).valid, msg=kind)

    def test_invalid_encoding(self):
        with self.assertRaises(InvalidArgumentError):
            encode_logical_qubit(self.model, 0, "star")
        with self.assertRaises(InvalidArgumentError):
            encode_logical_qubit(self.model, 0, "cycle", size=2)
        with self.assertRaises(InvalidArgumentError):
            encode_logical_qubit(self.model, 6, "chain")

    def test_identity_embedding_needs_no_strength(self):
        target = Topology(qubits=frozenset(range(6)), couplers=self.model.graph.edges)
        e = Embedding(phi={v: (v,) for v in range(6)})
        self.assertEqual(min_maintaining_strength(self.model, e, target), 0.0)

    def test_isolated_chain(self):
        model = make_model(1, {0: 1.0})
        target = Topology(qubits=frozenset({0, 1}), couplers=frozenset({(0, 1)}))
        self.assertLessEqual(
            min_maintaining_strength(model, Embedding(phi={0: (0, 1)}), target, tol=1e-3), 1e-3
        )

    def test_denser_encodings_need_less(self):
        for seed in range(5):
            model = unit_coupler_model(seed)
            values = {}
            for kind in ("chain", "cycle", "clique"):
                target, e = encode_logical_qubit(model, 0, kind, size=4)
                values[kind] = min_maintaining_strength(model, e, target, tol=1e-3)
            self.assertLessEqual(values["clique"], values["cycle"] + 1e-3, msg=f"seed {seed}")
            self.assertLessEqual(values["cycle"], values["chain"] + 1e-3, msg=f"seed {seed}")

    def test_gap_versus_strength(self):
        model = make_model(2, {0: 0.3}, {(0, 1): 1.0})
        target, e = encode_logical_qubit(model, 0, "chain", size=2)
        results = gap_vs_chain_strength(model, e, target, [0.5, 2.0], grid_points=21)
        self.assertEqual([r.strength for r in results], [0.5, 2.0])
        self.assertTrue(all(r.delta_min > 0 for r in results))


class TestGapProfileModel(unittest.TestCase):
    def test_scaled_keeps_grid(self):
        profile = GapProfile(s=np.array([0.0, 1.0]), levels=np.array([[-1.0, 1.0], [-2.0, 2.0]]), k=2)
        scaled = profile.scaled(0.5)
        np.testing.assert_array_equal(scaled.s, profile.s)
        np.testing.assert_array_equal(scaled.levels, np.array([[-0.5, 0.5], [-1.0, 1.0]]))
