import pytest

from oracles import brute_force_propagate, closure_supertypes
from rangepta.errors import ConfigConflictError, UniverseMismatchError
from rangepta.hierarchy import number_allocations
from rangepta.pag import GenParams, generate_synthetic, parse_program
from rangepta.solver import (
    SolverConfig,
    compare_solutions,
    emit_solution,
    precision_histogram,
    propagate,
    run_extra_pass,
)

EXACT_CONFIGS = [
    SolverConfig("naive", "mask"),
    SolverConfig("pure", "mask"),
    SolverConfig("hybrid", "mask"),
    SolverConfig("shared", "mask"),
    SolverConfig("sparse", "mask"),
]
RANGED_CONFIGS = [
    SolverConfig("ranged", "intrinsic"),
    SolverConfig("ranged-hybrid", "intrinsic"),
]

BASIC = """\
class Object
class A extends Object
class B extends A
var a : A
var b : B
var o : Object
field f : A
alloc oa : A
alloc ob : B
new a oa
new b ob
assign a b
assign o a
assign b a
store o f b
load a o f
"""


def load_corpus(text):
    h, pag = parse_program(text)
    nr = number_allocations(h, list(pag.allocs.values()))
    return pag, nr


def solve_text(text, cfg):
    pag, nr = load_corpus(text)
    return propagate(pag, nr, cfg)


def oracle_for(pag, nr, filtered=True):
    sup = closure_supertypes(pag.class_decls, pag.iface_decls)
    return brute_force_propagate(pag, nr.index_of, nr.type_of_index, sup, filtered)


class TestConfig:
    def test_valid(self):
        for cfg in EXACT_CONFIGS + RANGED_CONFIGS:
            cfg.validate()
        SolverConfig("ranged", "none").validate()
        SolverConfig("naive", "none").validate()

    def test_intrinsic_needs_ranged(self):
        with pytest.raises(ConfigConflictError):
            SolverConfig("hybrid", "intrinsic").validate()

    def test_mask_needs_unranged(self):
        with pytest.raises(ConfigConflictError):
            SolverConfig("ranged", "mask").validate()

    def test_unknown_names(self):
        with pytest.raises(ConfigConflictError):
            SolverConfig("fancy", "mask").validate()
        with pytest.raises(ConfigConflictError):
            SolverConfig("naive", "strict").validate()


class TestBasicFlow:
    def test_allocation_seeds(self):
        sol = solve_text(BASIC, SolverConfig("naive", "mask"))
        ia, ib = sol.nr.index_of["oa"], sol.nr.index_of["ob"]
        assert set(sol.var_members("a")) >= {ia, ib}

    def test_assignment_filtering(self):
        # flowing A-typed contents into a B-typed variable keeps only B objects
        sol = solve_text(BASIC, SolverConfig("naive", "mask"))
        assert set(sol.var_members("b")) == {sol.nr.index_of["ob"]}

    def test_field_flow(self):
        sol = solve_text(BASIC, SolverConfig("naive", "mask"))
        ia, ib = sol.nr.index_of["oa"], sol.nr.index_of["ob"]
        # o.f := b for every object o points to, then read back into a
        for o in sol.var_members("o"):
            assert set(sol.field_members((o, "f"))) == {ib}
        assert set(sol.var_members("a")) == {ia, ib}

    def test_unfiltered_mode_is_wider(self):
        filt = solve_text(BASIC, SolverConfig("naive", "mask"))
        free = solve_text(BASIC, SolverConfig("naive", "none"))
        assert set(free.var_members("b")) > set(filt.var_members("b"))


def small_corpora():
    p = GenParams(
        num_classes=10,
        num_interfaces=3,
        num_fields=4,
        num_vars=18,
        num_statements=90,
        allocs_per_class=(0, 3),
    )
    return [generate_synthetic(p, seed) for seed in range(6)]


class TestOracleEquivalence:
    @pytest.mark.parametrize("cfg", EXACT_CONFIGS, ids=lambda c: c.set_kind)
    def test_exact_kinds_match_oracle(self, cfg):
        for text in small_corpora():
            pag, nr = load_corpus(text)
            sol = propagate(pag, nr, cfg)
            pt, fpt = oracle_for(pag, nr)
            for v in pag.var_types:
                assert frozenset(sol.var_members(v)) == pt[v], (cfg.set_kind, v)
            for key, s in fpt.items():
                assert frozenset(sol.field_members(key)) == s

    def test_none_mode_matches_unfiltered_oracle(self):
        for text in small_corpora()[:3]:
            pag, nr = load_corpus(text)
            sol = propagate(pag, nr, SolverConfig("naive", "none"))
            pt, _ = oracle_for(pag, nr, filtered=False)
            for v in pag.var_types:
                assert frozenset(sol.var_members(v)) == pt[v]

    @pytest.mark.parametrize("cfg", RANGED_CONFIGS, ids=lambda c: c.set_kind)
    def test_ranged_kinds_superset_of_oracle(self, cfg):
        for text in small_corpora():
            pag, nr = load_corpus(text)
            sol = propagate(pag, nr, cfg)
            pt, fpt = oracle_for(pag, nr)
            for v in pag.var_types:
                assert frozenset(sol.var_members(v)) >= pt[v]
            for key, s in fpt.items():
                assert frozenset(sol.field_members(key)) >= s


class TestOrdering:
    def test_filter_modes_nest(self):
        # none admits at least what intrinsic does, which admits at least mask
        for text in small_corpora()[:3]:
            mask = solve_text(text, SolverConfig("hybrid", "mask"))
            intr = solve_text(text, SolverConfig("ranged", "intrinsic"))
            free = solve_text(text, SolverConfig("hybrid", "none"))
            for v in mask.pag.var_types:
                m = set(mask.var_members(v))
                i = set(intr.var_members(v))
                f = set(free.var_members(v))
                assert m <= i <= f


class TestAlignmentCollapse:
    def test_padded_corpus_is_exact(self):
        # chunk-aligned intervals leave no slack: ranged == masked exactly
        p = GenParams(
            num_classes=8,
            num_interfaces=2,
            num_vars=16,
            num_statements=80,
            allocs_per_class=(0, 3),
            pad_chunk=8,
        )
        for seed in range(4):
            text = generate_synthetic(p, seed)
            a = solve_text(text, SolverConfig("ranged", "intrinsic", chunk_bits=8))
            b = solve_text(text, SolverConfig("hybrid", "mask", chunk_bits=8))
            assert compare_solutions(a, b).status == "equal"


class TestDeterminism:
    def test_repeat_runs_identical(self):
        text = small_corpora()[0]
        for cfg in (SolverConfig("hybrid", "mask"), SolverConfig("ranged", "intrinsic")):
            assert emit_solution(solve_text(text, cfg)) == emit_solution(
                solve_text(text, cfg)
            )

    def test_exact_kinds_agree(self):
        text = small_corpora()[1]
        outputs = {emit_solution(solve_text(text, cfg)) for cfg in EXACT_CONFIGS}
        assert len(outputs) == 1


class TestFixpoint:
    @pytest.mark.parametrize(
        "cfg", EXACT_CONFIGS + RANGED_CONFIGS, ids=lambda c: c.set_kind
    )
    def test_extra_pass_is_noop(self, cfg):
        for text in small_corpora()[:3]:
            sol = solve_text(text, cfg)
            assert run_extra_pass(sol) == 0


class TestStats:
    def test_counters_populated(self):
        sol = solve_text(BASIC, SolverConfig("hybrid", "mask"))
        assert sol.stats.iterations > 0
        assert sol.stats.union_ops > 0
        assert sol.stats.wall_time >= 0.0
        assert sol.stats.total_footprint_bytes > 0


class TestHistogram:
    def test_basic_population(self):
        sol = solve_text(BASIC, SolverConfig("naive", "mask"))
        pct, total = precision_histogram(sol)
        assert total == 1  # only o is dereferenced
        assert pct[2] == 100.0  # pt(o) == {oa, ob}

    def test_percentages_sum(self):
        sol = solve_text(small_corpora()[0], SolverConfig("hybrid", "mask"))
        pct, total = precision_histogram(sol)
        assert total == len(sol.pag.dereferenced_vars())
        assert sum(pct) == pytest.approx(100.0)

    def test_empty_population(self):
        sol = solve_text("class Object\nvar x : Object\n", SolverConfig("naive", "mask"))
        assert precision_histogram(sol) == ([0.0] * 7, 0)


class TestCompare:
    def test_equal(self):
        a = solve_text(BASIC, SolverConfig("naive", "mask"))
        b = solve_text(BASIC, SolverConfig("pure", "mask"))
        res = compare_solutions(a, b)
        assert res.status == "equal"
        assert not res.diffs and not res.witnesses

    def test_superset_with_slack_flags(self):
        text = small_corpora()[2]
        a = solve_text(text, SolverConfig("ranged", "intrinsic", chunk_bits=64))
        b = solve_text(text, SolverConfig("naive", "mask"))
        res = compare_solutions(a, b)
        assert res.status in ("equal", "a_superset")
        assert not res.witnesses

    def test_incomparable(self):
        a = solve_text(BASIC, SolverConfig("naive", "mask"))
        b = solve_text(BASIC, SolverConfig("naive", "none"))
        assert compare_solutions(a, b).status == "incomparable"

    def test_universe_mismatch(self):
        a = solve_text(BASIC, SolverConfig("naive", "mask"))
        b = solve_text(BASIC + "var z : A\n", SolverConfig("naive", "mask"))
        with pytest.raises(UniverseMismatchError):
            compare_solutions(a, b)
