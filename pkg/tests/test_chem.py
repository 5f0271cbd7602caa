import pytest
from hypothesis import given, strategies as st

from platebench import chem
from platebench.chem import (
    ChemicalProperties,
    ImpossibleDilution,
    LLMPropertyProvider,
    MissingWeightPercent,
    Overfill,
    SolutionSpec,
    StaticTableProvider,
    TargetExceedsStock,
    UnknownChemical,
    dilution_volume,
    find_chemical_amounts_in_a_solution,
    find_the_concentration_of_n_percent_solution,
    find_the_volume_corresponding_to_moles,
    get_chem_volume,
    modifier_stock_split,
    parse_percent_name,
    solvent_remainder,
)


class TestProvider:
    def test_lookup_case_insensitive(self, provider):
        assert provider.lookup("Naphthalene").density == 1.14
        assert provider.lookup("  methanol ").molecular_weight == 32.04

    def test_unknown(self, provider):
        with pytest.raises(UnknownChemical):
            provider.lookup("unobtainium")

    def test_percent_prefix_parsing(self):
        assert parse_percent_name("28% ammonia") == (28.0, "ammonia")
        assert parse_percent_name("0.5 % ethylene carbonate") == (0.5, "ethylene carbonate")
        assert parse_percent_name("ammonia") is None

    def test_derived_percent_solution_with_solvent(self, provider):
        props = provider.lookup("0.5% ethylene carbonate in propylene carbonate")
        assert props.weight_percent == 0.5
        assert props.molecular_weight == 88.06  # solute
        assert props.density == 1.205  # bulk solvent
        assert props.state == "liquid"

    def test_invariants(self):
        with pytest.raises(ValueError):
            ChemicalProperties("x", -1, 1, "solid")
        with pytest.raises(chem.NonPositiveDensity):
            ChemicalProperties("x", 1, 0, "solid")

    def test_llm_backed_provider_parses_and_caches(self):
        calls = []

        def ask(prompt):
            calls.append(prompt)
            return "molecular_weight=46.07; density=0.789; state=liquid"

        llm = LLMPropertyProvider(ask)
        props = llm.lookup("ethanol")
        assert props.molecular_weight == 46.07
        llm.lookup("Ethanol")
        assert len(calls) == 1  # cached

        bad = LLMPropertyProvider(lambda prompt: "no idea")
        with pytest.raises(UnknownChemical):
            bad.lookup("mystery")


class TestChemVolume:
    def test_naphthalene_worked_value(self, provider):
        # 5 mg at 1.14 g/mL occupies 4.386 uL
        assert get_chem_volume(provider, "naphthalene", 5) == pytest.approx(4.386, abs=0.001)

    def test_zero(self, provider):
        assert get_chem_volume(provider, "methanol", 0) == 0

    def test_benzaldehyde(self, provider):
        assert get_chem_volume(provider, "benzaldehyde", 53.06) == pytest.approx(50.77, abs=0.05)

    @given(
        a=st.floats(min_value=0, max_value=1e4),
        b=st.floats(min_value=0, max_value=1e4),
    )
    def test_linearity(self, a, b):
        table = StaticTableProvider()
        total = get_chem_volume(table, "methanol", a + b)
        parts = get_chem_volume(table, "methanol", a) + get_chem_volume(table, "methanol", b)
        assert total == pytest.approx(parts, rel=1e-12, abs=1e-9)

    def test_mass_volume_consistency(self, provider):
        density = provider.lookup("glycerol").density
        for mass in (1.0, 37.5, 6000.0):
            assert get_chem_volume(provider, "glycerol", mass) * density == pytest.approx(mass, rel=1e-12)


class TestMolesVolume:
    def test_benzaldehyde_half_mmol(self, provider):
        value = find_the_volume_corresponding_to_moles(provider, "benzaldehyde", 5e-4)
        assert value == pytest.approx(50.8, abs=0.1)

    def test_zero(self, provider):
        assert find_the_volume_corresponding_to_moles(provider, "water", 0) == 0

    def test_methanol_hand_computed(self, provider):
        # 2.667 mmol x 32.04 g/mol / 0.792 g/mL, worked by hand
        value = find_the_volume_corresponding_to_moles(provider, "methanol", 2.667e-3)
        assert value == pytest.approx(107.9, abs=0.2)


class TestNPercent:
    def test_28_percent_ammonia(self, provider):
        assert find_the_concentration_of_n_percent_solution(provider, "28% ammonia") == pytest.approx(
            14.73, abs=0.01
        )

    def test_full_strength_degenerate(self):
        table = StaticTableProvider(
            {"100% x": ChemicalProperties("100% x", 50.0, 2.0, "liquid", weight_percent=100.0)}
        )
        assert find_the_concentration_of_n_percent_solution(table, "100% x") == pytest.approx(
            1000 * 2.0 / 50.0
        )

    def test_percent_parsed_from_name(self, provider):
        value = find_the_concentration_of_n_percent_solution(
            provider, "0.5% ethylene carbonate in propylene carbonate"
        )
        # hand check: 0.5% of 1205 g/L is 6.025 g/L; over 88.06 g/mol
        assert value == pytest.approx(6.025 / 88.06, rel=1e-9)

    def test_missing_percent_is_loud(self, provider):
        # the observed failure mode: "ammonia" passed instead of "28% ammonia"
        with pytest.raises(MissingWeightPercent):
            find_the_concentration_of_n_percent_solution(provider, "ammonia")


class TestSolutionAmounts:
    def test_ratio_half_acetic_methanol(self, provider):
        spec = SolutionSpec(total_molarity=4, molar_ratio=0.5, volume_l=0.002)
        acid, alcohol = find_chemical_amounts_in_a_solution(provider, spec, "acetic acid", "methanol")
        assert acid.volume_ul == pytest.approx(305.31, abs=0.5)
        assert alcohol.volume_ul == pytest.approx(108.02, abs=0.5)
        assert acid.canonical_unit == "uL"

    def test_ratio_two(self, provider):
        spec = SolutionSpec(4, 2, 0.002)
        acid, alcohol = find_chemical_amounts_in_a_solution(provider, spec, "acetic acid", "methanol")
        assert acid.volume_ul == pytest.approx(152.65, abs=0.5)
        assert alcohol.volume_ul == pytest.approx(216.03, abs=0.5)

    def test_molarity_split_is_exact(self):
        spec = SolutionSpec(4, 1, 0.002)
        m1, m2 = spec.component_molarities()
        assert m1 == pytest.approx(2.0) and m2 == pytest.approx(2.0)

    @given(
        total=st.floats(min_value=0.1, max_value=20),
        ratio=st.floats(min_value=0.01, max_value=50),
    )
    def test_molarity_conservation(self, total, ratio):
        m1, m2 = SolutionSpec(total, ratio, 1.0).component_molarities()
        assert m1 + m2 == pytest.approx(total, rel=1e-12)
        assert m2 / m1 == pytest.approx(ratio, rel=1e-12)

    def test_solid_reports_mg(self, provider):
        spec = SolutionSpec(4, 2, 0.002)
        acid, _ = find_chemical_amounts_in_a_solution(provider, spec, "benzoic acid", "methanol")
        assert acid.canonical_unit == "mg"
        assert acid.canonical_value == pytest.approx(325.65, abs=0.5)


class TestDilution:
    def test_3M_from_stock(self):
        assert dilution_volume(14.73, 3, 0.001) == pytest.approx(203.7, abs=1)

    def test_12M_from_stock(self):
        assert dilution_volume(14.73, 12, 0.001) == pytest.approx(814.7, abs=1)

    def test_identity(self):
        assert dilution_volume(2.5, 2.5, 0.004) == pytest.approx(4000)

    def test_impossible(self):
        with pytest.raises(ImpossibleDilution):
            dilution_volume(3, 14.73, 0.001)

    @given(
        c1=st.floats(min_value=0.01, max_value=100),
        frac=st.floats(min_value=0, max_value=1),
        v2=st.floats(min_value=0, max_value=0.1),
    )
    def test_moles_conserved(self, c1, frac, v2):
        c2 = c1 * frac
        v1_l = dilution_volume(c1, c2, v2) / 1e6
        assert c1 * v1_l == pytest.approx(c2 * v2, rel=1e-12, abs=1e-15)


class TestRemainderAndSplit:
    def test_exp1_remainder(self):
        assert solvent_remainder(10000, [4.386]) == pytest.approx(9995.61, abs=0.01)

    def test_empty_components(self):
        assert solvent_remainder(321.5, []) == 321.5

    def test_stock_plus_remainder(self):
        assert solvent_remainder(500, [100]) == 400

    def test_overfill(self):
        with pytest.raises(Overfill):
            solvent_remainder(100, [60, 50])

    def test_modifier_split_examples(self):
        assert modifier_stock_split(500, 0.4, 1.0) == (200, 300)
        assert modifier_stock_split(500, 0, 1.0) == (0, 500)
        assert modifier_stock_split(500, 1.0, 1.0) == (500, 0)

    def test_target_exceeds_stock(self):
        with pytest.raises(TargetExceedsStock):
            modifier_stock_split(500, 2.0, 1.0)

    @given(
        total=st.floats(min_value=0, max_value=1e5),
        target=st.floats(min_value=0, max_value=1),
    )
    def test_split_conserves_volume(self, total, target):
        stock, neat = modifier_stock_split(total, target, 1.0)
        assert stock + neat == pytest.approx(total, rel=1e-12, abs=1e-9)
        assert stock >= 0 and neat >= -1e-9


class TestTableCoversExperiments(object):
    def test_every_fixture_chemical_resolves(self, provider, ground_truths):
        from platebench.steps import AddStep

        for proc in ground_truths.values():
            for step in proc.steps:
                if isinstance(step, AddStep):
                    props = provider.lookup(step.chemical)
                    expected_unit = "mg" if props.state == "solid" else "uL"
                    assert step.unit == expected_unit, step.chemical

    def test_si_volume_reproduction(self, provider):
        # R2 volumes at 0.75 mmol reproduce the reference table at 2 decimals
        expected = {
            "1-bromobutane": 81.06,
            "1-iodobutane": 85.35,
            "1-chlorobutane": 78.01,
            "3-bromopropene": 64.46,
            "benzyl bromide": 86.86,
            "3-bromobut-1-ene": 76.70,
            "3-bromobut-2-ene": 75.57,
            "2-bromoethyl cyanide": 71.39,
        }
        for name, volume in expected.items():
            value = find_the_volume_corresponding_to_moles(provider, name, 7.5e-4)
            assert round(value, 2) == pytest.approx(volume, abs=0.005), name
