import json
import random

import pytest

from websift.psl import PublicSuffixList
from websift.filters import RuleSet, parse_filter_list
from websift.pipeline import label_records
from websift.sift import sift
from websift.synth import (
    DomainSpec,
    HostSpec,
    MethodSpec,
    Scenario,
    ScenarioError,
    ScriptSpec,
    expected_to_json,
    canonical_scenario,
    generate,
    generate_records,
    random_scenario,
    scenario_from_json,
    write_fixture,
)

from .reference import reference_sift


class TestDeterminism:
    def test_same_seed_byte_identical(self):
        a = generate_records(canonical_scenario(), seed=7)
        b = generate_records(canonical_scenario(), seed=7)
        assert [r.to_json_line() for r in a] == [r.to_json_line() for r in b]

    def test_different_seed_same_plant(self):
        a = generate_records(canonical_scenario(), seed=1)
        b = generate_records(canonical_scenario(), seed=2)
        assert len(a) == len(b)

        def tracking_urls(records):
            return sorted(r.url.rsplit("/", 2)[0] for r in records if "/trk/" in r.url)

        assert tracking_urls(a) == tracking_urls(b)
        assert [r.to_json_line() for r in a] != [r.to_json_line() for r in b]

    def test_fixture_files_round_trip(self, tmp_path):
        expected_obj = write_fixture(canonical_scenario(), seed=3, out_dir=str(tmp_path))
        on_disk = json.loads((tmp_path / "expected.json").read_text())
        assert on_disk == expected_obj
        assert (tmp_path / "trace.jsonl").exists()
        assert (tmp_path / "filters.txt").exists()
        assert (tmp_path / "psl.dat").exists()


class TestValidation:
    def test_mixed_method_under_pure_script_rejected(self):
        scenario = Scenario(domains=[
            DomainSpec("pure.test", [HostSpec("pure.test", [
                ScriptSpec("https://pure.test/s.js", [
                    MethodSpec("a", 500, 0),
                    MethodSpec("b", 1, 1),  # mixed, but script ratio >= tau
                ]),
            ])]),
        ])
        with pytest.raises(ScenarioError):
            generate(scenario, seed=0)

    def test_duplicate_domain_rejected(self):
        d = DomainSpec("x.test", [HostSpec("x.test", [
            ScriptSpec("https://x.test/s.js", [MethodSpec("m", 1, 1)]),
        ])])
        with pytest.raises(ScenarioError):
            generate(Scenario(domains=[d, d]), seed=0)

    def test_bad_domain_shape_rejected(self):
        scenario = Scenario(domains=[
            DomainSpec("not-a-dotted-name", [HostSpec("not-a-dotted-name", [
                ScriptSpec("https://not-a-dotted-name/s.js", [MethodSpec("m", 1, 1)]),
            ])]),
        ])
        with pytest.raises(ScenarioError):
            generate(scenario, seed=0)


class TestExpectedAgainstPipeline:
    def test_canonical_expected_matches_sifter(self):
        records, filters_text, psl_text, expected = generate(canonical_scenario(), seed=5)
        psl = PublicSuffixList.from_text(psl_text)
        rules, _ = parse_filter_list(filters_text.splitlines(), "s")
        labeled = label_records(records, RuleSet(rules), psl).labeled
        res = sift(labeled, 2.0, psl)
        for lvl, exp in zip(res.levels, expected.levels):
            got = {
                e.key.as_text(): (e.tracking_count, e.functional_count, e.verdict)
                for e in lvl.entities
            }
            want = {k: (v.tracking, v.functional, v.verdict) for k, v in exp.entities.items()}
            assert got == want
        assert len(res.residual_ids) == expected.residual_count
        assert res.total_requests == expected.total_requests

    def test_random_scenarios_match_brute_force(self):
        rng = random.Random(44)
        for _ in range(10):
            scenario = random_scenario(rng)
            records, filters_text, psl_text, expected = generate(
                scenario, seed=rng.randrange(2**30)
            )
            psl = PublicSuffixList.from_text(psl_text)
            rules, _ = parse_filter_list(filters_text.splitlines(), "s")
            labeled = label_records(records, RuleSet(rules), psl).labeled
            ref = reference_sift(labeled, scenario.threshold, psl)
            names = ("domain", "hostname", "script", "method")
            for name, exp in zip(names, expected.levels):
                want = {
                    k: (v.tracking, v.functional, v.verdict.value)
                    for k, v in exp.entities.items()
                }
                got = {
                    (k if name != "method" else "::".join(k)): v
                    for k, v in ref[name].items()
                }
                assert got == want, name
            assert len(ref["residual"]) == expected.residual_count

    def test_request_budget_is_a_soft_cap(self):
        # Rebalancing may append counterweight subtrees past the budget,
        # but never more than a few times over it.
        rng = random.Random(8)
        for _ in range(20):
            scenario = random_scenario(rng, max_requests=120)
            records = generate_records(scenario, seed=0)
            assert 0 < len(records) <= 4 * 120


class TestScenarioJson:
    def test_round_trip_from_json(self):
        obj = {
            "domains": [{
                "name": "a.test",
                "hosts": [{
                    "name": "sub.a.test",
                    "scripts": [{
                        "url": "https://sub.a.test/s.js",
                        "methods": [{
                            "name": "m",
                            "tracking": 2,
                            "functional": 2,
                            "tracking_ancestors": [["t", "https://a.test/t.js"]],
                        }],
                    }],
                }],
            }],
            "threshold": 1.5,
        }
        scenario = scenario_from_json(obj)
        assert scenario.threshold == 1.5
        m = scenario.domains[0].hosts[0].scripts[0].methods[0]
        assert m.tracking_ancestors == [("t", "https://a.test/t.js")]

    def test_expected_json_shape(self):
        _, _, _, expected = generate(canonical_scenario(), seed=0)
        obj = expected_to_json(expected)
        assert [lvl["level"] for lvl in obj["levels"]] == [
            "domain", "hostname", "script", "method"
        ]
        assert obj["total_requests"] == 30
        assert obj["residual_count"] == 2
