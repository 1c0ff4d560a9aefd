"""Model files: loading, validation, generators, round-trip."""

from fractions import Fraction

import pytest

import polygas as pg
from polygas.errors import ModelError, ResourceLimit

MINIMAL = """
schema = 1

[universe]
kind = "abstract"

[[polymer]]
id = "g"

[activity]
uniform = 0.3
"""


def _load_text(tmp_path, text, name="m.toml"):
    path = tmp_path / name
    path.write_text(text)
    return pg.load_model(str(path))


class TestLoadModel:
    def test_minimal_single_polymer(self, tmp_path):
        spec = _load_text(tmp_path, MINIMAL)
        assert spec.kind == "abstract"
        assert spec.polymer_ids == ("g",)
        assert spec.rho == {"g": Fraction(3, 10)}  # exact mode by default
        built = pg.build(spec)
        assert built.universe.incompatible("g", "g")

    def test_mode_defaults_to_float_on_large_models(self, tmp_path):
        lines = ["schema = 1", "", "[universe]", 'kind = "abstract"', ""]
        for i in range(13):
            lines += ["[[polymer]]", f'id = "g{i}"', ""]
        spec = _load_text(tmp_path, "\n".join(lines))
        assert spec.run.mode == "float"

    def test_missing_schema(self, tmp_path):
        with pytest.raises(ModelError, match="schema"):
            _load_text(tmp_path, MINIMAL.replace("schema = 1", ""))

    def test_parse_error_carries_position(self, tmp_path):
        with pytest.raises(ModelError, match="line"):
            _load_text(tmp_path, "schema = = 1")

    def test_support_outside_ground_set_names_polymer(self, tmp_path):
        text = """
schema = 1
[universe]
kind = "subset"
sites = ["1"]
[[polymer]]
id = "bad"
support = ["1", "2"]
"""
        with pytest.raises(ModelError, match="bad"):
            _load_text(tmp_path, text)

    def test_unknown_pair_reference(self, tmp_path):
        text = MINIMAL + '\n[incompatibility]\npairs = [["g", "h"]]\n'
        with pytest.raises(ModelError, match="h"):
            _load_text(tmp_path, text)

    def test_unknown_activity_reference(self, tmp_path):
        text = MINIMAL.replace("uniform = 0.3", 'rho = {h = 0.3}')
        with pytest.raises(ModelError, match="h"):
            _load_text(tmp_path, text)

    def test_rational_strings(self, tmp_path):
        text = MINIMAL.replace("uniform = 0.3", 'uniform = "1/3"')
        spec = _load_text(tmp_path, text)
        assert spec.rho["g"] == Fraction(1, 3)

    def test_float_mode_numbers(self, tmp_path):
        text = MINIMAL + '\n[run]\nmode = "float"\n'
        spec = _load_text(tmp_path, text)
        assert spec.rho["g"] == 0.3 and isinstance(spec.rho["g"], float)

    def test_json_alternate_input(self, tmp_path):
        import json

        doc = {
            "schema": 1,
            "universe": {"kind": "abstract"},
            "polymer": [{"id": "g"}],
            "activity": {"uniform": "1/4"},
        }
        path = tmp_path / "m.json"
        path.write_text(json.dumps(doc))
        spec = pg.load_model(str(path))
        assert spec.rho["g"] == Fraction(1, 4)

    def test_generator_section(self, tmp_path):
        text = """
schema = 1
[generator]
family = "cycle"
n = 9
[activity]
uniform = "1/5"
"""
        spec = _load_text(tmp_path, text)
        assert len(spec.polymer_ids) == 9
        assert ("v8", "v0") in spec.pairs
        assert spec.rho["v0"] == Fraction(1, 5)

    def test_tracked_validation(self, tmp_path):
        text = MINIMAL + '\n[run]\ntracked = [["nope"]]\n'
        with pytest.raises(ModelError, match="nope"):
            _load_text(tmp_path, text)

    def test_weights_unknown_element(self, tmp_path):
        text = MINIMAL + "\n[weights]\nmu = {h = 1}\n"
        with pytest.raises(ModelError, match="h"):
            _load_text(tmp_path, text)


class TestGenerators:
    def test_path3_fixture(self):
        spec = pg.generate_model("path", n=3)
        built = pg.build(spec)
        assert pg.partition_function(built.universe, None, 1) == 5

    def test_cycle9_structure(self):
        spec = pg.generate_model("cycle", n=9)
        built = pg.build(spec)
        for g in built.universe.polymers:
            assert len(pg.neighborhood(built.universe, [g])) == 3

    def test_grid_adjacency(self):
        spec = pg.generate_model("grid", w=2, h=2)
        built = pg.build(spec)
        assert len(built.universe) == 4
        # 4 edges on the 2x2 grid
        edges = sum(
            built.universe.incompatible(a, b)
            for i, a in enumerate(built.universe.polymers)
            for b in built.universe.polymers[i + 1 :]
        )
        assert edges == 4

    def test_interval_generator_matches_two_site_fixture(self):
        spec = pg.generate_model("subsets-on-interval", n=2, k=2)
        built = pg.build(spec)
        assert built.universe.polymer_ids == ("1", "2", "1-2")
        assert built.universe.support_of("1-2") == {"1", "2"}

    def test_isolated_and_triangle(self):
        iso = pg.build(pg.generate_model("isolated"))
        assert len(iso.universe) == 1
        tri = pg.build(pg.generate_model("triangle"))
        assert pg.partition_function(tri.universe, None, 1) == 4

    def test_caps(self):
        with pytest.raises(ResourceLimit):
            pg.generate_model("path", n=25)
        with pytest.raises(ResourceLimit):
            pg.generate_model("subsets-on-interval", n=17, k=2)

    def test_unknown_family(self):
        with pytest.raises(ModelError):
            pg.generate_model("torus", n=3)


class TestRoundTrip:
    @pytest.mark.parametrize(
        "text",
        [
            MINIMAL,
            MINIMAL + "\n[weights]\nmu = {g = 1}\n",
            """
schema = 1
[universe]
kind = "subset"
sites = ["1", "2", "3"]
[[polymer]]
id = "a"
support = ["1"]
[[polymer]]
id = "b"
support = ["2", "3"]
[incompatibility]
rule = "intersection"
[activity]
rho = {a = "1/8", b = "1/16"}
z = {a = "-1/8"}
[weights]
xi = "3/2"
[run]
commands = ["criteria", "ks-iterate"]
ks_steps = 4
tracked = [["1"], ["1", "2"]]
mode = "exact"
seed = 11
max_order = 5
""",
        ],
    )
    def test_save_load_identity(self, tmp_path, text):
        spec = _load_text(tmp_path, text)
        out = tmp_path / "saved.toml"
        pg.save_model(spec, str(out))
        assert pg.load_model(str(out)) == spec

    def test_float_round_trip(self, tmp_path):
        text = MINIMAL + '\n[run]\nmode = "float"\n'
        spec = _load_text(tmp_path, text)
        out = tmp_path / "saved.toml"
        pg.save_model(spec, str(out))
        again = pg.load_model(str(out))
        assert again == spec
        assert isinstance(again.rho["g"], float)
