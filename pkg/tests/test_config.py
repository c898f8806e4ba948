"""Run-description parsing, validation, and round-trip serialization."""

import pytest

from nlslab.config import (
    Config,
    ConfigError,
    DatumSpec,
    load_config,
    parse_config,
    serialize_config,
    validate_config,
)
from nlslab.regions import Ball, Complement, Dilation, HalfSpace

FULL = """
mode = "supported"

[grid]
d = 1
L = 128.0
N = 4096

[params]
lam = -1.0
sigma = 4.0

[solve]
dt = 1e-3
T = 5.0
snapshot_stride = 25

[initial_u]
preset = "gaussian"
amp = 0.8
width = 1.0

[source]
kind = "ball"
center = [0.0]
radius = 4.0

[target]
kind = "complement_dilation"
radius = 8.0

[sweep]
separations = [5.0, 10.0, 20.0, 40.0]
eps_target = 1e-2

[thresholds]
bound_m = 5.0
tail_eps = 1e-3
"""


class TestParse:
    def test_full_document(self):
        cfg = parse_config(FULL)
        assert cfg.grid.N == 4096
        assert cfg.params.lam == -1.0
        assert cfg.solve.snapshot_stride == 25
        assert cfg.mode == "supported"
        assert cfg.sweep.separations == (5.0, 10.0, 20.0, 40.0)
        assert cfg.initial_v is None and cfg.coupling is None

    def test_defaults_from_empty(self):
        cfg = parse_config("")
        assert cfg == Config()
        assert cfg.grid.d == 1
        assert cfg.mode == "general"

    def test_integer_promotes_to_float(self):
        cfg = parse_config("[params]\nlam = -1\n")
        assert cfg.params.lam == -1.0
        assert isinstance(cfg.params.lam, float)

    def test_rejects_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown section"):
            parse_config("[wavelets]\nfoo = 1\n")

    def test_rejects_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config("[grid]\ncells = 64\n")

    def test_rejects_bad_types(self):
        with pytest.raises(ConfigError, match="integer"):
            parse_config("[grid]\nN = 12.5\n")
        with pytest.raises(ConfigError, match="number"):
            parse_config('[params]\nlam = "strong"\n')
        with pytest.raises(ConfigError, match="list"):
            parse_config("[sweep]\nseparations = 5.0\n")
        with pytest.raises(ConfigError, match="string"):
            parse_config("[initial_u]\npreset = 7\n")

    def test_rejects_bad_mode(self):
        with pytest.raises(ConfigError, match="mode"):
            parse_config('mode = "loose"\n')

    def test_rejects_broken_toml(self):
        with pytest.raises(ConfigError, match="TOML"):
            parse_config("[grid\nN = 3")

    def test_loads_from_file(self, tmp_path):
        p = tmp_path / "run.toml"
        p.write_text(FULL)
        assert load_config(p) == parse_config(FULL)


class TestRoundTrip:
    def test_parse_serialize_parse_fixed_point(self):
        first = parse_config(FULL)
        second = parse_config(serialize_config(first))
        assert second == first
        # and serialization itself is stable byte for byte
        assert serialize_config(second) == serialize_config(first)

    def test_default_config_round_trips(self):
        cfg = Config()
        assert parse_config(serialize_config(cfg)) == cfg

    def test_optional_sections_survive(self):
        text = FULL + "\n[coupling]\nk11 = -1.0\nk12 = -0.5\nk22 = -1.0\np = 1.0\n"
        text += '\n[initial_w]\npreset = "gaussian"\namp = 0.001\n'
        cfg = parse_config(text)
        back = parse_config(serialize_config(cfg))
        assert back.coupling == cfg.coupling
        assert back.initial_w == cfg.initial_w

    def test_sum_preset_centers_survive(self):
        text = '[initial_u]\npreset = "sum"\ncenters = [[-8.0], [8.0]]\namp = 0.5\n'
        cfg = parse_config(text)
        assert cfg.initial_u.centers == ((-8.0,), (8.0,))
        assert parse_config(serialize_config(cfg)) == cfg


class TestBuilders:
    def test_region_building(self):
        cfg = parse_config(FULL)
        src = cfg.source.build(1)
        tgt = cfg.target.build(1, src)
        assert src == Ball((0.0,), 4.0)
        assert tgt == Complement(Dilation(src, 8.0))

    def test_halfspace_building(self):
        cfg = parse_config('[target]\nkind = "halfspace"\naxis = 0\nside = "above"\noffset = 12.0\n')
        assert cfg.target.build(1) == HalfSpace(0, "above", 12.0)

    def test_complement_dilation_needs_source(self):
        cfg = parse_config(FULL)
        with pytest.raises(ConfigError, match="source"):
            cfg.target.build(1, None)

    def test_datum_presets(self):
        cfg = parse_config(FULL)
        grid = cfg.grid.build()
        u = cfg.initial_u.build(grid)
        assert abs(u.values).max() == pytest.approx(0.8, rel=1e-12)
        with pytest.raises(ConfigError, match="centers"):
            DatumSpec(preset="sum").build(grid)

    def test_scenario_view(self):
        cfg = parse_config(FULL)
        sc = cfg.scenario()
        assert sc.N == 4096 and sc.T == 5.0 and sc.amp == 0.8


class TestValidate:
    def test_full_config_is_clean(self):
        notes = validate_config(parse_config(FULL))
        assert isinstance(notes, list)

    def test_bad_grid_rejected(self):
        with pytest.raises(ConfigError, match=r"\[grid\]"):
            validate_config(parse_config("[grid]\nN = 100\n"))

    def test_separation_overflow_rejected(self):
        text = FULL.replace("[5.0, 10.0, 20.0, 40.0]", "[5.0, 10.0, 20.0, 400.0]")
        with pytest.raises(ConfigError, match="shell"):
            validate_config(parse_config(text))

    def test_unsorted_separations_rejected(self):
        text = FULL.replace("[5.0, 10.0, 20.0, 40.0]", "[10.0, 5.0]")
        with pytest.raises(ConfigError, match="increasing"):
            validate_config(parse_config(text))

    def test_step_budget_guard(self):
        text = FULL.replace("dt = 1e-3", "dt = 1e-9")
        with pytest.raises(ConfigError, match="budget"):
            validate_config(parse_config(text))

    def test_memory_guard(self):
        text = FULL.replace("snapshot_stride = 25", "snapshot_stride = 1")
        text = text.replace("N = 4096", "N = 65536")
        with pytest.raises(ConfigError, match="GiB"):
            validate_config(parse_config(text))

    def test_coarse_run_noted(self):
        cfg = parse_config("[solve]\ndt = 0.25\nT = 1.0\n")
        notes = validate_config(cfg)
        assert any("coarse" in n for n in notes)

    def test_bad_regularity_rejected(self):
        with pytest.raises(ConfigError, match="regularity"):
            validate_config(parse_config("[sweep]\ns = 2.0\n"))
