"""
Tests for hyperparameter models and run configuration merging.
"""

import pytest
from pydantic import ValidationError

from config.config import DacHyper, DpiConfig, MazeConfig, build_run_config, read_manifest
from utils.errors import ConfigurationError


class TestDacHyper:
    """Defaults, derived values and validation."""

    def test_derived_from_action_dim(self):
        """d = |A| and c = −2|A| unless given."""
        hyper = DacHyper(action_dim=3)
        assert hyper.clip_bound == 3.0
        assert hyper.control_coefficient == -6.0

    def test_for_env_rederives(self):
        """for_env recomputes derived fields but keeps explicit ones."""
        hyper = DacHyper(alpha=0.3).for_env(4)
        assert hyper.alpha == 0.3
        assert hyper.clip_bound == 4.0
        assert hyper.control_coefficient == -8.0
        explicit = DacHyper(clip_bound=0.5).for_env(4)
        assert explicit.clip_bound == 0.5
        assert explicit.control_coefficient == -8.0

    def test_for_env_updates(self):
        """Extra keyword updates are applied and validated."""
        assert DacHyper().for_env(2, batch_size=8).batch_size == 8
        with pytest.raises(ValidationError):
            DacHyper().for_env(2, alpha=1.5)

    @pytest.mark.parametrize(
        "field, value",
        [("alpha", -0.1), ("beta", 0.0), ("gamma", 1.0), ("tau", 1.5), ("ratio_clip", 0.5), ("batch_size", 0)],
    )
    def test_rejects_out_of_range(self, field, value):
        """Out-of-range hyperparameters fail validation."""
        with pytest.raises(ValidationError):
            DacHyper(**{field: value})

    def test_alpha_range_ordering(self):
        """alpha_min must lie below alpha_max inside (0, 1)."""
        with pytest.raises(ValidationError):
            DacHyper(alpha_min=0.9, alpha_max=0.6)

    def test_window_within_capacity(self):
        """n′ cannot exceed the buffer capacity."""
        with pytest.raises(ValidationError):
            DacHyper(n_prime=20, buffer_capacity=10)

    def test_adaptive_flag(self):
        """adaptive mirrors alpha_mode."""
        assert not DacHyper().adaptive
        assert DacHyper(alpha_mode="adaptive").adaptive


class TestSectionModels:
    """Tabular and maze sections."""

    def test_dpi_defaults(self):
        """Closed-form improvement with β = 1 by default."""
        cfg = DpiConfig()
        assert cfg.improvement_mode == "closed_form"
        assert cfg.beta == 1.0

    def test_maze_start_must_be_lower_left(self):
        """The start point has to lie in the lower-left room."""
        with pytest.raises(ValidationError):
            MazeConfig(start=[70.0, 10.0])


class TestBuildRunConfig:
    """Manifest and flag merging."""

    def test_flags_override_file(self):
        """A flag wins over the manifest value for the same key."""
        run = build_run_config("train", {"total_steps": "100", "seeds": "1,2"}, {"total_steps": 7, "env_name": None})
        assert run.total_steps == 7
        assert run.seeds == [1, 2]
        assert run.env_name == "maze"

    def test_section_routing(self):
        """Section fields are routed by name, prefixed names disambiguate."""
        run = build_run_config(
            "tabular-dpi", {"batch_size": "32", "dpi_alpha": "0.25", "alpha": "0.75", "door_width": "6"}, {}
        )
        assert run.hyper.batch_size == 32
        assert run.hyper.alpha == 0.75
        assert run.dpi.alpha == 0.25
        assert run.maze.door_width == 6.0

    def test_list_values(self):
        """Comma-separated lists are split."""
        run = build_run_config("train", {"hidden_sizes": "32, 32", "variants": "0.5,1"}, {})
        assert run.hyper.hidden_sizes == [32, 32]
        assert run.variants == [0.5, 1.0]

    def test_unknown_key(self):
        """Unknown keys are a configuration error."""
        with pytest.raises(ConfigurationError, match="no_such_key"):
            build_run_config("train", {"no_such_key": "1"}, {})

    def test_validation_failure(self):
        """Invalid values surface as ConfigurationError."""
        with pytest.raises(ConfigurationError):
            build_run_config("train", {}, {"alpha": 2.0})
        with pytest.raises(ConfigurationError):
            build_run_config("train", {"seeds": ""}, {})

    def test_unknown_command(self):
        """Only the supported subcommands are accepted."""
        with pytest.raises(ConfigurationError):
            build_run_config("deploy", {}, {})


class TestManifest:
    """key=value manifest files."""

    def test_read_manifest(self, tmp_path):
        """Comments are skipped and values stay strings."""
        path = tmp_path / "run.env"
        path.write_text("# experiment\nalpha=0.4\nseeds=0,1,2\n")
        assert read_manifest(path) == {"alpha": "0.4", "seeds": "0,1,2"}
        run = build_run_config("train", read_manifest(path), {})
        assert run.hyper.alpha == 0.4 and run.seeds == [0, 1, 2]

    def test_missing_manifest(self, tmp_path):
        """A missing manifest is a configuration error."""
        with pytest.raises(ConfigurationError):
            read_manifest(tmp_path / "absent.env")
