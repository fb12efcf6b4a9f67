import pytest

from cutvibro.config import PRESET_NAMES, ScenarioConfig, load_config, parse_ini, preset


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_presets_valid_and_round_trip(name):
    cfg = preset(name)
    again = parse_ini(cfg.to_ini())
    assert again == cfg
    assert again.to_ini() == cfg.to_ini()
    assert again.digest() == cfg.digest()


def test_coarse_preset_grid():
    cfg = preset("lowpass-coarse")
    assert cfg.df == pytest.approx(250.0)
    pass_band, stop_band = cfg.band_objects()
    assert pass_band.bins[0] == 4 and pass_band.bins[-1] == 10
    assert stop_band.bins[0] == 11 and stop_band.bins[-1] == 16
    assert cfg.optimizer.iterations == 100


def test_paper_preset_iteration_caps():
    assert preset("lowpass-paper").optimizer.iterations == 400
    assert preset("bandpass-paper").optimizer.iterations == 800
    assert preset("lowpass-validation").bands.b == 1e-4


def test_presets_are_independent():
    a = preset("lowpass-coarse")
    a.optimizer.iterations = 1
    assert preset("lowpass-coarse").optimizer.iterations == 100


def test_base_override(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[scenario]\nbase = highpass-coarse\nname = mine\n[optimizer]\nmove = 0.1\n")
    cfg = load_config(path)
    assert cfg.name == "mine"
    assert cfg.optimizer.move == 0.1
    assert cfg.bands.pass_band == preset("highpass-coarse").bands.pass_band


@pytest.mark.parametrize(
    "text, match",
    [
        ("[mesh]\nh = 0.01\n", "missing \\[bands\\]"),
        ("[scenario]\nbase = lowpass-coarse\n[mesh]\nhh = 1\n", "unknown key"),
        ("[scenario]\nbase = lowpass-coarse\n[meshes]\nh = 1\n", "unknown section"),
        ("[scenario]\nbase = lowpass-coarse\n[time]\nsteps = many\n", "cannot parse"),
        ("[scenario]\nbase = lowpass-coarse\n[time]\ndt = -1\n", "dt must be positive"),
        ("[scenario]\nbase = lowpass-coarse\n[signal]\nkind = pink\n", "signal.kind"),
        ("[scenario]\nbase = lowpass-coarse\n[bands]\npass = [1000, 2600]\n", "bin"),
        ("[scenario]\nbase = lowpass-coarse\n[bands]\nstop = [2500, 4000]\n", "overlap"),
        ("[scenario]\nbase = lowpass-coarse\n[bands]\nstop = (2500, 40000]\n", "Nyquist"),
        ("[scenario]\nbase = nowhere\n", "unknown preset"),
        ("[scenario]\nbase = lowpass-coarse\nextra = 1\n", "unknown keys"),
    ],
)
def test_config_errors(text, match):
    with pytest.raises(ValueError, match=match):
        parse_ini(text)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "nope.ini")


def test_bool_parsing():
    cfg = parse_ini("[scenario]\nbase = lowpass-coarse\n[optimizer]\nnormalize = yes\n")
    assert cfg.optimizer.normalize is True


def test_default_scenario_needs_bands():
    with pytest.raises(ValueError):
        ScenarioConfig().validate()
