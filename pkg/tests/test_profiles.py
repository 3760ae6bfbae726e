import pytest

from medeval.corpus_io import MedField, SourceFormat
from medeval.errors import ConfigError
from medeval.matcher import MatchMode
from medeval.metrics import Granularity
from medeval.profiles import PRESETS, apply_overrides, load_profile

BASE = {MedField.NAME, MedField.DOSAGE, MedField.FREQUENCY, MedField.MODE, MedField.DURATION}


def test_presets():
    i2b2, n2c2, op = PRESETS["i2b2"], PRESETS["n2c2"], PRESETS["offset-pair"]
    assert (i2b2.gold_format, i2b2.mode, i2b2.granularity) == \
        (SourceFormat.I2B2, MatchMode.EXACT, Granularity.MICRO)
    assert i2b2.modes == (MatchMode.EXACT, MatchMode.LENIENT_TOKEN)
    assert set(i2b2.in_scope_fields) == BASE
    assert (n2c2.gold_format, n2c2.mode) == (SourceFormat.BRAT, MatchMode.LENIENT_SPAN)
    assert set(n2c2.in_scope_fields) == BASE | {MedField.STRENGTH, MedField.FORM}
    assert (op.gold_format, op.mode) == (SourceFormat.OFFSET_PAIR, MatchMode.EXACT)
    for p in PRESETS.values():
        assert MedField.REASON not in p.in_scope_fields
        assert p.max_chars == 20000 and p.token_base == 0


def test_overrides():
    p = apply_overrides(PRESETS["i2b2"], {"token_base": "1", "max_chars": 500,
                                          "granularity": "macro", "fields": "NAME, dosage"})
    assert (p.token_base, p.max_chars, p.granularity) == (1, 500, Granularity.MACRO)
    assert p.in_scope_fields == {MedField.NAME, MedField.DOSAGE}
    assert PRESETS["i2b2"].token_base == 0  # presets are not mutated


@pytest.mark.parametrize("overrides", [{"token_base": "2"}, {"max_chars": "0"},
                                       {"colour": "red"}, {"mode": "FUZZY"},
                                       {"score_threshold": "1.5"}])
def test_bad_overrides(overrides):
    with pytest.raises(ConfigError):
        apply_overrides(PRESETS["n2c2"], overrides)


def test_profile_file(tmp_path):
    (tmp_path / "my_map.tsv").write_text("MEDICATION\tDOSAGE\tDOSAGE\n")
    path = tmp_path / "site.ini"
    path.write_text("[profile]\nbase = i2b2\ntoken_base = 1\nfield_map = my_map.tsv\n"
                    "split_punct = yes\n")
    p = load_profile(str(path), {"max_chars": 1000})
    assert p.name == "site"
    assert (p.gold_format, p.token_base, p.split_punct, p.max_chars) == \
        (SourceFormat.I2B2, 1, True, 1000)
    assert p.field_map == str(tmp_path / "my_map.tsv")
    assert p.load_field_map().lookup("MEDICATION", "DOSAGE") is MedField.DOSAGE


def test_packaged_field_map_by_name():
    p = apply_overrides(PRESETS["i2b2"], {"field_map": "i2b2_strength_as_dosage"})
    assert p.load_field_map().lookup("MEDICATION", "STRENGTH") is MedField.DOSAGE


@pytest.mark.parametrize("content", ["[other]\nbase = i2b2\n", "[profile]\ntoken_base = 1\n",
                                     "[profile]\nbase = nope\n", "not an ini file ["])
def test_bad_profile_files(tmp_path, content):
    path = tmp_path / "bad.ini"
    path.write_text(content)
    with pytest.raises(ConfigError):
        load_profile(str(path))


def test_unknown_profile_name():
    with pytest.raises(ConfigError, match="neither a preset"):
        load_profile("mimic")
