# coding: utf-8
#

import os
import textwrap

import pytest

from supercool.config import Section, density_from_dict, load_config, parse_config
from supercool.exceptions import ConfigParseError

MINIMAL = textwrap.dedent("""
    model:
      density: {kind: uniform, a: 0.0, b: 1.0}
      alpha: 3
    epsilons: [0.5]
""")


def test_section_defaults_and_types():
    s = Section("demo", {"count": 10, "ratio": 0.5, "name": "x", "flag": False,
                         "need": Ellipsis}, {"need": int})
    assert s["count"] == 10
    s.set("ratio", 2)  # ints are accepted where floats are
    assert s["ratio"] == 2
    s.set("count", 3.5)  # numeric defaults accept either
    s.set("flag", True)
    with pytest.raises(ConfigParseError):
        s.set("name", 1)
    with pytest.raises(ConfigParseError):
        s.set("count", True)
    with pytest.raises(ConfigParseError):
        s.set("missing", 1)
    with pytest.raises(ConfigParseError):
        s["missing"]
    with pytest.raises(ConfigParseError) as e:
        s["need"]
    assert "demo.need" in str(e.value)
    with pytest.raises(ConfigParseError):
        s.update([1, 2])
    assert s.update(None) is s


def test_minimal_config():
    cfg = parse_config(MINIMAL)
    assert cfg.mode == "solve_regularized"
    assert cfg.alpha == 3.0
    assert cfg.epsilons == (0.5, )
    assert cfg.tgrid.n_steps == 4096
    assert cfg.dx == 2.0**-10
    assert cfg.x_max is None
    assert cfg.picard.evaluator == "pde"
    assert cfg.ensemble.seed == 0 and cfg.ensemble.bridge_refinement is None
    assert cfg.limit.n_particles == 500000
    assert cfg.fk_boundary == "zero"
    assert cfg.output_dir == "output"
    assert len(cfg.digest) == 64


def test_overrides():
    cfg = parse_config(MINIMAL + "seed: 4\noutput_dir: here\n", output="there", seed=9)
    assert cfg.seed == 9 and cfg.ensemble.seed == 9
    assert cfg.output_dir == "there"
    assert parse_config(MINIMAL + "seed: 4\n").seed == 4


@pytest.mark.parametrize("extra", [
    "color: red\n",
    "mode: dance\n",
    "seed: -1\n",
    "seed: true\n",
    "tgrid: {n_steps: 1.5}\n",
    "tgrid: {n_steps: 0}\n",
    "picard: {evaluator: fem}\n",
    "picard: {tol: yes}\n",
    "ensemble: {n_particles: 0}\n",
    "xgrid: {dx: 0}\n",
    "fk: {boundary: wavy}\n",
    "output_dir: 3\n",
])
def test_rejected_values(extra):
    with pytest.raises(ConfigParseError):
        parse_config(MINIMAL + extra)


def test_rejected_documents():
    for text in ("- 1\n- 2\n", "model: [unclosed\n", ""):
        with pytest.raises(ConfigParseError):
            parse_config(text)
    with pytest.raises(ConfigParseError):
        parse_config("model: {alpha: 3}\nepsilons: [0.5]\n")
    with pytest.raises(ConfigParseError):
        parse_config(MINIMAL.replace("epsilons: [0.5]", "epsilons: []"))
    with pytest.raises(ConfigParseError):
        parse_config(MINIMAL.replace("epsilons: [0.5]", "epsilons: [fast]"))
    limit_only = MINIMAL.replace("epsilons: [0.5]", "mode: solve_limit")
    assert parse_config(limit_only).epsilons == ()


def test_density_kinds():
    f = density_from_dict({"kind": "piecewise_constant", "breakpoints": [0, 1, 3],
                           "heights": [0.6, 0.2]})
    assert f.sup_norm == pytest.approx(0.6)
    f = density_from_dict({"kind": "tabulated", "x": [0, 1, 2], "f": [0, 1, 0]})
    assert f.kind == "tabulated"
    for bad in ({"kind": "gauss"}, {"kind": "uniform", "a": 0},
                {"kind": "uniform", "a": 0, "b": 1, "c": 2},
                {"kind": "uniform", "a": 1, "b": 0}):
        with pytest.raises(ConfigParseError):
            density_from_dict(bad)


def test_digest_follows_text():
    assert parse_config(MINIMAL).digest == parse_config(MINIMAL).digest
    assert parse_config(MINIMAL).digest != parse_config(MINIMAL + "\n# note\n").digest


def test_load_config(tmp_path):
    path = tmp_path / "run.yml"
    path.write_text(MINIMAL)
    assert load_config(str(path)).epsilons == (0.5, )
    with pytest.raises(ConfigParseError):
        load_config(str(tmp_path / "absent.yml"))


def test_reference_config_parses():
    cfg = load_config(os.path.join(os.path.dirname(__file__), "..", "reference.yml"))
    assert cfg.mode == "sweep"
    assert cfg.epsilons == (0.8, 0.4, 0.2, 0.1, 0.05)
    assert cfg.dx == 2.0**-10 and cfg.x_max == 8.0
    assert cfg.fk_boundary == "solved"
    assert cfg.seed == 20240611


def test_exponents_without_a_dot():
    cfg = parse_config(MINIMAL.replace("epsilons: [0.5]", "epsilons: [5e-1, 1e-1]") +
                       "picard: {tol: 1e-4}\nlimit: {tol: 5e-4}\nxgrid: {dx: 1e-2}\n")
    assert cfg.epsilons == (0.5, 0.1)
    assert cfg.picard.tol == 1e-4
    assert cfg.limit.tol == 5e-4
    assert cfg.dx == 1e-2
    s = Section("demo", {"ratio": 0.5})
    s.set("ratio", "2")
    assert s["ratio"] == 2
    for bad in ("fast", "nan", "1e-4x"):
        with pytest.raises(ConfigParseError):
            s.set("ratio", bad)
