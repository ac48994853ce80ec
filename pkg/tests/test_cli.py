import json
import pytest
from argparse import Namespace
from fractions import Fraction
from autobid import cli, learning
from autobid.commands import compile_instance
from autobid.__version__ import __version__
from autobid.exceptions import ParameterError
from autobid.utils import instance_io, parse_config

SOLO_JSON = {"n": 1, "k": 1, "cap": "2", "values": [["1"]]}
EDGE_JSON = {"V1": ["u"], "V2": ["v"], "sigma": 2, "edges": [["u", "v", [0, 1]]]}


def _dump(tmp_path, name, document):
    path = tmp_path / name
    path.write_text(json.dumps(document))
    return str(path)


def _exit_code(argv):
    with pytest.raises(SystemExit) as e:
        cli.main(argv)
    return e.value.code


def test_version(capsys):
    assert _exit_code(["--version"]) == 0
    assert capsys.readouterr().out.strip() == __version__


def test_no_subcommand():
    assert _exit_code([]) == 1


def test_dispatch(mocker):
    mocker.patch("autobid.commands.verify.main", return_value=1)
    from autobid.commands import verify

    assert _exit_code(["verify", "--instance", "market.json", "--profile", "profile.json"]) == 1
    args = verify.main.call_args[0][0]
    assert args.subcommand == "verify"
    assert args.profile == "profile.json"


def test_error_exit_code(mocker):
    mocker.patch("autobid.commands.compile_instance.main", side_effect=ParameterError("epsilon"))
    assert _exit_code(["compile", "--source", "edge.json"]) == ParameterError.exit_code


def test_verify_needs_profile_or_trace():
    assert _exit_code(["verify", "--instance", "market.json"]) == 2


def test_verify_profile(tmp_path, capsys):
    instance = _dump(tmp_path, "solo.json", SOLO_JSON)
    at_cap = _dump(tmp_path, "cap.json", {"multipliers": [2]})
    at_one = _dump(tmp_path, "one.json", {"multipliers": [1]})
    assert _exit_code(["verify", "--instance", instance, "--profile", at_cap]) == 0
    assert "accepted: true" in capsys.readouterr().out
    assert _exit_code(["verify", "--instance", instance, "--profile", at_one]) == 1
    assert "maximal-pacing" in capsys.readouterr().out


def test_verify_missing_instance(tmp_path):
    profile = _dump(tmp_path, "cap.json", {"multipliers": [2]})
    assert _exit_code(["verify", "--instance", str(tmp_path / "nope.json"), "--profile", profile]) == 2


def test_compile(tmp_path, capsys):
    source = _dump(tmp_path, "edge.json", EDGE_JSON)
    out = str(tmp_path / "edge.compiled.json")
    assert _exit_code(["compile", "--source", source, "--epsilon", "1/10", "--delta", "1/10", "--out", out]) == 0
    compiled = instance_io.read_compiled(out)
    assert (compiled.instance.n, compiled.instance.k) == (9, 21)
    assert compiled.params.cap == 11
    assert "bidders: 9" in capsys.readouterr().out


def test_compile_bad_epsilon(tmp_path):
    source = _dump(tmp_path, "edge.json", EDGE_JSON)
    assert _exit_code(["compile", "--source", source, "--epsilon", "3/2"]) == 3


def test_search(tmp_path):
    instance = _dump(tmp_path, "solo.json", SOLO_JSON)
    out = str(tmp_path / "equilibria.csv")
    assert _exit_code(["search", "--instance", instance, "--grid", "1,2", "--out", out]) == 0
    with open(tmp_path / "equilibria.json") as f:
        document = json.load(f)
    assert document["checked"] == 2
    assert document["accepted"] == 1
    assert open(out).read().splitlines()[1].startswith("2,")


def test_search_budget(tmp_path, monkeypatch):
    monkeypatch.setenv("AUTOBID_BUDGET", "1")
    instance = _dump(tmp_path, "solo.json", SOLO_JSON)
    assert _exit_code(["search", "--instance", instance, "--grid", "1,2"]) == 4


def test_simulate_then_analyze(tmp_path, capsys):
    instance = _dump(tmp_path, "solo.json", SOLO_JSON)
    trace = str(tmp_path / "trace.csv")
    assert _exit_code(["simulate", "--instance", instance, "--rounds", "5", "--out", trace]) == 0
    assert len(instance_io.read_trace(trace, instance_io.read_instance(instance)).rounds) == 5
    capsys.readouterr()
    assert _exit_code(["analyze", "--instance", instance, "--trace", trace]) == 0
    assert "largest_c: '5'" in capsys.readouterr().out


def test_verify_trace_with_zero_beta(tmp_path, capsys, mocker):
    instance = _dump(tmp_path, "solo.json", SOLO_JSON)
    trace = str(tmp_path / "trace.csv")
    assert _exit_code(["simulate", "--instance", instance, "--rounds", "5", "--out", trace]) == 0
    capsys.readouterr()
    admissible = mocker.spy(learning, "check_admissible")
    assert _exit_code(["verify", "--instance", instance, "--trace", trace, "--beta", "0"]) == 0
    assert admissible.call_args[0][2] == 0
    assert "beta: '0'" in capsys.readouterr().out
    assert _exit_code(["verify", "--instance", instance, "--trace", trace]) == 0
    assert admissible.call_args[0][2] == Fraction(2, 5)


def test_cover_recipe_keeps_zero_mu():
    csp = learning.make_cover(2, 2, [[(0, 0), (1, 1)]])
    zero = parse_config.resolve_config(Namespace(mu="0", alpha="0"), environ={})
    assert compile_instance.cover_params(zero, csp).mu == 0
    assert compile_instance.cover_params(zero, csp).alpha == 0
    unset = parse_config.resolve_config(Namespace(), environ={})
    assert compile_instance.cover_params(unset, csp).mu == Fraction(1, 100)


def test_compile_to_stdout_is_json(tmp_path, capsys):
    source = _dump(tmp_path, "edge.json", EDGE_JSON)
    assert _exit_code(["compile", "--source", source, "--epsilon", "1/10", "--delta", "1/10"]) == 0
    captured = capsys.readouterr()
    document = json.loads(captured.out)
    assert instance_io.compiled_from_dict(document).instance.n == 9
    assert "bidders: 9" in captured.err
