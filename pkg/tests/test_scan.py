import pytest

from compgen import scan
from oracle_scan import rewrite


def actions(command):
    return " ".join(scan.interpret(scan.parse_command(command)))


def test_single_primitive():
    ast = scan.parse_command("jump")
    assert ast == scan.CommandAst("prim", "jump")
    assert actions("jump") == "JUMP"


def test_repeat_and_conjunction_shape():
    ast = scan.parse_command("jump twice and walk")
    assert ast.kind == "and"
    assert ast.children[0] == scan.CommandAst(
        "repeat", 2, (scan.CommandAst("prim", "jump"),))
    assert ast.children[1] == scan.CommandAst("prim", "walk")
    assert scan.serialize(ast) == "jump twice and walk"


def test_paper_example():
    assert actions("turn left twice and jump") == "LTURN LTURN JUMP"


@pytest.mark.parametrize("command,expected", [
    ("walk after run", "RUN WALK"),
    ("jump around right", "RTURN JUMP RTURN JUMP RTURN JUMP RTURN JUMP"),
    ("turn around left", "LTURN LTURN LTURN LTURN"),
    ("jump opposite left", "LTURN LTURN JUMP"),
    ("turn opposite right", "RTURN RTURN"),
    ("look thrice", "LOOK LOOK LOOK"),
    ("run left", "LTURN RUN"),
])
def test_semantics(command, expected):
    assert actions(command) == expected
    assert " ".join(rewrite(command)) == expected


@pytest.mark.parametrize("command", [
    "jump and",
    "and jump",
    "turn",
    "jump twice twice",
    "jump blah",
    "jump around",
    "jump left right",
    "jump and walk after run",
    "",
])
def test_parse_errors(command):
    with pytest.raises(scan.ScanParseError):
        scan.parse_command(command)


def test_parse_error_position():
    with pytest.raises(scan.ScanParseError) as err:
        scan.parse_command("jump frobnicate")
    assert err.value.position == 1


def test_enumeration_count_and_consistency():
    dataset = scan.enumerate_dataset()
    # Golden: matches the published corpus size.
    assert len(dataset) == 20910
    assert len({ex.id for ex in dataset}) == len(dataset)
    for ex in dataset[::97]:
        ast = scan.parse_command(ex.input)
        assert scan.interpret(ast) == ex.output
        assert tuple(scan.serialize(ast).split()) == ex.input


def test_enumeration_deterministic():
    a = scan.enumerate_dataset()
    b = scan.enumerate_dataset()
    assert [ex.id for ex in a] == [ex.id for ex in b]


def test_no_nested_conjunction():
    for ast in scan.iter_commands():
        for child in ast.children:
            for node in [child, *child.children]:
                assert node.kind not in ("and", "after")


def test_trace_replay():
    for command in ["jump", "turn around left thrice after walk right",
                    "look opposite right twice and run"]:
        ast = scan.parse_command(command)
        trace = scan.derivation_trace(ast)
        assert scan.replay_trace(trace) == ast
        assert trace.rule == scan.ROOT_RULE


def test_oracle_equivalence_sample():
    for ex in scan.enumerate_dataset()[::53]:
        assert rewrite(ex.input) == ex.output
