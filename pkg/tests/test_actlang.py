import pytest

from helpers.actlang import (
    Call, CheckError, FnDef, If, Int, NoCodeFound, ParseError, PosLit, Repeat, Str, check, compile_program,
    extract_code, format_error, function_source, parse, pretty_print,
)

SAMPLE = """
// stack planks next to the bot
fn pole(block, height_marker) {
    let base = here() + [2, 0, 0];
    repeat 3 as i {
        place(block, base + [0, i, 0]);
    }
    if has(block, 1) and not (count(block) == 0) {
        chat("left over");
    } else {
        chat('done\\n');
    }
}

mine("oak_log", 3);
craft("oak_planks", 3);
pole("oak_planks", -2);
"""


def test_parse_structure():
    program = parse(SAMPLE)
    assert program.function_names() == ["pole"]
    fn = program.functions[0]
    assert fn.params == ("block", "height_marker")
    assert isinstance(fn.body[1], Repeat) and fn.body[1].var == "i" and fn.body[1].count == 3
    assert isinstance(fn.body[2], If)
    assert program.body[2] == Call("pole", (Str("oak_planks"), Int(-2)))
    assert isinstance(fn.body[0].expr.right, PosLit)


def test_pretty_print_reparses_to_same_tree():
    program = parse(SAMPLE)
    assert parse(pretty_print(program)) == program
    assert pretty_print(parse(pretty_print(program))) == pretty_print(program)


def test_function_source():
    program = parse(SAMPLE)
    source = function_source(program.functions[0])
    assert source.startswith("fn pole(block, height_marker) {\n")
    assert parse(source).functions[0] == program.functions[0]


@pytest.mark.parametrize("source, line, col, fragment", [
    ("mine(\"oak_log\" 3);", 1, 16, "expected ')'"),
    ("repeat 300 { chat(\"x\"); }", 1, 8, "repeat count 300 exceeds 256"),
    ("chat(\"unterminated);", 1, 6, "unterminated string"),
    ("fn a() {\n  fn b() { }\n}", 2, 3, "functions may only be defined at top level"),
    ("chat(\"x\");\n@", 2, 1, "unexpected character '@'"),
    ("if count(\"dirt\") { }", 1, 18, "expected a condition"),
    ("repeat n { }", 1, 8, "expected a literal repeat count"),
])
def test_parse_errors_point_at_the_problem(source, line, col, fragment):
    with pytest.raises(ParseError) as info:
        parse(source)
    assert (info.value.line, info.value.col) == (line, col)
    assert fragment in info.value.message


def test_format_error():
    with pytest.raises(ParseError) as info:
        parse("mine(;")
    assert format_error(info.value) == "Parse error at line 1, col 6: expected a value, found ';'"


@pytest.mark.parametrize("source, fragment", [
    ("place(block);", "undefined variable 'block'"),
    ("build();", "undefined function 'build'"),
    ("mine(\"oak_log\");", "mine() takes 2 arguments, got 1"),
    ("let p = mine(\"oak_log\", 1);", "mine() does not produce a value"),
    ("fn here() { }", "'here' is a built-in and cannot be redefined"),
    ("fn a() { }\nfn a() { }", "function 'a' is defined twice"),
    ("fn a(x, x) { }", "function 'a' repeats a parameter name"),
    ("fn a(x) { }\na();", "a() takes 1 arguments, got 0"),
    ("if found(\"x\") { }", "found() takes a variable name"),
])
def test_check_errors(source, fragment):
    with pytest.raises(CheckError) as info:
        compile_program(source)
    assert fragment in info.value.message


def test_recursion_is_rejected_through_the_call_graph():
    with pytest.raises(CheckError) as info:
        compile_program("fn a() { b(); }\nfn b() { a(); }\na();")
    assert info.value.message == "recursion is not allowed: a -> b -> a"


def test_library_functions_are_callable():
    library = {fn.name: fn for fn in parse("fn pillar(block) { place(block, here()); }").functions}
    program = compile_program("pillar(\"dirt\");", library)
    assert program.body == (Call("pillar", (Str("dirt"),)),)
    with pytest.raises(CheckError):
        compile_program("pillar(\"dirt\");")


def test_library_recursion_is_rejected():
    library = {fn.name: fn for fn in parse("fn a() { b(); }").functions}
    with pytest.raises(CheckError):
        check(parse("fn b() { a(); }"), library)


def test_explore_binds_found():
    program = compile_program("explore(\"oak_log\", 1, 0, 60);\nif found(found) { move_to(found); }")
    assert len(program.body) == 2


def test_scoping_of_loop_variables():
    with pytest.raises(CheckError):
        compile_program("repeat 2 as i { chat(\"x\"); }\nplace(\"dirt\", [i, 0, 0]);")
    with pytest.raises(CheckError):
        compile_program("if has(\"dirt\", 1) { let p = here(); }\nmove_to(p);")


def test_extract_last_fenced_block():
    reply = "Explain: x\n```\nchat(\"first\");\n```\nthen\n```act\nchat(\"second\");\n```\n"
    assert extract_code(reply) == "chat(\"second\");\n"


def test_extract_unfenced_suffix():
    reply = "Plan:\n1) mine logs\nmine(\"oak_log\", 2);\ncraft(\"oak_planks\", 2);"
    assert extract_code(reply) == "mine(\"oak_log\", 2);\ncraft(\"oak_planks\", 2);\n"


def test_extract_nothing():
    with pytest.raises(NoCodeFound):
        extract_code("I am not sure what to do next.")


def test_fn_def_equality_ignores_locations():
    a = parse("fn f() { chat(\"x\"); }").functions[0]
    b = parse("\n\n   fn f() {\n chat(\"x\");\n}").functions[0]
    assert a == b
    assert isinstance(a, FnDef)
