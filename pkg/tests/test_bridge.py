import json
import shutil

import httpx
import pytest

from twinforge.bridge import (
    Bridge,
    GenRequest,
    HttpTransport,
    Mode,
    ProtocolError,
    ReplayTransport,
    SessionState,
    TransportError,
    description_hash,
    from_env,
    iterate,
    record_case,
    run_session,
)
from twinforge.dsl import load
from twinforge.netlist import IRKind
from twinforge.validate import validate

from conftest import REPLAY


def desc(case):
    return (REPLAY / case / "description.txt").read_text()


@pytest.fixture
def client():
    return Bridge(ReplayTransport(REPLAY))


def test_replay_reason_identity(client):
    rep = client.reason(GenRequest(desc("serial3")))
    assert list(rep.assumptions) == json.loads((REPLAY / "serial3" / "reason.json").read_text())["assumptions"]


def test_replay_generate_identity(client):
    rep = client.generate_ir(GenRequest(desc("serial3"), mode=Mode.GENERATE_IR))
    assert rep.ir_text == (REPLAY / "serial3" / "gen.fdl").read_text()
    assert rep.ir_kind is IRKind.DSL
    assert validate(load(rep.ir_text)) == []


def test_dangling_fixture_trips_validator(client):
    rep = client.generate_ir(GenRequest(desc("serial3_dangling"), mode=Mode.GENERATE_IR))
    assert [d.rule for d in validate(load(rep.ir_text))] == ["V-DANGLING-OUT"]


def test_hash_ignores_surrounding_whitespace():
    assert description_hash("  abc\n") == description_hash("abc")


def test_unknown_description(client):
    with pytest.raises(TransportError):
        client.reason(GenRequest("a line nobody recorded"))


def test_empty_description_rejected():
    with pytest.raises(ValueError):
        GenRequest("   ")


def test_mode_mismatch(client):
    with pytest.raises(ValueError):
        client.reason(GenRequest("x", mode=Mode.GENERATE_IR))


def test_unreachable_endpoint():
    state = SessionState("some line")
    with pytest.raises(TransportError):
        run_session(Bridge(HttpTransport("http://127.0.0.1:9/gen", timeout=2.0)), state)
    assert state == SessionState("some line")


def test_http_wire_format_and_protocol_errors():
    seen = []

    def handler(request):
        body = json.loads(request.content)
        seen.append((body, request.headers.get("authorization")))
        if body["mode"] == "Reason":
            return httpx.Response(200, json={"assumptions": ["a1"]})
        return httpx.Response(200, json={"ir_kind": "dsl", "ir_text": "sink K\n"})

    http = httpx.Client(transport=httpx.MockTransport(handler))
    b = Bridge(HttpTransport("http://endpoint/gen", api_key="k", client=http))
    state = run_session(b, SessionState("describe", ("prior",)))
    assert state.assumptions == ("prior", "a1") and state.last_ir.ir_text == "sink K\n"
    assert seen[0][0] == {"mode": "Reason", "description": "describe", "assumptions": ["prior"],
                          "context": {"api_summary": "", "examples": []}}
    assert seen[1][0]["assumptions"] == ["prior", "a1"] and seen[0][1] == "Bearer k"

    bad = Bridge(HttpTransport("http://e", client=httpx.Client(transport=httpx.MockTransport(
        lambda r: httpx.Response(200, json={"assumptions": "not a list"})))))
    with pytest.raises(ProtocolError):
        bad.reason(GenRequest("x"))
    broken = Bridge(HttpTransport("http://e", client=httpx.Client(transport=httpx.MockTransport(
        lambda r: httpx.Response(500)))))
    with pytest.raises(TransportError):
        broken.reason(GenRequest("x"))


def test_strict_hash_mismatch(tmp_path):
    root = tmp_path / "replay"
    shutil.copytree(REPLAY, root)
    meta = json.loads((root / "serial3" / "case.json").read_text())
    meta["hash"] = "0" * 64
    (root / "serial3" / "case.json").write_text(json.dumps(meta))
    with pytest.raises(ProtocolError):
        Bridge(ReplayTransport(root)).reason(GenRequest(desc("serial3")))
    assert Bridge(ReplayTransport(root, strict=False)).reason(GenRequest(desc("serial3"))).assumptions


def test_record_case_round_trip(tmp_path):
    record_case(tmp_path, "mine", "two machines", ["x"], "sink K\n", "dsl")
    b = Bridge(ReplayTransport(tmp_path))
    state = run_session(b, SessionState("two machines"))
    assert state.assumptions == ("x",) and state.last_ir.ir_text == "sink K\n"


def test_from_env(tmp_path):
    record_case(tmp_path, "c", "d", [], "sink K\n", "dsl")
    assert isinstance(from_env({"FF_REPLAY_DIR": str(tmp_path)}), ReplayTransport)
    assert isinstance(from_env({"FF_ENDPOINT": "http://x"}), HttpTransport)
    with pytest.raises(TransportError):
        from_env({})


def test_iterate():
    s0 = SessionState("d", ("a",), revision=0)
    s1 = iterate(s0, edited_description="d2")
    assert (s1.description, s1.assumptions, s1.revision) == ("d2", ("a",), 1)
    s2 = iterate(s1, rerun=True)
    assert (s2.description, s2.assumptions, s2.revision) == ("d2", ("a",), 2)
    s3 = iterate(s2, "d3", ["b"])
    assert (s3.description, s3.assumptions) == ("d3", ("b",))
    with pytest.raises(ValueError):
        iterate(s3)


def test_iterate_keeps_history(client):
    s = run_session(client, SessionState(desc("serial3")))
    s2 = run_session(client, iterate(s, rerun=True))
    assert s2.history == (s.last_ir,) and s2.revision == 1
