import json

import pytest
import requests

from helpers import llm_backend
from helpers.llm_backend import (
    BackendUnavailable, HttpBackend, ImagePart, Message, ScriptedBackend, ScriptError, TextPart, code_reply,
    post_with_retries,
)
from helpers.perception import Image


class FakeResponse:
    def __init__(self, payload, status=200):
        self.payload = payload
        self.status = status

    def raise_for_status(self):
        if self.status >= 400:
            raise requests.exceptions.HTTPError(f"{self.status} error")

    def json(self):
        return self.payload


@pytest.fixture
def sleeps(monkeypatch):
    waited = []
    monkeypatch.setattr(llm_backend.time, "sleep", waited.append)
    return waited


def fake_post(monkeypatch, outcomes):
    """Each outcome is a FakeResponse to return or an exception to raise, in call order."""
    calls = []

    def post(url, json=None, headers=None, timeout=None):
        calls.append({"url": url, "json": json, "headers": headers, "timeout": timeout})
        outcome = outcomes[len(calls) - 1]
        if isinstance(outcome, Exception):
            raise outcome
        return outcome

    monkeypatch.setattr(llm_backend.requests, "post", post)
    return calls


def test_post_succeeds_first_time(monkeypatch, sleeps):
    calls = fake_post(monkeypatch, [FakeResponse({"ok": True})])
    assert post_with_retries("http://x/api", {"a": 1}, {}, timeout=5) == {"ok": True}
    assert calls[0]["timeout"] == 5
    assert sleeps == []


def test_post_backs_off_then_succeeds(monkeypatch, sleeps):
    fake_post(monkeypatch, [requests.exceptions.Timeout(), FakeResponse({}, status=503), FakeResponse({"ok": 1})])
    assert post_with_retries("http://x/api", {}, {}, max_retries=3, initial_delay=1) == {"ok": 1}
    assert sleeps == [1, 2]


def test_post_gives_up(monkeypatch, sleeps):
    fake_post(monkeypatch, [requests.exceptions.ConnectionError("refused")] * 4)
    with pytest.raises(BackendUnavailable):
        post_with_retries("http://x/api", {}, {}, max_retries=4, initial_delay=0.5)
    assert sleeps == [0.5, 1.0, 2.0]


def test_http_backend_payload_and_reply(monkeypatch, sleeps):
    image = Image(16, 16, bytes(3 * 16 * 16))
    messages = [
        Message.text("system", "You are helpful."),
        Message("user", [TextPart("What do you see?"), ImagePart(image, "run/shot.ppm")]),
    ]
    calls = fake_post(monkeypatch, [FakeResponse({"choices": [{"message": {"content": "A field."}}]})])
    backend = HttpBackend("http://model.local/v1/", "vision-model", api_key="k", temperature=0.2)
    assert backend.complete(messages, "critic") == "A field."
    sent = calls[0]
    assert sent["url"] == "http://model.local/v1/chat/completions"
    assert sent["headers"]["Authorization"] == "Bearer k"
    assert sent["json"]["model"] == "vision-model"
    assert sent["json"]["temperature"] == 0.2
    user = sent["json"]["messages"][1]["content"]
    assert user[0] == {"type": "text", "text": "What do you see?"}
    assert user[1]["image_url"]["url"].startswith("data:image/png;base64,")


def test_http_backend_malformed_reply(monkeypatch, sleeps):
    fake_post(monkeypatch, [FakeResponse({"choices": []})])
    with pytest.raises(BackendUnavailable):
        HttpBackend("http://model.local", "m").complete([Message.text("user", "hi")], "action")


def test_message_rules():
    image = ImagePart(Image(16, 16, bytes(3 * 16 * 16)))
    with pytest.raises(ValueError):
        Message("assistant", [image])
    with pytest.raises(ValueError):
        Message("user", [])
    with pytest.raises(ValueError):
        Message.text("tool", "x")
    record = Message("user", [TextPart("look"), image]).to_record()
    assert record == {"parts": [{"text": "look"}, {"image": "<16x16 image>"}], "role": "user"}


def test_scripted_prefers_task_replies_and_clamps():
    backend = ScriptedBackend({
        "format_version": 1,
        "roles": {"critic": ["generic"]},
        "by_task": {"Build a pole": {"critic": ["first", "second"]}},
    })
    assert backend.complete([], "critic", "Build a pole") == "first"
    assert backend.complete([], "critic", "Build a pole") == "second"
    assert backend.complete([], "critic", "Build a pole") == "second"
    assert backend.complete([], "critic", "Mine dirt") == "generic"
    assert backend.calls[-1] == ("critic", "Mine dirt")


def test_scripted_missing_role():
    backend = ScriptedBackend({"format_version": 1, "roles": {"critic": ["x"]}})
    with pytest.raises(BackendUnavailable):
        backend.complete([], "action", "anything")


def test_scripted_code_files(tmp_path):
    (tmp_path / "pole.act").write_text('place("oak_planks", here() + [1, 0, 0]);', encoding="utf-8")
    script = tmp_path / "script.json"
    script.write_text(json.dumps({"format_version": 1, "roles": {"action": [{"code_file": "pole.act"}]}}),
                      encoding="utf-8")
    backend = ScriptedBackend.from_file(str(script))
    assert backend.identity == "scripted:script.json"
    assert backend.complete([], "action") == code_reply('place("oak_planks", here() + [1, 0, 0]);')


def test_scripted_bad_files(tmp_path):
    with pytest.raises(ScriptError):
        ScriptedBackend({"format_version": 2})
    with pytest.raises(ScriptError):
        ScriptedBackend.from_file(str(tmp_path / "missing.json"))
    backend = ScriptedBackend({"format_version": 1, "roles": {"action": [{"code_file": "nope.act"}]}},
                              base_dir=str(tmp_path))
    with pytest.raises(ScriptError):
        backend.complete([], "action")


def test_reset_restarts_counters():
    backend = ScriptedBackend({"format_version": 1, "roles": {"curriculum": ["a", "b"]}})
    backend.complete([], "curriculum")
    backend.reset()
    assert backend.complete([], "curriculum") == "a"
    assert len(backend.calls) == 1
