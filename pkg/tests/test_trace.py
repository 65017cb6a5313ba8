import pytest

from wargame_lab.config import GameConfig
from wargame_lab.trace import (
    Action,
    GameEvent,
    Trace,
    TraceError,
    check_trace,
    dumps_trace,
    loads_trace,
    read_trace,
    write_trace,
)


def ev(minute, action=Action.NOTE, team="white"):
    return GameEvent(minute, team, "w", action)


def test_round_trip(tmp_path):
    t = Trace("s", GameConfig(duration_minutes=60), (ev(0), ev(5, Action.RECON, "red")), 60)
    path = tmp_path / "t.jsonl"
    write_trace(t, str(path))
    assert read_trace(str(path)) == t
    assert dumps_trace(loads_trace(dumps_trace(t))) == dumps_trace(t)


@pytest.mark.parametrize(
    "events, final, fragment",
    [
        ((ev(5), ev(3)), 60, "precedes"),
        ((ev(70),), 60, "outside"),
        ((ev(1, Action.TARGET_REACHED, "red"), ev(1, Action.TARGET_REACHED, "red")), 1, "more than one"),
        ((ev(1, Action.TARGET_REACHED, "red"),), 60, "must end"),
        ((), 1500, "exceeds"),
    ],
)
def test_malformed(events, final, fragment):
    with pytest.raises(TraceError, match=fragment):
        check_trace(Trace("s", GameConfig(), events, final))


def test_bad_lines():
    with pytest.raises(TraceError):
        loads_trace("")
    with pytest.raises(TraceError):
        loads_trace('{"scenario_name": "x"}\n')
    header = '{"scenario_name":"x","final_minute":10,"config":{}}'
    with pytest.raises(TraceError):
        loads_trace(header + '\n{"minute":1,"actor_team":"red","actor_id":"r","action":"fly"}')
    with pytest.raises(TraceError):
        loads_trace(header + '\n{"minute":1,"actor_team":"red","actor_id":"r","action":"note","extra":1}')
