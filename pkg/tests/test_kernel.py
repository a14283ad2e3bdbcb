import pytest
from hypothesis import given, strategies as st

from wlanvoip.errors import MisuseError
from wlanvoip.kernel import Event, Kernel, Rng, seconds, uniform_int


def test_zero_time_event_fires_before_later_ones():
    k = Kernel()
    seen = []
    k.schedule(5, seen.append, "late")
    k.schedule(0, seen.append, "now")
    k.run_until(10)
    assert seen == ["now", "late"]


def test_ties_fire_in_insertion_order():
    k = Kernel()
    seen = []
    for name in "abcdef":
        k.schedule(100, seen.append, name)
    k.run_until(100)
    assert seen == list("abcdef")


def test_scheduling_in_the_past_is_misuse():
    k = Kernel()
    k.schedule(60, lambda _: None)
    k.run_until(60)
    with pytest.raises(MisuseError):
        k.schedule(50, lambda _: None)
    with pytest.raises(MisuseError):
        k.after(-1, lambda _: None)


def test_run_until_boundaries():
    k = Kernel()
    assert k.run_until(seconds(134)) == 0
    assert k.now == 134_000_000

    k = Kernel()
    hits = []
    k.schedule(1000, hits.append, 1)
    assert k.run_until(1000) == 1 and hits == [1]

    k = Kernel()
    for t in (1, 2, 3, 11):
        k.schedule(t, lambda _: None)
    assert k.run_until(10) == 3
    assert k.pending_count == 1


def test_cancel_semantics():
    k = Kernel()
    fired = []
    h = k.schedule(10, fired.append, "x")
    assert k.cancel(h) is True
    assert k.cancel(h) is False
    k.run_until(20)
    assert fired == []

    done = k.schedule(30, fired.append, "y")
    k.run_until(30)
    assert k.cancel(done) is False
    assert k.cancel(None) is False


def test_event_cannot_be_scheduled_twice():
    k = Kernel()
    ev = Event(5, lambda _: None)
    k.schedule_event(ev)
    with pytest.raises(MisuseError):
        k.schedule_event(ev)


def test_handlers_never_see_the_clock_go_back():
    k = Kernel()
    stamps = []

    def hop(n):
        stamps.append(k.now)
        if n:
            k.after(n % 3, hop, n - 1)

    k.schedule(0, hop, 30)
    k.run_until(1_000)
    assert stamps == sorted(stamps)
    assert len(stamps) == 31


def test_uniform_int_contract():
    rng = Rng(3)
    assert uniform_int(rng, 7, 7) == 7
    with pytest.raises(MisuseError):
        uniform_int(rng, 2, 1)
    with pytest.raises(MisuseError):
        Rng(-1)


def test_uniform_mean_over_sixteen_values():
    rng = Rng(99)
    n = 100_000
    mean = sum(rng.uniform_int(0, 15) for _ in range(n)) / n
    assert abs(mean - 7.5) < 0.1


@given(st.integers(min_value=0, max_value=2**64 - 1))
def test_same_seed_same_stream(seed):
    a, b = Rng(seed), Rng(seed)
    assert [a.uniform_int(0, 1000) for _ in range(20)] == [b.uniform_int(0, 1000) for _ in range(20)]


@given(st.lists(st.integers(min_value=0, max_value=500), min_size=1, max_size=60))
def test_events_fire_sorted_by_time_then_seq(times):
    k = Kernel()
    order = []
    for i, t in enumerate(times):
        k.schedule(t, order.append, (t, i))
    k.run_until(max(times))
    assert order == sorted(order)
    assert len(order) == len(times)
